#include <iostream>

#include "copjoint/harness.hpp"

int main(int argc, char** argv) { return copjoint::run_cli(argc, argv, std::cout, std::cerr); }
