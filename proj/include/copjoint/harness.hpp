#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "copjoint/effects.hpp"
#include "copjoint/joint_model.hpp"

namespace copjoint {

inline constexpr const char* kVersion = "0.1.0";

/// Model configuration for `analyze`, read from YAML:
///
///   treatment: {response, link, parametric, categorical, smooth}
///   outcome:   {response, link, parametric, categorical, smooth}
///   families: [gaussian, joe, clayton180, studentt]
///   links: [pp, pl]
///   basis_dim, n_draws, seed, level, sate_variant, student_df,
///   smooth_points, level_labels: {col: {code: label}}, reference_levels: {col: code}
///
/// Unknown keys are rejected at every level.
struct AnalyzeConfig {
  ModelSpec spec;
  std::vector<GridRequest> grid;
  int n_draws = 1000;
  std::uint64_t seed = 1;
  double level = 0.95;
  SateVariant variant = SateVariant::MarginalToggle;
  int smooth_points = 50;
};

AnalyzeConfig parse_analyze_config(const std::string& yaml_text);
AnalyzeConfig load_analyze_config(const std::string& path);

/// "gaussian,joe,clayton180" -> (family, rotation) pairs.
std::vector<std::pair<Family, Rotation>> parse_family_list(const std::string& csv);
/// "pp,pl" -> (treatment link, outcome link) pairs.
std::vector<std::pair<Link, Link>> parse_link_pairs(const std::string& csv);
std::vector<GridRequest> cross_grid(const std::vector<std::pair<Family, Rotation>>& fams,
                                    const std::vector<std::pair<Link, Link>>& links);

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 14695981039346656037ULL);
std::string hex64(std::uint64_t v);
std::string read_file(const std::string& path);

struct Manifest {
  std::string command;
  std::string config_hash;   // of the scenario/config and data bytes
  std::uint64_t seed = 0;
  std::string version = kVersion;
  std::vector<std::pair<std::string, std::string>> covariate_mapping;
  std::vector<std::pair<std::string, std::string>> details;  // counts, accounting, etc.
  std::string started;
  std::string finished;

  /// Hash of everything except the timestamps.
  std::string hash() const;
};

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

/// Writes name.csv and name.json (full precision values + manifest hash).
void write_table(const std::string& dir, const std::string& name, const Table& t, const std::string& manifest_hash);
void write_manifest(const std::string& dir, const Manifest& m);
std::string format_cell(const Cell& c);

struct CliArgs {
  std::string scenario;
  std::string data;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::string families;
  std::string links;
  int jobs = 1;
  int n_oracle = 1000000;
  bool figure = true;
};

int cmd_sim1(const CliArgs& a, std::ostream& log);
int cmd_sim2(const CliArgs& a, std::ostream& log);
int cmd_analyze(const CliArgs& a, std::ostream& log);
int cmd_report(const CliArgs& a, std::ostream& log);

/// Parses argv and dispatches. Exit codes: 0 ok, 1 usage/config, 2 data
/// schema, 3 numerical failure.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace copjoint
