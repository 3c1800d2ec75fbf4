#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "copjoint/errors.hpp"
#include "copjoint/harness.hpp"
#include "oracles.hpp"

using namespace copjoint;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("copjoint_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream o(p);
  o << text;
}

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "copjoint");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string demo_csv(int n, std::uint64_t seed) {
  const auto s = oracle::recursive_probit(n, 0.4, 0.8, seed);
  std::ostringstream o;
  o << "treat,y,a,b,c\n";
  for (int i = 0; i < n; ++i) {
    o << s.y1(i) << ",";
    if (i % 25 == 3) {
      o << "NA";
    } else {
      o << s.y2(i);
    }
    o << "," << s.data.column("a")(i) << "," << s.data.column("b")(i) << "," << s.data.column("c")(i) << "\n";
  }
  return o.str();
}

const char* kConfig =
    "treatment: {response: treat, link: probit, parametric: [a, b]}\n"
    "outcome: {response: y, link: probit, parametric: [c]}\n"
    "families: [gaussian, clayton180]\n"
    "links: [pp]\n"
    "n_draws: 50\n"
    "seed: 4\n";

}  // namespace

TEST_CASE("analyze config parsing") {
  const AnalyzeConfig c = parse_analyze_config(kConfig);
  CHECK(c.grid.size() == 2);
  CHECK(c.grid[1].rotation == Rotation::R180);
  CHECK(c.spec.outcome.includes_treatment);
  CHECK(c.n_draws == 50);
  CHECK_THROWS_AS(parse_analyze_config(std::string(kConfig) + "colour: red\n"), ConfigError);
  CHECK_THROWS_AS(parse_analyze_config("treatment: {response: t, lnk: probit}\noutcome: {response: y}\n"), ConfigError);
  CHECK_THROWS_AS(parse_analyze_config("treatment: {response: t}\n"), ConfigError);
  CHECK_THROWS_AS(parse_analyze_config(std::string(kConfig) + "level: 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_analyze_config(std::string(kConfig) + "sate_variant: both\n"), ConfigError);
}

TEST_CASE("family and link lists") {
  const auto f = parse_family_list("gaussian, joe180,clayton_180,frank");
  REQUIRE(f.size() == 4);
  CHECK(f[1] == std::make_pair(Family::Joe, Rotation::R180));
  CHECK(f[2] == std::make_pair(Family::Clayton, Rotation::R180));
  const auto l = parse_link_pairs("pp,pl,cl");
  CHECK(l[2] == std::make_pair(Link::Cloglog, Link::Logit));
  CHECK_THROWS_AS(parse_family_list("gumbel"), ConfigError);
  CHECK_THROWS_AS(parse_link_pairs("ppp"), ConfigError);
  CHECK(cross_grid(f, l).size() == 12);
}

TEST_CASE("tables: CSV and JSON sidecar") {
  const fs::path dir = scratch("tables");
  Table t{{"name", "value", "count"}, {{std::string("a,b"), 0.1 + 0.2, 3LL}, {std::string("c"), std::nan(""), 4LL}}};
  write_table(dir.string(), "demo", t, "abc");
  std::ifstream csv(dir / "demo.csv");
  std::string header, r1, r2;
  std::getline(csv, header);
  std::getline(csv, r1);
  std::getline(csv, r2);
  CHECK(header == "name,value,count");
  CHECK(r1 == "\"a,b\",0.3,3");
  CHECK(r2 == "c,NA,4");
  std::ifstream js(dir / "demo.json");
  const auto j = nlohmann::json::parse(js);
  CHECK(j["manifest_hash"] == "abc");
  CHECK(j["rows"][0][1].get<double>() == 0.1 + 0.2);  // full precision
  CHECK(j["rows"][1][1].is_null());
}

TEST_CASE("manifest hash ignores timestamps") {
  Manifest a;
  a.command = "sim1";
  a.seed = 3;
  a.started = "x";
  Manifest b = a;
  b.started = "y";
  b.finished = "z";
  CHECK(a.hash() == b.hash());
  b.seed = 4;
  CHECK(a.hash() != b.hash());
  CHECK(hex64(fnv1a("")) == "cbf29ce484222325");
  CHECK(hex64(fnv1a("a")) == "af63dc4c8601ec8c");
}

TEST_CASE("cli usage errors") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"bogus"}).code == 1);
  CHECK(cli({"sim1"}).code == 1);  // --scenario required
  CHECK(cli({"--help"}).code == 0);
  CHECK(cli({"--version"}).out.find(kVersion) != std::string::npos);
  const fs::path dir = scratch("usage");
  write(dir / "bad.yaml", "n: 100\nunknown_key: 1\n");
  const Run r = cli({"sim2", "--scenario", (dir / "bad.yaml").string(), "--out", dir.string()});
  CHECK(r.code == 1);
  CHECK(r.err.find("unknown_key") != std::string::npos);
  CHECK(cli({"sim2", "--scenario", (dir / "missing.yaml").string()}).code == 1);
}

TEST_CASE("analyze end to end") {
  const fs::path dir = scratch("analyze");
  write(dir / "data.csv", demo_csv(240, 3));
  write(dir / "model.yaml", kConfig);
  const fs::path out = dir / "out";
  const Run r = cli({"analyze", "--data", (dir / "data.csv").string(), "--scenario", (dir / "model.yaml").string(),
                     "--out", out.string()});
  CHECK(r.code == 0);
  INFO(r.err);
  for (const char* f : {"analyze_grid.csv", "analyze_grid.json", "analyze_coefficients.csv", "analyze_smooth_terms.csv",
                        "analyze_one_stage.csv", "analyze_manifest.json"}) {
    CHECK(fs::exists(out / f));
  }
  std::ifstream mf(out / "analyze_manifest.json");
  const auto m = nlohmann::json::parse(mf);
  std::ifstream gf(out / "analyze_grid.json");
  const auto g = nlohmann::json::parse(gf);
  CHECK(g["manifest_hash"] == m["manifest_hash"]);
  const auto& det = m["details"];
  const long rows_in = std::stol(det["rows_in"].get<std::string>());
  CHECK(rows_in == 240);
  CHECK(std::stol(det["rows_used"].get<std::string>()) + std::stol(det["rows_dropped_missing"].get<std::string>()) +
            std::stol(det["rows_dropped_invalid"].get<std::string>()) ==
        rows_in);
  CHECK(std::stol(det["rows_dropped_missing"].get<std::string>()) == 10);
  CHECK(g["rows"].size() == 2);

  // --families override and a rerun with more workers give identical tables
  const fs::path out2 = dir / "out2";
  CHECK(cli({"analyze", "--data", (dir / "data.csv").string(), "--scenario", (dir / "model.yaml").string(), "--out",
             out2.string(), "--jobs", "2"})
            .code == 0);
  std::ifstream a(out / "analyze_grid.csv"), b(out2 / "analyze_grid.csv");
  std::stringstream sa, sb;
  sa << a.rdbuf();
  sb << b.rdbuf();
  CHECK(sa.str() == sb.str());
  const fs::path out3 = dir / "out3";
  CHECK(cli({"analyze", "--data", (dir / "data.csv").string(), "--scenario", (dir / "model.yaml").string(), "--out",
             out3.string(), "--families", "frank"})
            .code == 0);
  std::ifstream g3(out3 / "analyze_grid.json");
  CHECK(nlohmann::json::parse(g3)["rows"].size() == 1);

  // report
  const Run rep = cli({"report", "--out", out.string()});
  CHECK(rep.code == 0);
  std::ifstream md(out / "report.md");
  std::stringstream ms;
  ms << md.rdbuf();
  CHECK(ms.str().find("Model grid") != std::string::npos);
  CHECK(ms.str().find(m["manifest_hash"].get<std::string>()) != std::string::npos);
  CHECK(ms.str().find("Missing inputs") == std::string::npos);
}

TEST_CASE("analyze schema errors") {
  const fs::path dir = scratch("schema");
  write(dir / "model.yaml", kConfig);
  auto run = [&](const std::string& csv) {
    write(dir / "data.csv", csv);
    return cli({"analyze", "--data", (dir / "data.csv").string(), "--scenario", (dir / "model.yaml").string(), "--out",
                (dir / "out").string()});
  };
  const Run missing = run("treat,y,a,b\n1,0,0.1,0.2\n");
  CHECK(missing.code == 2);
  CHECK(missing.err.find("'c'") != std::string::npos);
  const Run coded = run("treat,y,a,b,c\n2,0,0.1,0.2,1\n1,0,0.1,0.2,1\n0,3,0.1,0.2,1\n");
  CHECK(coded.code == 2);
  CHECK(coded.err.find("'treat' row 2") != std::string::npos);
  CHECK(coded.err.find("'y' row 4") != std::string::npos);  // every problem is listed
  const Run empty = run("treat,y,a,b,c\n1,NA,0.1,0.2,1\n0,,0.3,0.2,1\n");
  CHECK(empty.code == 2);
  CHECK(empty.err.find("'y' has no observed values") != std::string::npos);
  const Run text = run("treat,y,a,b,c\n1,0,abc,0.2,1\n");
  CHECK(text.code == 2);
}

TEST_CASE("report edge cases") {
  const fs::path dir = scratch("report");
  const Run r = cli({"report", "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("nothing to report") != std::string::npos);
  write(dir / "sim2_bias.csv", "n\n1\n");
  const Run r2 = cli({"report", "--out", dir.string()});
  CHECK(r2.code == 0);
  std::ifstream md(dir / "report.md");
  std::stringstream ms;
  ms << md.rdbuf();
  CHECK(ms.str().find("Missing inputs") != std::string::npos);
  CHECK(ms.str().find("sim2_bias.csv has no JSON sidecar") != std::string::npos);
  CHECK(cli({"report", "--out", (dir / "nope").string()}).code == 1);
}

TEST_CASE("sim2 smoke run") {
  const fs::path dir = scratch("sim2");
  write(dir / "s.yaml",
        "n: 300\nreplicates: 2\nrho: 0.5\ncensoring_target: [0]\nspecification: reduced\ncutoff_quantiles: [0.5]\nseed: 3\n");
  const Run r = cli({"sim2", "--scenario", (dir / "s.yaml").string(), "--out", dir.string()});
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "sim2_bias.csv"));
  CHECK(fs::exists(dir / "sim2_2sps.json"));
  CHECK(fs::exists(dir / "sim2_manifest.json"));
}
