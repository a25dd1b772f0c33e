#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "csf/cli/config.hpp"
#include "csf/cli/scenarios.hpp"

using namespace csf::cli;

namespace {

ExperimentConfig from_ini(const std::string& scenario, const std::string& text) {
  ExperimentConfig cfg;
  cfg.scenario = parse_scenario(scenario);
  std::istringstream in(text);
  apply_ini(cfg, in, "test.ini");
  validate(cfg);
  return cfg;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("scenario names") {
  for (const auto& [s, name] : scenario_names()) CHECK(parse_scenario(name) == s);
  CHECK_THAT(error_of([] { parse_scenario(""); }), Catch::Matchers::ContainsSubstring("missing scenario"));
  CHECK_THAT(error_of([] { parse_scenario("blom"); }), Catch::Matchers::ContainsSubstring("nonunique"));
}

TEST_CASE("defaults") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::Bloom;
  CHECK(cfg.horizon() == 0.5);
  CHECK(cfg.metric_name() == "paper");
  cfg.scenario = Scenario::Nonunique;
  CHECK(cfg.horizon() == 0.4);
  cfg.scenario = Scenario::UniquenessProbe;
  CHECK(cfg.horizon() == 1.0);
  CHECK(cfg.metric_name() == "flat");
  CHECK(cfg.resolution == 40.0);
  CHECK(cfg.dt == 1e-3);
  CHECK(cfg.ns == std::vector<int>{8, 16, 24});
  CHECK(from_ini("bloom", "[experiment]\nmetric = paper\n").horizon() == 0.5);
}

TEST_CASE("validation") {
  ExperimentConfig cfg;
  cfg.dt = 0.1;
  CHECK_THAT(error_of([&] { validate(cfg); }), Catch::Matchers::ContainsSubstring("dt"));
  cfg.dt = 1e-2;
  CHECK_NOTHROW(validate(cfg));
  cfg.resolution = 9;
  CHECK_THAT(error_of([&] { validate(cfg); }), Catch::Matchers::ContainsSubstring("resolution"));
  cfg.resolution = 10;
  cfg.T = 0.0;
  CHECK_THAT(error_of([&] { validate(cfg); }), Catch::Matchers::ContainsSubstring("T must"));
  cfg.T = 0.3;
  cfg.ns = {16, 8};
  CHECK_THAT(error_of([&] { validate(cfg); }), Catch::Matchers::ContainsSubstring("ns"));
  cfg.ns = {8};
  cfg.metric = "sphere";
  const std::string e = error_of([&] { validate(cfg); });
  for (const auto& name : metric_names()) CHECK_THAT(e, Catch::Matchers::ContainsSubstring(name));
}

TEST_CASE("ini sections and overrides") {
  const std::string text =
      "; shared\n"
      "[experiment]\n"
      "dt = 5e-4\n"
      "resolution = 20\n"
      "ns = 8,16\n"
      "[nonunique]\n"
      "T = 0.3\n"
      "emit_svg = true\n"
      "[bloom]\n"
      "T = 0.45\n";
  const ExperimentConfig nu = from_ini("nonunique", text);
  CHECK(nu.dt == 5e-4);
  CHECK(nu.resolution == 20.0);
  CHECK(nu.ns == std::vector<int>{8, 16});
  CHECK(nu.horizon() == 0.3);
  CHECK(nu.emit_svg);
  const ExperimentConfig bl = from_ini("bloom", text);
  CHECK(bl.horizon() == 0.45);
  CHECK_FALSE(bl.emit_svg);

  const auto dir = std::filesystem::temp_directory_path() / "csf_cli_ini";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "run.ini").string();
  std::ofstream(path) << text;
  Overrides o;
  o.dt = 2e-3;
  o.ns = "4,6";
  const ExperimentConfig c = make_config("nonunique", path, o);
  CHECK(c.dt == 2e-3);
  CHECK(c.ns == std::vector<int>{4, 6});
  CHECK(c.horizon() == 0.3);
  CHECK_THAT(error_of([&] { make_config("nonunique", (dir / "missing.ini").string(), {}); }),
             Catch::Matchers::ContainsSubstring("cannot open"));
}

TEST_CASE("ini diagnostics") {
  CHECK_THAT(error_of([] { from_ini("bloom", "[experiment]\ndt = 1e-3\nthis line is bad\n"); }),
             Catch::Matchers::ContainsSubstring("test.ini:3"));
  CHECK_THAT(error_of([] { from_ini("bloom", "[experiment]\ndt = fast\n"); }),
             Catch::Matchers::ContainsSubstring("[experiment] dt"));
  CHECK_THAT(error_of([] { from_ini("bloom", "[experiment]\nstep = 1\n"); }),
             Catch::Matchers::ContainsSubstring("unknown key"));
  CHECK_THAT(error_of([] { from_ini("bloom", "[plots]\nx = 1\n"); }),
             Catch::Matchers::ContainsSubstring("unknown section [plots]"));
  CHECK_THAT(error_of([] { from_ini("bloom", "[bloom]\ndt = 0.1\n"); }),
             Catch::Matchers::ContainsSubstring("dt"));
  CHECK_THAT(error_of([] { from_ini("bloom", "[experiment]\nns = 8,x\n"); }),
             Catch::Matchers::ContainsSubstring("[experiment] ns"));
}

TEST_CASE("thread cap") {
  ::unsetenv("CSF_LAB_THREADS");
  CHECK(thread_cap() == 0);
  ::setenv("CSF_LAB_THREADS", "3", 1);
  CHECK(thread_cap() == 3);
  ::setenv("CSF_LAB_THREADS", "zero", 1);
  CHECK_THROWS_AS(thread_cap(), ConfigError);
  ::unsetenv("CSF_LAB_THREADS");
}

TEST_CASE("csv formatting") {
  CHECK(fmt(0.1) == "0.10000000000000001");
  CHECK(fmt(-0.0) == "0");
  CHECK(fmt(1.0) == "1");
  CHECK(std::stod(fmt(1.0 / 3.0)) == 1.0 / 3.0);
  CsvTable t("a.csv", {{"t", "time"}, {"ok", "bool"}, {"n", "1"}});
  t.row(0.5, true, 3);
  t.row(1e-20, false, std::size_t{7});
  CHECK(t.text() == "t,ok,n\n0.5,1,3\n9.9999999999999995e-21,0,7\n");
  CHECK(t.rows() == 2);
}

TEST_CASE("git blob hash") {
  CHECK(git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  CHECK(git_blob_sha1("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("svg has one polyline per curve") {
  const std::string s = svg_plot({{{0, 0}, {1, 1}}, {{0, 1}, {1, 0}}, {{0, 0.5}}}, "demo", "x", "y");
  std::size_t count = 0;
  for (std::size_t p = s.find("<polyline"); p != std::string::npos; p = s.find("<polyline", p + 1)) ++count;
  CHECK(count == 3);
  CHECK(s.rfind("<svg", 0) == 0);
  CHECK(s.find("</svg>") != std::string::npos);
}

TEST_CASE("bloom scenario") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::Bloom;
  cfg.emit_svg = true;
  cfg.output_dir = (std::filesystem::temp_directory_path() / "csf_cli_bloom").string();
  const RunResult r = run_scenario(cfg);
  CHECK(r.passed());
  REQUIRE(r.tables.size() == 1);
  CHECK(r.tables[0].text().rfind("t,R,zeta,rel_err\n", 0) == 0);
  write_artifacts(cfg, r);
  const auto dir = std::filesystem::path(cfg.output_dir);
  CHECK(std::filesystem::exists(dir / "bloom.svg"));
  const auto m = nlohmann::json::parse(slurp(dir / "manifest.json"));
  CHECK(m["status"] == "pass");
  CHECK(m["config"]["T"] == 0.5);
  CHECK(m["files"][0]["git_blob_sha1"] == git_blob_sha1(slurp(dir / "bloom.csv")));
  CHECK(m["files"][0]["columns"][1]["unit"] == "length");

  cfg.metric = "flat-polar";
  const RunResult f = run_scenario(cfg);
  CHECK(f.passed());
  CHECK(f.tables[0].rows() == 0);
}

TEST_CASE("nonunique scenario is reproducible") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::Nonunique;
  cfg.ns = {8, 16};
  cfg.T = 0.25;
  const RunResult a = run_scenario(cfg, 1);
  const RunResult b = run_scenario(cfg, 2);
  CHECK(a.passed());
  REQUIRE(a.tables.size() == 1);
  CHECK(a.tables[0].text() == b.tables[0].text());
  CHECK(a.tables[0].text().rfind("t,x,y_limit,ubar,peel_ok\n", 0) == 0);
  CHECK(manifest(cfg, a).dump() == manifest(cfg, b).dump());
}

TEST_CASE("scenario failures") {
  ExperimentConfig cfg;
  cfg.scenario = Scenario::UniquenessProbe;
  cfg.metric = "paper";
  CHECK_THAT(error_of([&] { run_scenario(cfg); }), Catch::Matchers::ContainsSubstring("uniqueness-probe"));
  cfg.scenario = Scenario::Nonunique;
  cfg.metric = "flat-polar";
  CHECK_THAT(error_of([&] { run_scenario(cfg); }), Catch::Matchers::ContainsSubstring("flat-polar"));
}

TEST_CASE("other scenarios pass at default settings") {
  for (Scenario s : {Scenario::Barriers, Scenario::Geodesics}) {
    ExperimentConfig cfg;
    cfg.scenario = s;
    const RunResult r = run_scenario(cfg);
    CHECK(r.passed());
    CHECK_FALSE(r.tables.empty());
  }
}
