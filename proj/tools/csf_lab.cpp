#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "csf/cli/config.hpp"
#include "csf/cli/scenarios.hpp"

namespace {

constexpr int kConfigError = 2;

}  // namespace

int main(int argc, char** argv) {
  using namespace csf::cli;
  CLI::App app{"Numerical experiments for curve shortening flow in warped metrics", "csf-lab"};
  std::string scenario;
  std::optional<std::string> config_path;
  Overrides o;
  app.add_option("scenario", scenario,
                 "bloom | nonunique | barriers | invariants | uniqueness-probe | geodesics");
  app.add_option("--config", config_path, "INI file: [experiment] plus one section per scenario");
  app.add_option("--metric", o.metric, "paper | flat | flat-polar | cigar");
  app.add_option("--dt", o.dt, "time step, at most 1e-2");
  app.add_option("--resolution", o.resolution, "grid nodes per unit length, at least 10");
  app.add_option("--T", o.T, "final time");
  app.add_option("--ns", o.ns, "comma separated n values for nested runs");
  app.add_option("--out", o.output_dir, "output directory");
  app.add_flag("--svg", o.emit_svg, "also write SVG plots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  ExperimentConfig cfg;
  RunResult result;
  try {
    cfg = make_config(scenario, config_path, o);
    result = run_scenario(cfg, thread_cap());
    write_artifacts(cfg, result);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "csf-lab: %s\n", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "csf-lab: %s failed: %s\n", scenario.c_str(), e.what());
    return 1;
  }

  for (const Check& c : result.checks) {
    std::printf("%-4s %s%s%s\n", c.passed ? "ok" : "FAIL", c.name.c_str(),
                c.detail.empty() ? "" : ": ", c.detail.c_str());
  }
  for (const std::string& s : result.solver_notes) std::printf("FAIL solver %s\n", s.c_str());
  std::printf("%s -> %s/manifest.json\n", result.passed() ? "pass" : "fail", cfg.output_dir.c_str());
  return result.passed() ? 0 : 1;
}
