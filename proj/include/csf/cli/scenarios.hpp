#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "csf/cli/artifacts.hpp"
#include "csf/cli/config.hpp"
#include "csf/diagnostics.hpp"
#include "csf/errors.hpp"
#include "csf/flows.hpp"
#include "csf/warped_metric.hpp"

namespace csf::cli {

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunResult {
  std::vector<CsvTable> tables;
  std::vector<std::pair<std::string, std::string>> svgs;  // file, content
  std::vector<Check> checks;
  std::vector<std::string> solver_notes;
  bool solver_failure = false;

  bool passed() const {
    return !solver_failure &&
           std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
  }
  void check(std::string name, bool ok, std::string detail) {
    checks.push_back({std::move(name), ok, std::move(detail)});
  }
  void note(const std::string& what, const Trajectory& tr) {
    if (tr.completed()) return;
    solver_failure = true;
    solver_notes.push_back(what + ": " + csf::to_string(tr.status) + " at t=" + fmt(tr.stop_time) +
                           " (" + tr.message + ")");
  }
};

namespace detail {

inline std::size_t stride_for(double every, double dt) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(every / dt)));
}

inline double odd_defect(const GraphFrame& f) {
  double e = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    e = std::max(e, std::abs(f.values[i] + f.values[f.size() - 1 - i]));
  }
  return e;
}

inline double min_step(const GraphFrame& f) {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < f.size(); ++i) m = std::min(m, f.values[i + 1] - f.values[i]);
  return m;
}

inline const GraphFrame* frame_near(const Trajectory& tr, double t) {
  for (const GraphFrame& f : tr.frames) {
    if (std::abs(f.t - t) < 1e-9) return &f;
  }
  return nullptr;
}

inline void run_bloom(const ExperimentConfig& cfg, const WarpingFunction& metric, RunResult& out) {
  const double T = cfg.horizon();
  const BloomReport probe = bloom_probe(metric, default_bloom_radii(), 10.0, {2.0, 1e-6, 1e-4});
  out.check("probe conclusive", probe.status != BloomStatus::Inconclusive, csf::to_string(probe.status));

  CsvTable tab("bloom.csv", {{"t", "time"}, {"R", "length"}, {"zeta", "length"}, {"rel_err", "1"}});
  Polyline curve, exact;
  double worst = 0.0;
  std::size_t in_window = 0;
  for (std::size_t i = 0; i < probe.pull_in_t.size(); ++i) {
    const double t = probe.pull_in_t[i];
    const double R = probe.pull_in_r[i];
    const bool has_zeta = t > 0.0 && t <= 0.5;
    const double z = has_zeta ? zeta(t) : 0.0;
    const double rel = has_zeta ? std::abs(R - z) / z : 0.0;
    if (t >= 0.05 && t <= 0.45) {
      worst = std::max(worst, rel);
      ++in_window;
    }
    if (t > T || i % 10 != 0) continue;
    if (has_zeta) {
      tab.row(t, R, z, rel);
    } else {
      tab.row(t, R, "", "");
    }
    if (t >= 0.05) {
      curve.emplace_back(t, R);
      if (has_zeta) exact.emplace_back(t, z);
    }
  }
  if (probe.blooms) {
    out.check("pull-in curve matches 1/t on [0.05, 0.45]", in_window > 0 && worst <= 1e-3,
              "max rel err " + fmt(worst));
  }
  const BloomEquivalence eq = bloom_equivalence_check(metric);
  out.check("bloom conditions agree", eq.agree,
            "condition1=" + std::string(eq.condition1 ? "true" : "false") +
                " condition2=" + (eq.condition2 ? "true" : "false"));
  out.tables.push_back(std::move(tab));
  if (cfg.emit_svg && !curve.empty()) {
    out.svgs.emplace_back("bloom.svg", svg_plot({exact, curve}, "pull-in curve R(t) and 1/t", "t", "R"));
  }
}

inline void run_nonunique(const ExperimentConfig& cfg, const WarpingFunction& metric,
                          unsigned threads, RunResult& out) {
  const double T = cfg.horizon();
  const double eps = 0.5;
  const NestedFamily fam = build_nested(cfg.ns, metric, cfg.resolution, cfg.dt, T,
                                        stride_for(0.05, cfg.dt), threads);
  for (std::size_t j = 0; j < fam.ns.size(); ++j) {
    out.note("V_" + std::to_string(fam.ns[j]), fam.trajectories[j]);
  }

  for (std::size_t j = 0; j < fam.ns.size(); ++j) {
    const Trajectory& tr = fam.trajectories[j];
    double odd = 0.0, step = std::numeric_limits<double>::infinity(), box = 0.0;
    for (const GraphFrame& f : tr.frames) {
      odd = std::max(odd, odd_defect(f));
      box = std::max(box, parallelogram_violation(f, fam.ns[j]));
      if (f.t > 0.0) step = std::min(step, min_step(f));
    }
    const std::string n = std::to_string(fam.ns[j]);
    out.check("V_" + n + " odd", odd < 1e-9, "max defect " + fmt(odd));
    out.check("V_" + n + " nondecreasing", step >= -1e-8, "min step " + fmt(step));
    out.check("V_" + n + " in parallelogram", box <= 1e-6, "max violation " + fmt(box));
  }
  for (std::size_t j = 0; j + 1 < fam.ns.size(); ++j) {
    const Trajectory& a = fam.trajectories[j + 1];
    const Trajectory& b = fam.trajectories[j];
    const std::size_t frames = std::min(a.frames.size(), b.frames.size());
    const std::size_t off = (a.grid().n - b.grid().n) / 2;
    const std::size_t mid = b.grid().n / 2;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < frames; ++k) {
      for (std::size_t i = mid; i < b.grid().n; ++i) {
        worst = std::max(worst, a.frames[k].values[i + off] - b.frames[k].values[i]);
      }
    }
    out.check("y_" + std::to_string(fam.ns[j + 1]) + " <= y_" + std::to_string(fam.ns[j]),
              worst <= 1e-6, "max excess " + fmt(worst));
  }

  CsvTable tab("nonunique.csv", {{"t", "time"}, {"x", "length"}, {"y_limit", "length"},
                                 {"ubar", "length"}, {"peel_ok", "bool"}});
  double dominated = -std::numeric_limits<double>::infinity();
  std::vector<Polyline> curves;
  for (const GraphFrame& f : fam.limit_frames) {
    const bool barrier_time = f.t > 0.0 && f.t <= 0.5;
    const double x0 = barrier_time ? peel_x0(f.t, eps) : 0.0;
    Polyline line;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double x = f.node(i), y = f.values[i];
      line.emplace_back(x, y);
      if (!barrier_time) {
        tab.row(f.t, x, y, "", "");
        continue;
      }
      const double u = barrier_ubar(x, f.t);
      dominated = std::max(dominated, u - y);
      if (x > x0) {
        tab.row(f.t, x, y, u, y > 1.0 - eps - 1e-6);
      } else {
        tab.row(f.t, x, y, u, "");
      }
    }
    curves.push_back(std::move(line));
  }
  out.check("ubar <= limit", dominated <= 1e-6, "max excess " + fmt(dominated));

  const Trajectory& widest = fam.trajectories.back();
  if (const GraphFrame* f = frame_near(widest, 0.2)) {
    bool ok = false;
    std::string detail = "x0=" + fmt(peel_x0(0.2, eps));
    try {
      ok = peel_check(*f, eps);
    } catch (const DomainTooSmall& e) {
      detail += std::string(" ") + e.what();
    }
    out.check("peel at t=0.2, eps=0.5 on y_" + std::to_string(fam.ns.back()), ok, detail);
  }
  for (const GraphFrame& f : fam.limit_frames) {
    if (std::abs(f.t - 0.1) > 1e-9) continue;
    double m = 0.0;
    for (double v : f.values) m = std::max(m, std::abs(v));
    out.check("limit nonzero at t=0.1", m > 1e-6, "max |y| " + fmt(m));
  }
  out.tables.push_back(std::move(tab));
  if (cfg.emit_svg) {
    out.svgs.emplace_back("nonunique.svg", svg_plot(curves, "limit frames y(x,t)", "x", "y"));
  }
}

inline void run_barriers(const ExperimentConfig& cfg, const WarpingFunction& metric, RunResult& out) {
  CsvTable bt("barrier_b.csv", {{"t", "time"}, {"y", "length"}, {"b", "length"},
                                {"residual", "length/time"}});
  double worst_b = std::numeric_limits<double>::infinity();
  for (int q = 1; q <= 9; ++q) {
    const double t = 0.05 * q;
    for (int p = 1; p <= 60; ++p) {
      const double y = 0.05 * p;
      const double b = barrier_b(y, t);
      const double l = std::log1p(y);
      const double b_t = 1.0 - 1.0 / (t * t);
      const double b_y = -1.0 / ((1.0 + y) * l * l);
      const double b_yy = (1.0 / (l * l) + 2.0 / (l * l * l)) / ((1.0 + y) * (1.0 + y));
      const double r = b_t - eval_H(b, b_y, b_yy, metric);
      worst_b = std::min(worst_b, r);
      bt.row(t, y, b, r);
    }
  }
  out.check("b supersolution", worst_b >= -1e-8, "min residual " + fmt(worst_b));

  const int k = 4;
  const double A = foliation_rate(k);
  const double tau = foliation_tau(k);
  const double dt = std::min(cfg.dt, tau / 50.0);
  const DirichletSpec s = spec_foliation(k, metric, cfg.resolution, dt);
  const Trajectory F = solve_dirichlet(s, tau);
  out.note("foliation F_4", F);

  std::vector<double> line(s.grid.n);
  for (std::size_t i = 0; i < s.grid.n; ++i) line[i] = 4.0 * s.grid.node(i);
  double worst_line = -std::numeric_limits<double>::infinity();
  for (double r : residual_operator(GraphFrame(s.grid, line, 0.0), GraphFrame(s.grid, line, dt), s)) {
    worst_line = std::max(worst_line, r);
  }
  out.check("4x subsolution", worst_line <= 1e-12, "max residual " + fmt(worst_line));

  double worst_up = std::numeric_limits<double>::infinity();
  for (int q = 0; q <= 20; ++q) {
    const double t = tau * q / 20.0;
    const double e = std::exp(A * t);
    for (int p = 0; p <= 500; ++p) {
      const double x = 0.01 * p;
      worst_up = std::min(worst_up, 4.0 * x * A * e - eval_V(4.0 * x * e, 4.0 * e, 0.0, x, metric));
    }
  }
  out.check("4x e^{A t} supersolution", worst_up >= -1e-8, "min residual " + fmt(worst_up));

  CsvTable ft("foliation.csv", {{"t", "time"}, {"x", "length"}, {"F", "length"},
                                {"lower", "length"}, {"upper", "length"}});
  double outside = 0.0;
  for (const GraphFrame& f : F.frames) {
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double x = f.node(i);
      const double lo = 4.0 * x, hi = 4.0 * x * std::exp(A * f.t);
      outside = std::max({outside, lo - f.values[i], f.values[i] - hi});
      ft.row(f.t, x, f.values[i], lo, hi);
    }
  }
  out.check("F between 4x and 4x e^{A t}", outside <= 1e-9, "max violation " + fmt(outside));
  out.tables.push_back(std::move(bt));
  out.tables.push_back(std::move(ft));
}

inline void run_invariants(const ExperimentConfig& cfg, const WarpingFunction& metric,
                           unsigned threads, RunResult& out) {
  const double T = cfg.horizon();
  const std::size_t stride = stride_for(0.01, cfg.dt);
  const NestedFamily fam = build_nested(cfg.ns, metric, cfg.resolution, cfg.dt, T, stride, threads);
  CsvTable tab("invariants.csv", {{"family", "-"}, {"param", "1"}, {"t", "time"},
                                  {"odd_defect", "length"}, {"min_step", "length"},
                                  {"violation", "length"}});
  CsvTable it("intersections.csv", {{"n", "1"}, {"h", "length"}, {"t", "time"}, {"count", "1"}});
  for (std::size_t j = 0; j < fam.ns.size(); ++j) {
    const Trajectory& tr = fam.trajectories[j];
    out.note("V_" + std::to_string(fam.ns[j]), tr);
    bool ok = true;
    for (const GraphFrame& f : tr.frames) {
      const double odd = odd_defect(f), step = min_step(f), box = parallelogram_violation(f, fam.ns[j]);
      ok = ok && odd < 1e-9 && box <= 1e-6 && (f.t == 0.0 || step >= -1e-8);
      tab.row("V", fam.ns[j], f.t, odd, step, box);
    }
    out.check("V_" + std::to_string(fam.ns[j]) + " odd, monotone, in parallelogram", ok, "");
    bool mono = true;
    for (int q = -3; q <= 3; ++q) {
      const double h = 0.3 * q;
      const IntersectionReport rep = intersection_monotonicity(tr, constant_trajectory(tr, h));
      for (std::size_t m = 0; m < rep.times.size(); ++m) {
        it.row(fam.ns[j], h, rep.times[m], rep.counts[m]);
        if (m > 0 && rep.counts[m] != 1) mono = false;
      }
      mono = mono && rep.monotone;
    }
    out.check("V_" + std::to_string(fam.ns[j]) + " meets each line once", mono, "");
  }
  for (double c : {3.0, 5.0}) {
    const DirichletSpec s = spec_Hc(c, metric, cfg.resolution, cfg.dt);
    SolveOptions opt;
    opt.record_stride = stride;
    const Trajectory tr = solve_dirichlet(s, T, opt);
    out.note("H_" + fmt(c), tr);
    const HcRegion region(c, metric, s.grid);
    double worst = 0.0, step = std::numeric_limits<double>::infinity();
    for (const GraphFrame& f : tr.frames) {
      const double v = region.violation(f);
      worst = std::max(worst, v);
      if (f.t > 0.0) step = std::min(step, min_step(f));
      tab.row("H", c, f.t, "", min_step(f), v);
    }
    out.check("H_" + fmt(c) + " in region", worst <= 1e-6, "max violation " + fmt(worst));
    out.check("H_" + fmt(c) + " nondecreasing", step >= -1e-8, "min step " + fmt(step));
  }
  out.tables.push_back(std::move(tab));
  out.tables.push_back(std::move(it));
}

inline void run_uniqueness(const ExperimentConfig& cfg, const WarpingFunction& metric, RunResult& out) {
  UniquenessReport rep;
  try {
    rep = uniqueness_probe(metric, 1.0, {25.0, 50.0, 100.0}, cfg.horizon(), cfg.resolution, cfg.dt);
  } catch (const PreconditionViolation& e) {
    throw ConfigError(std::string("uniqueness-probe: ") + e.what());
  }
  CsvTable tab("uniqueness.csv", {{"L", "length"}, {"interior_sup", "length"},
                                  {"circle_scale", "length"}, {"status", "-"}});
  for (const auto& s : rep.samples) {
    tab.row(s.L, s.interior_sup, rep.circle_scale, csf::to_string(s.status));
    if (s.status != TrajectoryStatus::Completed) {
      out.solver_failure = true;
      out.solver_notes.push_back("L=" + fmt(s.L) + ": " + csf::to_string(s.status));
    }
  }
  out.check("interior sup strictly decreasing in L", rep.decreasing, "");
  out.check("interior sup < 0.05 at L=100", rep.samples.back().interior_sup < 0.05,
            "sup " + fmt(rep.samples.back().interior_sup));
  out.tables.push_back(std::move(tab));
}

inline void run_geodesics(const ExperimentConfig& cfg, const WarpingFunction& metric, RunResult& out) {
  CsvTable tab("geodesics.csv", {{"m", "1"}, {"x", "length"}, {"sigma", "length"},
                                 {"slope", "1"}, {"kappa", "1/length"}});
  double worst_k = 0.0, worst_odd = 0.0;
  std::vector<Polyline> curves;
  for (double m : {0.1, 0.5, 0.9}) {
    Polyline line;
    for (int p = -100; p <= 100; ++p) {
      const double x = 0.05 * p;
      const double sig = geodesic_sigma(metric, {m, 0.0}, x);
      const double s = geodesic_slope(metric, m, x);
      const double e = 1e-5;
      const double s2 = (geodesic_slope(metric, m, x + e) - geodesic_slope(metric, m, x - e)) / (2 * e);
      const double k = curvature_vertical(metric, x, s, s2);
      worst_k = std::max(worst_k, std::abs(k));
      worst_odd = std::max(worst_odd, std::abs(sig + geodesic_sigma(metric, {m, 0.0}, -x)));
      tab.row(m, x, sig, s, k);
      line.emplace_back(x, sig);
    }
    curves.push_back(std::move(line));
  }
  out.check("geodesic curvature < 1e-6", worst_k < 1e-6, "max |kappa| " + fmt(worst_k));
  out.check("sigma odd", worst_odd < 1e-9, "max defect " + fmt(worst_odd));
  out.tables.push_back(std::move(tab));
  if (cfg.emit_svg) {
    out.svgs.emplace_back("geodesics.svg", svg_plot(curves, "geodesics sigma_m(x)", "x", "y"));
  }
}

}  // namespace detail

/// Runs the scenario in memory. Throws ConfigError when the metric cannot be
/// used by the scenario.
inline RunResult run_scenario(const ExperimentConfig& cfg, unsigned threads = 0) {
  const WarpingFunction metric = metric_by_name(cfg.metric_name());
  RunResult out;
  try {
    switch (cfg.scenario) {
      case Scenario::Bloom: detail::run_bloom(cfg, metric, out); break;
      case Scenario::Nonunique: detail::run_nonunique(cfg, metric, threads, out); break;
      case Scenario::Barriers: detail::run_barriers(cfg, metric, out); break;
      case Scenario::Invariants: detail::run_invariants(cfg, metric, threads, out); break;
      case Scenario::UniquenessProbe: detail::run_uniqueness(cfg, metric, out); break;
      case Scenario::Geodesics: detail::run_geodesics(cfg, metric, out); break;
    }
  } catch (const DomainError& e) {
    throw ConfigError("metric '" + cfg.metric_name() + "' cannot be used by scenario '" +
                      to_string(cfg.scenario) + "': " + e.what());
  }
  return out;
}

inline nlohmann::json manifest(const ExperimentConfig& cfg, const RunResult& r) {
  using nlohmann::json;
  json m;
  m["tool"] = "csf-lab";
  m["config"] = {{"scenario", to_string(cfg.scenario)},
                 {"metric", cfg.metric_name()},
                 {"resolution", cfg.resolution},
                 {"dt", cfg.dt},
                 {"T", cfg.horizon()},
                 {"ns", cfg.ns},
                 {"output_dir", cfg.output_dir},
                 {"emit_svg", cfg.emit_svg}};
  json files = json::array();
  for (const CsvTable& t : r.tables) {
    json cols = json::array();
    for (const Column& c : t.columns()) cols.push_back({{"name", c.name}, {"unit", c.unit}});
    files.push_back({{"file", t.file()}, {"rows", t.rows()}, {"columns", cols},
                     {"git_blob_sha1", git_blob_sha1(t.text())}});
  }
  for (const auto& [name, text] : r.svgs) {
    files.push_back({{"file", name}, {"git_blob_sha1", git_blob_sha1(text)}});
  }
  m["files"] = files;
  json checks = json::array();
  for (const Check& c : r.checks) {
    checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  m["checks"] = checks;
  m["solver"] = r.solver_notes;
  m["status"] = r.passed() ? "pass" : "fail";
  return m;
}

/// Writes every artifact plus manifest.json into cfg.output_dir.
inline void write_artifacts(const ExperimentConfig& cfg, const RunResult& r) {
  namespace fs = std::filesystem;
  const fs::path dir(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create output directory '" + cfg.output_dir + "': " + ec.message());
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(dir / name, std::ios::binary);
    f << text;
    if (!f) throw ConfigError("cannot write '" + (dir / name).string() + "'");
  };
  for (const CsvTable& t : r.tables) put(t.file(), t.text());
  for (const auto& [name, text] : r.svgs) put(name, text);
  put("manifest.json", manifest(cfg, r).dump(2) + "\n");
}

}  // namespace csf::cli
