#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <stdexcept>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/special_functions/fpclassify.hpp>
#include <boost/math/interpolators/pchip.hpp>
#include <boost/math/tools/roots.hpp>

#include "csf/errors.hpp"
#include "csf/grid.hpp"
#include "csf/parabolic_solver.hpp"
#include "csf/warped_metric.hpp"

namespace csf {

// ---------------------------------------------------------------------------
// Cutoff and initial data.

/// Smooth decreasing cutoff: 1 on [0, 1/4], 0 on [3/4, 1], slope > -4.
inline double chi(double s) {
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("chi is defined on [0, 1]");
  const double u = s - 0.25;
  if (u <= 0.0) return 1.0;
  if (u >= 0.5) return 0.0;
  auto g = [](double x) { return bump::f1(x / 0.3); };
  const double a = g(u);
  const double b = g(0.5 - u);
  return 1.0 - a / (a + b);
}

/// Odd initial datum on [-n, n]: zero on [0, n-1], rising to 1 at x = n.
inline std::function<double(double)> initial_Yn(int n) {
  if (n < 2) throw std::invalid_argument("initial_Yn needs n >= 2");
  const double nn = n;
  return [nn](double x) {
    const double a = std::min(std::abs(x), nn);
    const double v = a <= nn - 1.0 ? 0.0 : chi(nn - a);
    return x < 0.0 ? -v : v;
  };
}

/// V on [-n, n] from Y_n with boundary values -1 and 1.
inline DirichletSpec spec_Vn(int n, const WarpingFunction& metric,
                             double resolution, double dt) {
  if (n < 2) throw std::invalid_argument("spec_Vn needs n >= 2");
  DirichletSpec s;
  s.op = GraphOperator::V;
  s.metric = metric;
  s.grid = Grid1D::with_resolution(-n, n, resolution, dt);
  s.initial = initial_Yn(n);
  s.left_bc = [](double) { return -1.0; };
  s.right_bc = [](double) { return 1.0; };
  return s;
}

inline double parallelogram_lower(double x, int n) {
  return std::max(-1.0, 1.0 + 4.0 * (x - n));
}

inline double parallelogram_upper(double x, int n) {
  return std::min(1.0, -1.0 + 4.0 * (x + n));
}

/// Largest violation of the parallelogram bounds over the frame (0 if inside).
inline double parallelogram_violation(const GraphFrame& f, int n) {
  double worst = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double x = f.node(i);
    worst = std::max(worst, parallelogram_lower(x, n) - f.values[i]);
    worst = std::max(worst, f.values[i] - parallelogram_upper(x, n));
  }
  return worst;
}

/// H on y in [0, 1]: starts at x = c, the left end follows c' = -phi'(c) and
/// the right end stays at c.
inline DirichletSpec spec_Hc(double c, const WarpingFunction& metric,
                             double resolution, double dt) {
  if (!(c > 0.0)) throw std::invalid_argument("spec_Hc needs c > 0");
  DirichletSpec s;
  s.op = GraphOperator::H;
  s.metric = metric;
  s.grid = Grid1D::with_resolution(0.0, 1.0, resolution, dt);
  s.initial = [c](double) { return c; };
  s.left_bc = [c, metric](double t) { return radius_at(metric, c, t); };
  s.right_bc = [c](double) { return c; };
  return s;
}

/// Slope parameter m in (0, 1) with sigma_{m,0}(c) = 1.
inline double hc_geodesic_m(double c, const WarpingFunction& metric) {
  if (!(c > 0.0)) throw DomainError("hc_geodesic_m needs c > 0");
  auto g = [&](double m) { return geodesic_sigma(metric, {m, 0.0}, c) - 1.0; };
  double hi = 0.5;
  while (g(hi) < 0.0) {
    hi = 0.5 * (1.0 + hi);
    if (hi > 1.0 - 1e-12) throw DomainError("no geodesic reaches height 1 at c");
  }
  std::uintmax_t iters = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) < 1e-14; };
  const auto r = boost::math::tools::toms748_solve(g, 1e-12, hi, tol, iters);
  return 0.5 * (r.first + r.second);
}

/// Lower and upper bounds of the H_c containment region at the nodes of a
/// y-grid: max(c(t), eta_{m,0}(y)) <= x <= c(t)(1-y) + c y.
class HcRegion {
 public:
  HcRegion(double c, const WarpingFunction& metric, const Grid1D& grid)
      : c_(c), metric_(metric), m_(hc_geodesic_m(c, metric)) {
    eta_.resize(grid.n);
    y_.resize(grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
      y_[i] = grid.node(i);
      if (y_[i] <= 0.0) {
        eta_[i] = 0.0;
      } else if (y_[i] >= 1.0) {
        eta_[i] = c;
      } else {
        eta_[i] = geodesic_eta(metric, {m_, 0.0}, y_[i]);
      }
    }
  }

  double m() const noexcept { return m_; }
  double eta(std::size_t i) const { return eta_[i]; }

  double violation(const GraphFrame& f) const {
    const double ct = radius_at(metric_, c_, f.t);
    double worst = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double upper = ct * (1.0 - y_[i]) + c_ * y_[i];
      const double lower = std::max(ct, eta_[i]);
      worst = std::max(worst, lower - f.values[i]);
      worst = std::max(worst, f.values[i] - upper);
    }
    return worst;
  }

 private:
  double c_;
  WarpingFunction metric_;
  double m_;
  std::vector<double> eta_;
  std::vector<double> y_;
};

// ---------------------------------------------------------------------------
// Nested family y_n and its limit.

struct NestedFamily {
  std::vector<int> ns;
  std::vector<Trajectory> trajectories;
  /// Per-time minimum over n on [-min(ns), min(ns)] (x >= 0, odd reflection).
  std::vector<GraphFrame> limit_frames;
};

namespace detail {

inline unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace detail

inline NestedFamily build_nested(const std::vector<int>& ns,
                                 const WarpingFunction& metric,
                                 double resolution, double dt, double T,
                                 std::size_t record_stride = 1,
                                 unsigned max_threads = 0) {
  if (ns.empty()) throw std::invalid_argument("build_nested needs at least one n");
  for (std::size_t i = 0; i < ns.size(); ++i) {
    if (ns[i] < 2 || (i > 0 && ns[i] <= ns[i - 1])) {
      throw std::invalid_argument("build_nested: ns must be increasing and >= 2");
    }
  }
  if (max_threads == 0) max_threads = detail::default_threads();

  NestedFamily fam;
  fam.ns = ns;
  fam.trajectories.resize(ns.size());
  SolveOptions opt;
  opt.record_stride = record_stride;
  for (std::size_t start = 0; start < ns.size(); start += max_threads) {
    const std::size_t stop = std::min(ns.size(), start + max_threads);
    std::vector<std::future<Trajectory>> jobs;
    for (std::size_t i = start; i < stop; ++i) {
      const DirichletSpec s = spec_Vn(ns[i], metric, resolution, dt);
      jobs.push_back(std::async(std::launch::async,
                                [s, T, opt] { return solve_dirichlet(s, T, opt); }));
    }
    for (std::size_t i = start; i < stop; ++i) {
      fam.trajectories[i] = jobs[i - start].get();
    }
  }

  const int n0 = ns.front();
  const Grid1D window = Grid1D::with_resolution(-n0, n0, resolution, dt);
  std::size_t frames = std::numeric_limits<std::size_t>::max();
  for (const Trajectory& tr : fam.trajectories) frames = std::min(frames, tr.frames.size());

  const std::size_t mid = window.n / 2;
  for (std::size_t k = 0; k < frames; ++k) {
    std::vector<double> v(window.n, std::numeric_limits<double>::infinity());
    for (std::size_t j = 0; j < fam.trajectories.size(); ++j) {
      const GraphFrame& f = fam.trajectories[j].frames[k];
      const std::size_t offset = (f.size() - window.n) / 2;
      for (std::size_t i = mid; i < window.n; ++i) {
        v[i] = std::min(v[i], f.values[i + offset]);
      }
    }
    for (std::size_t i = 0; i < mid; ++i) v[i] = -v[window.n - 1 - i];
    v[mid] = 0.0;
    fam.limit_frames.emplace_back(window, std::move(v),
                                  fam.trajectories.front().frames[k].t);
  }
  return fam;
}

// ---------------------------------------------------------------------------
// Change of gage.

/// Inverse graph of a strictly monotone frame, resampled with monotone
/// piecewise-cubic interpolation on a uniform grid over the value range.
inline GraphFrame gage_switch(const GraphFrame& frame) {
  const std::size_t n = frame.size();
  std::vector<double> vals = frame.values;
  std::vector<double> nodes(n);
  for (std::size_t i = 0; i < n; ++i) nodes[i] = frame.node(i);
  const bool decreasing = vals.back() < vals.front();
  if (decreasing) {
    std::reverse(vals.begin(), vals.end());
    std::reverse(nodes.begin(), nodes.end());
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (!(vals[i + 1] - vals[i] > 1e-12)) {
      throw NotMonotone("gage_switch: frame is not strictly monotone");
    }
  }
  const double lo = vals.front();
  const double hi = vals.back();
  boost::math::interpolators::pchip<std::vector<double>> inverse(std::move(vals),
                                                                 std::move(nodes));
  const Grid1D g(lo, hi, n, frame.grid.dt);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = inverse(g.node(i));
  return GraphFrame(g, std::move(out), frame.t, toggled(frame.orientation));
}

// ---------------------------------------------------------------------------
// Barriers.

namespace detail {

inline void require_barrier_time(double t) {
  if (!(t > 0.0 && t <= 0.5)) throw DomainError("barrier time must lie in (0, 1/2]");
}

}  // namespace detail

/// Horizontal supersolution b(y, t) = t + zeta(t) + 1/log(1 + y).
inline double barrier_b(double y, double t) {
  detail::require_barrier_time(t);
  if (!(y > 0.0)) throw DomainError("barrier_b needs y > 0");
  return t + zeta(t) + 1.0 / std::log1p(y);
}

/// Vertical subsolution: -1 up to t + zeta(t), then max(-1, 2 - e^{1/(x - t - zeta)}).
inline double barrier_ubar(double x, double t) {
  detail::require_barrier_time(t);
  const double d = x - t - zeta(t);
  if (d <= 0.0) return -1.0;
  return std::max(-1.0, 2.0 - std::exp(1.0 / d));
}

/// Abscissa past which the solution has peeled up to 1 - eps.
inline double peel_x0(double t, double eps) {
  detail::require_barrier_time(t);
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("peel_x0 needs eps in (0, 1)");
  return t + zeta(t) + 1.0 / std::log1p(eps);
}

inline bool peel_check(const GraphFrame& frame, double eps) {
  const double x0 = peel_x0(frame.t, eps);
  if (!(frame.grid.hi > x0)) {
    throw DomainTooSmall("peel_check: frame does not extend past x0");
  }
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.node(i) > x0 && !(frame.values[i] > 1.0 - eps - 1e-6)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Gradient foliation.

inline double foliation_rate(int k) { return 2.0 * (k + 1.0) * (k + 1.0); }

inline double foliation_tau(int k) {
  return std::log1p(1.0 / (4.0 * k)) / foliation_rate(k);
}

inline DirichletSpec spec_foliation(int k, const WarpingFunction& metric,
                                    double resolution, double dt) {
  if (k < 1) throw std::invalid_argument("foliation needs k >= 1");
  DirichletSpec s;
  s.op = GraphOperator::V;
  s.metric = metric;
  s.grid = Grid1D::with_resolution(0.0, k + 1.0, resolution, dt);
  s.initial = [](double x) { return 4.0 * x; };
  s.left_bc = [](double) { return 0.0; };
  s.right_bc = [k](double) { return 4.0 * (k + 1.0); };
  return s;
}

inline Trajectory foliation_F(int k, const WarpingFunction& metric,
                              double resolution, double dt, double T) {
  return solve_dirichlet(spec_foliation(k, metric, resolution, dt), T);
}

}  // namespace csf
