#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "csf/errors.hpp"
#include "csf/flows.hpp"
#include "csf/grid.hpp"
#include "csf/parabolic_solver.hpp"
#include "csf/warped_metric.hpp"

namespace csf {

// ---------------------------------------------------------------------------
// Intersections.

/// A maximal run of nodes where the two frames cross or touch.
struct IntersectionEvent {
  std::size_t first = 0;  ///< first node of the event
  std::size_t last = 0;   ///< last node of the event
  bool crossing = false;  ///< sign of a - b differs on the two sides
  bool transverse = false;
};

namespace detail {

inline void require_same_grid(const GraphFrame& a, const GraphFrame& b) {
  if (a.size() != b.size() || a.grid.lo != b.grid.lo || a.grid.hi != b.grid.hi) {
    throw std::invalid_argument("frames are not on the same grid");
  }
}

inline int sign_with_deadband(double d, double deadband) {
  if (std::abs(d) < deadband) return 0;
  return d > 0.0 ? 1 : -1;
}

}  // namespace detail

/// Zero-runs of a - b (|a - b| < deadband) count as one event each; so does
/// a sign change between neighbouring nodes.
inline std::vector<IntersectionEvent> intersection_events(const GraphFrame& a,
                                                          const GraphFrame& b,
                                                          double deadband = 1e-9) {
  detail::require_same_grid(a, b);
  const std::size_t n = a.size();
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = a.values[i] - b.values[i];
  const std::vector<double> slope = frame_gradient(d, a.grid.spacing());

  std::vector<IntersectionEvent> events;
  int before = 0;  // last nonzero sign seen
  std::size_t i = 0;
  while (i < n) {
    const int s = detail::sign_with_deadband(d[i], deadband);
    if (s == 0) {
      std::size_t j = i;
      while (j + 1 < n && detail::sign_with_deadband(d[j + 1], deadband) == 0) ++j;
      const int after = j + 1 < n ? detail::sign_with_deadband(d[j + 1], deadband) : 0;
      IntersectionEvent e;
      e.first = i;
      e.last = j;
      e.crossing = before != 0 && after != 0 && before != after;
      double steepest = 0.0;
      for (std::size_t k = i; k <= j; ++k) steepest = std::max(steepest, std::abs(slope[k]));
      e.transverse = steepest > 1e-6;
      events.push_back(e);
      if (after != 0) before = after;
      i = j + 1;
      continue;
    }
    if (before != 0 && s != before) {
      IntersectionEvent e;
      e.first = i - 1;
      e.last = i;
      e.crossing = true;
      e.transverse = true;
      events.push_back(e);
    }
    before = s;
    ++i;
  }
  return events;
}

/// Number of intersection events; identical frames count as one touch.
inline std::size_t intersection_count(const GraphFrame& a, const GraphFrame& b,
                                      double deadband = 1e-9) {
  return intersection_events(a, b, deadband).size();
}

struct IntersectionReport {
  std::vector<double> times;
  std::vector<std::size_t> counts;
  bool monotone = true;
};

namespace detail {

inline void require_same_sampling(const Trajectory& a, const Trajectory& b) {
  if (a.frames.size() != b.frames.size()) {
    throw std::invalid_argument("trajectories have different frame counts");
  }
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    require_same_grid(a.frames[k], b.frames[k]);
    if (std::abs(a.frames[k].t - b.frames[k].t) > 1e-12) {
      throw std::invalid_argument("trajectories are sampled at different times");
    }
  }
}

}  // namespace detail

inline IntersectionReport intersection_monotonicity(const Trajectory& a,
                                                    const Trajectory& b,
                                                    double deadband = 1e-9) {
  detail::require_same_sampling(a, b);
  IntersectionReport rep;
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    rep.times.push_back(a.frames[k].t);
    rep.counts.push_back(intersection_count(a.frames[k], b.frames[k], deadband));
    if (k > 0 && rep.counts[k] > rep.counts[k - 1]) rep.monotone = false;
  }
  return rep;
}

/// Trajectory with the sampling of `like` and every value equal to h.
inline Trajectory constant_trajectory(const Trajectory& like, double h) {
  Trajectory out;
  for (const GraphFrame& f : like.frames) {
    out.frames.emplace_back(f.grid, std::vector<double>(f.size(), h), f.t,
                            f.orientation);
  }
  return out;
}

/// Trajectory sampling f(x, t) on the grid and times of `like`.
template <class F>
Trajectory sampled_trajectory(const Trajectory& like, const F& f) {
  Trajectory out;
  for (const GraphFrame& fr : like.frames) {
    std::vector<double> v(fr.size());
    for (std::size_t i = 0; i < fr.size(); ++i) v[i] = f(fr.node(i), fr.t);
    out.frames.emplace_back(fr.grid, std::move(v), fr.t, fr.orientation);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Avoidance.

/// True iff a <= b + 1e-9 everywhere. Throws PreconditionViolation unless
/// a <= b + 1e-9 holds on the parabolic boundary (first frame and end nodes).
inline bool avoidance_check(const Trajectory& a, const Trajectory& b) {
  constexpr double tol = 1e-9;
  detail::require_same_sampling(a, b);
  if (a.frames.empty()) return true;
  const GraphFrame& a0 = a.frames.front();
  const GraphFrame& b0 = b.frames.front();
  for (std::size_t i = 0; i < a0.size(); ++i) {
    if (a0.values[i] > b0.values[i] + tol) {
      throw PreconditionViolation("avoidance_check: initial data not ordered");
    }
  }
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    const auto& av = a.frames[k].values;
    const auto& bv = b.frames[k].values;
    if (av.front() > bv.front() + tol || av.back() > bv.back() + tol) {
      throw PreconditionViolation("avoidance_check: boundary data not ordered");
    }
  }
  for (std::size_t k = 0; k < a.frames.size(); ++k) {
    const auto& av = a.frames[k].values;
    const auto& bv = b.frames[k].values;
    for (std::size_t i = 0; i < av.size(); ++i) {
      if (av[i] > bv[i] + tol) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Extinction.

struct ExtinctionBound {
  double alpha = 0.0;
  std::vector<double> inner_times;
  double bound = 0.0;
};

/// alpha / (2 pi) + sum of the inner extinction times.
inline ExtinctionBound extinction_bound(double alpha,
                                        const std::vector<double>& inner_times = {}) {
  if (!(alpha >= 0.0)) throw std::invalid_argument("extinction_bound needs alpha >= 0");
  ExtinctionBound b{alpha, inner_times, alpha / (2.0 * std::numbers::pi)};
  for (double t : inner_times) {
    if (!(t >= 0.0)) throw std::invalid_argument("inner extinction times must be >= 0");
    b.bound += t;
  }
  return b;
}

// ---------------------------------------------------------------------------
// Blooming.

inline std::vector<double> default_bloom_radii() {
  return {1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8};
}

struct BloomEquivalence {
  BloomStatus status = BloomStatus::Inconclusive;
  bool condition1 = false;  ///< circles come in from infinity in finite time
  bool condition2 = false;  ///< circles at a fixed time stay in a bounded ball
  bool agree = false;
  double t_star = 0.0;
  std::vector<double> radii;
  std::vector<double> radius_at_t_star;
  /// Radius of the limiting pull-in curve at t_star (NaN without blooming).
  double limit_radius = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline double interpolate(const std::vector<double>& xs,
                          const std::vector<double>& ys, double x) {
  if (xs.size() < 2 || x < xs.front() || x > xs.back()) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  const std::size_t j = std::min<std::size_t>(
      xs.size() - 1, static_cast<std::size_t>(std::max<std::ptrdiff_t>(1, it - xs.begin())));
  const double w = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
  return ys[j - 1] + w * (ys[j] - ys[j - 1]);
}

}  // namespace detail

/// Condition 1: bloom_probe. Condition 2 (proxy): circles started at growing
/// radii, flowed to t_star, stay bounded (the last two radii agree to 1e-3
/// relative) and, when a pull-in curve exists, inside it.
inline BloomEquivalence bloom_equivalence_check(const WarpingFunction& metric,
                                                double t_star = 0.25,
                                                double horizon = 10.0,
                                                std::vector<double> radii = default_bloom_radii()) {
  BloomEquivalence rep;
  rep.t_star = t_star;
  rep.radii = radii;
  const BloomReport probe = bloom_probe(metric, radii, horizon);
  rep.status = probe.status;
  rep.condition1 = probe.blooms;

  for (double r : radii) rep.radius_at_t_star.push_back(radius_at(metric, r, t_star));
  const auto& R = rep.radius_at_t_star;
  const std::size_t n = R.size();
  bool bounded = std::all_of(R.begin(), R.end(), [](double v) { return std::isfinite(v); }) &&
                 std::abs(R[n - 1] - R[n - 2]) <= 1e-3 * std::abs(R[n - 1]);
  if (bounded && probe.blooms) {
    rep.limit_radius = detail::interpolate(probe.pull_in_t, probe.pull_in_r, t_star);
    if (!std::isfinite(rep.limit_radius)) {
      bounded = false;
    } else {
      for (double v : R) {
        if (v > rep.limit_radius * (1.0 + 1e-6)) bounded = false;
      }
    }
  }
  rep.condition2 = bounded;
  rep.agree = rep.status != BloomStatus::Inconclusive && rep.condition1 == rep.condition2;
  return rep;
}

// ---------------------------------------------------------------------------
// Uniqueness probe.

struct UniquenessSample {
  double L = 0.0;
  double interior_sup = 0.0;  ///< sup |y| over [-L/2, L/2] at time T
  TrajectoryStatus status = TrajectoryStatus::Completed;
};

struct UniquenessReport {
  double amplitude = 0.0;
  double T = 0.0;
  /// Radius scale sqrt(2T) of the flat circle that shrinks away by time T.
  double circle_scale = 0.0;
  std::vector<UniquenessSample> samples;
  bool decreasing = true;
};

/// Even initial data amplitude * step(|x| - (L - 1)) on [-L, L] (zero inside,
/// rising to the boundary value `amplitude` across the last unit), evolved
/// under V to time T; reports the interior sup for each L.
inline UniquenessReport uniqueness_probe(const WarpingFunction& metric,
                                         double amplitude,
                                         const std::vector<double>& Ls, double T,
                                         double resolution = 40.0,
                                         double dt = 1e-3) {
  const BloomReport probe = bloom_probe(metric, default_bloom_radii(), 10.0);
  if (probe.status != BloomStatus::NoBloom) {
    throw PreconditionViolation("uniqueness_probe needs a metric that does not bloom");
  }
  UniquenessReport rep;
  rep.amplitude = amplitude;
  rep.T = T;
  rep.circle_scale = std::sqrt(2.0 * T);
  for (double L : Ls) {
    if (!(L >= 2.0)) throw std::invalid_argument("uniqueness_probe needs L >= 2");
    DirichletSpec s;
    s.op = GraphOperator::V;
    s.metric = metric;
    s.grid = Grid1D::with_resolution(-L, L, resolution, dt);
    s.initial = [amplitude, L](double x) {
      const double d = std::abs(x) - (L - 1.0);
      if (d <= 0.0) return 0.0;
      return amplitude * (1.0 - chi(std::min(d, 1.0)));
    };
    s.left_bc = [amplitude](double) { return amplitude; };
    s.right_bc = s.left_bc;
    SolveOptions opt;
    opt.record_stride = std::numeric_limits<std::size_t>::max();
    const Trajectory tr = solve_dirichlet(s, T, opt);
    const GraphFrame& f = tr.frames.back();
    UniquenessSample smp;
    smp.L = L;
    smp.status = tr.status;
    for (std::size_t i = 0; i < f.size(); ++i) {
      if (std::abs(f.node(i)) <= 0.5 * L) {
        smp.interior_sup = std::max(smp.interior_sup, std::abs(f.values[i]));
      }
    }
    if (!rep.samples.empty() && !(smp.interior_sup < rep.samples.back().interior_sup)) {
      rep.decreasing = false;
    }
    rep.samples.push_back(smp);
  }
  return rep;
}

}  // namespace csf
