#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "csf/errors.hpp"
#include "csf/grid.hpp"
#include "csf/tridiagonal.hpp"
#include "csf/warped_metric.hpp"

namespace csf {

enum class GraphOperator { V, H };

/// Spatial part of V: mu(u_x) u_xx + phi'(x) (1 + mu(u_x)) u_x.
inline double eval_V(double /*u*/, double u_x, double u_xx, double x,
                     const WarpingFunction& metric) {
  const PhiValues v = metric(x);
  const double mu = mu_from_phi(v.phi, u_x);
  return mu * u_xx + v.dphi * (1.0 + mu) * u_x;
}

/// Spatial part of H: nu(u_y) u_yy - phi'(u) (1 + nu(u_y) u_y^2).
inline double eval_H(double u, double u_y, double u_yy,
                     const WarpingFunction& metric) {
  const PhiValues v = metric(u);
  const double nu = nu_from_phi(v.phi, u_y);
  return nu * u_yy - v.dphi * (1.0 + nu * u_y * u_y);
}

struct DirichletSpec {
  GraphOperator op = GraphOperator::V;
  WarpingFunction metric = WarpingFunction::paper();
  Grid1D grid;
  std::function<double(double)> initial;
  std::function<double(double)> left_bc;
  std::function<double(double)> right_bc;
  double grad_blowup_threshold = 1e6;
};

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 50;
  int stall_limit = 10;
};

struct SolveOptions {
  NewtonOptions newton;
  /// Keep every k-th frame; the first and last frames are always kept.
  std::size_t record_stride = 1;
};

/// Discrete spatial operator with its tridiagonal Jacobian.
///
/// Both diffusion terms are differences of a flux with phi frozen at the node:
/// mu(p) y_xx = d/dx [e^{-phi} atan(p e^{phi})] and
/// nu(p) x_yy = d/dy [e^{-phi} atan(p e^{-phi})]. The first-order terms are
/// one-sided, upwind with respect to the sign of phi'. Both choices keep the
/// off-diagonal Jacobian entries nonnegative, even across near-jumps.
class DiscreteOperator {
 public:
  struct Row {
    double value = 0.0;
    double d_left = 0.0;
    double d_center = 0.0;
    double d_right = 0.0;
  };

  explicit DiscreteOperator(const DirichletSpec& spec)
      : op_(spec.op), metric_(spec.metric), grid_(spec.grid),
        h_(spec.grid.spacing()) {
    if (op_ == GraphOperator::V) {
      phi_.resize(grid_.n);
      dphi_.resize(grid_.n);
      for (std::size_t i = 0; i < grid_.n; ++i) {
        const PhiValues v = metric_(grid_.node(i));
        phi_[i] = v.phi;
        dphi_[i] = v.dphi;
      }
    }
  }

  const Grid1D& grid() const noexcept { return grid_; }

  Row row(std::span<const double> u, std::size_t i) const {
    return op_ == GraphOperator::V ? row_V(u, i) : row_H(u, i);
  }

  double value(std::span<const double> u, std::size_t i) const {
    return row(u, i).value;
  }

  /// F at every interior node.
  std::vector<double> apply(std::span<const double> u) const {
    std::vector<double> out;
    out.reserve(u.size() - 2);
    for (std::size_t i = 1; i + 1 < u.size(); ++i) out.push_back(value(u, i));
    return out;
  }

 private:
  // e^{-s} atan(p e^{s}); its p-derivative is 1/(1 + p^2 e^{2s}).
  static double atan_flux(double p, double s) {
    if (p == 0.0) return 0.0;
    const double q = p * std::exp(s);
    if (std::abs(q) < 1e-8) return p;
    return std::atan(q) * std::exp(-s);
  }

  // e^{-phi} atan(p e^{-phi}); its p-derivative is nu(p).
  static double atan_flux_h(double p, double phi) {
    if (p == 0.0) return 0.0;
    const double e = std::exp(-phi);
    const double q = p * e;
    if (std::abs(q) < 1e-8) return q * e;
    return std::atan(q) * e;
  }

  Row row_V(std::span<const double> u, std::size_t i) const {
    const double ul = u[i - 1], uc = u[i], ur = u[i + 1];
    const double pm = (uc - ul) / h_;
    const double pp = (ur - uc) / h_;
    const double phi = phi_[i];
    const double a = dphi_[i];

    const double mu_m = mu_from_phi(phi, pm);
    const double mu_p = mu_from_phi(phi, pp);
    Row r;
    r.value = (atan_flux(pp, phi) - atan_flux(pm, phi)) / h_;
    r.d_left = mu_m / (h_ * h_);
    r.d_right = mu_p / (h_ * h_);
    r.d_center = -(mu_m + mu_p) / (h_ * h_);

    if (a != 0.0) {
      // (1 + mu(p)) p is increasing in p with slope 1 - mu + 2 mu^2.
      const bool forward = a > 0.0;
      const double ph = forward ? pp : pm;
      const double m = forward ? mu_p : mu_m;
      const double kp = 1.0 - m + 2.0 * m * m;
      r.value += a * (1.0 + m) * ph;
      if (forward) {
        r.d_right += a * kp / h_;
        r.d_center -= a * kp / h_;
      } else {
        r.d_center += a * kp / h_;
        r.d_left -= a * kp / h_;
      }
    }
    return r;
  }

  Row row_H(std::span<const double> u, std::size_t i) const {
    const double ul = u[i - 1], uc = u[i], ur = u[i + 1];
    const double pm = (uc - ul) / h_;
    const double pp = (ur - uc) / h_;
    const PhiValues v = metric_(uc);

    const double nu_m = nu_from_phi(v.phi, pm);
    const double nu_p = nu_from_phi(v.phi, pp);
    const double g_m = atan_flux_h(pm, v.phi);
    const double g_p = atan_flux_h(pp, v.phi);
    // d/dphi of the flux is -g - p nu.
    const double gphi_m = -g_m - pm * nu_m;
    const double gphi_p = -g_p - pp * nu_p;

    Row r;
    r.value = (g_p - g_m) / h_;
    r.d_left = nu_m / (h_ * h_);
    r.d_right = nu_p / (h_ * h_);
    r.d_center = -(nu_m + nu_p) / (h_ * h_) + v.dphi * (gphi_p - gphi_m) / h_;

    // Drift -phi'(u)(1 + w(p)), w = p^2 nu.
    const bool backward = v.dphi >= 0.0;
    const double ph = backward ? pm : pp;
    const double nh = backward ? nu_m : nu_p;
    const double w = ph * ph * nh;
    const double w_p = 2.0 * ph * nh * (1.0 - w);
    const double w_phi = -2.0 * w * (1.0 - w);
    r.value -= v.dphi * (1.0 + w);
    r.d_center -= v.d2phi * (1.0 + w) + v.dphi * w_phi * v.dphi;
    const double g = v.dphi * w_p / h_;
    if (backward) {
      r.d_center -= g;
      r.d_left += g;
    } else {
      r.d_right -= g;
      r.d_center += g;
    }
    return r;
  }

  GraphOperator op_;
  WarpingFunction metric_;
  Grid1D grid_;
  double h_;
  std::vector<double> phi_;
  std::vector<double> dphi_;
};

namespace detail {

inline Orientation orientation_of(GraphOperator op) {
  return op == GraphOperator::V ? Orientation::Vertical : Orientation::Horizontal;
}

inline double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Backward-Euler residual G(u) = u - dt F(u) - u_old on interior nodes.
inline double be_residual(const DiscreteOperator& F, std::span<const double> u,
                          std::span<const double> u_old, double dt) {
  double m = 0.0;
  for (std::size_t i = 1; i + 1 < u.size(); ++i) {
    const double g = u[i] - dt * F.value(u, i) - u_old[i];
    if (!std::isfinite(g)) return std::numeric_limits<double>::infinity();
    m = std::max(m, std::abs(g));
  }
  return m;
}

inline std::vector<double> implicit_step(const DiscreteOperator& F,
                                         const DirichletSpec& spec,
                                         std::span<const double> u_old,
                                         double t_new,
                                         const NewtonOptions& opt) {
  const std::size_t n = u_old.size();
  const double dt = spec.grid.dt;
  std::vector<double> u(u_old.begin(), u_old.end());
  u.front() = spec.left_bc(t_new);
  u.back() = spec.right_bc(t_new);

  const std::size_t m = n - 2;
  std::vector<double> lo(m), di(m), up(m), rhs(m), trial(n);
  double res = be_residual(F, u, u_old, dt);
  int stall = 0;
  for (int it = 0; it < opt.max_iter; ++it) {
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = k + 1;
      const DiscreteOperator::Row r = F.row(u, i);
      lo[k] = -dt * r.d_left;
      di[k] = 1.0 - dt * r.d_center;
      up[k] = -dt * r.d_right;
      rhs[k] = -(u[i] - dt * r.value - u_old[i]);
    }
    const std::vector<double> delta = solve_tridiagonal<double>(lo, di, up, rhs);

    double lambda = 1.0;
    double trial_res = res;
    for (int halving = 0; halving < 30; ++halving) {
      trial = u;
      for (std::size_t k = 0; k < m; ++k) trial[k + 1] += lambda * delta[k];
      trial_res = be_residual(F, trial, u_old, dt);
      if (trial_res <= res) break;
      lambda *= 0.5;
    }
    const double update = lambda * max_abs(delta);
    if (!std::isfinite(trial_res)) {
      throw NewtonDiverged(t_new, "non-finite residual in implicit step");
    }
    stall = trial_res >= res ? stall + 1 : 0;
    u.swap(trial);
    res = trial_res;
    if (update < opt.tol || res == 0.0) return u;
    if (stall >= opt.stall_limit) {
      std::ostringstream os;
      os << "Newton residual stalled at " << res << " (t = " << t_new << ")";
      throw NewtonDiverged(t_new, os.str());
    }
  }
  return u;
}

inline void check_spec(const DirichletSpec& spec) {
  if (!spec.initial || !spec.left_bc || !spec.right_bc) {
    throw std::invalid_argument("DirichletSpec: missing initial or boundary data");
  }
}

}  // namespace detail

/// One backward-Euler step of size spec.grid.dt.
inline GraphFrame step_implicit(const GraphFrame& frame, const DirichletSpec& spec,
                                const NewtonOptions& opt = {}) {
  detail::check_spec(spec);
  if (frame.grid.n != spec.grid.n || frame.grid.lo != spec.grid.lo ||
      frame.grid.hi != spec.grid.hi) {
    throw std::invalid_argument("step_implicit: frame grid differs from spec grid");
  }
  const DiscreteOperator F(spec);
  const double t_new = frame.t + spec.grid.dt;
  return GraphFrame(spec.grid,
                    detail::implicit_step(F, spec, frame.values, t_new, opt),
                    t_new, detail::orientation_of(spec.op));
}

/// Frame of the initial data with boundary nodes taken from the boundary data.
inline GraphFrame initial_frame(const DirichletSpec& spec) {
  detail::check_spec(spec);
  const Grid1D& g = spec.grid;
  std::vector<double> v(g.n);
  for (std::size_t i = 0; i < g.n; ++i) v[i] = spec.initial(g.node(i));
  const double l = spec.left_bc(0.0), r = spec.right_bc(0.0);
  auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b));
  };
  if (!close(v.front(), l) || !close(v.back(), r)) {
    throw std::invalid_argument(
        "DirichletSpec: initial data does not match boundary data at t = 0");
  }
  v.front() = l;
  v.back() = r;
  return GraphFrame(g, std::move(v), 0.0, detail::orientation_of(spec.op));
}

/// Repeated implicit steps up to t_end; stops early on gradient blow-up or a
/// Newton failure, recording the status instead of throwing.
inline Trajectory solve_dirichlet(const DirichletSpec& spec, double t_end,
                                  const SolveOptions& opt = {}) {
  if (!(t_end > 0.0)) throw std::invalid_argument("solve_dirichlet: t_end must be > 0");
  const DiscreteOperator F(spec);
  const Grid1D& g = spec.grid;
  const auto steps = static_cast<std::size_t>(std::ceil(t_end / g.dt - 1e-9));
  const std::size_t stride = std::max<std::size_t>(1, opt.record_stride);
  const Orientation o = detail::orientation_of(spec.op);

  Trajectory traj;
  traj.frames.push_back(initial_frame(spec));
  std::vector<double> u = traj.frames.front().values;
  for (std::size_t k = 1; k <= steps; ++k) {
    const double t = static_cast<double>(k) * g.dt;
    try {
      u = detail::implicit_step(F, spec, u, t, opt.newton);
    } catch (const NewtonDiverged& e) {
      traj.status = TrajectoryStatus::Diverged;
      traj.stop_time = e.time();
      traj.message = e.what();
      return traj;
    }
    const double slope = detail::max_abs(frame_gradient(u, g.spacing()));
    const bool blowup = !(slope <= spec.grad_blowup_threshold);
    if (k % stride == 0 || k == steps || blowup) {
      traj.frames.emplace_back(g, u, t, o);
    }
    if (blowup) {
      traj.status = TrajectoryStatus::GradientBlowup;
      traj.stop_time = t;
      traj.message = "slope exceeded the blow-up threshold";
      return traj;
    }
  }
  traj.stop_time = traj.frames.back().t;
  return traj;
}

/// (u_next - u_prev)/dt - F(u_next) at interior nodes, with the solver's F.
inline std::vector<double> residual_operator(const GraphFrame& prev,
                                             const GraphFrame& next,
                                             const DirichletSpec& spec) {
  if (prev.size() != next.size() || prev.size() != spec.grid.n) {
    throw std::invalid_argument("residual_operator: frames do not share the grid");
  }
  const double dt = next.t - prev.t;
  if (!(dt > 0.0)) throw std::invalid_argument("residual_operator: frames out of order");
  const DiscreteOperator F(spec);
  std::vector<double> r;
  r.reserve(prev.size() - 2);
  for (std::size_t i = 1; i + 1 < prev.size(); ++i) {
    r.push_back((next.values[i] - prev.values[i]) / dt - F.value(next.values, i));
  }
  return r;
}

}  // namespace csf
