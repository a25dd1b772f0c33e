#pragma once

// Warped-product plane metrics dx^2 + e^{2 phi(x)} dy^2 (or the polar form
// dr^2 + e^{2 phi(r)} dtheta^2): warping functions, the coefficients of the
// graphical flow equations, geodesic curvature, graphical geodesics and the
// geodesic-circle ODE R' = -phi'(R).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "csf/errors.hpp"
#include "csf/ode.hpp"

namespace csf {

//! Smooth bump functions used to build the warping function.
namespace bump {

inline double f1(double x) { return x <= 0.0 ? 0.0 : std::exp(-1.0 / x); }

inline double f1_prime(double x) {
  return x <= 0.0 ? 0.0 : std::exp(-1.0 / x) / (x * x);
}

// f2 rises from 0 (x <= 0) to 1 (x >= 1/4). The endpoints are set explicitly
// so the ratio is never evaluated as 0/0.
inline double f2(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 0.25) return 1.0;
  const double a = f1(x);
  const double b = f1(0.25 - x);
  return a / (a + b);
}

inline double f2_prime(double x) {
  if (x <= 0.0 || x >= 0.25) return 0.0;
  const double a = f1(x);
  const double b = f1(0.25 - x);
  const double s = a + b;
  return (f1_prime(x) * b + a * f1_prime(0.25 - x)) / (s * s);
}

inline double f3(double x) { return (f2(x - 1.0) + 8.0 * f2(x - 1.75)) / 9.0; }

inline double f3_prime(double x) {
  return (f2_prime(x - 1.0) + 8.0 * f2_prime(x - 1.75)) / 9.0;
}

}  // namespace bump

/// phi and its first two derivatives at a point.
struct PhiValues {
  double phi = 0.0;
  double dphi = 0.0;
  double d2phi = 0.0;
};

enum class MetricKind { PaperPhi, FlatCartesian, FlatPolar, Custom };

/// Warping function of a warped-product metric.
///
/// Copies share one immutable evaluation cache, so a WarpingFunction can be
/// read from several threads at once.
class WarpingFunction {
 public:
  using Triple = std::function<PhiValues(double)>;

  /// The even warping function with phi = 0 on [-1,1] and phi'(x) = x^2 for
  /// |x| >= 2, built from the bump functions f1, f2, f3 via phi' = x^2 f3(x).
  static WarpingFunction paper() {
    WarpingFunction w(MetricKind::PaperPhi, "paper");
    w.paper_ = std::make_shared<const PaperTable>();
    return w;
  }

  static WarpingFunction flat_cartesian() {
    return WarpingFunction(MetricKind::FlatCartesian, "flat");
  }

  /// phi(r) = log r: the Euclidean plane in polar coordinates.
  static WarpingFunction flat_polar() {
    return WarpingFunction(MetricKind::FlatPolar, "flat-polar");
  }

  static WarpingFunction custom(std::string name, Triple fn) {
    WarpingFunction w(MetricKind::Custom, std::move(name));
    w.custom_ = std::make_shared<const Triple>(std::move(fn));
    return w;
  }

  MetricKind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }

  PhiValues operator()(double x) const {
    switch (kind_) {
      case MetricKind::FlatCartesian:
        return {};
      case MetricKind::FlatPolar:
        require_positive(x);
        return {std::log(x), 1.0 / x, -1.0 / (x * x)};
      case MetricKind::PaperPhi: {
        const double a = std::abs(x);
        const double s = x < 0.0 ? -1.0 : 1.0;
        return {paper_->phi(a), s * paper_dphi(a), paper_d2phi(a)};
      }
      case MetricKind::Custom:
        return (*custom_)(x);
    }
    return {};
  }

  double phi(double x) const { return (*this)(x).phi; }

  /// phi' only; avoids the quadrature behind phi for the built-in kinds.
  double dphi(double x) const {
    switch (kind_) {
      case MetricKind::FlatCartesian:
        return 0.0;
      case MetricKind::FlatPolar:
        require_positive(x);
        return 1.0 / x;
      case MetricKind::PaperPhi:
        return x < 0.0 ? -paper_dphi(-x) : paper_dphi(x);
      case MetricKind::Custom:
        return (*custom_)(x).dphi;
    }
    return 0.0;
  }

 private:
  WarpingFunction(MetricKind kind, std::string name)
      : kind_(kind), name_(std::move(name)) {}

  static void require_positive(double r) {
    if (!(r > 0.0)) {
      throw DomainError("flat-polar warping function needs r > 0, got " +
                        std::to_string(r));
    }
  }

  static double paper_dphi(double a) {
    if (a >= 2.0) return a * a;
    return a * a * bump::f3(a);
  }

  static double paper_d2phi(double a) {
    if (a >= 2.0) return 2.0 * a;
    return 2.0 * a * bump::f3(a) + a * a * bump::f3_prime(a);
  }

  // phi on [1,2] tabulated at 1e-3 knots; the tail beyond 2 is closed form.
  struct PaperTable {
    static constexpr int kKnots = 1000;
    static constexpr double kSpacing = 1.0 / kKnots;
    std::vector<double> cumulative;

    PaperTable() : cumulative(kKnots + 1, 0.0) {
      for (int k = 1; k <= kKnots; ++k) {
        cumulative[k] = cumulative[k - 1] + segment(knot(k - 1), knot(k));
      }
    }

    static double knot(int k) { return 1.0 + static_cast<double>(k) / kKnots; }

    static double segment(double a, double b) {
      if (b <= a) return 0.0;
      auto f = [](double s) { return paper_dphi(s); };
      return boost::math::quadrature::gauss<double, 20>::integrate(f, a, b);
    }

    double phi(double a) const {
      if (a <= 1.0) return 0.0;
      if (a >= 2.0) return cumulative.back() + (a * a * a - 8.0) / 3.0;
      const int k = std::min(kKnots - 1, static_cast<int>((a - 1.0) * kKnots));
      return cumulative[k] + segment(knot(k), a);
    }
  };

  MetricKind kind_;
  std::string name_;
  std::shared_ptr<const PaperTable> paper_;
  std::shared_ptr<const Triple> custom_;
};

// ---------------------------------------------------------------------------
// Coefficients. Both are evaluated without forming e^{2 phi} when it would
// overflow; far out phi(x) ~ x^3/3 exceeds the double range quickly.

/// mu(p) = 1 / (1 + p^2 e^{2 phi}).
inline double mu_from_phi(double phi, double p) {
  if (p == 0.0) return 1.0;
  const double l = 2.0 * (phi + std::log(std::abs(p)));
  if (l > 0.0) {
    const double e = std::exp(-l);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(l));
}

/// nu(p) = 1 / (e^{2 phi} + p^2).
inline double nu_from_phi(double phi, double p) {
  if (2.0 * phi < 700.0) return 1.0 / (std::exp(2.0 * phi) + p * p);
  const double a = std::exp(-2.0 * phi);
  return a / (1.0 + p * p * a);
}

inline double coeff_mu(const WarpingFunction& metric, double p, double x) {
  return mu_from_phi(metric.phi(x), p);
}

inline double coeff_nu(const WarpingFunction& metric, double p, double x) {
  return nu_from_phi(metric.phi(x), p);
}

/// Geodesic curvature of the vertical graph y(x).
inline double curvature_vertical(const WarpingFunction& metric, double x,
                                 double y_x, double y_xx) {
  const PhiValues v = metric(x);
  const double e = std::exp(v.phi);
  const double e2 = e * e;
  const double den = std::pow(1.0 + e2 * y_x * y_x, 1.5);
  return (v.dphi * e * y_x * (y_x * y_x * e2 + 2.0) + e * y_xx) / den;
}

/// Geodesic curvature of the horizontal graph x(y); phi is taken at x.
/// `y` is unused because the metric is invariant under vertical translation.
inline double curvature_horizontal(const WarpingFunction& metric,
                                   [[maybe_unused]] double y, double x_y,
                                   double x_yy, double x) {
  const PhiValues v = metric(x);
  const double e = std::exp(v.phi);
  const double e2 = e * e;
  const double den = std::pow(e2 + x_y * x_y, 1.5);
  return (v.dphi * e * (e2 + 2.0 * x_y * x_y) - e * x_yy) / den;
}

// ---------------------------------------------------------------------------
// Graphical geodesics sigma_{m,h}.

struct GeodesicParams {
  double m = 0.0;  ///< slope parameter, |m| < 1
  double h = 0.0;  ///< value at x = 0

  GeodesicParams() = default;
  GeodesicParams(double m_, double h_) : m(m_), h(h_) {
    if (!(std::abs(m) < 1.0)) {
      throw DomainError("geodesic parameter m must satisfy |m| < 1");
    }
  }
};

/// y_x = m / (e^phi sqrt(e^{2 phi} - m^2)).
inline double geodesic_slope(const WarpingFunction& metric, double m,
                             double x) {
  const double phi = metric.phi(x);
  const double inv = std::exp(-2.0 * phi);  // e^{-2 phi}
  const double q = m * m * inv;
  if (!(q < 1.0)) {
    throw DomainError("geodesic slope undefined where e^{2 phi} <= m^2");
  }
  return m * inv / std::sqrt(1.0 - q);
}

namespace detail {

/// Adaptive Gauss-Kronrod with breakpoints at the warping function's
/// transition knots, so each piece has a smooth integrand.
template <class F>
double integrate_pieces(const F& f, double a, double b,
                        const std::vector<double>& breaks) {
  if (a == b) return 0.0;
  const double sign = a < b ? 1.0 : -1.0;
  const double lo = std::min(a, b);
  const double hi = std::max(a, b);
  std::vector<double> pts{lo};
  for (double c : breaks) {
    if (c > lo && c < hi) pts.push_back(c);
  }
  pts.push_back(hi);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    double err = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        f, pts[i], pts[i + 1], 20, 1e-12, &err);
  }
  return sign * total;
}

inline std::vector<double> transition_knots(const WarpingFunction& metric) {
  if (metric.kind() == MetricKind::PaperPhi) {
    return {-2.0, -1.75, -1.25, -1.0, 1.0, 1.25, 1.75, 2.0, 3.0, 5.0};
  }
  return {};
}

}  // namespace detail

/// sigma_{m,h}(x) = h + integral_0^x geodesic_slope(m, s) ds.
inline double geodesic_sigma(const WarpingFunction& metric,
                             const GeodesicParams& params, double x) {
  if (params.m == 0.0) return params.h;
  auto f = [&](double s) { return geodesic_slope(metric, params.m, s); };
  return params.h +
         detail::integrate_pieces(f, 0.0, x, detail::transition_knots(metric));
}

/// eta_{m,h} = sigma_{m,h}^{-1}, the horizontal-graph form of the geodesic.
/// Requires m != 0 and y strictly inside the range of sigma.
inline double geodesic_eta(const WarpingFunction& metric,
                           const GeodesicParams& params, double y) {
  if (params.m == 0.0) {
    throw DomainError("sigma_{0,h} is a horizontal line and has no inverse");
  }
  auto g = [&](double x) {
    const double s = geodesic_sigma(metric, params, x) - y;
    return params.m > 0.0 ? s : -s;
  };
  double lo = -1.0;
  double hi = 1.0;
  for (int i = 0; g(lo) > 0.0; ++i) {
    if (i > 60) throw DomainError("geodesic_eta: value below range of sigma");
    lo *= 2.0;
  }
  for (int i = 0; g(hi) < 0.0; ++i) {
    if (i > 60) throw DomainError("geodesic_eta: value above range of sigma");
    hi *= 2.0;
  }
  std::uintmax_t iters = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) < 1e-13; };
  const auto r = boost::math::tools::toms748_solve(g, lo, hi, tol, iters);
  return 0.5 * (r.first + r.second);
}

// ---------------------------------------------------------------------------
// Geodesic circles and translating vertical lines: R' = -phi'(R).

struct CircleFlowOptions {
  double r_min = 1e-6;  ///< extinction threshold
  /// A step is subdivided until step * |phi'(R)| <= max_relative_change * R.
  double max_relative_change = 0.01;
};

struct CircleFlow {
  std::vector<double> t;
  std::vector<double> radius;
  std::optional<double> extinction_time;
};

namespace detail {

// Advances R by `step`, subdividing where the right-hand side is large
// compared to R (near extinction, or far out where phi' grows quickly).
// Returns the time actually advanced and whether R fell below r_min.
inline std::pair<double, bool> advance_radius(const WarpingFunction& metric,
                                              double& r, double step,
                                              const CircleFlowOptions& opt) {
  auto rhs = [&](double x) { return -metric.dphi(x); };
  double remaining = step;
  double advanced = 0.0;
  while (remaining > 0.0) {
    const double speed = std::abs(metric.dphi(r));
    double s = remaining;
    if (speed > 0.0) s = std::min(s, opt.max_relative_change * r / speed);
    if (s < 1e-300) return {advanced, true};
    const double next = rk4_step(rhs, r, s);
    advanced += s;
    remaining -= s;
    if (!std::isfinite(next) || next <= opt.r_min) {
      r = std::max(next, 0.0);
      return {advanced, true};
    }
    r = next;
    if (remaining < 1e-15 * step) break;
  }
  return {step, false};
}

}  // namespace detail

/// RK4 integration of R' = -phi'(R) from R0 with step dt, sampled at every
/// multiple of dt up to t_end or until R drops below the extinction threshold.
inline CircleFlow circle_flow(const WarpingFunction& metric, double r0,
                              double t_end, double dt = 1e-4,
                              const CircleFlowOptions& opt = {}) {
  if (!(r0 > 0.0) || !(dt > 0.0)) {
    throw std::invalid_argument("circle_flow needs R0 > 0 and dt > 0");
  }
  CircleFlow out;
  out.t.push_back(0.0);
  out.radius.push_back(r0);
  const auto steps = static_cast<long>(std::ceil(t_end / dt - 1e-9));
  double r = r0;
  for (long k = 0; k < steps; ++k) {
    const double t0 = static_cast<double>(k) * dt;
    const double step = std::min(dt, t_end - t0);
    const auto [advanced, extinct] = detail::advance_radius(metric, r, step, opt);
    if (extinct) {
      out.extinction_time = t0 + advanced;
      out.t.push_back(t0 + advanced);
      out.radius.push_back(r);
      return out;
    }
    out.t.push_back(k + 1 == steps ? t_end : static_cast<double>(k + 1) * dt);
    out.radius.push_back(r);
  }
  return out;
}

/// Position at time t of the solution of x' = -phi'(x) starting from x0.
/// Vertical lines {x = c} translate by this ODE; in polar form it is the
/// radius of a geodesic circle.
inline double radius_at(const WarpingFunction& metric, double x0, double t,
                        double dt = 1e-4, const CircleFlowOptions& opt = {}) {
  if (t <= 0.0) return x0;
  const auto n = static_cast<long>(std::ceil(t / dt));
  const double step = t / static_cast<double>(n);
  double r = x0;
  for (long k = 0; k < n; ++k) {
    if (detail::advance_radius(metric, r, step, opt).second) return r;
  }
  return r;
}

/// The line that comes in from infinity: zeta(t) = 1/t while zeta >= 2,
/// where phi'(x) = x^2.
inline double zeta(double t) {
  if (!(t > 0.0 && t <= 0.5)) {
    throw DomainError("zeta(t) = 1/t is only valid for t in (0, 1/2]");
  }
  return 1.0 / t;
}

// ---------------------------------------------------------------------------
// Blooming at infinity.

enum class BloomStatus { Blooms, NoBloom, Inconclusive };

inline std::string to_string(BloomStatus s) {
  switch (s) {
    case BloomStatus::Blooms: return "blooms";
    case BloomStatus::NoBloom: return "no-bloom";
    case BloomStatus::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

struct BloomOptions {
  double r_ref = 2.0;  ///< reference radius the pull-in time is measured to
  double tol = 1e-6;   ///< Cauchy tolerance on successive pull-in times
  double dt = 1e-4;
};

struct BloomReport {
  bool blooms = false;
  BloomStatus status = BloomStatus::Inconclusive;
  std::vector<double> radii;
  /// Time to fall from each radius to r_ref; +inf past the horizon.
  std::vector<double> pull_in_times;
  /// Limiting trajectory: t increasing, R decreasing, R -> inf as t -> 0.
  std::vector<double> pull_in_t;
  std::vector<double> pull_in_r;
  double limit_existence_time = std::numeric_limits<double>::infinity();
};

namespace detail {

// Integrates in u = 1/R, where u' = phi'(1/u) u^2 stays bounded as R -> inf.
// Returns the time to reach 1/r_ref, or +inf past the horizon. When
// `samples` is given, every step is recorded as (t, R).
inline double pull_in_time(const WarpingFunction& metric, double r0,
                           double horizon, const BloomOptions& opt,
                           std::vector<std::pair<double, double>>* samples) {
  auto rhs = [&](double u) { return metric.dphi(1.0 / u) * u * u; };
  const double u_ref = 1.0 / opt.r_ref;
  double u = 1.0 / r0;
  if (u >= u_ref) return 0.0;
  if (samples) samples->emplace_back(0.0, r0);
  const auto steps = static_cast<long>(std::ceil(horizon / opt.dt));
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * opt.dt;
    const double next = rk4_step(rhs, u, opt.dt);
    if (next >= u_ref) {
      double lo = 0.0;
      double hi = opt.dt;
      for (int i = 0; i < 80; ++i) {
        const double mid = 0.5 * (lo + hi);
        (rk4_step(rhs, u, mid) >= u_ref ? hi : lo) = mid;
      }
      if (samples) samples->emplace_back(t + hi, opt.r_ref);
      return t + hi;
    }
    u = next;
    if (samples) samples->emplace_back(t + opt.dt, 1.0 / u);
  }
  return std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// Tests whether geodesic circles can come in from infinity in finite time.
///
/// For each radius R_n the pull-in time T_n to r_ref is computed. Blooming is
/// declared when the last two T_n agree to `tol`. Any T_n beyond the horizon
/// means the pull-in time grows past it, reported as NoBloom.
inline BloomReport bloom_probe(const WarpingFunction& metric,
                               const std::vector<double>& radii,
                               double horizon, const BloomOptions& opt = {}) {
  if (radii.size() < 2) {
    throw std::invalid_argument("bloom_probe needs at least two radii");
  }
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1]))) {
      throw std::invalid_argument("bloom_probe radii must be positive, increasing");
    }
  }
  BloomReport rep;
  rep.radii = radii;
  for (double r : radii) {
    rep.pull_in_times.push_back(detail::pull_in_time(metric, r, horizon, opt, nullptr));
  }
  const auto& T = rep.pull_in_times;
  const std::size_t n = T.size();
  if (std::any_of(T.begin(), T.end(), [](double v) { return std::isinf(v); })) {
    rep.status = BloomStatus::NoBloom;
    return rep;
  }
  const double last = T[n - 1] - T[n - 2];
  if (!(std::abs(last) < opt.tol)) {
    rep.status = BloomStatus::Inconclusive;
    return rep;
  }
  rep.status = BloomStatus::Blooms;
  rep.blooms = true;
  // Geometric tail estimate of the limit when the differences contract.
  double limit = T[n - 1];
  if (n >= 3) {
    const double prev = T[n - 2] - T[n - 3];
    if (prev != 0.0) {
      const double ratio = last / prev;
      if (ratio > 0.0 && ratio < 1.0) limit += last * ratio / (1.0 - ratio);
    }
  }
  rep.limit_existence_time = limit;
  std::vector<std::pair<double, double>> samples;
  detail::pull_in_time(metric, radii.back(), horizon, opt, &samples);
  const double shift = limit - T[n - 1];
  for (const auto& [t, r] : samples) {
    rep.pull_in_t.push_back(t + shift);
    rep.pull_in_r.push_back(r);
  }
  return rep;
}

}  // namespace csf
