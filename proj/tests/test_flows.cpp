#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "csf/flows.hpp"

using namespace csf;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const WarpingFunction& paper() {
  static const WarpingFunction g = WarpingFunction::paper();
  return g;
}

const NestedFamily& family() {
  static const NestedFamily fam = build_nested({8, 16, 24}, paper(), 40.0, 1e-3, 0.5);
  return fam;
}

double value_at(const GraphFrame& f, double x) {
  const auto i = static_cast<std::size_t>(std::llround((x - f.grid.lo) / f.grid.spacing()));
  REQUIRE(std::abs(f.node(i) - x) < 1e-9);
  return f.values[i];
}

bool nondecreasing(const std::vector<double>& v, double tol) {
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if (v[i + 1] - v[i] < -tol) return false;
  }
  return true;
}

double odd_defect(const GraphFrame& f) {
  double e = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    e = std::max(e, std::abs(f.values[i] + f.values[f.size() - 1 - i]));
  }
  return e;
}

GraphFrame inverse_on(const GraphFrame& f, const Grid1D& g) {
  std::vector<double> y = f.values, x(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) x[i] = f.node(i);
  boost::math::interpolators::pchip<std::vector<double>> p(std::move(y), std::move(x));
  std::vector<double> out(g.n);
  for (std::size_t i = 0; i < g.n; ++i) out[i] = p(g.node(i));
  return GraphFrame(g, std::move(out), f.t, Orientation::Horizontal);
}

// Max H-residual of y_16 near t = 0.5 after switching gage on x in [1.25, 1.9].
double switched_residual(double resolution, double dt) {
  const DirichletSpec s = spec_Vn(16, paper(), resolution, dt);
  SolveOptions opt;
  opt.record_stride = std::numeric_limits<std::size_t>::max();
  const GraphFrame a = solve_dirichlet(s, 0.5 - dt, opt).frames.back();
  const GraphFrame b = step_implicit(a, s);
  Trajectory both;
  both.frames = {a, b};
  const Trajectory w = restrict_to(both, 1.25, 1.9);
  const GraphFrame sb = gage_switch(w.frames[1]);
  const GraphFrame sa = gage_switch(w.frames[0]);
  const double lo = std::max(sa.grid.lo, sb.grid.lo);
  const double hi = std::min(sa.grid.hi, sb.grid.hi);
  const Grid1D g(lo, hi, (sb.size() - 1) / 4 + 1, dt);
  DirichletSpec h;
  h.op = GraphOperator::H;
  h.metric = paper();
  h.grid = g;
  double worst = 0.0;
  for (double r : residual_operator(inverse_on(w.frames[0], g), inverse_on(w.frames[1], g), h)) {
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

}  // namespace

TEST_CASE("chi cutoff") {
  CHECK(chi(0.1) == 1.0);
  CHECK(chi(0.25) == 1.0);
  CHECK(chi(0.9) == 0.0);
  CHECK(chi(0.75) == 0.0);
  CHECK_THROWS_AS(chi(-0.01), DomainError);
  CHECK_THROWS_AS(chi(1.01), DomainError);
  const double h = 1e-5;
  double min_slope = 0.0, prev = chi(0.0);
  for (int k = 1; k <= 100000; ++k) {
    const double v = chi(k * h);
    REQUIRE(v <= prev);
    min_slope = std::min(min_slope, (v - prev) / h);
    prev = v;
  }
  CHECK(min_slope > -4.0);
  CHECK(min_slope < -2.0);
}

TEST_CASE("initial data Y_n") {
  const auto y4 = initial_Yn(4);
  CHECK(y4(2.0) == 0.0);
  CHECK(y4(3.0) == 0.0);
  CHECK(y4(3.95) == 1.0);
  CHECK(y4(4.0) == 1.0);
  CHECK(y4(3.05) == 0.0);
  CHECK_THAT(y4(3.5), WithinAbs(chi(0.5), 1e-15));
  for (int k = 0; k <= 400; ++k) {
    const double x = k * 0.01;
    REQUIRE(y4(-x) == -y4(x));
    REQUIRE(std::abs(y4(x)) <= 1.0);
  }
  CHECK_THROWS_AS(initial_Yn(1), std::invalid_argument);
}

TEST_CASE("V_n frames are odd, monotone and in the parallelogram") {
  const auto& fam = family();
  for (std::size_t j = 0; j < fam.ns.size(); ++j) {
    const Trajectory& tr = fam.trajectories[j];
    REQUIRE(tr.completed());
    for (const GraphFrame& f : tr.frames) {
      REQUIRE(odd_defect(f) < 1e-9);
      REQUIRE(parallelogram_violation(f, fam.ns[j]) <= 1e-6);
      if (f.t > 0.0) REQUIRE(nondecreasing(f.values, 1e-8));
    }
  }
  CHECK(parallelogram_lower(8.0, 8) == 1.0);
  CHECK(parallelogram_upper(-8.0, 8) == -1.0);
}

TEST_CASE("nested family") {
  const auto& fam = family();
  for (std::size_t j = 0; j + 1 < fam.ns.size(); ++j) {
    const Trajectory& small = fam.trajectories[j];
    const Trajectory& big = fam.trajectories[j + 1];
    const int m = fam.ns[j];
    for (std::size_t k = 0; k < small.frames.size(); ++k) {
      REQUIRE(small.frames[k].t == big.frames[k].t);
      for (int q = 0; q <= 40 * m; ++q) {
        const double x = q / 40.0;
        REQUIRE(value_at(big.frames[k], x) <= value_at(small.frames[k], x) + 1e-6);
      }
    }
  }

  const GraphFrame& f0 = fam.limit_frames.front();
  CHECK(f0.t == 0.0);
  CHECK(f0.grid.lo == -8.0);
  CHECK(f0.grid.hi == 8.0);
  for (std::size_t i = 1; i + 1 < f0.size(); ++i) REQUIRE(f0.values[i] == 0.0);
  for (std::size_t k = 1; k < fam.limit_frames.size(); ++k) {
    const GraphFrame& f = fam.limit_frames[k];
    REQUIRE(odd_defect(f) < 1e-12);
    REQUIRE(nondecreasing(f.values, 1e-8));
  }
  const GraphFrame& last = fam.limit_frames.back();
  CHECK(value_at(last, 4.0) > 0.5);

  CHECK_THROWS_AS(build_nested({16, 8}, paper(), 40.0, 1e-3, 0.1), std::invalid_argument);
}

TEST_CASE("gradient bound is uniform in n") {
  const auto& fam = family();
  std::vector<double> slopes;
  for (const Trajectory& tr : fam.trajectories) {
    double m = 0.0;
    for (const GraphFrame& f : tr.frames) {
      if (f.t <= 0.0 || f.t > 0.4 + 1e-12) continue;
      const auto d = frame_gradient(f);
      for (std::size_t i = 0; i < f.size(); ++i) {
        if (std::abs(f.node(i)) <= 4.0) m = std::max(m, std::abs(d[i]));
      }
    }
    slopes.push_back(m);
  }
  CHECK(std::abs(slopes[2] - slopes[1]) < 0.2 * slopes[1]);
}

TEST_CASE("H_c problems") {
  SECTION("c inside the flat core is static") {
    const DirichletSpec s = spec_Hc(0.8, paper(), 40.0, 1e-3);
    const Trajectory tr = solve_dirichlet(s, 0.2);
    REQUIRE(tr.completed());
    for (const GraphFrame& f : tr.frames) {
      for (double v : f.values) REQUIRE(v == 0.8);
    }
  }
  for (double c : {3.0, 5.0}) {
    DYNAMIC_SECTION("c = " << c) {
      const DirichletSpec s = spec_Hc(c, paper(), 40.0, 1e-3);
      const Trajectory tr = solve_dirichlet(s, 0.5);
      REQUIRE(tr.completed());
      const HcRegion region(c, paper(), s.grid);
      CHECK(region.m() > 0.0);
      CHECK(region.m() < 1.0);
      CHECK_THAT(geodesic_sigma(paper(), {region.m(), 0.0}, c), WithinAbs(1.0, 1e-9));
      for (const GraphFrame& f : tr.frames) {
        REQUIRE(region.violation(f) <= 1e-6);
        if (f.t > 0.0) REQUIRE(nondecreasing(f.values, 1e-8));
      }
      CHECK(tr.frames.back().values.front() < c - 0.1);
    }
  }
  CHECK_THROWS_AS(spec_Hc(0.0, paper(), 40.0, 1e-3), std::invalid_argument);
}

TEST_CASE("gage switch") {
  const Grid1D g(0.0, 1.0, 11, 1e-3);
  std::vector<double> v(g.n);
  for (std::size_t i = 0; i < g.n; ++i) v[i] = 2.0 * g.node(i);
  const GraphFrame s = gage_switch(GraphFrame(g, v, 0.3));
  CHECK(s.orientation == Orientation::Horizontal);
  CHECK(s.t == 0.3);
  CHECK(s.grid.lo == 0.0);
  CHECK(s.grid.hi == 2.0);
  for (std::size_t i = 0; i < s.size(); ++i) CHECK_THAT(s.values[i], WithinAbs(s.node(i) / 2, 1e-14));

  const Grid1D f(0.0, 3.0, 61, 1e-3);
  std::vector<double> w(f.n);
  for (std::size_t i = 0; i < f.n; ++i) w[i] = f.node(i) + 0.5 * std::sin(f.node(i));
  const GraphFrame back = gage_switch(gage_switch(GraphFrame(f, w, 0.0)));
  CHECK(back.orientation == Orientation::Vertical);
  for (std::size_t i = 0; i < f.n; ++i) {
    REQUIRE_THAT(back.values[i], WithinAbs(w[i], 10.0 * f.spacing() * f.spacing()));
  }

  std::vector<double> dec(g.n);
  for (std::size_t i = 0; i < g.n; ++i) dec[i] = 1.0 - g.node(i);
  const GraphFrame d = gage_switch(GraphFrame(g, dec, 0.0));
  CHECK_THAT(d.values.front(), WithinAbs(1.0, 1e-14));
  CHECK_THAT(d.values.back(), WithinAbs(0.0, 1e-14));

  std::vector<double> flat(g.n, 1.0);
  CHECK_THROWS_AS(gage_switch(GraphFrame(g, flat, 0.0)), NotMonotone);
}

TEST_CASE("switched frames converge to H solutions") {
  const double coarse = switched_residual(80.0, 1e-3);
  const double fine = switched_residual(320.0, 1e-3);
  CHECK(fine < 0.5 * coarse);
}

TEST_CASE("switched y_16 satisfies the H equation to 1e-3", "[!mayfail]") {
  CHECK(switched_residual(320.0, 1e-3) < 1e-3);
}

TEST_CASE("barrier b") {
  CHECK_THAT(barrier_b(std::exp(1.0) - 1.0, 0.25), WithinRel(5.25, 1e-14));
  CHECK_THROWS_AS(barrier_b(0.0, 0.25), DomainError);
  CHECK_THROWS_AS(barrier_b(1.0, 0.6), DomainError);
  CHECK_THROWS_AS(barrier_b(1.0, 0.0), DomainError);
  for (double t = 0.05; t <= 0.45 + 1e-12; t += 0.01) {
    double prev = barrier_b(0.05, t);
    for (double y = 0.06; y <= 3.0 + 1e-12; y += 0.01) {
      const double b = barrier_b(y, t);
      REQUIRE(b < prev);
      prev = b;
      const double l = std::log1p(y);
      const double b_t = 1.0 - 1.0 / (t * t);
      const double b_y = -1.0 / ((1.0 + y) * l * l);
      const double b_yy = (1.0 / (l * l) + 2.0 / (l * l * l)) / ((1.0 + y) * (1.0 + y));
      REQUIRE(b_t - eval_H(b, b_y, b_yy, paper()) >= -1e-8);
    }
  }
}

TEST_CASE("barrier u-bar") {
  const double t = 0.25;
  const double seam = t + zeta(t) + 1.0 / std::log(3.0);
  CHECK_THAT(barrier_ubar(seam, t), WithinAbs(-1.0, 1e-12));
  CHECK(barrier_ubar(t + zeta(t), t) == -1.0);
  CHECK(barrier_ubar(0.0, t) == -1.0);
  CHECK_THAT(barrier_ubar(1e9, t), WithinAbs(1.0, 1e-8));
  for (double x = -5.0; x < 50.0; x += 0.01) {
    const double u = barrier_ubar(x, t);
    REQUIRE(u >= -1.0);
    REQUIRE(u <= 1.0);
  }

  const auto& fam = family();
  for (std::size_t j = 0; j < fam.ns.size(); ++j) {
    for (const GraphFrame& f : fam.trajectories[j].frames) {
      if (f.t < 0.05) continue;
      for (std::size_t i = 0; i < f.size(); ++i) {
        REQUIRE(barrier_ubar(f.node(i), f.t) <= f.values[i] + 1e-6);
      }
    }
  }
  for (const GraphFrame& f : fam.limit_frames) {
    if (f.t < 0.05) continue;
    for (std::size_t i = 0; i < f.size(); ++i) {
      REQUIRE(barrier_ubar(f.node(i), f.t) <= f.values[i] + 1e-6);
    }
  }
}

TEST_CASE("peel check") {
  CHECK_THAT(peel_x0(0.2, 0.5), WithinAbs(7.666, 1e-3));
  CHECK(peel_x0(0.2, 0.9) < peel_x0(0.2, 0.5));
  CHECK_THAT(peel_x0(0.2, 1.0 - 1e-12), WithinAbs(0.2 + 5.0 + 1.0 / std::log(2.0), 1e-9));
  CHECK_THROWS_AS(peel_x0(0.2, 1.0), DomainError);

  const Trajectory& y16 = family().trajectories[1];
  const auto it = std::find_if(y16.frames.begin(), y16.frames.end(),
                               [](const GraphFrame& f) { return std::abs(f.t - 0.2) < 1e-9; });
  REQUIRE(it != y16.frames.end());
  CHECK(peel_check(*it, 0.5));

  const GraphFrame zero(Grid1D(-16.0, 16.0, 65, 1e-3), std::vector<double>(65, 0.0), 0.2);
  CHECK_FALSE(peel_check(zero, 0.5));

  const Trajectory& y8 = family().trajectories[0];
  CHECK_THROWS_AS(peel_check(y8.frames[50], 0.5), DomainTooSmall);
}

TEST_CASE("gradient foliation") {
  const int k = 4;
  const double A = foliation_rate(k);
  const double tau = foliation_tau(k);
  CHECK(A == 50.0);
  CHECK_THAT(tau, WithinRel(std::log(1.0 + 1.0 / 16.0) / 50.0, 1e-14));

  const DirichletSpec s = spec_foliation(k, paper(), 40.0, 1e-5);
  const Trajectory tr = solve_dirichlet(s, tau);
  REQUIRE(tr.completed());
  for (const GraphFrame& f : tr.frames) {
    REQUIRE(f.values.front() == 0.0);
    REQUIRE(f.values.back() == 4.0 * (k + 1));
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double x = f.node(i);
      REQUIRE(f.values[i] >= 4.0 * x - 1e-12);
      REQUIRE(f.values[i] <= 4.0 * x * std::exp(A * f.t) + 1e-9);
    }
    for (std::size_t i = 0; i + 1 < f.size(); ++i) REQUIRE(f.values[i + 1] > f.values[i]);
  }

  for (double t = 0.0; t <= tau; t += tau / 20) {
    for (double x = 0.0; x <= k + 1.0; x += 0.01) {
      const double e = std::exp(A * t);
      const double r = 4.0 * x * A * e - eval_V(4.0 * x * e, 4.0 * e, 0.0, x, paper());
      REQUIRE(r >= -1e-8);
    }
  }
  for (std::size_t q = 1; q < tr.frames.size(); ++q) {
    std::vector<double> sub(s.grid.n), sub_prev(s.grid.n);
    for (std::size_t i = 0; i < s.grid.n; ++i) {
      sub[i] = 4.0 * s.grid.node(i);
      sub_prev[i] = sub[i];
    }
    const GraphFrame a(s.grid, sub_prev, tr.frames[q - 1].t), b(s.grid, sub, tr.frames[q].t);
    for (double r : residual_operator(a, b, s)) REQUIRE(r <= 1e-12);
  }
  CHECK_THROWS_AS(spec_foliation(0, paper(), 40.0, 1e-3), std::invalid_argument);
}
