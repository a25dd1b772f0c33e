#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace csf {

/// Uniform grid on [lo, hi] with n nodes, plus the time step used on it.
struct Grid1D {
  double lo = 0.0;
  double hi = 1.0;
  std::size_t n = 3;
  double dt = 1e-3;

  Grid1D() = default;
  Grid1D(double lo_, double hi_, std::size_t n_, double dt_)
      : lo(lo_), hi(hi_), n(n_), dt(dt_) {
    if (!(hi > lo)) throw std::invalid_argument("Grid1D needs hi > lo");
    if (n < 3) throw std::invalid_argument("Grid1D needs at least 3 nodes");
    if (!(dt > 0.0)) throw std::invalid_argument("Grid1D needs dt > 0");
  }

  /// Grid on [lo, hi] with `per_unit` intervals per unit length.
  static Grid1D with_resolution(double lo, double hi, double per_unit,
                                double dt) {
    const auto cells = static_cast<std::size_t>(std::llround((hi - lo) * per_unit));
    return Grid1D(lo, hi, cells + 1, dt);
  }

  double spacing() const { return (hi - lo) / static_cast<double>(n - 1); }
  double node(std::size_t i) const {
    return i + 1 == n ? hi : lo + static_cast<double>(i) * spacing();
  }
};

/// Vertical: values are y over an x-grid. Horizontal: values are x over a
/// y-grid.
enum class Orientation { Vertical, Horizontal };

inline Orientation toggled(Orientation o) {
  return o == Orientation::Vertical ? Orientation::Horizontal
                                    : Orientation::Vertical;
}

struct GraphFrame {
  Grid1D grid;
  std::vector<double> values;
  double t = 0.0;
  Orientation orientation = Orientation::Vertical;

  GraphFrame() = default;
  GraphFrame(Grid1D g, std::vector<double> v, double time,
             Orientation o = Orientation::Vertical)
      : grid(g), values(std::move(v)), t(time), orientation(o) {
    if (values.size() != grid.n) {
      throw std::invalid_argument("GraphFrame: value count does not match grid");
    }
    for (double v : values) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("GraphFrame: non-finite value");
      }
    }
  }

  std::size_t size() const { return values.size(); }
  double node(std::size_t i) const { return grid.node(i); }
};

enum class TrajectoryStatus { Completed, GradientBlowup, Diverged };

inline std::string to_string(TrajectoryStatus s) {
  switch (s) {
    case TrajectoryStatus::Completed: return "completed";
    case TrajectoryStatus::GradientBlowup: return "gradient-blowup";
    case TrajectoryStatus::Diverged: return "diverged";
  }
  return "unknown";
}

struct Trajectory {
  std::vector<GraphFrame> frames;
  TrajectoryStatus status = TrajectoryStatus::Completed;
  /// Time at which a GradientBlowup or Diverged run stopped.
  double stop_time = 0.0;
  std::string message;

  bool completed() const { return status == TrajectoryStatus::Completed; }
  const Grid1D& grid() const { return frames.front().grid; }
};

/// Second-order slopes: central differences inside, three-point one-sided
/// stencils at the two ends.
inline std::vector<double> frame_gradient(std::span<const double> u, double h) {
  const std::size_t n = u.size();
  if (n < 3) throw std::invalid_argument("frame_gradient needs at least 3 nodes");
  std::vector<double> g(n);
  g[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) g[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
  g[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
  return g;
}

inline std::vector<double> frame_gradient(const GraphFrame& frame) {
  return frame_gradient(frame.values, frame.grid.spacing());
}

/// Sub-trajectory on the nodes of [lo, hi]; the bounds are snapped to the
/// nearest nodes.
inline Trajectory restrict_to(const Trajectory& traj, double lo, double hi) {
  const Grid1D& g = traj.grid();
  const double h = g.spacing();
  const auto i0 = static_cast<std::size_t>(std::llround((lo - g.lo) / h));
  const auto i1 = static_cast<std::size_t>(std::llround((hi - g.lo) / h));
  if (i1 >= g.n || i1 < i0 + 2) {
    throw std::invalid_argument("restrict_to: window outside the grid");
  }
  Grid1D sub(g.node(i0), g.node(i1), i1 - i0 + 1, g.dt);
  Trajectory out;
  out.status = traj.status;
  out.stop_time = traj.stop_time;
  out.message = traj.message;
  for (const GraphFrame& f : traj.frames) {
    std::vector<double> v(f.values.begin() + static_cast<std::ptrdiff_t>(i0),
                          f.values.begin() + static_cast<std::ptrdiff_t>(i1) + 1);
    out.frames.emplace_back(sub, std::move(v), f.t, f.orientation);
  }
  return out;
}

}  // namespace csf
