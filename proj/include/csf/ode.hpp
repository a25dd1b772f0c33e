#pragma once

namespace csf {

/// One classical Runge-Kutta step for an autonomous scalar ODE y' = f(y).
template <class Rhs>
double rk4_step(const Rhs& f, double y, double h) {
  const double k1 = f(y);
  const double k2 = f(y + 0.5 * h * k1);
  const double k3 = f(y + 0.5 * h * k2);
  const double k4 = f(y + h * k3);
  return y + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

}  // namespace csf
