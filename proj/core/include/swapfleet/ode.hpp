#pragma once

#include <swapfleet/params.hpp>

#include <functional>
#include <vector>

namespace swapfleet::ode {

/// Right-hand side dz/dt = f(t, z).
using Field = std::function<Vector(double, const Vector&)>;

struct Solution {
  std::vector<double> times;
  std::vector<Vector> states;
};

/// One classical fourth-order Runge-Kutta step of size h from (t, z).
void rk4_step(const Field& f, double t, Vector& z, double h);

/// Fixed-step RK4 sampled on `grid`. Each grid interval is covered by steps
/// of size `step`, the last one shortened so every grid point is hit
/// exactly. Throws NumericError naming the time at which a non-finite
/// value first appears.
Solution integrate(const Field& f, const Vector& init, const std::vector<double>& grid,
                   double step);

}  // namespace swapfleet::ode
