#include <swapfleet/error.hpp>
#include <swapfleet/ode.hpp>

#include <cmath>
#include <sstream>

namespace swapfleet::ode {

void rk4_step(const Field& f, double t, Vector& z, double h) {
  const Vector k1 = f(t, z);
  const Vector k2 = f(t + 0.5 * h, z + (0.5 * h) * k1);
  const Vector k3 = f(t + 0.5 * h, z + (0.5 * h) * k2);
  const Vector k4 = f(t + h, z + h * k3);
  z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Solution integrate(const Field& f, const Vector& init, const std::vector<double>& grid,
                   double step) {
  if (!(step > 0.0)) throw ConfigError("integration step must be positive");
  if (grid.empty()) throw ConfigError("time grid must not be empty");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ConfigError("time grid must be strictly increasing");

  Solution out;
  out.times = grid;
  out.states.reserve(grid.size());
  Vector z = init;
  out.states.push_back(z);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double t0 = grid[i - 1];
    const double t1 = grid[i];
    const auto n = static_cast<long>(std::ceil((t1 - t0) / step - 1e-9));
    double t = t0;
    for (long s = 0; s < n; ++s) {
      const double h = (s + 1 == n) ? t1 - t : step;
      rk4_step(f, t, z, h);
      t = (s + 1 == n) ? t1 : t0 + static_cast<double>(s + 1) * step;
      if (!z.allFinite()) {
        std::ostringstream os;
        os << "non-finite state at t = " << t;
        throw NumericError(os.str());
      }
    }
    out.states.push_back(z);
  }
  return out;
}

}  // namespace swapfleet::ode
