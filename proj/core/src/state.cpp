#include <swapfleet/error.hpp>
#include <swapfleet/state.hpp>

#include <cmath>
#include <numeric>
#include <sstream>

namespace swapfleet {

EmpiricalState uniform_state(int k_buckets, std::optional<double> x) {
  if (k_buckets < 1) throw ConfigError("uniform_state: K must be >= 1");
  return {Vector::Constant(k_buckets, 1.0 / k_buckets), x};
}

void check_state(const EmpiricalState& state, int k_buckets, double tolerance) {
  if (state.y.size() != k_buckets) {
    std::ostringstream os;
    os << "state has " << state.y.size() << " buckets, expected " << k_buckets;
    throw ConfigError(os.str());
  }
  for (int k = 0; k < k_buckets; ++k) {
    const double v = state.y(k);
    if (!std::isfinite(v) || v < -tolerance || v > 1.0 + tolerance) {
      std::ostringstream os;
      os << "state y[" << k << "] = " << v << " is outside [0, 1]";
      throw ConfigError(os.str());
    }
  }
  const double sum = state.y.sum();
  if (std::abs(sum - 1.0) > tolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "state y sums to " << sum << ", expected 1";
    throw ConfigError(os.str());
  }
  if (state.x && !(*state.x >= -tolerance && *state.x <= 1.0 + tolerance))
    throw ConfigError("state x must lie in [0, 1]");
}

Vector pack(const EmpiricalState& state, Model model) {
  if (model == Model::kInstantUsage) return state.y;
  Vector z(state.y.size() + 1);
  z(0) = state.x.value_or(0.0);
  z.tail(state.y.size()) = state.y;
  return z;
}

EmpiricalState unpack(const Vector& z, Model model) {
  if (model == Model::kInstantUsage) return {z, std::nullopt};
  return {z.tail(z.size() - 1), z(0)};
}

std::int64_t CountState::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

EmpiricalState CountState::to_fractions(bool with_x) const {
  const double n = static_cast<double>(total());
  EmpiricalState s;
  s.y.resize(static_cast<Eigen::Index>(counts.size()));
  for (std::size_t k = 0; k < counts.size(); ++k)
    s.y(static_cast<Eigen::Index>(k)) = static_cast<double>(counts[k]) / n;
  if (with_x) s.x = static_cast<double>(in_use) / n;
  return s;
}

CountState to_counts(const EmpiricalState& state, std::int64_t n_scooters) {
  if (n_scooters < 1) throw ConfigError("n_scooters must be >= 1");
  const double n = static_cast<double>(n_scooters);
  auto lattice = [&](double v, const char* what) {
    const double scaled = v * n;
    const double rounded = std::round(scaled);
    if (std::abs(scaled - rounded) > 1e-9 * n || rounded < 0) {
      std::ostringstream os;
      os << what << " = " << v << " is not a multiple of 1/" << n_scooters;
      throw ConfigError(os.str());
    }
    return static_cast<std::int64_t>(rounded);
  };
  CountState c;
  c.counts.reserve(static_cast<std::size_t>(state.y.size()));
  for (Eigen::Index k = 0; k < state.y.size(); ++k) c.counts.push_back(lattice(state.y(k), "y"));
  if (c.total() != n_scooters) {
    std::ostringstream os;
    os << "initial counts sum to " << c.total() << ", expected " << n_scooters;
    throw ConfigError(os.str());
  }
  if (state.x) {
    c.in_use = lattice(*state.x, "x");
    if (c.in_use > n_scooters) throw ConfigError("x must lie in [0, 1]");
  }
  return c;
}

std::vector<double> uniform_grid(double horizon, double dt) {
  if (!(dt > 0.0)) throw ConfigError("grid spacing must be positive");
  if (!(horizon >= 0.0)) throw ConfigError("horizon must be nonnegative");
  std::vector<double> grid;
  const auto steps = static_cast<std::int64_t>(std::floor(horizon / dt + 1e-9));
  grid.reserve(static_cast<std::size_t>(steps) + 2);
  for (std::int64_t i = 0; i <= steps; ++i) grid.push_back(static_cast<double>(i) * dt);
  if (horizon - grid.back() > 1e-9 * std::max(1.0, horizon)) grid.push_back(horizon);
  else grid.back() = horizon;
  return grid;
}

}  // namespace swapfleet
