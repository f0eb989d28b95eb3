#pragma once

#include <swapfleet/params.hpp>

#include <cstdint>
#include <optional>
#include <vector>

namespace swapfleet {

/// Fractions of the fleet per battery bucket, plus the in-use fraction for
/// the timed-usage model.
struct EmpiricalState {
  Vector y;
  std::optional<double> x;

  bool operator==(const EmpiricalState&) const = default;
};

/// Uniform initial distribution over K buckets.
EmpiricalState uniform_state(int k_buckets, std::optional<double> x = {});

/// Throws ConfigError if y does not live on the simplex within `tolerance`,
/// or x is outside [0, 1].
void check_state(const EmpiricalState& state, int k_buckets, double tolerance);

/// Packs a state into one vector: y for the instant model, (x, y) for the
/// timed model. This is the coordinate order of drift vectors and Jacobians.
Vector pack(const EmpiricalState& state, Model model);
EmpiricalState unpack(const Vector& z, Model model);

/// Integer bookkeeping for the simulator. counts sums to N; in_use is R^N.
struct CountState {
  std::vector<std::int64_t> counts;
  std::int64_t in_use = 0;

  std::int64_t total() const;
  EmpiricalState to_fractions(bool with_x) const;
};

/// Converts fractions to counts. Throws ConfigError unless every entry is an
/// integer multiple of 1/N (within 1e-9) and the counts sum to N.
CountState to_counts(const EmpiricalState& state, std::int64_t n_scooters);

/// Time grid with one state per point. Simulated paths also keep the raw
/// counts so mass conservation can be checked exactly.
struct Trajectory {
  std::vector<double> times;
  std::vector<EmpiricalState> states;
  std::vector<CountState> counts;  // empty for ODE solutions
  std::uint64_t seed = 0;
};

/// Evenly spaced grid 0, dt, ..., horizon (horizon always included).
std::vector<double> uniform_grid(double horizon, double dt);

}  // namespace swapfleet
