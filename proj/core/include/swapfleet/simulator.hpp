#pragma once

#include <swapfleet/params.hpp>
#include <swapfleet/rng.hpp>
#include <swapfleet/state.hpp>

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace swapfleet::sim {

/// Rates of every enabled transition out of a state.
///
/// swap(k):      a swapper recharges a scooter from bucket k (k = K-1 is a
///               self-loop that only consumes time).
/// pickup:       timed model only, an idle ridable scooter is picked up.
/// ride(k, j):   instant model, a ride moves a scooter from k to j;
///               timed model, a trip ends and moves a scooter from k to j.
struct RateTable {
  Vector swap;
  Matrix ride;
  double pickup = 0.0;

  double total() const;
};

/// Fills `out` with the transition rates at `state`. `out` is reused across
/// calls so the hot loop does not allocate.
void compute_rates(const CountState& state, const FleetParams& params, Model model,
                   RateTable& out);

RateTable event_rates_model1(const EmpiricalState& y, const FleetParams& params);
RateTable event_rates_model2(const EmpiricalState& state, const FleetParams& params);

/// One transition of the jump chain.
struct Event {
  enum class Kind { kSwap, kPickup, kRide } kind = Kind::kSwap;
  int from = 0;
  int to = 0;
};

void apply(const Event& event, int k_buckets, Model model, CountState& state);

/// Computes the rates at `state` into `workspace`, then draws the holding
/// time (exponential with the total rate) followed by the transition.
/// Returns {+inf, nullopt} when the total rate is zero.
std::pair<double, std::optional<Event>> draw_transition(const CountState& state,
                                                        const FleetParams& params, Model model,
                                                        Rng& rng, RateTable& workspace);

/// Exact (Gillespie) simulation of one model on integer counts.
class JumpChain {
 public:
  JumpChain(FleetParams params, Model model, CountState initial, std::uint64_t seed);

  /// Draws the holding time and the next transition from the current state
  /// and applies it. Returns +inf and leaves the state unchanged when no
  /// transition is enabled.
  double step();

  /// Draws the holding time and transition without applying it.
  std::pair<double, std::optional<Event>> draw();

  const CountState& state() const { return state_; }
  CountState& mutable_state() { return state_; }
  const RateTable& last_rates() const { return rates_; }
  /// Total rate used for the most recent holding-time draw.
  double last_total_rate() const { return last_total_; }

 private:
  FleetParams params_;
  Model model_;
  CountState state_;
  Rng rng_;
  RateTable rates_;
  double last_total_ = 0.0;
};

/// (next state, holding time) for a single transition of the instant model.
std::pair<EmpiricalState, double> step_model1(const EmpiricalState& y,
                                              const FleetParams& params, Rng& rng);
/// (next state, holding time) for a single transition of the timed model.
std::pair<EmpiricalState, double> step_model2(const EmpiricalState& state,
                                              const FleetParams& params, Rng& rng);

/// Runs one path and samples it on `grid` (right-continuous: the value at t
/// includes every jump at times <= t). An absorbed path stays frozen.
Trajectory simulate_path(Model model, const FleetParams& params, const EmpiricalState& init,
                         const std::vector<double>& grid, std::uint64_t seed);

struct EnsembleOptions {
  bool covariance = false;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Per-time sample statistics across independent paths. Vectors use the
/// packed coordinate order of `pack` (x first for the timed model).
struct EnsembleMoments {
  std::vector<double> times;
  std::vector<Vector> mean;
  std::vector<Vector> variance;
  std::vector<Matrix> covariance;  // empty unless requested
  std::size_t n_paths = 0;
  bool variance_defined = false;  // false when n_paths == 1
  std::uint64_t seed = 0;
};

/// Path p is simulated with seed sub_seed(seed, p), so the result does not
/// depend on the number of threads.
EnsembleMoments ensemble_moments(Model model, const FleetParams& params,
                                 const EmpiricalState& init, const std::vector<double>& grid,
                                 std::size_t n_paths, std::uint64_t seed,
                                 const EnsembleOptions& options = {});

/// Runs n_paths independent paths up to `horizon` and returns the final
/// states (used for equilibrium sampling).
std::vector<EmpiricalState> terminal_samples(Model model, const FleetParams& params,
                                             const EmpiricalState& init, double horizon,
                                             std::size_t n_paths, std::uint64_t seed,
                                             unsigned threads = 0);

}  // namespace swapfleet::sim
