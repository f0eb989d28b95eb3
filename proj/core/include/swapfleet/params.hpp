#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace swapfleet {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Which Markov model a computation refers to.
///   kInstantUsage: rides change the battery instantly (state y).
///   kTimedUsage:   rides last an exponential time (state (x, y)).
enum class Model { kInstantUsage = 1, kTimedUsage = 2 };

/// All constants of a battery-swap fleet.
///
/// Buckets are indexed 0..K-1, bucket k holding batteries in [k/K, (k+1)/K).
/// Rides start only from buckets k >= k_threshold. `p_matrix(k, j)` is the
/// probability that a ride starting in bucket k ends in bucket j (j <= k).
/// Swappers pick bucket k with probability proportional to y_k * g_k and move
/// the scooter to bucket K-1.
struct FleetParams {
  std::optional<std::int64_t> n_scooters;  // N
  std::optional<std::int64_t> n_swappers;  // N*
  std::optional<double> gamma;             // N*/N in the scaling limit

  double lambda = 1.0;    // swapper arrivals per swapper per unit time
  double mu = 1.0;        // customer arrivals per scooter per unit time
  double mu_usage = 1.0;  // trip completion rate (timed-usage model only)

  int k_buckets = 0;
  int k_threshold = 0;
  Matrix p_matrix;
  Vector g_weights;

  // Set by preset_jump_p: the stored matrix is rounded, so rows are
  // checked against a looser stochasticity tolerance.
  bool p_rounded = false;

  /// Swappers per scooter. Only meaningful after validate().
  double ratio() const { return gamma.value_or(0.0); }
  std::int64_t scooters() const;
  std::int64_t swappers() const;
};

/// Row-sum tolerance for row-stochastic rows of an exact matrix.
inline constexpr double kRowSumTolerance = 1e-12;
/// Row-sum tolerance for the rounded JUMP matrix.
inline constexpr double kRoundedRowSumTolerance = 2e-3;

/// Checks every invariant of FleetParams and fills `gamma` from the counts
/// when both are present. Throws ConfigError naming the offending field.
/// Soft findings (such as g not being nonincreasing) go to `warnings`.
FleetParams validate(const FleetParams& params,
                     std::vector<std::string>* warnings = nullptr);

/// p_kj = 1/(k+1) for j <= k, zero above the diagonal.
Matrix preset_uniform_p(int k_buckets);

/// The 5x5 empirical trip matrix estimated from the JUMP Washington D.C.
/// data, stored verbatim (row 0 is all zero; rows 1..4 sum to 1 only to
/// within rounding).
Matrix preset_jump_p();

/// g ≡ 1.
Vector constant_g(int k_buckets);

/// g_i = K - i.
Vector linear_g(int k_buckets);

/// The reference configuration used throughout the numerical experiments:
/// N = 100, N* = 50, λ = μ = 1, K = 5, K_U = 1, p_kj = 1/(k+1), g ≡ 1.
FleetParams reference_fleet();

}  // namespace swapfleet
