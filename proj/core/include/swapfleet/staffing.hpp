#pragma once

#include <swapfleet/fclt.hpp>
#include <swapfleet/params.hpp>

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace swapfleet::staffing {

/// P(sum_{k in target_buckets} Y_k > x_threshold) <= epsilon at equilibrium,
/// for a fleet of n_scooters.
struct ServiceConstraint {
  double x_threshold = 0.1;
  double epsilon = 0.1;
  std::int64_t n_scooters = 100;
  std::vector<int> target_buckets{0};
};

void check_constraint(const ServiceConstraint& c, int k_buckets);

/// Normal approximation 1 - Phi((x - mean) / sqrt(variance / n)).
/// A zero variance gives the degenerate answer 1{mean > x}.
double tail_probability(double mean, double variance, double n, double x);

/// Tail probability of the sum of the selected buckets: mean sum_i y_i and
/// variance (sum_i Sigma_ii + 2 sum_{i<j} Sigma_ij) / n. Throws NumericError
/// if the aggregated variance is below -1e-10.
double group_tail_probability(const Vector& means, const Matrix& sigma,
                              const std::vector<int>& buckets, double n, double x);

struct StaffingOptions {
  double equilibrium_tol = 1e-8;
  double t_max = meanfield::kDefaultMaxTime;
  double step = meanfield::kDefaultStep;
  double gamma_tol = 1e-3;
  double gamma_cap = 1024.0;  // 2^10
};

/// Thread-safe gamma -> equilibrium memo shared by the evaluations of one
/// solve (or one table, when every cell uses the same fleet).
class EquilibriumCache {
 public:
  std::optional<fclt::EquilibriumCovariance> find(double gamma) const;
  void store(double gamma, const fclt::EquilibriumCovariance& eq);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<double, fclt::EquilibriumCovariance> entries_;
};

/// `params` with the swapper ratio replaced by gamma (counts dropped).
FleetParams with_gamma(const FleetParams& params, double gamma);

struct ObjectiveValue {
  double value = 0.0;
  fclt::EquilibriumCovariance equilibrium;
};

/// f(gamma) = ybar_S + sqrt(Sigmabar_SS / N) * Phi^{-1}(1 - epsilon) - x,
/// where S is the target bucket set (bucket 0 by default) and the
/// equilibrium is computed by fclt::equilibrium_covariance.
ObjectiveValue staffing_objective(double gamma, const ServiceConstraint& constraint,
                                  const FleetParams& params, const StaffingOptions& options = {},
                                  EquilibriumCache* cache = nullptr);

struct StaffingResult {
  double gamma_star = 0.0;
  double gamma_lo = 0.0;
  double gamma_hi = 0.0;
  double f_lo = 0.0;
  double f_hi = 0.0;
  double f_star = 0.0;
  double gamma_max = 0.0;
  int doublings = 0;
  int iterations = 0;  // bisection halvings
  bool satisfied_without_swappers = false;
  fclt::EquilibriumCovariance equilibrium;  // at gamma_star
};

/// Doubling from gamma = 1 until f(gamma) <= 0 (giving up past gamma_cap),
/// then bisection on [0, gamma_max] until the bracket is narrower than
/// gamma_tol. Returns the bracket midpoint. Throws NumericError when the
/// constraint cannot be met below the cap or the bracket has no sign change.
StaffingResult find_gamma(const ServiceConstraint& constraint, const FleetParams& params,
                          const StaffingOptions& options = {},
                          EquilibriumCache* cache = nullptr);

struct GammaCell {
  double x = 0.0;
  double epsilon = 0.0;
  std::optional<StaffingResult> result;
  std::string error;
};

struct GammaTable {
  std::vector<double> x_values;
  std::vector<double> epsilon_values;
  std::vector<GammaCell> cells;  // row-major: x outer, epsilon inner

  const GammaCell& at(std::size_t xi, std::size_t ei) const {
    return cells[xi * epsilon_values.size() + ei];
  }
};

/// find_gamma over the full (x, epsilon) grid. Failing cells record their
/// error and the grid still completes.
GammaTable gamma_table(const std::vector<double>& x_values,
                       const std::vector<double>& epsilon_values, const FleetParams& params,
                       std::int64_t n_scooters, const StaffingOptions& options = {},
                       unsigned threads = 0);

}  // namespace swapfleet::staffing
