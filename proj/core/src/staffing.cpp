#include <swapfleet/error.hpp>
#include <swapfleet/normal.hpp>
#include <swapfleet/staffing.hpp>

#include "parallel.hpp"

#include <cmath>
#include <sstream>

namespace swapfleet::staffing {

void check_constraint(const ServiceConstraint& c, int k_buckets) {
  if (!(c.x_threshold > 0.0 && c.x_threshold < 1.0))
    throw ConfigError("x_threshold must lie in (0, 1)");
  if (!(c.epsilon > 0.0 && c.epsilon < 1.0)) throw ConfigError("epsilon must lie in (0, 1)");
  if (c.n_scooters < 1) throw ConfigError("n_scooters must be >= 1");
  if (c.target_buckets.empty()) throw ConfigError("target bucket set must not be empty");
  for (int b : c.target_buckets)
    if (b < 0 || b >= k_buckets) throw ConfigError("target bucket index out of range");
}

double tail_probability(double mean, double variance, double n, double x) {
  if (!(variance >= 0.0)) throw ConfigError("variance must be nonnegative");
  if (variance == 0.0) return mean > x ? 1.0 : 0.0;
  return 1.0 - normal::cdf((x - mean) / std::sqrt(variance / n));
}

double group_tail_probability(const Vector& means, const Matrix& sigma,
                              const std::vector<int>& buckets, double n, double x) {
  if (buckets.empty()) throw ConfigError("bucket set must not be empty");
  double mean = 0.0;
  double var = 0.0;
  for (std::size_t a = 0; a < buckets.size(); ++a) {
    const int i = buckets[a];
    if (i < 0 || i >= means.size()) throw ConfigError("bucket index out of range");
    mean += means(i);
    var += sigma(i, i);
    for (std::size_t b = a + 1; b < buckets.size(); ++b) var += 2.0 * sigma(i, buckets[b]);
  }
  if (var < -1e-10) {
    std::ostringstream os;
    os << "aggregated variance " << var << " is negative; sigma is inconsistent";
    throw NumericError(os.str(), var);
  }
  return tail_probability(mean, std::max(var, 0.0), n, x);
}

std::optional<fclt::EquilibriumCovariance> EquilibriumCache::find(double gamma) const {
  std::lock_guard lock(mutex_);
  const auto it = entries_.find(gamma);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EquilibriumCache::store(double gamma, const fclt::EquilibriumCovariance& eq) {
  std::lock_guard lock(mutex_);
  entries_.emplace(gamma, eq);
}

std::size_t EquilibriumCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

FleetParams with_gamma(const FleetParams& params, double gamma) {
  FleetParams p = params;
  p.n_swappers.reset();
  p.gamma = gamma;
  return p;
}

namespace {

double set_mean(const Vector& y, const std::vector<int>& set) {
  double m = 0.0;
  for (int i : set) m += y(i);
  return m;
}

double set_variance(const Matrix& s, const std::vector<int>& set) {
  double v = 0.0;
  for (int i : set)
    for (int j : set) v += s(i, j);
  return v;
}

}  // namespace

ObjectiveValue staffing_objective(double gamma, const ServiceConstraint& constraint,
                                  const FleetParams& params, const StaffingOptions& options,
                                  EquilibriumCache* cache) {
  if (!(gamma >= 0.0)) throw ConfigError("gamma must be nonnegative");
  check_constraint(constraint, params.k_buckets);
  std::optional<fclt::EquilibriumCovariance> eq;
  if (cache) eq = cache->find(gamma);
  if (!eq) {
    eq = fclt::equilibrium_covariance(with_gamma(params, gamma), options.equilibrium_tol,
                                      options.t_max, options.step);
    if (cache) cache->store(gamma, *eq);
  }
  const double mean = set_mean(eq->y_bar, constraint.target_buckets);
  const double var = std::max(0.0, set_variance(eq->sigma_bar, constraint.target_buckets));
  const double z = normal::quantile(1.0 - constraint.epsilon);
  const double value =
      mean + std::sqrt(var / static_cast<double>(constraint.n_scooters)) * z -
      constraint.x_threshold;
  return {value, *eq};
}

StaffingResult find_gamma(const ServiceConstraint& constraint, const FleetParams& params,
                          const StaffingOptions& options, EquilibriumCache* cache) {
  if (!(options.gamma_tol > 0.0)) throw ConfigError("gamma tolerance must be positive");
  check_constraint(constraint, params.k_buckets);
  EquilibriumCache local;
  if (!cache) cache = &local;
  const auto f = [&](double g) { return staffing_objective(g, constraint, params, options, cache); };

  StaffingResult r;
  double gamma = 1.0;
  double f_gamma = f(gamma).value;
  while (f_gamma > 0.0) {
    if (gamma >= options.gamma_cap) {
      std::ostringstream os;
      os << "constraint unreachable: f(" << gamma << ") = " << f_gamma << " > 0 at the cap";
      throw NumericError(os.str(), f_gamma);
    }
    gamma *= 2.0;
    ++r.doublings;
    f_gamma = f(gamma).value;
  }
  r.gamma_max = gamma;

  double lo = 0.0;
  double hi = gamma;
  double f_lo = f(lo).value;
  double f_hi = f_gamma;
  if (f_lo < 0.0) {
    // No swappers needed at all.
    r.satisfied_without_swappers = true;
    const ObjectiveValue at0 = f(0.0);
    r.gamma_star = r.gamma_lo = r.gamma_hi = 0.0;
    r.f_lo = r.f_hi = r.f_star = at0.value;
    r.equilibrium = at0.equilibrium;
    return r;
  }
  if (!(f_lo >= 0.0 && f_hi <= 0.0)) {
    std::ostringstream os;
    os << "no sign change on [0, " << hi << "]: f(0) = " << f_lo << ", f(" << hi
       << ") = " << f_hi;
    throw NumericError(os.str(), f_hi);
  }
  while (hi - lo >= options.gamma_tol) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid).value;
    if (fm > 0.0) {
      lo = mid;
      f_lo = fm;
    } else {
      hi = mid;
      f_hi = fm;
    }
    ++r.iterations;
  }
  r.gamma_lo = lo;
  r.gamma_hi = hi;
  r.f_lo = f_lo;
  r.f_hi = f_hi;
  r.gamma_star = 0.5 * (lo + hi);
  const ObjectiveValue at_star = f(r.gamma_star);
  r.f_star = at_star.value;
  r.equilibrium = at_star.equilibrium;
  return r;
}

GammaTable gamma_table(const std::vector<double>& x_values,
                       const std::vector<double>& epsilon_values, const FleetParams& params,
                       std::int64_t n_scooters, const StaffingOptions& options,
                       unsigned threads) {
  GammaTable table;
  table.x_values = x_values;
  table.epsilon_values = epsilon_values;
  table.cells.resize(x_values.size() * epsilon_values.size());
  EquilibriumCache cache;
  detail::parallel_for(table.cells.size(), threads, [&](std::size_t i) {
    GammaCell& cell = table.cells[i];
    cell.x = x_values[i / epsilon_values.size()];
    cell.epsilon = epsilon_values[i % epsilon_values.size()];
    try {
      ServiceConstraint c;
      c.x_threshold = cell.x;
      c.epsilon = cell.epsilon;
      c.n_scooters = n_scooters;
      cell.result = find_gamma(c, params, options, &cache);
    } catch (const Error& e) {
      cell.error = e.what();
    }
  });
  return table;
}

}  // namespace swapfleet::staffing
