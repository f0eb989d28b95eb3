#include <swapfleet/error.hpp>
#include <swapfleet/meanfield.hpp>
#include <swapfleet/ode.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace swapfleet::meanfield {

namespace {

double weighted_mass(const Vector& y, const FleetParams& params) {
  const double s = y.dot(params.g_weights);
  if (!(s > 0.0)) throw NumericError("sum_i y_i g_i must be positive", s);
  return s;
}

void check_size(const Vector& y, const FleetParams& params) {
  if (y.size() != params.k_buckets) {
    std::ostringstream os;
    os << "state has " << y.size() << " buckets, expected " << params.k_buckets;
    throw ConfigError(os.str());
  }
}

// Shared body of both drifts: usage at rate `use` per ridable scooter and
// recharging at total rate `recharge`.
Vector bucket_drift(const Vector& y, const FleetParams& params, double use, double recharge) {
  const int kb = params.k_buckets;
  const int ku = params.k_threshold;
  const double s = weighted_mass(y, params);
  Vector f(kb);
  for (int j = 0; j < kb; ++j) {
    double inflow = 0.0;
    for (int k = std::max(ku, j); k < kb; ++k) inflow += use * params.p_matrix(k, j) * y(k);
    const double outflow = j >= ku ? use * y(j) : 0.0;
    f(j) = inflow + (j == kb - 1 ? recharge : 0.0) - outflow -
           recharge * y(j) * params.g_weights(j) / s;
  }
  return f;
}

}  // namespace

Vector drift_model1(const Vector& y, const FleetParams& params) {
  check_size(y, params);
  return bucket_drift(y, params, params.mu, params.lambda * params.ratio());
}

Vector drift_model2(double x, const Vector& y, const FleetParams& params) {
  check_size(y, params);
  const int kb = params.k_buckets;
  double ridable = 0.0;
  for (int k = params.k_threshold; k < kb; ++k) ridable += y(k);
  Vector f(kb + 1);
  f(0) = params.mu * (1.0 - x) * ridable - params.mu_usage * x * ridable;
  f.tail(kb) = bucket_drift(y, params, params.mu_usage * x,
                            params.lambda * params.ratio() * (1.0 - x));
  return f;
}

Vector drift(Model model, const Vector& z, const FleetParams& params) {
  if (model == Model::kInstantUsage) return drift_model1(z, params);
  return drift_model2(z(0), z.tail(z.size() - 1), params);
}

Trajectory solve(Model model, const FleetParams& params, const EmpiricalState& init,
                 const std::vector<double>& grid, double step) {
  EmpiricalState start = init;
  if (model == Model::kTimedUsage && !start.x) start.x = 0.0;
  check_state(start, params.k_buckets, 1e-9);
  const ode::Field field = [&](double, const Vector& z) { return drift(model, z, params); };
  const ode::Solution sol = ode::integrate(field, pack(start, model), grid, step);
  Trajectory out;
  out.times = sol.times;
  out.states.reserve(sol.states.size());
  for (const auto& z : sol.states) out.states.push_back(unpack(z, model));
  return out;
}

double stable_step(const FleetParams& params, double step, double scale) {
  const double gmax = params.g_weights.maxCoeff();
  const double gmin = params.g_weights.minCoeff();
  const double rate = params.lambda * params.ratio() * gmax / gmin + params.mu + params.mu_usage;
  return rate > 0.0 ? std::min(step, scale / rate) : step;
}

Equilibrium equilibrium_from(const FleetParams& params, const Vector& start, double tol,
                             double t_max, double step) {
  if (!(tol > 0.0)) throw ConfigError("equilibrium tolerance must be positive");
  if (!(step > 0.0)) throw ConfigError("integration step must be positive");
  const ode::Field field = [&](double, const Vector& y) { return drift_model1(y, params); };
  step = stable_step(params, step);
  Vector y = start;
  double t = 0.0;
  double residual = drift_model1(y, params).lpNorm<Eigen::Infinity>();
  while (residual >= tol) {
    if (t >= t_max) {
      std::ostringstream os;
      os << "mean-field equilibrium not reached by t = " << t_max
         << " (drift residual " << residual << ")";
      throw NumericError(os.str(), residual);
    }
    ode::rk4_step(field, t, y, step);
    t += step;
    if (!y.allFinite()) {
      std::ostringstream os;
      os << "non-finite state at t = " << t;
      throw NumericError(os.str());
    }
    residual = drift_model1(y, params).lpNorm<Eigen::Infinity>();
  }
  return {y, residual, t};
}

Equilibrium equilibrium_model1(const FleetParams& params, double tol, double t_max,
                               double step) {
  return equilibrium_from(params, uniform_state(params.k_buckets).y, tol, t_max, step);
}

EquilibriumSpread equilibrium_spread(const FleetParams& params, double tol, double t_max) {
  EquilibriumSpread out;
  const int kb = params.k_buckets;
  std::vector<Vector> starts{uniform_state(kb).y};
  for (int k = 0; k < kb; ++k) starts.push_back(Vector::Unit(kb, k));
  for (const auto& s : starts) out.limits.push_back(equilibrium_from(params, s, tol, t_max));
  for (std::size_t a = 0; a < out.limits.size(); ++a)
    for (std::size_t b = a + 1; b < out.limits.size(); ++b)
      out.max_distance = std::max(
          out.max_distance,
          (out.limits[a].y_bar - out.limits[b].y_bar).lpNorm<Eigen::Infinity>());
  return out;
}

}  // namespace swapfleet::meanfield
