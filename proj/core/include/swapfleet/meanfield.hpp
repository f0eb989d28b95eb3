#pragma once

#include <swapfleet/params.hpp>
#include <swapfleet/state.hpp>

#include <vector>

namespace swapfleet::meanfield {

/// Default fixed RK4 step.
inline constexpr double kDefaultStep = 1e-2;
/// Default cutoff for equilibrium searches.
inline constexpr double kDefaultMaxTime = 500.0;

/// Mean-field drift of the instant-usage model at y (length K):
///
///   f_j = sum_{k >= max(K_U, j)} mu p_kj y_k + lambda gamma 1{j = K-1}
///         - mu y_j 1{j >= K_U} - lambda gamma y_j g_j / sum_i y_i g_i.
///
/// y is expected on the simplex up to integration round-off.
Vector drift_model1(const Vector& y, const FleetParams& params);

/// Drift of the timed-usage model, returned as (f_x, f_y(0..K-1)).
Vector drift_model2(double x, const Vector& y, const FleetParams& params);

/// Drift on packed coordinates (see `pack`).
Vector drift(Model model, const Vector& z, const FleetParams& params);

/// Integrates the mean-field ODE from `init` and samples it on `grid`.
Trajectory solve(Model model, const FleetParams& params, const EmpiricalState& init,
                 const std::vector<double>& grid, double step = kDefaultStep);

/// min(step, scale / L) with L = lambda gamma max(g)/min(g) + mu + mu_U, a
/// bound on the fastest relaxation rate of the drift. Equilibrium searches
/// use it so RK4 stays stable at large swapper ratios.
double stable_step(const FleetParams& params, double step, double scale = 1.0);

struct Equilibrium {
  Vector y_bar;
  double residual = 0.0;     // sup-norm of the drift at y_bar
  double t_converged = 0.0;
};

/// Follows the flow from the uniform state until the sup-norm of the drift
/// drops below `tol`. Throws NumericError carrying the residual when t_max
/// is reached first.
Equilibrium equilibrium_model1(const FleetParams& params, double tol = 1e-10,
                               double t_max = kDefaultMaxTime, double step = kDefaultStep);

/// Same search from an arbitrary start.
Equilibrium equilibrium_from(const FleetParams& params, const Vector& start, double tol,
                             double t_max, double step = kDefaultStep);

/// Diagnostic for multiple equilibria: runs the search from every simplex
/// vertex and the uniform point, and reports the largest sup-distance
/// between any two limits found.
struct EquilibriumSpread {
  std::vector<Equilibrium> limits;
  double max_distance = 0.0;
};
EquilibriumSpread equilibrium_spread(const FleetParams& params, double tol = 1e-10,
                                     double t_max = kDefaultMaxTime);

}  // namespace swapfleet::meanfield
