#pragma once

#include <swapfleet/meanfield.hpp>
#include <swapfleet/params.hpp>
#include <swapfleet/state.hpp>

#include <complex>
#include <functional>
#include <vector>

namespace swapfleet::fclt {

/// Linear-noise data at one mean-field state: A = f'(z) and B, the time
/// derivative of the martingale brackets. Coordinates follow `pack`.
struct Linearization {
  Matrix a_matrix;
  Matrix b_matrix;
};

/// Which expression to use for the x/y cross bracket of the timed model.
///
/// kGenerator counts every drop-off k -> j as x -= 1/N together with
/// y_j += 1/N and y_k -= 1/N, which is what the transition rates imply and
/// keeps sum_j <M_x, M_{y,j}> = 0.
/// kArrivalOnly uses -mu_U x sum_{k >= max(j, K_U)} p_kj y_k, which counts
/// only the arrival at bucket j.
enum class CrossBracket { kGenerator, kArrivalOnly };

Linearization linearize_model1(const Vector& y, const FleetParams& params);
Linearization linearize_model2(double x, const Vector& y, const FleetParams& params,
                               CrossBracket cross = CrossBracket::kGenerator);
Linearization linearize(Model model, const Vector& z, const FleetParams& params,
                        CrossBracket cross = CrossBracket::kGenerator);

/// dSigma/dt = Sigma A^T + A Sigma + B.
Matrix covariance_rhs(const Matrix& sigma, const Linearization& lin);

struct CovarianceTrajectory {
  std::vector<double> times;
  std::vector<Matrix> sigmas;
};

/// RK4 for the covariance ODE with one step per grid interval. `lin_at(t)`
/// supplies A and B at any time in the grid range. Output is symmetrized
/// after every step.
CovarianceTrajectory integrate_lyapunov(const std::vector<double>& grid,
                                        const std::function<Linearization(double)>& lin_at,
                                        const Matrix& sigma0);

/// Covariance ODE driven by a sampled mean-field solution; A(t) and B(t)
/// come from the state linearly interpolated between grid points.
CovarianceTrajectory integrate_covariance(const Trajectory& meanfield, const Matrix& sigma0,
                                          const FleetParams& params, Model model,
                                          CrossBracket cross = CrossBracket::kGenerator);

/// Mean field and covariance integrated together with fixed step `step`
/// (no interpolation), sampled on `grid`.
struct JointSolution {
  Trajectory meanfield;
  CovarianceTrajectory covariance;
};
JointSolution solve_joint(Model model, const FleetParams& params, const EmpiricalState& init,
                          const Matrix& sigma0, const std::vector<double>& grid,
                          double step = meanfield::kDefaultStep,
                          CrossBracket cross = CrossBracket::kGenerator);

struct EquilibriumCovariance {
  Vector y_bar;
  Matrix sigma_bar;
  double drift_residual = 0.0;  // sup-norm of f(y_bar)
  double sigma_residual = 0.0;  // sup-norm of dSigma/dt at (y_bar, sigma_bar)
  double t_converged = 0.0;
};

/// Integrates the instant-usage mean field and covariance jointly from the
/// uniform state and Sigma = 0 until both residuals are below `tol`.
/// Throws NumericError when t_max is reached first.
EquilibriumCovariance equilibrium_covariance(const FleetParams& params, double tol = 1e-8,
                                             double t_max = meanfield::kDefaultMaxTime,
                                             double step = meanfield::kDefaultStep);

/// Eigenvalues of A restricted to the zero-sum subspace {v : 1^T v = 0},
/// which A maps into itself whenever its columns sum to zero.
Eigen::VectorXcd zero_sum_spectrum(const Matrix& a);

}  // namespace swapfleet::fclt
