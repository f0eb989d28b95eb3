#include <swapfleet/error.hpp>
#include <swapfleet/fclt.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace swapfleet::fclt {

namespace {

double weighted_mass(const Vector& y, const FleetParams& params) {
  const double s = y.dot(params.g_weights);
  if (!(s > 0.0)) throw NumericError("sum_i y_i g_i must be positive", s);
  return s;
}

// Jacobian of the bucket drift with usage rate `use` per ridable scooter and
// total recharge rate `recharge`; entry (j, k) is d f_j / d y_k.
Matrix bucket_jacobian(const Vector& y, const FleetParams& params, double use,
                       double recharge) {
  const int kb = params.k_buckets;
  const int ku = params.k_threshold;
  const double s = weighted_mass(y, params);
  const Vector& g = params.g_weights;
  Matrix a(kb, kb);
  for (int j = 0; j < kb; ++j) {
    for (int k = 0; k < kb; ++k) {
      double v = 0.0;
      if (k >= std::max(j, ku)) v += use * params.p_matrix(k, j);
      if (k == j && j >= ku) v -= use;
      v += recharge * g(k) * g(j) * y(j) / (s * s);
      if (k == j) v -= recharge * g(j) / s;
      a(j, k) = v;
    }
  }
  return a;
}

// Bracket derivatives of the bucket martingales. Rides are counted only
// from ridable buckets; swaps into the full bucket are counted regardless of
// the ride threshold.
Matrix bucket_brackets(const Vector& y, const FleetParams& params, double use,
                       double recharge) {
  const int kb = params.k_buckets;
  const int ku = params.k_threshold;
  const double s = weighted_mass(y, params);
  const Vector& g = params.g_weights;
  const Matrix& p = params.p_matrix;
  Matrix b = Matrix::Zero(kb, kb);
  for (int k = 0; k < kb - 1; ++k) {
    double v = 0.0;
    for (int i = std::max(ku, k + 1); i < kb; ++i) v += use * p(i, k) * y(i);
    v += ((k >= ku ? use * (1.0 - p(k, k)) : 0.0) + recharge * g(k) / s) * y(k);
    b(k, k) = v;
  }
  {
    const int last = kb - 1;
    const double ride = last >= ku ? use * (1.0 - p(last, last)) * y(last) : 0.0;
    b(last, last) = ride + recharge * (1.0 - g(last) * y(last) / s);
  }
  for (int k = 1; k < kb; ++k) {
    for (int j = 0; j < k; ++j) {
      double v = 0.0;
      if (k >= ku) v += use * p(k, j) * y(k);
      if (k == kb - 1) v += recharge * g(j) * y(j) / s;
      b(k, j) = -v;
      b(j, k) = -v;
    }
  }
  return b;
}

void symmetrize(Matrix& m) { m = 0.5 * (m + m.transpose()).eval(); }

void check_finite(const Matrix& m, double t) {
  if (!m.allFinite()) {
    std::ostringstream os;
    os << "non-finite covariance at t = " << t;
    throw NumericError(os.str());
  }
}

}  // namespace

Linearization linearize_model1(const Vector& y, const FleetParams& params) {
  if (y.size() != params.k_buckets) throw ConfigError("state has the wrong number of buckets");
  const double recharge = params.lambda * params.ratio();
  return {bucket_jacobian(y, params, params.mu, recharge),
          bucket_brackets(y, params, params.mu, recharge)};
}

Linearization linearize_model2(double x, const Vector& y, const FleetParams& params,
                               CrossBracket cross) {
  const int kb = params.k_buckets;
  const int ku = params.k_threshold;
  if (y.size() != kb) throw ConfigError("state has the wrong number of buckets");
  const double s = weighted_mass(y, params);
  const double lg = params.lambda * params.ratio();
  const double mu = params.mu;
  const double mu_u = params.mu_usage;
  const Matrix& p = params.p_matrix;
  const Vector& g = params.g_weights;

  double ridable = 0.0;
  for (int k = ku; k < kb; ++k) ridable += y(k);

  Linearization lin{Matrix::Zero(kb + 1, kb + 1), Matrix::Zero(kb + 1, kb + 1)};
  Matrix& a = lin.a_matrix;
  Matrix& b = lin.b_matrix;

  a(0, 0) = -(mu + mu_u) * ridable;
  for (int k = ku; k < kb; ++k) a(0, 1 + k) = mu * (1.0 - x) - mu_u * x;
  for (int j = 0; j < kb; ++j) {
    double v = 0.0;
    for (int k = std::max(ku, j); k < kb; ++k) v += mu_u * p(k, j) * y(k);
    v -= lg * ((j == kb - 1 ? 1.0 : 0.0) - g(j) * y(j) / s);
    if (j >= ku) v -= mu_u * y(j);
    a(1 + j, 0) = v;
  }
  a.bottomRightCorner(kb, kb) = bucket_jacobian(y, params, mu_u * x, lg * (1.0 - x));

  b(0, 0) = (mu * (1.0 - x) + mu_u * x) * ridable;
  for (int j = 0; j < kb; ++j) {
    double v = 0.0;
    if (cross == CrossBracket::kArrivalOnly) {
      for (int k = std::max(j, ku); k < kb; ++k) v -= mu_u * x * p(k, j) * y(k);
    } else {
      for (int k = std::max(j + 1, ku); k < kb; ++k) v -= mu_u * x * p(k, j) * y(k);
      if (j >= ku) v += mu_u * x * (1.0 - p(j, j)) * y(j);
    }
    b(0, 1 + j) = v;
    b(1 + j, 0) = v;
  }
  b.bottomRightCorner(kb, kb) = bucket_brackets(y, params, mu_u * x, lg * (1.0 - x));
  return lin;
}

Linearization linearize(Model model, const Vector& z, const FleetParams& params,
                        CrossBracket cross) {
  if (model == Model::kInstantUsage) return linearize_model1(z, params);
  return linearize_model2(z(0), z.tail(z.size() - 1), params, cross);
}

Matrix covariance_rhs(const Matrix& sigma, const Linearization& lin) {
  Matrix d = sigma * lin.a_matrix.transpose();
  d += lin.a_matrix * sigma;
  d += lin.b_matrix;
  return d;
}

CovarianceTrajectory integrate_lyapunov(const std::vector<double>& grid,
                                        const std::function<Linearization(double)>& lin_at,
                                        const Matrix& sigma0) {
  if (grid.empty()) throw ConfigError("time grid must not be empty");
  if (sigma0.rows() != sigma0.cols()) throw ConfigError("sigma0 must be square");
  CovarianceTrajectory out;
  out.times = grid;
  out.sigmas.reserve(grid.size());
  Matrix sigma = sigma0;
  symmetrize(sigma);
  out.sigmas.push_back(sigma);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double t = grid[i - 1];
    const double h = grid[i] - t;
    if (!(h > 0.0)) throw ConfigError("time grid must be strictly increasing");
    const Linearization l0 = lin_at(t);
    const Linearization lm = lin_at(t + 0.5 * h);
    const Linearization l1 = lin_at(grid[i]);
    const Matrix k1 = covariance_rhs(sigma, l0);
    const Matrix k2 = covariance_rhs(sigma + (0.5 * h) * k1, lm);
    const Matrix k3 = covariance_rhs(sigma + (0.5 * h) * k2, lm);
    const Matrix k4 = covariance_rhs(sigma + h * k3, l1);
    sigma += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    symmetrize(sigma);
    check_finite(sigma, grid[i]);
    out.sigmas.push_back(sigma);
  }
  return out;
}

CovarianceTrajectory integrate_covariance(const Trajectory& meanfield, const Matrix& sigma0,
                                          const FleetParams& params, Model model,
                                          CrossBracket cross) {
  const auto& times = meanfield.times;
  if (times.empty() || times.size() != meanfield.states.size())
    throw ConfigError("mean-field trajectory is empty or malformed");
  std::vector<Vector> packed;
  packed.reserve(times.size());
  for (const auto& s : meanfield.states) packed.push_back(pack(s, model));

  // Interval lookup is monotone in the RK4 sweep, so keep a cursor.
  std::size_t cursor = 0;
  const auto lin_at = [&](double t) {
    while (cursor + 1 < times.size() && times[cursor + 1] < t) ++cursor;
    while (cursor > 0 && times[cursor] > t) --cursor;
    Vector z;
    if (cursor + 1 >= times.size()) {
      z = packed.back();
    } else {
      const double t0 = times[cursor];
      const double t1 = times[cursor + 1];
      const double w = std::clamp((t - t0) / (t1 - t0), 0.0, 1.0);
      z = (1.0 - w) * packed[cursor] + w * packed[cursor + 1];
    }
    return linearize(model, z, params, cross);
  };
  return integrate_lyapunov(times, lin_at, sigma0);
}

namespace {

// One RK4 step of the joint (z, Sigma) system.
void joint_step(Model model, const FleetParams& params, CrossBracket cross, Vector& z,
                Matrix& sigma, double h) {
  const auto rhs = [&](const Vector& zz, const Matrix& ss, Vector& dz, Matrix& ds) {
    dz = meanfield::drift(model, zz, params);
    ds = covariance_rhs(ss, linearize(model, zz, params, cross));
  };
  Vector dz1, dz2, dz3, dz4;
  Matrix ds1, ds2, ds3, ds4;
  rhs(z, sigma, dz1, ds1);
  rhs(z + (0.5 * h) * dz1, sigma + (0.5 * h) * ds1, dz2, ds2);
  rhs(z + (0.5 * h) * dz2, sigma + (0.5 * h) * ds2, dz3, ds3);
  rhs(z + h * dz3, sigma + h * ds3, dz4, ds4);
  z += (h / 6.0) * (dz1 + 2.0 * dz2 + 2.0 * dz3 + dz4);
  sigma += (h / 6.0) * (ds1 + 2.0 * ds2 + 2.0 * ds3 + ds4);
  symmetrize(sigma);
}

}  // namespace

JointSolution solve_joint(Model model, const FleetParams& params, const EmpiricalState& init,
                          const Matrix& sigma0, const std::vector<double>& grid, double step,
                          CrossBracket cross) {
  if (!(step > 0.0)) throw ConfigError("integration step must be positive");
  if (grid.empty()) throw ConfigError("time grid must not be empty");
  EmpiricalState start = init;
  if (model == Model::kTimedUsage && !start.x) start.x = 0.0;
  check_state(start, params.k_buckets, 1e-9);
  Vector z = pack(start, model);
  if (sigma0.rows() != z.size() || sigma0.cols() != z.size())
    throw ConfigError("sigma0 has the wrong shape");
  Matrix sigma = sigma0;
  symmetrize(sigma);

  JointSolution out;
  out.meanfield.times = grid;
  out.covariance.times = grid;
  out.meanfield.states.push_back(unpack(z, model));
  out.covariance.sigmas.push_back(sigma);
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double t0 = grid[i - 1];
    const double t1 = grid[i];
    if (!(t1 > t0)) throw ConfigError("time grid must be strictly increasing");
    const auto n = static_cast<long>(std::ceil((t1 - t0) / step - 1e-9));
    double t = t0;
    for (long s = 0; s < n; ++s) {
      const double h = (s + 1 == n) ? t1 - t : step;
      joint_step(model, params, cross, z, sigma, h);
      t = (s + 1 == n) ? t1 : t0 + static_cast<double>(s + 1) * step;
      if (!z.allFinite()) {
        std::ostringstream os;
        os << "non-finite state at t = " << t;
        throw NumericError(os.str());
      }
      check_finite(sigma, t);
    }
    out.meanfield.states.push_back(unpack(z, model));
    out.covariance.sigmas.push_back(sigma);
  }
  return out;
}

EquilibriumCovariance equilibrium_covariance(const FleetParams& params, double tol,
                                             double t_max, double step) {
  if (!(tol > 0.0)) throw ConfigError("equilibrium tolerance must be positive");
  if (!(step > 0.0)) throw ConfigError("integration step must be positive");
  step = meanfield::stable_step(params, step, 0.5);
  const int kb = params.k_buckets;
  Vector y = uniform_state(kb).y;
  Matrix sigma = Matrix::Zero(kb, kb);
  double t = 0.0;
  const auto residuals = [&](double& dr, double& sr) {
    dr = meanfield::drift_model1(y, params).lpNorm<Eigen::Infinity>();
    sr = covariance_rhs(sigma, linearize_model1(y, params)).lpNorm<Eigen::Infinity>();
  };
  double dr = 0.0;
  double sr = 0.0;
  residuals(dr, sr);
  while (dr >= tol || sr >= tol) {
    if (t >= t_max) {
      std::ostringstream os;
      os << "covariance equilibrium not reached by t = " << t_max << " (drift residual " << dr
         << ", covariance residual " << sr << ")";
      throw NumericError(os.str(), std::max(dr, sr));
    }
    joint_step(Model::kInstantUsage, params, CrossBracket::kGenerator, y, sigma, step);
    t += step;
    if (!y.allFinite()) {
      std::ostringstream os;
      os << "non-finite state at t = " << t;
      throw NumericError(os.str());
    }
    check_finite(sigma, t);
    residuals(dr, sr);
  }
  return {y, sigma, dr, sr, t};
}

Eigen::VectorXcd zero_sum_spectrum(const Matrix& a) {
  const Eigen::Index n = a.rows();
  if (n < 2) return Eigen::VectorXcd(0);
  // Orthonormal basis of 1-perp: the last n-1 columns of a Householder QR
  // of the ones vector.
  const Matrix ones = Matrix::Ones(n, 1);
  Eigen::HouseholderQR<Matrix> qr(ones);
  const Matrix q = qr.householderQ() * Matrix::Identity(n, n);
  const Matrix basis = q.rightCols(n - 1);
  const Matrix restricted = basis.transpose() * a * basis;
  Eigen::EigenSolver<Matrix> es(restricted, false);
  return es.eigenvalues();
}

}  // namespace swapfleet::fclt
