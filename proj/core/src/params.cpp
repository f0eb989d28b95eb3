#include <swapfleet/error.hpp>
#include <swapfleet/params.hpp>

#include <cmath>
#include <sstream>

namespace swapfleet {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw ConfigError(msg); }

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

void check_p_matrix(const FleetParams& p) {
  const int k = p.k_buckets;
  if (p.p_matrix.rows() != k || p.p_matrix.cols() != k) {
    std::ostringstream os;
    os << "p_matrix must be " << k << "x" << k << ", got " << p.p_matrix.rows()
       << "x" << p.p_matrix.cols();
    fail(os.str());
  }
  const double tol = p.p_rounded ? kRoundedRowSumTolerance : kRowSumTolerance;
  for (int row = 0; row < k; ++row) {
    double sum = 0.0;
    for (int col = 0; col < k; ++col) {
      const double v = p.p_matrix(row, col);
      if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
        std::ostringstream os;
        os << "p_matrix entry (" << row << "," << col << ") = " << v
           << " is not a probability";
        fail(os.str());
      }
      if (col > row && v != 0.0) {
        std::ostringstream os;
        os << "p_matrix must be lower-triangular: entry (" << row << "," << col
           << ") = " << v;
        fail(os.str());
      }
      sum += v;
    }
    const bool stochastic = std::abs(sum - 1.0) <= tol;
    const bool ridable = row >= p.k_threshold;
    if (ridable ? !stochastic : !(stochastic || sum == 0.0)) {
      std::ostringstream os;
      os.precision(17);
      os << "p_matrix row " << row << " sums to " << sum
         << (ridable ? " (ridable rows must sum to 1)"
                     : " (non-ridable rows must be zero or sum to 1)");
      fail(os.str());
    }
  }
}

}  // namespace

std::int64_t FleetParams::scooters() const {
  if (!n_scooters) fail("n_scooters is required for simulation");
  return *n_scooters;
}

std::int64_t FleetParams::swappers() const {
  if (!n_swappers) fail("n_swappers is required for simulation");
  return *n_swappers;
}

FleetParams validate(const FleetParams& params,
                     std::vector<std::string>* warnings) {
  FleetParams out = params;

  if (out.n_scooters && *out.n_scooters < 1) fail("n_scooters must be >= 1");
  if (out.n_swappers && *out.n_swappers < 0) fail("n_swappers must be >= 0");

  if (out.n_scooters && out.n_swappers) {
    const double from_counts =
        static_cast<double>(*out.n_swappers) / static_cast<double>(*out.n_scooters);
    if (out.gamma && std::abs(*out.gamma - from_counts) > 1e-9) {
      std::ostringstream os;
      os.precision(17);
      os << "gamma = " << *out.gamma << " disagrees with n_swappers/n_scooters = "
         << from_counts;
      fail(os.str());
    }
    out.gamma = from_counts;
  }
  if (!out.gamma) fail("gamma is required (give gamma or both n_scooters and n_swappers)");
  if (!finite_nonneg(*out.gamma)) fail("gamma must be finite and nonnegative");

  if (!finite_nonneg(out.lambda)) fail("lambda must be finite and nonnegative");
  if (!finite_nonneg(out.mu)) fail("mu must be finite and nonnegative");
  if (!finite_nonneg(out.mu_usage)) fail("mu_usage must be finite and nonnegative");

  if (out.k_buckets < 1) fail("k_buckets must be >= 1");
  if (out.k_threshold < 0 || out.k_threshold > out.k_buckets)
    fail("k_threshold must lie in [0, k_buckets]");

  check_p_matrix(out);

  if (out.g_weights.size() != out.k_buckets) {
    std::ostringstream os;
    os << "g_weights must have length " << out.k_buckets << ", got "
       << out.g_weights.size();
    fail(os.str());
  }
  for (int i = 0; i < out.k_buckets; ++i) {
    const double gi = out.g_weights(i);
    if (!std::isfinite(gi) || gi <= 0.0) fail("g_weights must be strictly positive");
  }
  if (warnings) {
    for (int i = 1; i < out.k_buckets; ++i) {
      if (out.g_weights(i) > out.g_weights(i - 1)) {
        std::ostringstream os;
        os << "g_weights is not nonincreasing at index " << i;
        warnings->push_back(os.str());
        break;
      }
    }
  }
  return out;
}

Matrix preset_uniform_p(int k_buckets) {
  if (k_buckets < 1) fail("preset_uniform_p: K must be >= 1");
  Matrix p = Matrix::Zero(k_buckets, k_buckets);
  for (int k = 0; k < k_buckets; ++k)
    for (int j = 0; j <= k; ++j) p(k, j) = 1.0 / (k + 1);
  return p;
}

Matrix preset_jump_p() {
  Matrix p(5, 5);
  // clang-format off
  p << 0.0,    0.0,   0.0,   0.0,   0.0,
       0.097,  0.903, 0.0,   0.0,   0.0,
       0.003,  0.345, 0.652, 0.0,   0.0,
       0.0008, 0.022, 0.329, 0.648, 0.0,
       0.00,   0.004, 0.021, 0.446, 0.529;
  // clang-format on
  return p;
}

Vector constant_g(int k_buckets) { return Vector::Ones(k_buckets); }

Vector linear_g(int k_buckets) {
  Vector g(k_buckets);
  for (int i = 0; i < k_buckets; ++i) g(i) = k_buckets - i;
  return g;
}

FleetParams reference_fleet() {
  FleetParams p;
  p.n_scooters = 100;
  p.n_swappers = 50;
  p.gamma = 0.5;
  p.lambda = 1.0;
  p.mu = 1.0;
  p.mu_usage = 1.0;
  p.k_buckets = 5;
  p.k_threshold = 1;
  p.p_matrix = preset_uniform_p(5);
  p.g_weights = constant_g(5);
  return p;
}

}  // namespace swapfleet
