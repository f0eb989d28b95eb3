#include <doctest.h>

#include <swapfleet/error.hpp>
#include <swapfleet/meanfield.hpp>
#include <swapfleet/ode.hpp>

#include "oracles/random_states.hpp"
#include "oracles/transitions.hpp"

#include <cmath>
#include <random>
#include <string>

using namespace swapfleet;

namespace {

double sup(const Vector& v) { return v.lpNorm<Eigen::Infinity>(); }

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("instant-model drift at the uniform state") {
  const FleetParams p = validate(reference_fleet());
  const Vector f = meanfield::drift_model1(uniform_state(5).y, p);
  // Exact rationals from a symbolic evaluation of the transition sums.
  const Vector expect = vec({47.0 / 300, -13.0 / 300, -43.0 / 300, -21.0 / 100, 6.0 / 25});
  CHECK(sup(f - expect) < 1e-15);
  CHECK(std::abs(f.sum()) < 1e-15);
}

TEST_CASE("timed-model drift at x = 0.3, uniform y") {
  FleetParams p = reference_fleet();
  p = validate(p);
  const Vector f = meanfield::drift_model2(0.3, uniform_state(5).y, p);
  const Vector expect =
      vec({8.0 / 25, 7.0 / 1000, -53.0 / 1000, -83.0 / 1000, -103.0 / 1000, 29.0 / 125});
  CHECK(sup(f - expect) < 1e-15);
  CHECK(std::abs(f.tail(5).sum()) < 1e-15);
}

TEST_CASE("drifts agree with the transition-enumeration oracle") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ux(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const int k = 1 + trial % 9;
    const FleetParams p = validate(oracle::random_fleet(gen, k));
    const Vector y = oracle::random_simplex(gen, k);
    const Vector f1 = meanfield::drift_model1(y, p);
    CHECK(sup(f1 - oracle::drift(Model::kInstantUsage, y, p)) < 1e-13);
    CHECK(std::abs(f1.sum()) < 1e-12);

    Vector z(k + 1);
    z(0) = ux(gen);
    z.tail(k) = y;
    const Vector f2 = meanfield::drift(Model::kTimedUsage, z, p);
    CHECK(sup(f2 - oracle::drift(Model::kTimedUsage, z, p)) < 1e-13);
    CHECK(std::abs(f2.tail(k).sum()) < 1e-12);
  }
}

TEST_CASE("drift special cases") {
  FleetParams p = reference_fleet();
  p.mu = 0.0;
  p = validate(p);
  CHECK(sup(meanfield::drift_model1(Vector::Unit(5, 4), p)) == 0.0);

  // With nobody riding, the timed-model y drift is the pure-recharge drift.
  const FleetParams ref = validate(reference_fleet());
  const Vector y = vec({0.1, 0.3, 0.2, 0.15, 0.25});
  const Vector f = meanfield::drift_model2(0.0, y, ref);
  CHECK(sup(f.tail(5) - meanfield::drift_model1(y, p)) < 1e-15);

  FleetParams q = reference_fleet();
  q.mu = 1.0;
  q.mu_usage = 3.0;
  q = validate(q);
  CHECK(std::abs(meanfield::drift_model2(0.25, y, q)(0)) < 1e-15);
}

TEST_CASE("drift input checks") {
  const FleetParams p = validate(reference_fleet());
  CHECK_NOTHROW(meanfield::drift_model1(uniform_state(5).y * (1 + 1e-7), p));
  CHECK_THROWS_AS(meanfield::drift_model1(Vector::Ones(4) / 4.0, p), ConfigError);
  CHECK_THROWS_AS(meanfield::drift_model1(Vector::Zero(5), p), NumericError);
}

TEST_CASE("integrator basics") {
  const ode::Field zero = [](double, const Vector& z) { return Vector::Zero(z.size()); };
  const Vector init = vec({0.3, 0.7});
  const auto sol = ode::integrate(zero, init, {0.0, 0.5, 1.7}, 0.1);
  REQUIRE(sol.states.size() == 3);
  for (const auto& s : sol.states) CHECK(s == init);

  // dz/dt = 1 lands exactly on the grid point even when step does not divide it.
  const ode::Field one = [](double, const Vector& z) { return Vector::Ones(z.size()); };
  const auto lin = ode::integrate(one, Vector::Zero(1), {0.0, 0.37}, 0.1);
  CHECK(lin.states[1](0) == doctest::Approx(0.37).epsilon(1e-15));

  // dz/dt = z^2 from z = 1 blows up at t = 1.
  const ode::Field blow = [](double, const Vector& z) { return Vector(z.array().square()); };
  try {
    ode::integrate(blow, Vector::Ones(1), {0.0, 2.0}, 0.01);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("t = ") != std::string::npos);
  }
  CHECK_THROWS_AS(ode::integrate(zero, init, {0.0, 1.0}, 0.0), ConfigError);
}

TEST_CASE("RK4 self-convergence is fourth order") {
  const FleetParams p = validate(reference_fleet());
  const auto grid = uniform_grid(20.0, 0.8);
  const auto run = [&](double h) {
    return meanfield::solve(Model::kInstantUsage, p, uniform_state(5), grid, h);
  };
  const auto a = run(0.1), b = run(0.05), c = run(0.025);
  double e1 = 0.0, e2 = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    e1 = std::max(e1, sup(a.states[i].y - b.states[i].y));
    e2 = std::max(e2, sup(b.states[i].y - c.states[i].y));
  }
  MESSAGE("Richardson ratio " << e1 / e2);
  CHECK(e1 / e2 > 14.0);
  CHECK(e1 / e2 < 18.0);
}

TEST_CASE("conservation and positivity along the reference trajectory") {
  const FleetParams p = validate(reference_fleet());
  const auto sol =
      meanfield::solve(Model::kInstantUsage, p, uniform_state(5), uniform_grid(100.0, 0.5));
  for (const auto& s : sol.states) {
    CHECK(std::abs(s.y.sum() - 1.0) < 1e-9);
    CHECK(s.y.minCoeff() > -1e-9);
  }
  // Bucket 4 fills up, bucket 0 stays low.
  CHECK(sol.states.back().y(4) > 0.2);
  double max_y0 = 0.0;
  for (const auto& s : sol.states) max_y0 = std::max(max_y0, s.y(0));
  CHECK(max_y0 < 0.4);

  const auto sol2 = meanfield::solve(Model::kTimedUsage, p, uniform_state(5, 0.0),
                                     uniform_grid(100.0, 0.5));
  for (const auto& s : sol2.states) {
    CHECK(std::abs(s.y.sum() - 1.0) < 1e-9);
    CHECK(*s.x >= -1e-9);
    CHECK(*s.x <= 1.0 + 1e-9);
  }
}

TEST_CASE("drift is Lipschitz with the expected constant") {
  std::mt19937_64 gen(21);
  const FleetParams p = validate(reference_fleet());
  FleetParams q = reference_fleet();
  q.g_weights = linear_g(5);
  q = validate(q);
  for (const FleetParams* f : {&p, static_cast<const FleetParams*>(&q)}) {
    const double gmax = f->g_weights.maxCoeff(), gmin = f->g_weights.minCoeff();
    const double bound = 2.0 * (f->lambda * *f->gamma * gmax / gmin + f->mu);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      const Vector a = oracle::random_simplex(gen, 5, 0.0);
      const Vector b = oracle::random_simplex(gen, 5, 0.0);
      const double ratio = (meanfield::drift_model1(a, *f) - meanfield::drift_model1(b, *f)).norm() /
                           (a - b).norm();
      worst = std::max(worst, ratio);
    }
    CHECK(worst <= bound);
  }
}

TEST_CASE("reference equilibrium") {
  const FleetParams p = validate(reference_fleet());
  const auto eq = meanfield::equilibrium_model1(p, 1e-10);
  // Exact fixed point from the symbolic solve.
  const Vector expect = vec({162.0 / 455, 54.0 / 455, 36.0 / 455, 4.0 / 65, 5.0 / 13});
  CHECK(sup(eq.y_bar - expect) < 1e-9);
  CHECK(eq.residual < 1e-10);
  CHECK(sup(meanfield::drift_model1(eq.y_bar, p)) < 1e-10);
  CHECK(eq.t_converged > 0.0);

  const auto spread = meanfield::equilibrium_spread(p, 1e-11);
  CHECK(spread.limits.size() == 6);
  CHECK(spread.max_distance < 1e-9);
}

TEST_CASE("trivial fixed points") {
  FleetParams full = reference_fleet();
  full.mu = 0.0;
  full = validate(full);
  CHECK(sup(meanfield::equilibrium_model1(full, 1e-10).y_bar - Vector::Unit(5, 4)) < 1e-8);

  FleetParams drain = reference_fleet();
  drain.lambda = 0.0;
  drain.k_threshold = 0;
  drain = validate(drain);
  CHECK(sup(meanfield::equilibrium_model1(drain, 1e-10).y_bar - Vector::Unit(5, 0)) < 1e-8);
}

TEST_CASE("equilibrium failure carries the residual") {
  const FleetParams p = validate(reference_fleet());
  try {
    meanfield::equilibrium_model1(p, 1e-12, 1.0);
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(e.residual() > 1e-12);
  }
  CHECK_THROWS_AS(meanfield::equilibrium_model1(p, 0.0), ConfigError);
}

TEST_CASE("stable step shrinks with the swap rate") {
  FleetParams p = reference_fleet();
  p.gamma = 1000.0;
  p.n_swappers.reset();
  p = validate(p);
  CHECK(meanfield::stable_step(p, 1e-2) == doctest::Approx(1.0 / 1002.0));
  CHECK(meanfield::stable_step(validate(reference_fleet()), 1e-2) == 1e-2);
}
