// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <swapfleet/estimation.hpp>
#include <swapfleet/fclt.hpp>
#include <swapfleet/meanfield.hpp>
#include <swapfleet/simulator.hpp>
#include <swapfleet/staffing.hpp>

#include "oracles/random_states.hpp"
#include "oracles/transitions.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace swapfleet;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double sup(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

const std::vector<double> kTableX{0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
const std::vector<double> kTableEps{0.01, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3};
// Reference optimal ratios, rows x, columns epsilon.
const double kReferenceTable[6][7] = {
    {0.828, 0.734, 0.695, 0.672, 0.641, 0.625, 0.609},
    {0.598, 0.551, 0.527, 0.508, 0.496, 0.484, 0.473},
    {0.504, 0.467, 0.447, 0.434, 0.424, 0.414, 0.406},
    {0.443, 0.412, 0.395, 0.383, 0.375, 0.366, 0.359},
    {0.398, 0.370, 0.354, 0.344, 0.336, 0.328, 0.322},
    {0.361, 0.334, 0.320, 0.311, 0.303, 0.296, 0.290},
};

FleetParams fleet_with_n(std::int64_t n) {
  FleetParams p = reference_fleet();
  p.n_scooters = n;
  p.n_swappers = n / 2;
  p.gamma.reset();
  return validate(p);
}

// 1. Conservation.
Outcome conservation() {
  constexpr double kOdeTol = 1e-9;
  constexpr double kHorizon = 100.0;
  const FleetParams p = validate(reference_fleet());
  const auto grid = uniform_grid(kHorizon, 0.25);
  bool counts_exact = true;
  double sim_dev = 0.0;
  for (Model m : {Model::kInstantUsage, Model::kTimedUsage}) {
    const EmpiricalState init = uniform_state(5, m == Model::kTimedUsage ? 0.2 : std::optional<double>{});
    for (std::uint64_t s = 0; s < 10; ++s) {
      const auto tr = sim::simulate_path(m, p, init, grid, s);
      for (std::size_t i = 0; i < tr.counts.size(); ++i) {
        std::int64_t total = 0;
        for (auto c : tr.counts[i].counts) total += c;
        counts_exact = counts_exact && total == 100;
        sim_dev = std::max(sim_dev, std::abs(tr.states[i].y.sum() - 1.0));
      }
    }
  }
  double ode_dev = 0.0;
  for (Model m : {Model::kInstantUsage, Model::kTimedUsage}) {
    const EmpiricalState init = uniform_state(5, m == Model::kTimedUsage ? 0.0 : std::optional<double>{});
    const auto sol = meanfield::solve(m, p, init, uniform_grid(kHorizon, 0.01));
    for (const auto& s : sol.states) ode_dev = std::max(ode_dev, std::abs(s.y.sum() - 1.0));
  }
  // Fractions are counts / N, so their floating sum is 1 up to rounding of
  // the K divisions.
  const bool pass = counts_exact && sim_dev <= 8 * 2.2e-16 && ode_dev < kOdeTol;
  return {pass, std::string("integer counts sum to N: ") + (counts_exact ? "yes" : "NO") +
                    ", max |sum y - 1| sim " + fmt("%.1e", sim_dev) + ", ode " +
                    fmt("%.1e", ode_dev) + " (< 1e-9)"};
}

// 2. Jacobian against finite differences.
Outcome jacobian() {
  constexpr double kTol = 1e-5;
  constexpr double kStep = 1e-6;
  std::mt19937_64 gen(2);
  FleetParams p1 = validate(reference_fleet());
  FleetParams p2 = reference_fleet();
  p2.g_weights = linear_g(5);
  p2.mu_usage = 2.0;
  p2 = validate(p2);
  double worst[2] = {0.0, 0.0};
  for (int mi = 0; mi < 2; ++mi) {
    const Model m = mi == 0 ? Model::kInstantUsage : Model::kTimedUsage;
    for (int trial = 0; trial < 20; ++trial) {
      const FleetParams& p = trial % 2 ? p2 : p1;
      Vector z = oracle::random_simplex(gen, 5, 0.01);
      if (m == Model::kTimedUsage) {
        Vector zz(6);
        zz(0) = std::uniform_real_distribution<double>(0.05, 0.95)(gen);
        zz.tail(5) = z;
        z = zz;
      }
      const Matrix a = fclt::linearize(m, z, p).a_matrix;
      const Matrix fd = oracle::fd_jacobian(
          [&](const Vector& v) { return meanfield::drift(m, v, p); }, z, kStep);
      worst[mi] = std::max(worst[mi], sup(a - fd) / sup(a));
    }
  }
  return {worst[0] < kTol && worst[1] < kTol,
          "max relative error model 1 " + fmt("%.2e", worst[0]) + ", model 2 " +
              fmt("%.2e", worst[1]) + " (< 1e-5)"};
}

// 3. Bracket conservation.
Outcome brackets() {
  constexpr double kRowTol = 1e-10;
  constexpr double kOracleTol = 1e-12;
  std::mt19937_64 gen(3);
  double row1 = 0.0, row2 = 0.0, oracle_gap = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + trial % 9;
    const FleetParams p = validate(oracle::random_fleet(gen, k));
    const Vector y = oracle::random_simplex(gen, k, 0.0);
    const Matrix b1 = fclt::linearize_model1(y, p).b_matrix;
    row1 = std::max(row1, b1.rowwise().sum().cwiseAbs().maxCoeff());
    oracle_gap = std::max(oracle_gap, sup(b1 - oracle::brackets(Model::kInstantUsage, y, p)));

    Vector z(k + 1);
    z(0) = std::uniform_real_distribution<double>(0.0, 1.0)(gen);
    z.tail(k) = y;
    const Matrix b2 = fclt::linearize(Model::kTimedUsage, z, p).b_matrix;
    row2 = std::max(row2, b2.rightCols(k).rowwise().sum().cwiseAbs().maxCoeff());
    oracle_gap = std::max(oracle_gap, sup(b2 - oracle::brackets(Model::kTimedUsage, z, p)));
  }
  return {row1 < kRowTol && row2 < kRowTol && oracle_gap < kOracleTol,
          "1000 states: max row sum model 1 " + fmt("%.1e", row1) + ", model 2 (y columns) " +
              fmt("%.1e", row2) + ", max |B - enumeration| " + fmt("%.1e", oracle_gap)};
}

// 4. Law of large numbers.
Outcome flln() {
  constexpr double kTol = 0.01;
  const FleetParams p = fleet_with_n(1000);
  const auto grid = uniform_grid(20.0, 0.1);
  const auto m =
      sim::ensemble_moments(Model::kInstantUsage, p, uniform_state(5), grid, 100, 20240401);
  const auto ode = meanfield::solve(Model::kInstantUsage, p, uniform_state(5), grid);
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    worst = std::max(worst, (m.mean[i] - ode.states[i].y).cwiseAbs().maxCoeff());
  return {worst < kTol, "N = 1000, 100 paths: sup |mean - y(t)| = " + fmt("%.4f", worst) +
                            " (< 0.01)"};
}

// 5. Central limit: N Var[Y_k(t)] against Sigma_kk(t).
Outcome fclt_check() {
  constexpr double kRelTol = 0.15;
  constexpr double kMinSigma = 0.01;
  const FleetParams p = fleet_with_n(1000);
  const std::vector<double> grid{0.0, 5.0, 20.0};
  const auto m =
      sim::ensemble_moments(Model::kInstantUsage, p, uniform_state(5), grid, 1000, 20240402);
  const auto joint = fclt::solve_joint(Model::kInstantUsage, p, uniform_state(5),
                                       Matrix::Zero(5, 5), grid);
  double worst = 0.0;
  int checked = 0;
  std::ostringstream ratios;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    ratios << " t=" << grid[i] << ":";
    for (int k = 0; k < 5; ++k) {
      const double s = joint.covariance.sigmas[i](k, k);
      if (s <= kMinSigma) continue;
      const double r = 1000.0 * m.variance[i](k) / s;
      worst = std::max(worst, std::abs(r - 1.0));
      ++checked;
      ratios << ' ' << fmt("%.3f", r);
    }
  }
  return {worst < kRelTol && checked > 0,
          "1000 paths, " + std::to_string(checked) + " cells, max |ratio - 1| = " +
              fmt("%.3f", worst) + " (< 0.15); ratios" + ratios.str()};
}

// 6. Staffing consistency.
Outcome staffing_consistency() {
  const FleetParams p = validate(reference_fleet());
  staffing::ServiceConstraint c;
  const auto r = staffing::find_gamma(c, p);
  const std::int64_t n_star = std::llround(r.gamma_star * 100.0);
  FleetParams sim_p = reference_fleet();
  sim_p.gamma.reset();
  sim_p.n_swappers = n_star;
  sim_p = validate(sim_p);
  const auto samples =
      sim::terminal_samples(Model::kInstantUsage, sim_p, uniform_state(5), 60.0, 500, 20240403);
  int above = 0;
  for (const auto& s : samples) above += s.y(0) > 0.1;
  const double freq = above / 500.0;
  return {freq >= 0.05 && freq <= 0.15,
          "gamma* = " + fmt("%.4f", r.gamma_star) + ", N* = " + std::to_string(n_star) +
              ", P(Y0 > 0.1) over 500 samples = " + fmt("%.3f", freq) + " (in [0.05, 0.15])"};
}

// 7. Reference table.
Outcome reference_table() {
  constexpr double kCellTol = 0.02;
  struct Candidate {
    const char* name;
    Vector g;
  };
  const std::vector<Candidate> candidates{{"g = 1", constant_g(5)}, {"g = K - i", linear_g(5)}};
  bool any_match = false;
  bool monotone_all = true;
  std::ostringstream detail;
  for (const auto& cand : candidates) {
    FleetParams p = reference_fleet();
    p.g_weights = cand.g;
    p = validate(p);
    const auto table = staffing::gamma_table(kTableX, kTableEps, p, 100);
    double max_dev = 0.0;
    int failed = 0;
    for (std::size_t i = 0; i < kTableX.size(); ++i)
      for (std::size_t j = 0; j < kTableEps.size(); ++j) {
        const auto& cell = table.at(i, j);
        if (!cell.result) {
          ++failed;
          continue;
        }
        max_dev = std::max(max_dev, std::abs(cell.result->gamma_star - kReferenceTable[i][j]));
      }
    bool monotone = failed == 0;
    for (std::size_t i = 0; monotone && i < kTableX.size(); ++i)
      for (std::size_t j = 0; monotone && j < kTableEps.size(); ++j) {
        const double g = table.at(i, j).result->gamma_star;
        if (i + 1 < kTableX.size() && table.at(i + 1, j).result->gamma_star > g) monotone = false;
        if (j + 1 < kTableEps.size() && table.at(i, j + 1).result->gamma_star > g) monotone = false;
      }
    const double anchor = table.at(1, 2).result ? table.at(1, 2).result->gamma_star : NAN;
    const bool match = failed == 0 && max_dev <= kCellTol && std::abs(anchor - 0.527) <= kCellTol;
    any_match = any_match || match;
    monotone_all = monotone_all && monotone;
    detail << cand.name << ": max |dgamma| " << fmt("%.3f", max_dev) << ", anchor "
           << fmt("%.3f", anchor) << ", monotone " << (monotone ? "yes" : "NO") << "; ";
  }
  if (any_match) return {true, detail.str() + "table reproduced"};
  return {monotone_all, detail.str() + "no candidate g reproduces the table; " +
                            (monotone_all ? "fallback monotonicity holds" :
                                            "fallback monotonicity FAILS")};
}

// 8. Bisection contract at the anchor cell.
Outcome bracket_contract() {
  const FleetParams p = validate(reference_fleet());
  const auto r = staffing::find_gamma({}, p);
  const double width = r.gamma_hi - r.gamma_lo;
  const bool pass = r.f_lo >= 0.0 && r.f_hi <= 0.0 && width < 1e-3 && std::abs(r.f_star) < 5e-3;
  return {pass, "[" + fmt("%.6f", r.gamma_lo) + ", " + fmt("%.6f", r.gamma_hi) + "], f = (" +
                    fmt("%.2e", r.f_lo) + ", " + fmt("%.2e", r.f_hi) + "), width " +
                    fmt("%.1e", width) + ", |f(mid)| " + fmt("%.1e", std::abs(r.f_star))};
}

// 9. Estimation fixtures.
Outcome estimation_fixtures() {
  using namespace estimation;
  const std::string dir = SWAPFLEET_FIXTURE_DIR;
  std::ifstream s_in(dir + "/sightings_5bikes.csv");
  const auto rec = reconstruct_trips(read_sightings_csv(s_in));

  std::ifstream e_in(dir + "/sightings_5bikes_expected.csv");
  std::string line;
  std::getline(e_in, line);
  int expected_trips = 0, mismatches = 0;
  while (std::getline(e_in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id, start, end, outcome;
    std::getline(ls, id, ',');
    std::getline(ls, start, ',');
    std::getline(ls, end, ',');
    std::getline(ls, outcome);
    const std::int64_t st = std::stoll(start);
    std::string got = "missing";
    for (const auto& t : rec.trips)
      if (t.bike_id == id && t.start_epoch == st) got = "trip";
    for (const auto& r : rec.rejections)
      if (r.bike_id == id && r.start_epoch == st) got = std::string(rule_name(r.rule));
    mismatches += got != outcome;
    expected_trips += outcome == "trip";
  }
  const bool recon_ok = mismatches == 0 && rec.gaps == 12 &&
                        rec.trips.size() == static_cast<std::size_t>(expected_trips) &&
                        expected_trips == 7;

  std::ifstream t_in(dir + "/trips_p10.csv");
  const auto est = estimate_p_matrix(read_trips_csv(t_in), 5);
  const std::vector<std::int64_t> rows{0, 2, 2, 2, 4};
  const std::vector<std::vector<std::int64_t>> tally{
      {0, 0, 0, 0, 0}, {1, 1, 0, 0, 0}, {0, 1, 1, 0, 0}, {0, 0, 1, 1, 0}, {0, 0, 0, 2, 2}};
  const bool p_ok = est.row_counts == rows && est.transition_counts == tally;

  std::vector<double> xs, ys;
  for (int i = 0; i < 10; ++i) {
    xs.push_back(i);
    ys.push_back(i);
  }
  ys[9] = 40.0;
  const auto l1 = fit_line(xs, ys, Norm::kL1, true);
  const auto l2 = fit_line(xs, ys, Norm::kL2, true);
  const double o1 = l1_objective(xs, ys, l1.intercept, l1.slope);
  const double o2 = l1_objective(xs, ys, l2.intercept, l2.slope);
  const bool fit_ok = o1 < o2;

  return {recon_ok && p_ok && fit_ok,
          "reconstruction " + std::to_string(rec.trips.size()) + "/" +
              std::to_string(rec.gaps) + " gaps kept, " + std::to_string(mismatches) +
              " mismatches; P tally " + (p_ok ? "exact" : "WRONG") + "; L1 objective " +
              fmt("%.3f", o1) + " (L1 fit) vs " + fmt("%.3f", o2) + " (L2 fit)"};
}

// 10. Trivial fixed points.
Outcome trivial_fixed_points() {
  constexpr double kTol = 1e-8;
  FleetParams full = reference_fleet();
  full.mu = 0.0;
  full = validate(full);
  FleetParams drain = reference_fleet();
  drain.lambda = 0.0;
  drain.k_threshold = 0;
  drain = validate(drain);

  const double e_full =
      (meanfield::equilibrium_model1(full, 1e-10).y_bar - Vector::Unit(5, 4)).cwiseAbs().maxCoeff();
  const double e_drain =
      (meanfield::equilibrium_model1(drain, 1e-10).y_bar - Vector::Unit(5, 0)).cwiseAbs().maxCoeff();

  int full_absorbed = 0, drain_absorbed = 0;
  for (const auto& s :
       sim::terminal_samples(Model::kInstantUsage, full, uniform_state(5), 200.0, 50, 1001))
    full_absorbed += s.y(4) == 1.0;
  for (const auto& s :
       sim::terminal_samples(Model::kInstantUsage, drain, uniform_state(5), 400.0, 50, 1002))
    drain_absorbed += s.y(0) == 1.0;

  return {e_full < kTol && e_drain < kTol && full_absorbed == 50 && drain_absorbed == 50,
          "mu = 0: |ybar - e_{K-1}| " + fmt("%.1e", e_full) + ", " +
              std::to_string(full_absorbed) + "/50 paths absorbed; lambda = 0, K_U = 0: " +
              "|ybar - e_0| " + fmt("%.1e", e_drain) + ", " + std::to_string(drain_absorbed) +
              "/50 absorbed"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "conservation", 5.0, conservation},
      {2, "jacobian-vs-finite-differences", 1.0, jacobian},
      {3, "bracket-conservation", 5.0, brackets},
      {4, "law-of-large-numbers", 60.0, flln},
      {5, "central-limit-variance", 600.0, fclt_check},
      {6, "staffing-consistency", 300.0, staffing_consistency},
      {7, "optimal-gamma-table", 600.0, reference_table},
      {8, "bisection-contract", 60.0, bracket_contract},
      {9, "estimation-fixtures", 1.0, estimation_fixtures},
      {10, "trivial-fixed-points", 30.0, trivial_fixed_points},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.time_limit_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("[%s] %2d %-32s %s [%.2f s, limit %.0f s%s]\n", pass ? "PASS" : "FAIL", c.id,
                c.name, o.detail.c_str(), secs, c.time_limit_s, in_time ? "" : ", TOO SLOW");
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures;
}
