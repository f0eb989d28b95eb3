#include <swapfleet/error.hpp>
#include <swapfleet/simulator.hpp>

#include "parallel.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace swapfleet::sim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw ConfigError("time grid must not be empty");
  if (grid.front() != 0.0) throw ConfigError("time grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw ConfigError("time grid must be strictly increasing");
}

}  // namespace

double RateTable::total() const { return swap.sum() + pickup + ride.sum(); }

void compute_rates(const CountState& state, const FleetParams& params, Model model,
                   RateTable& out) {
  const int kb = params.k_buckets;
  const int ku = params.k_threshold;
  const double n = static_cast<double>(params.scooters());
  const double n_star = static_cast<double>(params.swappers());
  if (out.swap.size() != kb) out.swap.resize(kb);
  if (out.ride.rows() != kb || out.ride.cols() != kb) out.ride.resize(kb, kb);
  out.ride.setZero();
  out.pickup = 0.0;

  double weighted = 0.0;
  for (int i = 0; i < kb; ++i)
    weighted += static_cast<double>(state.counts[static_cast<std::size_t>(i)]) * params.g_weights(i);

  // Fraction of the fleet that is idle; 1 for the instant model.
  const double idle =
      model == Model::kTimedUsage ? (n - static_cast<double>(state.in_use)) / n : 1.0;
  const double swap_scale = weighted > 0.0 ? params.lambda * n_star * idle / weighted : 0.0;
  for (int k = 0; k < kb; ++k)
    out.swap(k) = swap_scale * static_cast<double>(state.counts[static_cast<std::size_t>(k)]) *
                  params.g_weights(k);

  // Instant model: mu * N * y_k = mu * c_k. Timed model: drop-offs at
  // mu_U * N * x * y_k = mu_U * R * c_k / N.
  const double ride_scale = model == Model::kInstantUsage
                                ? params.mu
                                : params.mu_usage * static_cast<double>(state.in_use) / n;
  double ridable = 0.0;
  for (int k = ku; k < kb; ++k) {
    const double ck = static_cast<double>(state.counts[static_cast<std::size_t>(k)]);
    ridable += ck;
    for (int j = 0; j <= k; ++j) out.ride(k, j) = ride_scale * params.p_matrix(k, j) * ck;
  }
  if (model == Model::kTimedUsage) out.pickup = params.mu * idle * ridable;
}

RateTable event_rates_model1(const EmpiricalState& y, const FleetParams& params) {
  RateTable t;
  compute_rates(to_counts({y.y, std::nullopt}, params.scooters()), params,
                Model::kInstantUsage, t);
  return t;
}

RateTable event_rates_model2(const EmpiricalState& state, const FleetParams& params) {
  if (!state.x) throw ConfigError("timed-usage model requires x");
  RateTable t;
  compute_rates(to_counts(state, params.scooters()), params, Model::kTimedUsage, t);
  return t;
}

void apply(const Event& event, int k_buckets, Model model, CountState& state) {
  auto& c = state.counts;
  switch (event.kind) {
    case Event::Kind::kSwap:
      --c[static_cast<std::size_t>(event.from)];
      ++c[static_cast<std::size_t>(k_buckets - 1)];
      break;
    case Event::Kind::kPickup:
      ++state.in_use;
      break;
    case Event::Kind::kRide:
      --c[static_cast<std::size_t>(event.from)];
      ++c[static_cast<std::size_t>(event.to)];
      if (model == Model::kTimedUsage) --state.in_use;
      break;
  }
}

JumpChain::JumpChain(FleetParams params, Model model, CountState initial, std::uint64_t seed)
    : params_(std::move(params)), model_(model), state_(std::move(initial)), rng_(seed) {
  if (static_cast<int>(state_.counts.size()) != params_.k_buckets)
    throw ConfigError("initial state has the wrong number of buckets");
  if (state_.total() != params_.scooters())
    throw ConfigError("initial counts do not sum to n_scooters");
  params_.swappers();
}

std::pair<double, std::optional<Event>> draw_transition(const CountState& state,
                                                        const FleetParams& params, Model model,
                                                        Rng& rng, RateTable& rates) {
  compute_rates(state, params, model, rates);
  const double total = rates.total();
  if (!(total > 0.0)) return {kInf, std::nullopt};
  const double holding = rng.exponential(total);
  double target = rng.uniform() * total;

  const int kb = params.k_buckets;
  Event last;
  bool have_last = false;
  for (int k = 0; k < kb; ++k) {
    const double r = rates.swap(k);
    if (r <= 0.0) continue;
    last = {Event::Kind::kSwap, k, kb - 1};
    have_last = true;
    if (target < r) return {holding, last};
    target -= r;
  }
  if (rates.pickup > 0.0) {
    last = {Event::Kind::kPickup, 0, 0};
    have_last = true;
    if (target < rates.pickup) return {holding, last};
    target -= rates.pickup;
  }
  for (int k = params.k_threshold; k < kb; ++k) {
    for (int j = 0; j <= k; ++j) {
      const double r = rates.ride(k, j);
      if (r <= 0.0) continue;
      last = {Event::Kind::kRide, k, j};
      have_last = true;
      if (target < r) return {holding, last};
      target -= r;
    }
  }
  // Round-off left target just past the final bin.
  if (!have_last) return {kInf, std::nullopt};
  return {holding, last};
}

std::pair<double, std::optional<Event>> JumpChain::draw() {
  auto out = draw_transition(state_, params_, model_, rng_, rates_);
  last_total_ = rates_.total();
  return out;
}

double JumpChain::step() {
  auto [holding, event] = draw();
  if (event) apply(*event, params_.k_buckets, model_, state_);
  return holding;
}

namespace {

std::pair<EmpiricalState, double> step_any(const EmpiricalState& s, const FleetParams& params,
                                           Rng& rng, Model model) {
  CountState counts = to_counts(s, params.scooters());
  RateTable rates;
  auto [holding, event] = draw_transition(counts, params, model, rng, rates);
  if (event) apply(*event, params.k_buckets, model, counts);
  return {counts.to_fractions(model == Model::kTimedUsage), holding};
}

}  // namespace

std::pair<EmpiricalState, double> step_model1(const EmpiricalState& y, const FleetParams& params,
                                              Rng& rng) {
  return step_any({y.y, std::nullopt}, params, rng, Model::kInstantUsage);
}

std::pair<EmpiricalState, double> step_model2(const EmpiricalState& state,
                                              const FleetParams& params, Rng& rng) {
  if (!state.x) throw ConfigError("timed-usage model requires x");
  return step_any(state, params, rng, Model::kTimedUsage);
}

Trajectory simulate_path(Model model, const FleetParams& params, const EmpiricalState& init,
                         const std::vector<double>& grid, std::uint64_t seed) {
  check_grid(grid);
  EmpiricalState start = init;
  if (model == Model::kTimedUsage && !start.x) start.x = 0.0;
  if (model == Model::kInstantUsage) start.x.reset();
  JumpChain chain(params, model, to_counts(start, params.scooters()), seed);
  const bool with_x = model == Model::kTimedUsage;

  Trajectory out;
  out.seed = seed;
  out.times = grid;
  out.states.reserve(grid.size());
  out.counts.reserve(grid.size());

  double jump_time = 0.0;
  auto pending = chain.draw();
  jump_time += pending.first;
  for (double t : grid) {
    while (pending.second && jump_time <= t) {
      apply(*pending.second, params.k_buckets, model, chain.mutable_state());
      pending = chain.draw();
      jump_time += pending.first;
    }
    out.counts.push_back(chain.state());
    out.states.push_back(chain.state().to_fractions(with_x));
  }
  return out;
}

EnsembleMoments ensemble_moments(Model model, const FleetParams& params,
                                 const EmpiricalState& init, const std::vector<double>& grid,
                                 std::size_t n_paths, std::uint64_t seed,
                                 const EnsembleOptions& options) {
  if (n_paths < 1) throw ConfigError("n_paths must be >= 1");
  check_grid(grid);
  const std::size_t n_times = grid.size();
  const Eigen::Index dim = params.k_buckets + (model == Model::kTimedUsage ? 1 : 0);

  // paths[p][t] in packed coordinates; merged below in path order so the
  // result is independent of scheduling.
  std::vector<std::vector<Vector>> paths(n_paths);
  detail::parallel_for(n_paths, options.threads, [&](std::size_t p) {
    Trajectory tr = simulate_path(model, params, init, grid, sub_seed(seed, p));
    auto& dst = paths[p];
    dst.reserve(n_times);
    for (const auto& s : tr.states) dst.push_back(pack(s, model));
  });

  EnsembleMoments m;
  m.times = grid;
  m.n_paths = n_paths;
  m.seed = seed;
  m.variance_defined = n_paths > 1;
  m.mean.assign(n_times, Vector::Zero(dim));
  m.variance.assign(n_times, Vector::Zero(dim));
  if (options.covariance) m.covariance.assign(n_times, Matrix::Zero(dim, dim));

  const double inv_n = 1.0 / static_cast<double>(n_paths);
  for (std::size_t t = 0; t < n_times; ++t) {
    Vector mean = Vector::Zero(dim);
    for (std::size_t p = 0; p < n_paths; ++p) mean += paths[p][t];
    mean *= inv_n;
    m.mean[t] = mean;
    if (n_paths < 2) continue;
    Matrix cov = Matrix::Zero(dim, dim);
    Vector var = Vector::Zero(dim);
    for (std::size_t p = 0; p < n_paths; ++p) {
      const Vector d = paths[p][t] - mean;
      var += d.cwiseProduct(d);
      if (options.covariance) cov.noalias() += d * d.transpose();
    }
    const double denom = static_cast<double>(n_paths - 1);
    m.variance[t] = var / denom;
    if (options.covariance) {
      cov /= denom;
      cov.diagonal() = m.variance[t];
      m.covariance[t] = cov;
    }
  }
  return m;
}

std::vector<EmpiricalState> terminal_samples(Model model, const FleetParams& params,
                                             const EmpiricalState& init, double horizon,
                                             std::size_t n_paths, std::uint64_t seed,
                                             unsigned threads) {
  if (!(horizon >= 0.0)) throw ConfigError("horizon must be nonnegative");
  std::vector<EmpiricalState> out(n_paths);
  const std::vector<double> grid = horizon > 0.0 ? std::vector<double>{0.0, horizon}
                                                 : std::vector<double>{0.0};
  detail::parallel_for(n_paths, threads, [&](std::size_t p) {
    out[p] = simulate_path(model, params, init, grid, sub_seed(seed, p)).states.back();
  });
  return out;
}

}  // namespace swapfleet::sim
