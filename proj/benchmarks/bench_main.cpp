#include <swapfleet/fclt.hpp>
#include <swapfleet/meanfield.hpp>
#include <swapfleet/simulator.hpp>
#include <swapfleet/staffing.hpp>

#include <benchmark/benchmark.h>

using namespace swapfleet;

namespace {

FleetParams fleet(std::int64_t n) {
  FleetParams p = reference_fleet();
  p.n_scooters = n;
  p.n_swappers = n / 2;
  p.gamma.reset();
  return validate(p);
}

void BM_JumpChainStep(benchmark::State& state) {
  const FleetParams p = fleet(state.range(0));
  const Model m = state.range(1) == 1 ? Model::kInstantUsage : Model::kTimedUsage;
  const EmpiricalState init = uniform_state(5, m == Model::kTimedUsage ? 0.2 : std::optional<double>{});
  sim::JumpChain chain(p, m, to_counts(init, p.scooters()), 7);
  for (auto _ : state) benchmark::DoNotOptimize(chain.step());
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_JumpChainStep)->Args({100, 1})->Args({1000, 1})->Args({1000, 2});

void BM_Drift(benchmark::State& state) {
  FleetParams p = reference_fleet();
  const int k = static_cast<int>(state.range(0));
  p.k_buckets = k;
  p.p_matrix = preset_uniform_p(k);
  p.g_weights = linear_g(k);
  p = validate(p);
  const Vector y = uniform_state(k).y;
  for (auto _ : state) benchmark::DoNotOptimize(meanfield::drift_model1(y, p));
}
BENCHMARK(BM_Drift)->Arg(5)->Arg(20)->Arg(100);

void BM_Linearize(benchmark::State& state) {
  const FleetParams p = validate(reference_fleet());
  const Vector y = uniform_state(5).y;
  for (auto _ : state) benchmark::DoNotOptimize(fclt::linearize_model1(y, p));
}
BENCHMARK(BM_Linearize);

void BM_EquilibriumCovariance(benchmark::State& state) {
  const FleetParams p = validate(reference_fleet());
  for (auto _ : state) benchmark::DoNotOptimize(fclt::equilibrium_covariance(p));
}
BENCHMARK(BM_EquilibriumCovariance)->Unit(benchmark::kMillisecond);

void BM_FindGamma(benchmark::State& state) {
  const FleetParams p = validate(reference_fleet());
  for (auto _ : state) benchmark::DoNotOptimize(staffing::find_gamma({}, p));
}
BENCHMARK(BM_FindGamma)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
