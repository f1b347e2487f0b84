#include <benchmark/benchmark.h>

#include "dob/scenarios.hpp"
#include "dob/servo_model.hpp"
#include "dob/simulation.hpp"
#include "dob/stability.hpp"

using namespace dob;

namespace {

const ContinuousServoModel kModel = ContinuousServoModel::make(5e-3, 1e-2);

void BM_Discretize(benchmark::State& state) {
  double Ts = 1e-3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(discretize(kModel, Ts));
    Ts = Ts == 1e-3 ? 1.1e-3 : 1e-3;
  }
}
BENCHMARK(BM_Discretize);

void BM_DisturbanceIncrement(benchmark::State& state) {
  const auto profile = multisine_test_profile();
  const int substeps = static_cast<int>(state.range(0));
  long k = 3000;
  for (auto _ : state) {
    benchmark::DoNotOptimize(exact_disturbance_increment(kModel, profile, k, 1e-3, substeps));
    k = k == 7999 ? 3000 : k + 1;
  }
}
BENCHMARK(BM_DisturbanceIncrement)->Arg(8)->Arg(64);

void BM_TuneFirstOrder(benchmark::State& state) {
  const auto d = discretize(kModel, 1e-3);
  for (auto _ : state) benchmark::DoNotOptimize(tune_fo(d, EigenSpec{{0.725, 0.7}}));
}
BENCHMARK(BM_TuneFirstOrder);

void BM_Certify(benchmark::State& state) {
  const auto d = discretize(kModel, 1e-3);
  const auto dyn = build(d, tune(d, HighPerformance{}, EigenSpec{{0.5, 0.25}}));
  for (auto _ : state) benchmark::DoNotOptimize(certify(dyn.Gamma, 1e-3));
}
BENCHMARK(BM_Certify);

void BM_ObserverUpdate(benchmark::State& state) {
  const auto d = discretize(kModel, 1e-3);
  const auto dyn = build(d, tune(d, FirstOrder{}, EigenSpec{{0.725, 0.7}}));
  const PlantState x{0.1, -0.2};
  ObserverState z = initial_state(dyn, x);
  for (auto _ : state) {
    z = observer_update(dyn, z, x, 0.3);
    benchmark::DoNotOptimize(z.z_hat.data());
  }
}
BENCHMARK(BM_ObserverUpdate);

// Ten seconds of closed-loop tracking (10001 steps).
void BM_ClosedLoopTracking(benchmark::State& state) {
  const auto member = find_member("fig7-tracking/fo");
  for (auto _ : state) benchmark::DoNotOptimize(run_closed_loop(member->config));
  state.SetItemsProcessed(state.iterations() * (scenario_steps(member->config) + 1));
}
BENCHMARK(BM_ClosedLoopTracking)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
