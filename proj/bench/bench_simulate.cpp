#include <benchmark/benchmark.h>

#include "langevin/contractivity.hpp"
#include "langevin/integrators.hpp"
#include "langevin/parallel.hpp"
#include "langevin/targets.hpp"

using namespace langevin;

namespace {

Target bench_target() {
  const LogisticData data = synthetic_logistic_data(200, 10, 1);
  return make_ridge_logistic_target(data.features, data.labels, 1.0);
}

void run_ensemble(benchmark::State& state, bool parallel) {
  const Target t = bench_target();
  const SchemeStep st = make_scheme(Scheme::UBU, 2.0, 1.0 / t.L(), 0.5);
  const InitialSampler init = gaussian_initial(t.dim(), true, 1.0 / t.L(), 1.0);
  const int chains = static_cast<int>(state.range(0));
  SimulationOptions options;
  options.parallel = parallel;
  for (auto _ : state) {
    Ensemble e = simulate(st, t, init, 50, chains, 7, options);
    benchmark::DoNotOptimize(e.chains.data());
  }
  state.SetItemsProcessed(state.iterations() * chains * 50);
  state.counters["threads"] = parallel ? max_threads() : 1;
}

void BM_SimulateSerial(benchmark::State& state) { run_ensemble(state, false); }
void BM_SimulateParallel(benchmark::State& state) { run_ensemble(state, true); }

void BM_RateTable(benchmark::State& state) {
  const bool parallel = state.range(0) != 0;
  const std::vector<CChoice> cs = {CChoice::parse("1/L"), CChoice::parse("2/(L+m)"), CChoice::parse("3/(L+m)")};
  for (auto _ : state) {
    auto t = table1({1e9}, cs, {2, 1, 0.5, 0.25}, 1.0, 2.0, {Scheme::EE, Scheme::UBU}, parallel);
    benchmark::DoNotOptimize(t.data());
  }
}

}  // namespace

BENCHMARK(BM_SimulateSerial)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulateParallel)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RateTable)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
  apply_thread_limit_from_env();
  benchmark::Initialize(&argc, argv);
  if (benchmark::ReportUnrecognizedArguments(argc, argv)) return 1;
  benchmark::RunSpecifiedBenchmarks();
  benchmark::Shutdown();
  return 0;
}
