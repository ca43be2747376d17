#include "spt/bounds.hpp"
#include "spt/market.hpp"
#include "spt/weights.hpp"

#include <benchmark/benchmark.h>

using namespace spt;

namespace {

const SimGrid kGrid{1.0, 500, Scheme::EulerLog};

void BM_SimulatePaths(benchmark::State& state) {
    auto spec = vsm_spec(10, 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(simulate_paths(spec, kGrid, static_cast<int>(state.range(0)), 1));
}

void BM_SimulatePathsSerial(benchmark::State& state) {
    auto spec = vsm_spec(10, 0.0);
    for (auto _ : state)
        benchmark::DoNotOptimize(simulate_paths_serial(spec, kGrid, static_cast<int>(state.range(0)), 1));
}

EnsembleConfig ensemble(int n_paths) {
    EnsembleConfig cfg;
    cfg.spec = vsm_spec(4, 0.0);
    cfg.bound = horizon_bound("vsm_dwp_half", {{"n", 4}});
    cfg.grid = SimGrid{*cfg.bound.value, 1000, Scheme::EulerLog};
    cfg.n_paths = n_paths;
    cfg.seed = 2;
    cfg.generator = dwp_generator(0.5);
    cfg.floor = floor_function(cfg.bound);
    return cfg;
}

void BM_VerifyEnsemble(benchmark::State& state) {
    auto cfg = ensemble(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(verify_ensemble(cfg));
}

void BM_VerifyEnsembleSerial(benchmark::State& state) {
    auto cfg = ensemble(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(verify_ensemble_serial(cfg));
}

}  // namespace

BENCHMARK(BM_SimulatePaths)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulatePathsSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VerifyEnsemble)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VerifyEnsembleSerial)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

int main(int argc, char** argv) {
    apply_thread_limit_from_env();
    benchmark::Initialize(&argc, argv);
    benchmark::RunSpecifiedBenchmarks();
    benchmark::Shutdown();
    return 0;
}
