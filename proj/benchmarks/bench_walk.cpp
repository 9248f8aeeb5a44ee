#include <benchmark/benchmark.h>

#include "cavitywalk/cavity.hpp"
#include "cavitywalk/run_config.hpp"

using namespace cavitywalk;

static void BM_Evolve(benchmark::State& state) {
    const auto coin = coin_from_bias(0.5);
    const auto start = WalkState::localized(1, 0);
    const int steps = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto dists = evolve(start, coin, steps);
        benchmark::DoNotOptimize(dists);
    }
    state.SetComplexityN(steps);
}
BENCHMARK(BM_Evolve)->RangeMultiplier(2)->Range(16, 256)->Complexity();

static void BM_EvolveTwoDimensional(benchmark::State& state) {
    const auto coin = multiport_coin_fourier(2);
    const auto start = WalkState::localized(2, 0);
    const int steps = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto dists = evolve(start, coin, steps);
        benchmark::DoNotOptimize(dists);
    }
}
BENCHMARK(BM_EvolveTwoDimensional)->Arg(16)->Arg(32);

static void BM_BruteForceOracle(benchmark::State& state) {
    const auto coin = coin_from_bias(0.5);
    const auto start = WalkState::localized(1, 0);
    const int steps = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto dist = brute_force_oracle(start, coin, steps);
        benchmark::DoNotOptimize(dist);
    }
}
BENCHMARK(BM_BruteForceOracle)->DenseRange(6, 12, 2);

static void BM_TappedPulseTable(benchmark::State& state) {
    const RunConfig cfg;
    const auto net = cfg.network();
    for (auto _ : state) {
        auto table = tapped_pulse_table(net, 62, cfg.input_energy_photons);
        benchmark::DoNotOptimize(table);
    }
}
BENCHMARK(BM_TappedPulseTable);
