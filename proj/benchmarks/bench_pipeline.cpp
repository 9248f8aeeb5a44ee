#include <benchmark/benchmark.h>

#include "cavitywalk/analysis.hpp"
#include "cavitywalk/run_config.hpp"

using namespace cavitywalk;

namespace {

const PulseTable& reference_table() {
    static const PulseTable table = [] {
        const RunConfig cfg;
        return tapped_pulse_table(cfg.network(), cfg.steps, cfg.input_energy_photons);
    }();
    return table;
}

}  // namespace

static void BM_SimulateTrials(benchmark::State& state) {
    const RunConfig cfg;
    const auto det = cfg.detector();
    const std::uint64_t trials = 1'000'000;
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto stream = simulate_trials(reference_table(), det, trials, 1, threads);
        benchmark::DoNotOptimize(stream);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * trials);
}
BENCHMARK(BM_SimulateTrials)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

static void BM_BuildHistogram(benchmark::State& state) {
    const RunConfig cfg;
    const auto stream = simulate_trials(reference_table(), cfg.detector(), 1'000'000, 1);
    for (auto _ : state) {
        auto hist = build_histogram(stream, cfg.tdc_bin_ps);
        benchmark::DoNotOptimize(hist);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(stream.records.size()));
}
BENCHMARK(BM_BuildHistogram)->Unit(benchmark::kMillisecond);

static void BM_AnalyzeEvents(benchmark::State& state) {
    const RunConfig cfg;
    const auto net = cfg.network();
    const auto det = cfg.detector();
    const std::uint64_t trials = 1'000'000;
    const auto stream = simulate_trials(reference_table(), det, trials, 1);
    for (auto _ : state) {
        auto result = analyze_events(stream, net, det, trials);
        benchmark::DoNotOptimize(result);
    }
}
BENCHMARK(BM_AnalyzeEvents)->Unit(benchmark::kMillisecond);
