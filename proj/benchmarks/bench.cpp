#include <accelhr/features.hpp>
#include <accelhr/ppaw.hpp>
#include <accelhr/regress.hpp>
#include <accelhr/rng.hpp>

#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

using namespace accelhr;

namespace {

std::vector<double> noisy_sine(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = std::sin(0.3 * static_cast<double>(i)) + 0.05 * rng.normal();
    return v;
}

LabeledSet random_rows(Rng& rng, std::size_t n) {
    LabeledSet rows(n);
    for (auto& r : rows) {
        for (std::size_t f = 0; f < kFeatureCount; ++f) r.features[f] = rng.uniform(-1, 1);
        r.bpm = 70 + 40 * r.features[0] + rng.normal();
    }
    return rows;
}

}  // namespace

static void BM_WindowFeatures(benchmark::State& state) {
    Rng rng(1);
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto x = noisy_sine(rng, n), y = noisy_sine(rng, n), z = noisy_sine(rng, n);
    for (auto _ : state) benchmark::DoNotOptimize(window_features(x, y, z));
}
BENCHMARK(BM_WindowFeatures)->Arg(50)->Arg(100)->Arg(128);

static void BM_MinuteAggregate(benchmark::State& state) {
    Rng rng(2);
    std::vector<FeatureVector> secs;
    for (int s = 0; s < 60; ++s) {
        const auto x = noisy_sine(rng, 50), y = noisy_sine(rng, 50), z = noisy_sine(rng, 50);
        secs.push_back(window_features(x, y, z));
    }
    for (auto _ : state) benchmark::DoNotOptimize(minute_aggregate(secs));
}
BENCHMARK(BM_MinuteAggregate);

static void BM_FitTree(benchmark::State& state) {
    Rng rng(3);
    const auto rows = random_rows(rng, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(fit_tree(rows, TreeParams{}, 42));
}
BENCHMARK(BM_FitTree)->Arg(5)->Arg(100)->Arg(1000);

static void BM_PpawStep(benchmark::State& state) {
    Rng rng(4);
    const PpawConfig cfg;
    const auto rows = random_rows(rng, cfg.N);
    auto s = ppaw_init(cfg, rows);
    std::int64_t minute = 0;
    for (auto _ : state) {
        MinuteRecord rec;
        rec.minute_index = minute++;
        for (std::size_t f = 0; f < kFeatureCount; ++f) rec.features[f] = rng.uniform(-1, 1);
        const double truth = 70 + 40 * rec.features[0];
        benchmark::DoNotOptimize(ppaw_step(s, rec, [&](std::int64_t) { return truth; }));
    }
}
BENCHMARK(BM_PpawStep);
BENCHMARK_MAIN();
