#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>

#include "csrda/metrics.hpp"

using namespace csrda;

namespace {

struct Pair {
    Plane<double> pred, gt;
};

Pair instance(int side) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 0.2);
    Pair p{Plane<double>(side, side), Plane<double>(side, side)};
    const double c = side / 2.0, r = side / 4.0;
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const double g = (x - c) * (x - c) + (y - c) * (y - c) <= r * r ? 1.0 : 0.0;
            p.gt(y, x) = g;
            p.pred(y, x) = std::clamp(0.2 + 0.6 * g + n(rng), 0.0, 1.0);
        }
    }
    return p;
}

void BM_EvaluateImage(benchmark::State& state) {
    const auto p = instance(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(metrics::evaluate_image(p.pred, p.gt));
}
BENCHMARK(BM_EvaluateImage)->Arg(64)->Arg(352)->Unit(benchmark::kMicrosecond);

void BM_SMeasure(benchmark::State& state) {
    const auto p = instance(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(metrics::s_measure(p.pred, p.gt));
}
BENCHMARK(BM_SMeasure)->Arg(352)->Unit(benchmark::kMicrosecond);

void BM_WeightedF(benchmark::State& state) {
    const auto p = instance(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(metrics::weighted_f_measure(p.pred, p.gt));
}
BENCHMARK(BM_WeightedF)->Arg(352)->Unit(benchmark::kMicrosecond);

void BM_ThresholdSweep(benchmark::State& state) {
    const auto p = instance(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(metrics::f_measure(p.pred, p.gt));
        benchmark::DoNotOptimize(metrics::e_measure(p.pred, p.gt));
    }
}
BENCHMARK(BM_ThresholdSweep)->Arg(352)->Unit(benchmark::kMicrosecond);

}  // namespace
