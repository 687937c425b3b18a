#include <benchmark/benchmark.h>

#include <random>

#include "csrda/losses.hpp"

using namespace csrda;

namespace {

Plane<float> probs(int side, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> u(0.01f, 0.99f);
    Plane<float> p(side, side);
    for (auto& v : p.data) v = u(rng);
    return p;
}

void BM_EsLoss(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto s = probs(side, 1), t = probs(side, 2);
    const auto cfg = ESConfig::s2c();
    for (auto _ : state) benchmark::DoNotOptimize(es_loss(s, t, cfg));
}
BENCHMARK(BM_EsLoss)->Arg(64)->Arg(352);

void BM_Bce(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const auto s = probs(side, 1), t = probs(side, 2);
    for (auto _ : state) benchmark::DoNotOptimize(bce_loss(s, t));
}
BENCHMARK(BM_Bce)->Arg(64)->Arg(352);

}  // namespace
