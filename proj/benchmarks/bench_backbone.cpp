#include <benchmark/benchmark.h>

#include <random>

#include "csrda/backbone.hpp"

using namespace csrda;

namespace {

Tensor3<float> image(int side) {
    std::mt19937 rng(1);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    Tensor3<float> t(3, side, side);
    for (auto& v : t.data) v = u(rng);
    return t;
}

UNetConfig toy_net() { return {{8, 16, 32, 64, 64}, 4, 1e-5}; }

void BM_UNetForward(benchmark::State& state) {
    const auto net = make_unet<float>(toy_net());
    const auto p = net->init(1);
    const auto img = image(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(net->forward(p, img));
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_UNetForward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_UNetForwardBackward(benchmark::State& state) {
    const auto net = make_unet<float>(toy_net());
    const auto p = net->init(1);
    const int side = static_cast<int>(state.range(0));
    const auto img = image(side);
    const Plane<float> up(side, side, 1.0f / (side * side));
    for (auto _ : state) {
        std::unique_ptr<ForwardTape> tape;
        net->forward(p, img, &tape);
        auto g = p.zeros_like();
        net->backward(p, *tape, up, g);
        benchmark::DoNotOptimize(g.values.data());
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_UNetForwardBackward)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
