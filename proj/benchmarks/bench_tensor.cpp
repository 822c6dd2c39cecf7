#include <benchmark/benchmark.h>

#include "omnisal/tensor.hpp"
#include "omnisal/threading.hpp"

using namespace omnisal;

namespace {

void BM_conv3x3(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    Rng rng(1);
    const Tensor x = seeded_tensor(c, 64, 64, rng);
    const ConvParams p = ConvParams::seeded(c, c, rng);
    for (auto _ : state) {
        Tensor y = conv3x3(x, p);
        benchmark::DoNotOptimize(y.values().data());
    }
    state.SetItemsProcessed(state.iterations() * x.size() * c * 9);
}

void BM_se_block(benchmark::State& state) {
    Rng rng(2);
    const Tensor x = seeded_tensor(64, 32, 32, rng);
    const SEParams p = SEParams::seeded(64, rng);
    for (auto _ : state) {
        Tensor y = se_block(x, p);
        benchmark::DoNotOptimize(y.values().data());
    }
}

void BM_bilinear_upsample(benchmark::State& state) {
    Rng rng(3);
    const Tensor x = seeded_tensor(16, 32, 64, rng);
    for (auto _ : state) {
        Tensor y = bilinear_upsample(x, 2);
        benchmark::DoNotOptimize(y.values().data());
    }
}

} // namespace

BENCHMARK(BM_conv3x3)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_se_block)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_bilinear_upsample)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
