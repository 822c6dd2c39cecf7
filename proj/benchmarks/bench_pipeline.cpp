#include <benchmark/benchmark.h>

#include "omnisal/fixture.hpp"
#include "omnisal/metrics.hpp"
#include "omnisal/pipeline.hpp"

using namespace omnisal;

namespace {

void BM_forward(benchmark::State& state) {
    const int heq = static_cast<int>(state.range(0));
    const Tensor ep = smooth_ep_fixture(heq, 1);
    const PipelineParams params = PipelineParams::seeded(PipelineConfig{});
    for (auto _ : state) {
        ForwardOutput out = forward(ep, params);
        benchmark::DoNotOptimize(out.final_map.values().data());
    }
}

void BM_weighted_f(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Rng rng(4);
    Tensor sal(1, n, 2 * n), gt(1, n, 2 * n);
    for (float& v : sal.values())
        v = rng.uniform(0.0f, 1.0f);
    for (int y = n / 4; y < n / 2; ++y)
        for (int x = n / 3; x < n; ++x)
            gt.at(0, y, x) = 1.0f;
    for (auto _ : state) {
        double q = weighted_f(sal, gt);
        benchmark::DoNotOptimize(q);
    }
}

} // namespace

BENCHMARK(BM_forward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_weighted_f)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);
