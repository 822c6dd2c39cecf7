#include <benchmark/benchmark.h>

#include "omnisal/fixture.hpp"
#include "omnisal/projection.hpp"

using namespace omnisal;

namespace {

void BM_build_ep_to_cube_grid(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    for (auto _ : state) {
        auto grids = build_ep_to_cube_grid(2 * side, side);
        benchmark::DoNotOptimize(grids[0].samples.data());
    }
}

void BM_apply_grid(benchmark::State& state) {
    const int side = static_cast<int>(state.range(0));
    const Tensor ep = smooth_ep_fixture(2 * side, 3);
    const auto grids = build_ep_to_cube_grid(2 * side, side);
    for (auto _ : state)
        for (const auto& g : grids) {
            Tensor f = apply_grid(g, ep);
            benchmark::DoNotOptimize(f.values().data());
        }
    state.SetItemsProcessed(state.iterations() * 6 * side * side * 3);
}

void BM_round_trip(benchmark::State& state) {
    const Tensor ep = smooth_ep_fixture(256, 1);
    for (auto _ : state) {
        Tensor back = cube_to_ep(ep_to_cube(ep, 128), 256);
        benchmark::DoNotOptimize(back.values().data());
    }
}

void BM_cep_merge(benchmark::State& state) {
    const Tensor ep = smooth_ep_fixture(128, 8);
    const CubeFaceSet faces = ep_to_cube(ep, 64);
    const CUPair pair = unfold(faces, Face::F);
    for (auto _ : state) {
        Tensor merged = cep_merge(pair.horizontal, pair.vertical, pair.layout, 128);
        benchmark::DoNotOptimize(merged.values().data());
    }
}

} // namespace

BENCHMARK(BM_build_ep_to_cube_grid)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_apply_grid)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_round_trip)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_cep_merge)->Unit(benchmark::kMillisecond);
