#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstring>
#include <set>

#include "omnisal/fixture.hpp"
#include "omnisal/pipeline.hpp"
#include "omnisal/projection.hpp"
#include "omnisal/threading.hpp"

using namespace omnisal;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.values()[i]) - b.values()[i]));
    return m;
}

bool bytes_equal(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) &&
           std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(float)) == 0;
}

// Mean absolute difference between two maps.
double mad(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc += std::abs(static_cast<double>(a.values()[i]) - b.values()[i]);
    return acc / static_cast<double>(a.size());
}

PipelineParams default_params(Ablation ab = Ablation::None) {
    PipelineConfig cfg;
    cfg.seed = 42;
    cfg.ablation = ab;
    return PipelineParams::seeded(cfg);
}

} // namespace

TEST_CASE("forward shape contract: 256x128 input") {
    const Tensor ep = textured_ep_fixture(128, 1);
    const ForwardOutput out = forward(ep, default_params());
    CHECK(out.final_map.channels() == 1);
    CHECK(out.final_map.height() == 128);
    CHECK(out.final_map.width() == 256);
    REQUIRE(out.side_outputs.size() == 3);
    // side outputs at 1/16, 1/8, 1/4 of the input (decoder levels 4, 3, 2)
    CHECK(out.side_outputs[0].height() == 8);
    CHECK(out.side_outputs[0].width() == 16);
    CHECK(out.side_outputs[1].height() == 16);
    CHECK(out.side_outputs[1].width() == 32);
    CHECK(out.side_outputs[2].height() == 32);
    CHECK(out.side_outputs[2].width() == 64);
}

TEST_CASE("every emitted map lies strictly inside (0,1)") {
    const Tensor ep = textured_ep_fixture(32, 1);
    const ForwardOutput out = forward(ep, default_params());
    for (float v : out.final_map.values()) {
        REQUIRE(v > 0.0f);
        REQUIRE(v < 1.0f);
    }
    for (const Tensor& side : out.side_outputs)
        for (float v : side.values()) {
            REQUIRE(v > 0.0f);
            REQUIRE(v < 1.0f);
        }
}

TEST_CASE("constant input: projection stages stay constant, forward stays deterministic") {
    // Note: zero-padded convolutions are not translation invariant at the
    // borders, so a constant input does not stay spatially constant through
    // the encoder; only the projection stages preserve constancy.
    const Tensor ep = Tensor::full(1, 32, 64, 0.5f);
    const CubeFaceSet faces = ep_to_cube(ep, 16);
    for (const Tensor& f : faces.faces)
        for (float v : f.values())
            REQUIRE(v == doctest::Approx(0.5f));
    const CUPair pair = unfold(faces, Face::F);
    const Tensor merged = cep_merge(pair.horizontal, pair.vertical, pair.layout, 8);
    for (float v : merged.values())
        REQUIRE(v == doctest::Approx(0.5f));

    const ForwardOutput a = forward(ep, default_params());
    const ForwardOutput b = forward(ep, default_params());
    CHECK(bytes_equal(a.final_map, b.final_map));
    for (float v : a.final_map.values()) {
        REQUIRE(v > 0.0f);
        REQUIRE(v < 1.0f);
    }
}

TEST_CASE("forward is byte-stable across runs and thread counts") {
    const Tensor ep = textured_ep_fixture(32, 1);
    const PipelineParams params = default_params();
    const int saved = thread_count();
    set_thread_count(1);
    const ForwardOutput a = forward(ep, params);
    const ForwardOutput b = forward(ep, params);
    set_thread_count(4);
    const ForwardOutput c = forward(ep, params);
    set_thread_count(saved);
    CHECK(bytes_equal(a.final_map, b.final_map));
    CHECK(bytes_equal(a.final_map, c.final_map));
    for (std::size_t i = 0; i < a.side_outputs.size(); ++i) {
        CHECK(bytes_equal(a.side_outputs[i], b.side_outputs[i]));
        CHECK(bytes_equal(a.side_outputs[i], c.side_outputs[i]));
    }
}

TEST_CASE("stage shapes follow the /2^s schedule on every branch") {
    const Tensor ep = textured_ep_fixture(32, 1);
    const ForwardOutput out = forward(ep, default_params());
    int checked = 0;
    for (const ShapeLogEntry& e : out.shapes) {
        const auto pos = e.name.rfind(".stage");
        if (pos == std::string::npos)
            continue;
        const int stage = e.name.back() - '0';
        const std::string branch = e.name.substr(0, pos);
        int h0, w0;
        if (branch == "ep") {
            h0 = 32;
            w0 = 64;
        } else if (branch.size() == 5 && branch.back() == 'h') {
            h0 = 16;
            w0 = 64;
        } else if (branch.size() == 5 && branch.back() == 'v') {
            h0 = 48;
            w0 = 16;
        } else {
            h0 = 32; // CEP-merged EP-form branch
            w0 = 64;
        }
        CHECK(e.height == h0 >> stage);
        CHECK(e.width == w0 >> stage);
        ++checked;
    }
    // 5 EP stages + 4 CU branches x (2 h-strip + 2 v-strip + 3 merged) stages
    CHECK(checked == 5 + 4 * 7);
}

TEST_CASE("full model records normalized fusion weights") {
    const Tensor ep = textured_ep_fixture(32, 1);
    const ForwardOutput out = forward(ep, default_params());
    REQUIRE(out.has_fusion_weights);
    double sum = 0.0;
    for (float w : out.fusion_weights.w) {
        CHECK(w > 0.0f);
        CHECK(w < 1.0f);
        sum += w;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("each ablation changes the emitted maps somewhere") {
    const Tensor ep = textured_ep_fixture(128, 1);
    const ForwardOutput base = forward(ep, default_params());
    for (Ablation ab : {Ablation::NoCu, Ablation::NoDwf, Ablation::NoFr, Ablation::NoWaf,
                        Ablation::SixFaces}) {
        const ForwardOutput out = forward(ep, default_params(ab));
        double diff = max_abs_diff(base.final_map, out.final_map);
        for (std::size_t i = 0; i < base.side_outputs.size(); ++i)
            diff = std::max(diff, max_abs_diff(base.side_outputs[i], out.side_outputs[i]));
        CHECK(diff > 1e-6);
    }
}

TEST_CASE("no_cu runs an EP-only dataflow") {
    const Tensor ep = textured_ep_fixture(32, 1);
    const ForwardOutput out = forward(ep, default_params(Ablation::NoCu));
    for (const ShapeLogEntry& e : out.shapes) {
        CHECK(e.name.find("cu") == std::string::npos);
        CHECK(e.name.find("face") == std::string::npos);
    }
    CHECK_FALSE(out.has_fusion_weights);
}

TEST_CASE("no_waf on identical branches matches the block-shared full model") {
    // A constant input makes all four CU branches identical; with a
    // block-shared WAF the learned weights collapse to 1/4, so forcing equal
    // weights must not change anything.
    const Tensor ep = Tensor::full(1, 32, 64, 0.37f);
    PipelineConfig cfg;
    cfg.seed = 42;
    cfg.dwf.block_shared_waf = true;
    const ForwardOutput full = forward(ep, PipelineParams::seeded(cfg));
    PipelineConfig acfg = cfg;
    acfg.ablation = Ablation::NoWaf;
    const ForwardOutput ablated = forward(ep, PipelineParams::seeded(acfg));
    CHECK(max_abs_diff(full.final_map, ablated.final_map) <= 1e-6);
    REQUIRE(ablated.has_fusion_weights);
    for (float w : ablated.fusion_weights.w)
        CHECK(w == 0.25f);
}

TEST_CASE("yaw consistency stays within the pinned regression bound") {
    // Rotating the input by 90 degrees yaw and undoing the rotation on the
    // output only differs by resampling and border error; the bound is pinned
    // from the reference run of this fixture (MAD 3.366e-3) with 25% headroom.
    const Tensor ep = textured_ep_fixture(32, 1);
    const PipelineParams params = default_params();
    const ForwardOutput base = forward(ep, params);
    const int shift = ep.width() / 4;
    const ForwardOutput turned = forward(yaw_shift_columns(ep, shift), params);
    const Tensor undone = yaw_shift_columns(turned.final_map, -shift);
    CHECK(mad(base.final_map, undone) <= 3.366e-3 * 1.25);
}

TEST_CASE("forward validates its input") {
    const PipelineParams params = default_params();
    CHECK_THROWS_AS(forward(Tensor(1, 32, 60), params), std::invalid_argument);
    CHECK_THROWS_AS(forward(Tensor(1, 24, 48), params), std::invalid_argument);
    CHECK_THROWS_AS(forward(Tensor(3, 32, 64), params), std::invalid_argument);
}

TEST_CASE("tensor sink sees the logged intermediates") {
    const Tensor ep = textured_ep_fixture(32, 1);
    std::set<std::string> seen;
    forward(ep, default_params(), [&](const std::string& name, const Tensor& t) {
        CHECK(t.size() > 0);
        seen.insert(name);
    });
    CHECK(seen.count("input") == 1);
    CHECK(seen.count("ep.stage5") == 1);
    CHECK(seen.count("fused") == 1);
    CHECK(seen.count("decoder.k2") == 1);
    CHECK(seen.count("final") == 1);
}
