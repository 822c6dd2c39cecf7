#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "omnisal/dwf.hpp"
#include "oracles.hpp"

using namespace omnisal;

namespace {

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.same_shape(b));
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a.values()[i]) - b.values()[i]));
    return m;
}

} // namespace

TEST_CASE("gef endpoints: saturated gate picks one side") {
    Rng rng(201);
    const int c = 4;
    const Tensor fe = seeded_tensor(c, 5, 5, rng);
    const Tensor fc = seeded_tensor(c, 5, 5, rng);
    DwfParams params = DwfParams::seeded(c, 77);

    GefParams closed = params.gef[0];
    for (float& b : closed.gate_conv.bias)
        b = -50.0f;
    CHECK(max_abs_diff(gef(fe, fc, closed).fused, fe) <= 1e-4);

    GefParams open = params.gef[0];
    for (float& b : open.gate_conv.bias)
        b = 50.0f;
    CHECK(max_abs_diff(gef(fe, fc, open).fused, fc) <= 1e-4);
}

TEST_CASE("gef output is a convex combination, gate strictly inside (0,1)") {
    Rng rng(202);
    for (int trial = 0; trial < 200; ++trial) {
        const int c = 1 + static_cast<int>(rng.next_u64() % 6);
        DwfOptions opt;
        opt.single_channel_gate = trial % 2 == 1;
        const DwfParams params = DwfParams::seeded(c, rng.next_u64(), opt);
        const Tensor fe = seeded_tensor(c, 4, 4, rng, -2.0f, 2.0f);
        const Tensor fc = seeded_tensor(c, 4, 4, rng, -2.0f, 2.0f);
        const GefResult r = gef(fe, fc, params.gef[0]);
        CHECK(r.gate.channels() == (opt.single_channel_gate ? 1 : c));
        for (float v : r.gate.values()) {
            REQUIRE(v > 0.0f);
            REQUIRE(v < 1.0f);
        }
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < 4; ++y)
                for (int x = 0; x < 4; ++x) {
                    const float lo = std::min(fe.at(ch, y, x), fc.at(ch, y, x)) - 1e-6f;
                    const float hi = std::max(fe.at(ch, y, x), fc.at(ch, y, x)) + 1e-6f;
                    REQUIRE(r.fused.at(ch, y, x) >= lo);
                    REQUIRE(r.fused.at(ch, y, x) <= hi);
                }
    }
}

TEST_CASE("gef rejects mismatched shapes") {
    Rng rng(203);
    const DwfParams params = DwfParams::seeded(3, 5);
    CHECK_THROWS_AS(gef(seeded_tensor(3, 4, 4, rng), seeded_tensor(3, 4, 5, rng), params.gef[0]),
                    std::invalid_argument);
}

TEST_CASE("waf weights: identical inputs with block-shared params give 1/4") {
    DwfOptions opt;
    opt.block_shared_waf = true;
    const DwfParams params = DwfParams::seeded(6, 99, opt);
    Rng rng(204);
    const Tensor f = seeded_tensor(6, 4, 4, rng);
    const std::vector<Tensor> same(4, f);
    const FusionWeights w = waf_weights(same, params.waf_se);
    for (float v : w.w)
        CHECK(v == doctest::Approx(0.25).epsilon(1e-6));
}

TEST_CASE("waf weights normalize and match the scalar oracle") {
    Rng rng(205);
    for (int trial = 0; trial < 50; ++trial) {
        const int c = 2 + static_cast<int>(rng.next_u64() % 6);
        DwfOptions opt;
        opt.block_shared_waf = trial % 2 == 0;
        const DwfParams params = DwfParams::seeded(c, rng.next_u64(), opt);
        std::vector<Tensor> cus;
        for (int i = 0; i < 4; ++i)
            cus.push_back(seeded_tensor(c, 3, 5, rng, -2.0f, 2.0f));
        const FusionWeights w = waf_weights(cus, params.waf_se);
        const FusionWeights ref = oracle::waf_naive(cus, params.waf_se);
        double sum = 0.0;
        for (int i = 0; i < 4; ++i) {
            CHECK(w.w[static_cast<std::size_t>(i)] ==
                  doctest::Approx(ref.w[static_cast<std::size_t>(i)]).epsilon(1e-6));
            CHECK(w.w[static_cast<std::size_t>(i)] > 0.0f);
            CHECK(w.w[static_cast<std::size_t>(i)] < 1.0f);
            sum += w.w[static_cast<std::size_t>(i)];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("dwf_fuse: equal features double the EP branch") {
    Rng rng(206);
    const int c = 6;
    const DwfParams params = DwfParams::seeded(c, 31);
    const Tensor fe = seeded_tensor(c, 4, 6, rng);
    const std::vector<Tensor> cus(4, fe);
    const DwfResult r = dwf_fuse(fe, cus, params);
    CHECK(max_abs_diff(r.fused, scale(fe, 2.0f)) <= 1e-5);
}

TEST_CASE("dwf_fuse of zeros is zero") {
    const int c = 4;
    const DwfParams params = DwfParams::seeded(c, 32);
    const Tensor z(c, 3, 3);
    const std::vector<Tensor> cus(4, z);
    const DwfResult r = dwf_fuse(z, cus, params);
    for (float v : r.fused.values())
        CHECK(v == 0.0f);
}

TEST_CASE("dwf_fuse equals the step-by-step composition") {
    Rng rng(207);
    for (int trial = 0; trial < 20; ++trial) {
        const int c = 2 + static_cast<int>(rng.next_u64() % 5);
        DwfOptions opt;
        opt.shared_gef = trial % 2 == 0;
        opt.block_shared_waf = trial % 3 == 0;
        const DwfParams params = DwfParams::seeded(c, rng.next_u64(), opt);
        const Tensor fe = seeded_tensor(c, 4, 4, rng);
        std::vector<Tensor> cus;
        for (int i = 0; i < 4; ++i)
            cus.push_back(seeded_tensor(c, 4, 4, rng));

        const FusionWeights w = waf_weights(cus, params.waf_se);
        Tensor expected = fe;
        for (int i = 0; i < 4; ++i) {
            const Tensor fi = gef(fe, cus[static_cast<std::size_t>(i)], params.gef_for(i)).fused;
            expected = add(expected, scale(fi, w.w[static_cast<std::size_t>(i)]));
        }
        const DwfResult r = dwf_fuse(fe, cus, params);
        CHECK(max_abs_diff(r.fused, expected) <= 1e-6);
        for (int i = 0; i < 4; ++i)
            CHECK(r.weights.w[static_cast<std::size_t>(i)] == w.w[static_cast<std::size_t>(i)]);
    }
}

TEST_CASE("dwf parameter generation is a pure function of the seed") {
    DwfOptions opt;
    opt.shared_gef = false;
    const DwfParams a = DwfParams::seeded(5, 123, opt);
    const DwfParams b = DwfParams::seeded(5, 123, opt);
    CHECK(a.gef.size() == 4);
    for (std::size_t i = 0; i < a.gef.size(); ++i) {
        CHECK(a.gef[i].gate_conv.weights == b.gef[i].gate_conv.weights);
        CHECK(a.gef[i].se.squeeze.weights == b.gef[i].se.squeeze.weights);
    }
    CHECK(a.waf_se.excite.weights == b.waf_se.excite.weights);
    const DwfParams c = DwfParams::seeded(5, 124, opt);
    CHECK(a.waf_se.excite.weights != c.waf_se.excite.weights);
}

TEST_CASE("dwf_fuse validates its inputs") {
    Rng rng(208);
    const DwfParams params = DwfParams::seeded(3, 7);
    const Tensor fe = seeded_tensor(3, 4, 4, rng);
    std::vector<Tensor> three(3, fe);
    CHECK_THROWS_AS(dwf_fuse(fe, three, params), std::invalid_argument);
    std::vector<Tensor> wrong(4, seeded_tensor(3, 4, 5, rng));
    CHECK_THROWS_AS(dwf_fuse(fe, wrong, params), std::invalid_argument);
}
