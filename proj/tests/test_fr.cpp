#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <cstring>

#include "omnisal/fr.hpp"
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

FrLevelConfig small_config() {
    FrLevelConfig cfg;
    cfg.decoder_in = 4;
    cfg.encoder_in = 3;
    cfg.mid = 3;
    cfg.encoder_mid = 3;
    cfg.out = 4;
    return cfg;
}

} // namespace

TEST_CASE("enhance_decoder modulation endpoints") {
    Rng rng(301);
    const FrLevelConfig cfg = small_config();
    FrParams params = FrParams::seeded(cfg, 11);
    const Tensor dec = seeded_tensor(cfg.decoder_in, 4, 4, rng);
    const Tensor reduced = conv3x3(dec, params.reduce);

    // a == 1, b == 0: enhancement reduces to relu of the reduced features.
    FrParams ident = params;
    ident.mod_a = ConvParams::zeros(cfg.mid, cfg.mid);
    for (float& b : ident.mod_a.bias)
        b = 1.0f;
    ident.mod_b = ConvParams::zeros(cfg.mid, cfg.mid);
    CHECK(max_abs_diff(enhance_decoder(dec, ident), relu(reduced)) <= 1e-6);

    // a == 0: output is relu(b), a constant map per channel.
    FrParams zero_a = params;
    zero_a.mod_a = ConvParams::zeros(cfg.mid, cfg.mid);
    zero_a.mod_b = ConvParams::zeros(cfg.mid, cfg.mid);
    for (std::size_t i = 0; i < zero_a.mod_b.bias.size(); ++i)
        zero_a.mod_b.bias[i] = static_cast<float>(i) - 1.0f;
    const Tensor enhanced = enhance_decoder(dec, zero_a);
    for (int c = 0; c < cfg.mid; ++c)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x)
                CHECK(enhanced.at(c, y, x) ==
                      doctest::Approx(std::max(static_cast<float>(c) - 1.0f, 0.0f)));
}

TEST_CASE("filter_encoder mask endpoints") {
    Rng rng(302);
    const FrLevelConfig cfg = small_config();
    FrParams params = FrParams::seeded(cfg, 12);
    const Tensor dec = seeded_tensor(cfg.decoder_in, 3, 3, rng);
    const Tensor enc = seeded_tensor(cfg.encoder_in, 6, 6, rng);
    const Tensor enhanced = enhance_decoder(dec, params);

    FrParams suppress = params;
    for (auto& head : suppress.mask_head)
        head = ConvParams::zeros(cfg.mid, cfg.encoder_mid);
    const Tensor zeroed = filter_encoder(enc, enhanced, suppress, FrSource::C2);
    for (float v : zeroed.values())
        CHECK(v == 0.0f);

    FrParams pass = params;
    for (auto& head : pass.mask_head) {
        head = ConvParams::zeros(cfg.mid, cfg.encoder_mid);
        for (float& b : head.bias)
            b = 1.0f;
    }
    const Tensor through = filter_encoder(enc, enhanced, pass, FrSource::E);
    CHECK(max_abs_diff(through, conv3x3(enc, pass.enc_conv[4])) <= 1e-6);
}

TEST_CASE("filter_encoder matches the mask/upsample/multiply oracle") {
    Rng rng(303);
    for (int trial = 0; trial < 10; ++trial) {
        const FrLevelConfig cfg = small_config();
        FrOptions opt;
        opt.sigmoid_masks = trial % 2 == 1;
        const FrParams params = FrParams::seeded(cfg, rng.next_u64(), opt);
        const Tensor dec = seeded_tensor(cfg.decoder_in, 3, 4, rng);
        const Tensor enc = seeded_tensor(cfg.encoder_in, 6, 8, rng);
        const Tensor enhanced = enhance_decoder(dec, params);
        const int j = static_cast<int>(rng.next_u64() % 5);

        Tensor mask = oracle::conv3x3_naive(enhanced, params.mask_head_for(static_cast<FrSource>(j)));
        if (opt.sigmoid_masks)
            mask = sigmoid(mask);
        const Tensor expected =
            hadamard(oracle::upsample2_naive(mask),
                     oracle::conv3x3_naive(enc, params.enc_conv[static_cast<std::size_t>(j)]));
        CHECK(max_abs_diff(filter_encoder(enc, enhanced, params, static_cast<FrSource>(j)),
                           expected) <= 1e-6);
    }
}

TEST_CASE("scaling a filtration mask toward zero only suppresses") {
    Rng rng(304);
    const FrLevelConfig cfg = small_config();
    const FrParams params = FrParams::seeded(cfg, 13);
    const Tensor dec = seeded_tensor(cfg.decoder_in, 3, 3, rng);
    const Tensor enc = seeded_tensor(cfg.encoder_in, 6, 6, rng);
    const Tensor enhanced = enhance_decoder(dec, params);
    const Tensor base = filter_encoder(enc, enhanced, params, FrSource::C1);
    for (float t : {0.5f, 0.1f, 0.0f}) {
        FrParams scaled = params;
        for (float& w : scaled.mask_head[0].weights)
            w *= t;
        for (float& b : scaled.mask_head[0].bias)
            b *= t;
        const Tensor out = filter_encoder(enc, enhanced, scaled, FrSource::C1);
        for (std::size_t i = 0; i < out.size(); ++i)
            REQUIRE(std::abs(out.values()[i]) <= std::abs(base.values()[i]) + 1e-7f);
    }
}

TEST_CASE("aggregate_encoders: zero sources leave the bias map") {
    const FrLevelConfig cfg = small_config();
    const FrParams params = FrParams::seeded(cfg, 14);
    std::vector<Tensor> zeros(5, Tensor(cfg.encoder_mid, 4, 4));
    const Tensor out = aggregate_encoders(zeros, params);
    for (int c = 0; c < cfg.encoder_mid; ++c)
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x)
                CHECK(out.at(c, y, x) ==
                      doctest::Approx(std::max(params.aggregate.bias[static_cast<std::size_t>(c)], 0.0f)));

    // One nonzero source equals the single-source path.
    Rng rng(305);
    std::vector<Tensor> one(5, Tensor(cfg.encoder_mid, 4, 4));
    one[2] = seeded_tensor(cfg.encoder_mid, 4, 4, rng);
    const Tensor lhs = aggregate_encoders(one, params);
    const Tensor rhs = relu(conv3x3(one[2], params.aggregate));
    CHECK(max_abs_diff(lhs, rhs) <= 1e-6);

    std::vector<Tensor> four(4, Tensor(cfg.encoder_mid, 4, 4));
    CHECK_THROWS_AS(aggregate_encoders(four, params), std::invalid_argument);
}

TEST_CASE("refine_decoder mask endpoints") {
    Rng rng(306);
    const FrLevelConfig cfg = small_config();
    FrParams params = FrParams::seeded(cfg, 15);
    const Tensor dec = seeded_tensor(cfg.decoder_in, 3, 3, rng);
    const Tensor enhanced = enhance_decoder(dec, params);
    const Tensor agg = seeded_tensor(cfg.encoder_mid, 6, 6, rng);

    FrParams ones = params;
    ones.detail_mask = ConvParams::zeros(cfg.encoder_mid, cfg.mid);
    for (float& b : ones.detail_mask.bias)
        b = 1.0f;
    CHECK(max_abs_diff(refine_decoder(enhanced, agg, ones), bilinear_upsample(enhanced, 2)) <= 1e-6);

    FrParams zeros = params;
    zeros.detail_mask = ConvParams::zeros(cfg.encoder_mid, cfg.mid);
    const Tensor suppressed = refine_decoder(enhanced, agg, zeros);
    for (float v : suppressed.values())
        CHECK(v == 0.0f);
}

TEST_CASE("fr_module shape law and nonnegative outputs") {
    Rng rng(307);
    const FrLevelConfig cfg = small_config();
    const FrParams params = FrParams::seeded(cfg, 16);
    FrLevelInputs in;
    in.decoder = seeded_tensor(cfg.decoder_in, 5, 7, rng);
    for (auto& e : in.encoders)
        e = seeded_tensor(cfg.encoder_in, 10, 14, rng);
    const Tensor out = fr_module(in, params);
    CHECK(out.channels() == cfg.out);
    CHECK(out.height() == 10);
    CHECK(out.width() == 14);
    for (float v : out.values())
        CHECK(v >= 0.0f);

    const Tensor again = fr_module(in, params);
    CHECK(std::memcmp(out.values().data(), again.values().data(),
                      out.size() * sizeof(float)) == 0);
}

TEST_CASE("full module equals the sequential oracle") {
    Rng rng(308);
    for (int trial = 0; trial < 20; ++trial) {
        FrLevelConfig cfg;
        cfg.decoder_in = 2 + static_cast<int>(rng.next_u64() % 4);
        cfg.encoder_in = 2 + static_cast<int>(rng.next_u64() % 4);
        cfg.mid = 2 + static_cast<int>(rng.next_u64() % 3);
        cfg.encoder_mid = 2 + static_cast<int>(rng.next_u64() % 3);
        cfg.out = 2 + static_cast<int>(rng.next_u64() % 4);
        FrOptions opt;
        opt.sigmoid_masks = trial % 2 == 1;
        opt.shared_mask_head = trial % 4 == 2;
        const FrParams params = FrParams::seeded(cfg, rng.next_u64(), opt);
        FrLevelInputs in;
        const int h = 2 + static_cast<int>(rng.next_u64() % 3);
        const int w = 2 + static_cast<int>(rng.next_u64() % 3);
        in.decoder = seeded_tensor(cfg.decoder_in, h, w, rng);
        for (auto& e : in.encoders)
            e = seeded_tensor(cfg.encoder_in, 2 * h, 2 * w, rng);
        CHECK(max_abs_diff(fr_module(in, params), oracle::fr_sequential_naive(in, params)) <= 1e-6);
    }
}

TEST_CASE("fr zero inputs leave only bias terms, all nonnegative") {
    const FrLevelConfig cfg = small_config();
    const FrParams params = FrParams::seeded(cfg, 17);
    FrLevelInputs in;
    in.decoder = Tensor(cfg.decoder_in, 4, 4);
    for (auto& e : in.encoders)
        e = Tensor(cfg.encoder_in, 8, 8);
    const Tensor out = fr_module(in, params);
    for (float v : out.values())
        CHECK(v >= 0.0f);
    CHECK(out.all_finite());
}

TEST_CASE("fr_module_partial over all five sources matches the full module") {
    Rng rng(310);
    const FrLevelConfig cfg = small_config();
    const FrParams params = FrParams::seeded(cfg, 19);
    FrLevelInputs in;
    in.decoder = seeded_tensor(cfg.decoder_in, 3, 4, rng);
    for (auto& e : in.encoders)
        e = seeded_tensor(cfg.encoder_in, 6, 8, rng);
    const std::array<FrSource, 5> all = {FrSource::C1, FrSource::C2, FrSource::C3, FrSource::C4,
                                         FrSource::E};
    const Tensor full = fr_module(in, params);
    const Tensor partial = fr_module_partial(in.decoder, in.encoders, all, params);
    CHECK(max_abs_diff(full, partial) == 0.0);

    // A single-source level stays well formed and uses that source's head.
    const std::array<Tensor, 1> one = {in.encoders[4]};
    const std::array<FrSource, 1> src = {FrSource::E};
    const Tensor solo = fr_module_partial(in.decoder, one, src, params);
    CHECK(solo.channels() == cfg.out);
    CHECK(solo.height() == 6);
    CHECK(solo.width() == 8);
    for (float v : solo.values())
        CHECK(v >= 0.0f);
    CHECK_THROWS_AS(fr_module_partial(in.decoder, one, all, params), std::invalid_argument);
}

TEST_CASE("fr input validation") {
    Rng rng(309);
    const FrLevelConfig cfg = small_config();
    const FrParams params = FrParams::seeded(cfg, 18);
    CHECK_THROWS_AS(enhance_decoder(seeded_tensor(cfg.decoder_in + 1, 4, 4, rng), params),
                    std::invalid_argument);
    const Tensor enhanced = enhance_decoder(seeded_tensor(cfg.decoder_in, 4, 4, rng), params);
    CHECK_THROWS_AS(filter_encoder(seeded_tensor(cfg.encoder_in, 9, 8, rng), enhanced, params,
                                   FrSource::C1),
                    std::invalid_argument);
}
