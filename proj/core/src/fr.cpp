#include "omnisal/fr.hpp"

#include <stdexcept>

#include "omnisal/rng.hpp"

namespace omnisal {

namespace {

void require(bool ok, const char* what) {
    if (!ok)
        throw std::invalid_argument(what);
}

} // namespace

FrParams FrParams::seeded(const FrLevelConfig& config, std::uint64_t seed, FrOptions options) {
    FrParams p;
    p.config = config;
    p.options = options;
    p.seed = seed;
    Rng rng(seed);
    // Feature-path convs run close to variance-preserving (the plain fan-in
    // rule shrinks the decoder signal below float resolution after three
    // multiplicative stages); mask producers use a smaller gain so the
    // Hadamard products stay contractive and cannot compound into overflow
    // on larger inputs. Calibrated on the 64..256 pixel fixtures.
    const float g = 1.8f;
    const float gm = 1.3f;
    p.reduce = ConvParams::seeded(config.decoder_in, config.mid, rng, g);
    p.mod_a = ConvParams::seeded(config.mid, config.mid, rng, gm);
    p.mod_b = ConvParams::seeded(config.mid, config.mid, rng, gm);
    for (auto& head : p.mask_head)
        head = ConvParams::seeded(config.mid, config.encoder_mid, rng, gm);
    for (auto& conv : p.enc_conv)
        conv = ConvParams::seeded(config.encoder_in, config.encoder_mid, rng, g);
    p.aggregate = ConvParams::seeded(config.encoder_mid, config.encoder_mid, rng, g);
    p.detail_mask = ConvParams::seeded(config.encoder_mid, config.mid, rng, gm);
    p.fuse = ConvParams::seeded(config.encoder_mid + config.mid, config.out, rng, g);
    return p;
}

Tensor enhance_decoder(const Tensor& decoder, const FrParams& params) {
    require(decoder.channels() == params.config.decoder_in,
            "enhance_decoder: decoder channels mismatch");
    const Tensor reduced = conv3x3(decoder, params.reduce);
    const Tensor a = conv3x3(reduced, params.mod_a);
    const Tensor b = conv3x3(reduced, params.mod_b);
    return relu(add(hadamard(a, reduced), b));
}

Tensor filter_encoder(const Tensor& encoder, const Tensor& enhanced_decoder,
                      const FrParams& params, FrSource j) {
    require(encoder.channels() == params.config.encoder_in,
            "filter_encoder: encoder channels mismatch");
    require(encoder.height() == 2 * enhanced_decoder.height() &&
                encoder.width() == 2 * enhanced_decoder.width(),
            "filter_encoder: encoder dims must be twice the decoder dims");
    Tensor mask = conv3x3(enhanced_decoder, params.mask_head_for(j));
    if (params.options.sigmoid_masks)
        mask = sigmoid(mask);
    return hadamard(bilinear_upsample(mask, 2), conv3x3(encoder, params.enc_conv[static_cast<std::size_t>(j)]));
}

Tensor aggregate_encoders(std::span<const Tensor> filtered, const FrParams& params) {
    require(filtered.size() == 5, "aggregate_encoders: exactly five sources expected");
    Tensor sum = filtered[0];
    for (std::size_t i = 1; i < filtered.size(); ++i)
        sum = add(sum, filtered[i]);
    return relu(conv3x3(sum, params.aggregate));
}

Tensor refine_decoder(const Tensor& enhanced_decoder, const Tensor& aggregated,
                      const FrParams& params) {
    Tensor mask = conv3x3(aggregated, params.detail_mask);
    if (params.options.sigmoid_masks)
        mask = sigmoid(mask);
    return hadamard(mask, bilinear_upsample(enhanced_decoder, 2));
}

Tensor fr_fuse(const Tensor& aggregated, const Tensor& refined, const FrParams& params) {
    const std::array<Tensor, 2> both = {aggregated, refined};
    return relu(conv3x3(concat_channels(both), params.fuse));
}

Tensor fr_module(const FrLevelInputs& inputs, const FrParams& params) {
    for (const Tensor& e : inputs.encoders)
        require(e.same_shape(inputs.encoders[0]), "fr_module: encoder shapes differ");
    const Tensor enhanced = enhance_decoder(inputs.decoder, params);
    std::array<Tensor, 5> filtered;
    for (int j = 0; j < 5; ++j)
        filtered[static_cast<std::size_t>(j)] =
            filter_encoder(inputs.encoders[static_cast<std::size_t>(j)], enhanced, params,
                           static_cast<FrSource>(j));
    const Tensor aggregated = aggregate_encoders(filtered, params);
    const Tensor refined = refine_decoder(enhanced, aggregated, params);
    return fr_fuse(aggregated, refined, params);
}

Tensor fr_module_partial(const Tensor& decoder, std::span<const Tensor> encoders,
                         std::span<const FrSource> sources, const FrParams& params) {
    require(!encoders.empty() && encoders.size() == sources.size(),
            "fr_module_partial: encoder/source count mismatch");
    const Tensor enhanced = enhance_decoder(decoder, params);
    Tensor sum;
    for (std::size_t i = 0; i < encoders.size(); ++i) {
        Tensor f = filter_encoder(encoders[i], enhanced, params, sources[i]);
        sum = i == 0 ? std::move(f) : add(sum, f);
    }
    const Tensor aggregated = relu(conv3x3(sum, params.aggregate));
    const Tensor refined = refine_decoder(enhanced, aggregated, params);
    return fr_fuse(aggregated, refined, params);
}

} // namespace omnisal
