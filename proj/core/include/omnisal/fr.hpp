#ifndef OMNISAL_FR_HPP
#define OMNISAL_FR_HPP

#include <array>
#include <cstdint>

#include "omnisal/tensor.hpp"

namespace omnisal {

/// Encoder-source index inside one FR level. Aggregation order is fixed
/// C1, C2, C3, C4, E.
enum class FrSource : int { C1 = 0, C2 = 1, C3 = 2, C4 = 3, E = 4 };

struct FrOptions {
    /// The filtration and detail masks come straight out of a conv layer.
    /// When true they are additionally squashed through a sigmoid, which
    /// bounds them to (0, 1).
    bool sigmoid_masks = false;
    /// One mask head reused for the five sources instead of five heads.
    bool shared_mask_head = false;
};

struct FrLevelConfig {
    int decoder_in = 0; // channels of F_d^{k+1}
    int encoder_in = 0; // channels of each of the five encoder features
    int mid = 0;        // reduced decoder width (modulation branch)
    int encoder_mid = 0; // filtrated encoder width
    int out = 0;        // channels of F_d^k
};

/// Parameters of one FR level; a pure function of (config, seed, options).
struct FrParams {
    FrLevelConfig config;
    FrOptions options;
    ConvParams reduce;                  // decoder_in -> mid
    ConvParams mod_a;                   // mid -> mid
    ConvParams mod_b;                   // mid -> mid
    std::array<ConvParams, 5> mask_head; // mid -> encoder_mid, one per source
    std::array<ConvParams, 5> enc_conv;  // encoder_in -> encoder_mid, one per source
    ConvParams aggregate;               // encoder_mid -> encoder_mid
    ConvParams detail_mask;             // encoder_mid -> mid
    ConvParams fuse;                    // encoder_mid + mid -> out
    std::uint64_t seed = 0;

    const ConvParams& mask_head_for(FrSource j) const {
        return mask_head[options.shared_mask_head ? 0 : static_cast<std::size_t>(j)];
    }

    static FrParams seeded(const FrLevelConfig& config, std::uint64_t seed, FrOptions options = {});
};

/// Inputs of one FR level: the previous decoder feature (half the encoder
/// resolution) and the five same-shape encoder features.
struct FrLevelInputs {
    Tensor decoder;                // (decoder_in, H/2, W/2)
    std::array<Tensor, 5> encoders; // C1..C4, E, each (encoder_in, H, W)
};

/// Enhanced decoder features: channel-reduce, then modulate with learned
/// per-pixel a and b, then RELU. Output is nonnegative.
Tensor enhance_decoder(const Tensor& decoder, const FrParams& params);

/// Filtrated encoder feature for source j:
///   FM_j = mask_head_j(F_de), F_ej = UP2(FM_j) * conv3x3(F_j).
Tensor filter_encoder(const Tensor& encoder, const Tensor& enhanced_decoder,
                      const FrParams& params, FrSource j);

/// F_e = relu(conv3x3(sum_j F_ej)), summation order C1, C2, C3, C4, E.
Tensor aggregate_encoders(std::span<const Tensor> filtered, const FrParams& params);

/// F_dr = DM * UP2(F_de) with DM = detail_mask(F_e).
Tensor refine_decoder(const Tensor& enhanced_decoder, const Tensor& aggregated,
                      const FrParams& params);

/// F_d^k = relu(conv3x3([F_e, F_dr])).
Tensor fr_fuse(const Tensor& aggregated, const Tensor& refined, const FrParams& params);

/// Full level: enhance, filter all five sources, aggregate, refine, fuse.
/// Output spatial dims are twice the decoder input's.
Tensor fr_module(const FrLevelInputs& inputs, const FrParams& params);

/// Same wiring over a subset of sources (used by input ablations). Sources
/// are filtered with their own heads and summed in the order given.
Tensor fr_module_partial(const Tensor& decoder, std::span<const Tensor> encoders,
                         std::span<const FrSource> sources, const FrParams& params);

} // namespace omnisal

#endif
