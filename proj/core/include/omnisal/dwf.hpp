#ifndef OMNISAL_DWF_HPP
#define OMNISAL_DWF_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "omnisal/tensor.hpp"

namespace omnisal {

/// Normalized per-unfolding fusion weights: each in (0, 1), summing to 1.
struct FusionWeights {
    std::array<float, 4> w = {0.25f, 0.25f, 0.25f, 0.25f};
};

/// Parameters of one gated inter-fusion unit: SE over the 2C-channel concat,
/// then a bottleneck conv producing the gate logits.
struct GefParams {
    SEParams se;          // over 2C
    ConvParams gate_conv; // 2C -> C (or 1 in single-channel mode)
};

struct DwfOptions {
    bool shared_gef = true;         // one GEF parameter set for all four unfoldings
    bool single_channel_gate = false; // P_i with one channel, broadcast over C
    /// One dense SE over the 4C concat (the literal reading). When true, the
    /// SE treats the four channel blocks identically, which makes the fusion
    /// exactly input-order invariant.
    bool block_shared_waf = false;
};

/// Dynamic Weighting Fusion parameters; a pure function of (channels, seed,
/// options).
struct DwfParams {
    int channels = 0;
    DwfOptions options;
    std::vector<GefParams> gef; // size 1 when shared, else 4
    SEParams waf_se;            // over 4C
    std::uint64_t seed = 0;

    const GefParams& gef_for(int i) const {
        return gef[options.shared_gef ? 0 : static_cast<std::size_t>(i)];
    }

    static DwfParams seeded(int channels, std::uint64_t seed, DwfOptions options = {});
};

/// Gated inter fusion of the EP feature with one CU feature:
///   P = sigmoid(conv3x3(se_block([F_E, F_C])))
///   F = P * F_C + (1 - P) * F_E
struct GefResult {
    Tensor gate;  // P, values in (0, 1)
    Tensor fused; // F, elementwise between F_E and F_C
};
GefResult gef(const Tensor& ep_feat, const Tensor& cu_feat, const GefParams& params);

/// Weighted intra fusion weights: the SE gate of the 4C concat is split into
/// four length-C vectors and their sums normalized.
FusionWeights waf_weights(std::span<const Tensor> cu_feats, const SEParams& waf_se);

/// Full DWF: F_f = F_E + sum_i w_i * F_i, reduction order fixed i = 1..4.
struct DwfResult {
    Tensor fused;
    FusionWeights weights;
};
DwfResult dwf_fuse(const Tensor& ep_feat, std::span<const Tensor> cu_feats,
                   const DwfParams& params);

} // namespace omnisal

#endif
