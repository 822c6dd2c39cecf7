#include "omnisal/dwf.hpp"

#include <stdexcept>

#include "omnisal/rng.hpp"

namespace omnisal {

namespace {

void require(bool ok, const char* what) {
    if (!ok)
        throw std::invalid_argument(what);
}

} // namespace

DwfParams DwfParams::seeded(int channels, std::uint64_t seed, DwfOptions options) {
    DwfParams p;
    p.channels = channels;
    p.options = options;
    p.seed = seed;
    Rng rng(seed);
    Rng gef_rng = rng.fork(1);
    Rng waf_rng = rng.fork(2);

    const int gate_out = options.single_channel_gate ? 1 : channels;
    const int n_sets = options.shared_gef ? 1 : 4;
    for (int i = 0; i < n_sets; ++i) {
        GefParams g;
        g.se = SEParams::seeded(2 * channels, gef_rng);
        g.gate_conv = ConvParams::seeded(2 * channels, gate_out, gef_rng);
        p.gef.push_back(std::move(g));
    }
    if (options.block_shared_waf) {
        const SEParams block = SEParams::seeded(channels, waf_rng);
        p.waf_se = make_block_shared_se(block, 4);
    } else {
        p.waf_se = SEParams::seeded(4 * channels, waf_rng);
    }
    return p;
}

GefResult gef(const Tensor& ep_feat, const Tensor& cu_feat, const GefParams& params) {
    require(ep_feat.same_shape(cu_feat), "gef: EP and CU features must share a shape");
    const std::array<Tensor, 2> both = {ep_feat, cu_feat};
    const Tensor cat = concat_channels(both);
    require(cat.channels() == params.se.channels, "gef: params built for a different width");
    const Tensor gate = sigmoid(conv3x3(se_block(cat, params.se), params.gate_conv));

    GefResult out;
    out.fused = Tensor(ep_feat.channels(), ep_feat.height(), ep_feat.width());
    const std::size_t plane = static_cast<std::size_t>(ep_feat.height()) * ep_feat.width();
    for (int c = 0; c < ep_feat.channels(); ++c) {
        const float* g = gate.channel(gate.channels() == 1 ? 0 : c);
        const float* fe = ep_feat.channel(c);
        const float* fc = cu_feat.channel(c);
        float* dst = out.fused.channel(c);
        for (std::size_t i = 0; i < plane; ++i)
            dst[i] = g[i] * fc[i] + (1.0f - g[i]) * fe[i];
    }
    out.gate = std::move(gate);
    return out;
}

FusionWeights waf_weights(std::span<const Tensor> cu_feats, const SEParams& waf_se) {
    require(cu_feats.size() == 4, "waf_weights: exactly four CU features expected");
    for (const Tensor& t : cu_feats)
        require(t.same_shape(cu_feats[0]), "waf_weights: CU feature shapes differ");
    const Tensor cat = concat_channels(cu_feats);
    require(cat.channels() == waf_se.channels, "waf_weights: params built for a different width");

    const std::vector<float> gate = se_gate(cat, waf_se);
    const int c = cu_feats[0].channels();
    std::array<double, 4> sums = {0.0, 0.0, 0.0, 0.0};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < c; ++j)
            sums[static_cast<std::size_t>(i)] += gate[static_cast<std::size_t>(i * c + j)];
    const double total = sums[0] + sums[1] + sums[2] + sums[3];
    FusionWeights w;
    for (int i = 0; i < 4; ++i)
        w.w[static_cast<std::size_t>(i)] = static_cast<float>(sums[static_cast<std::size_t>(i)] / total);
    return w;
}

DwfResult dwf_fuse(const Tensor& ep_feat, std::span<const Tensor> cu_feats,
                   const DwfParams& params) {
    require(cu_feats.size() == 4, "dwf_fuse: exactly four CU features expected");
    for (const Tensor& t : cu_feats)
        require(t.same_shape(ep_feat), "dwf_fuse: feature shapes differ");
    require(ep_feat.channels() == params.channels, "dwf_fuse: params built for a different width");

    DwfResult out;
    out.weights = waf_weights(cu_feats, params.waf_se);
    out.fused = ep_feat;
    for (int i = 0; i < 4; ++i) {
        const GefResult gi = gef(ep_feat, cu_feats[static_cast<std::size_t>(i)], params.gef_for(i));
        const float wi = out.weights.w[static_cast<std::size_t>(i)];
        auto acc = out.fused.values();
        auto fi = gi.fused.values();
        for (std::size_t j = 0; j < acc.size(); ++j)
            acc[j] += wi * fi[j];
    }
    return out;
}

} // namespace omnisal
