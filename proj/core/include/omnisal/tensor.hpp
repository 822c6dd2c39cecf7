#ifndef OMNISAL_TENSOR_HPP
#define OMNISAL_TENSOR_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "omnisal/rng.hpp"

namespace omnisal {

/// Dense (channels, height, width) float tensor, channel-major, rows
/// row-major inside each channel. Values carry 32-bit float semantics;
/// reductions accumulate in double.
class Tensor {
public:
    Tensor() = default;
    Tensor(int channels, int height, int width);

    static Tensor full(int channels, int height, int width, float value);

    int channels() const { return c_; }
    int height() const { return h_; }
    int width() const { return w_; }
    std::size_t size() const { return data_.size(); }
    bool same_shape(const Tensor& o) const {
        return c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
    }

    float& at(int c, int y, int x) {
        return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x];
    }
    float at(int c, int y, int x) const {
        return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x];
    }

    float* channel(int c) { return data_.data() + static_cast<std::size_t>(c) * h_ * w_; }
    const float* channel(int c) const {
        return data_.data() + static_cast<std::size_t>(c) * h_ * w_;
    }

    std::span<float> values() { return data_; }
    std::span<const float> values() const { return data_; }

    /// True when every value is finite.
    bool all_finite() const;

    float min_value() const;
    float max_value() const;

private:
    int c_ = 0, h_ = 0, w_ = 0;
    std::vector<float> data_;
};

/// 3x3 convolution weights: (out, in, 3, 3) row-major, plus one bias per
/// output channel.
struct ConvParams {
    int in_channels = 0;
    int out_channels = 0;
    std::vector<float> weights; // out*in*9
    std::vector<float> bias;    // out

    float w(int co, int ci, int ky, int kx) const {
        return weights[((static_cast<std::size_t>(co) * in_channels + ci) * 3 + ky) * 3 + kx];
    }
    float& w(int co, int ci, int ky, int kx) {
        return weights[((static_cast<std::size_t>(co) * in_channels + ci) * 3 + ky) * 3 + kx];
    }

    /// Weights and bias uniform in (-k, k), k = gain/sqrt(fan_in). gain = 1
    /// is the plain fan-in rule; kRelu keeps activation variance roughly
    /// constant through conv+relu stacks (sqrt(6), He-style uniform).
    static constexpr float kReluGain = 2.449489742783178f;
    static ConvParams seeded(int in_channels, int out_channels, Rng& rng, float gain = 1.0f);
    static ConvParams zeros(int in_channels, int out_channels);
    /// Passes each channel through unchanged (requires in == out).
    static ConvParams identity(int channels);
};

/// Dense affine map v -> W v + b with W stored row-major (out x in).
struct LinearLayer {
    int in = 0;
    int out = 0;
    std::vector<float> weights; // out*in
    std::vector<float> bias;    // out

    static LinearLayer seeded(int in, int out, Rng& rng);
    static LinearLayer zeros(int in, int out);
};

/// Squeeze-and-Excitation parameters: gate(x) = sigmoid(W2 relu(W1 GAP(x))).
/// The reduction ratio is clamped to the largest divisor of `channels` that
/// does not exceed the requested ratio, so the bottleneck width is always a
/// whole number of units (channels < 16 degenerate to a 1-wide bottleneck
/// when ratio 16 is requested).
struct SEParams {
    int channels = 0;
    int reduction = 16;
    LinearLayer squeeze; // C -> C/r
    LinearLayer excite;  // C/r -> C

    static int clamp_reduction(int channels, int ratio);
    static SEParams seeded(int channels, Rng& rng, int ratio = 16);
    static SEParams zeros(int channels, int ratio = 16);
};

/// Replicates `block` along the diagonal `copies` times. The resulting SE
/// treats each channel block identically, so permuting input blocks permutes
/// the gate blocks the same way.
SEParams make_block_shared_se(const SEParams& block, int copies);

// Core operations. All are pure; shape violations throw std::invalid_argument.

/// Zero-padded 3x3 cross-correlation (deep-learning "conv"), double
/// accumulation per output element.
Tensor conv3x3(const Tensor& x, const ConvParams& p);

std::vector<float> global_avg_pool(const Tensor& x);
std::vector<float> fully_connected(std::span<const float> v, const LinearLayer& layer);

/// Per-channel gate vector of the SE block, each component in (0,1).
std::vector<float> se_gate(const Tensor& x, const SEParams& p);
/// x scaled per channel by se_gate(x, p).
Tensor se_block(const Tensor& x, const SEParams& p);

Tensor concat_channels(std::span<const Tensor> xs);
std::vector<Tensor> split_channels(const Tensor& x, int parts);

/// Bilinear upsample by an integer factor, align-corners=false convention:
/// src = (dst + 0.5)/factor - 0.5, indices clamped to the edge.
Tensor bilinear_upsample(const Tensor& x, int factor);

Tensor add(const Tensor& a, const Tensor& b);
/// Elementwise product. b may have a single channel, which then gates every
/// channel of a.
Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, float s);
Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);

/// 2x2 average pooling with stride 2; both spatial dims must be even.
Tensor avg_pool2(const Tensor& x);

Tensor seeded_tensor(int c, int h, int w, Rng& rng, float lo = -1.0f, float hi = 1.0f);

} // namespace omnisal

#endif
