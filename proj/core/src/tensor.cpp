#include "omnisal/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "omnisal/threading.hpp"

namespace omnisal {

namespace {

[[noreturn]] void shape_error(const std::string& what) {
    throw std::invalid_argument("shape error: " + what);
}

void require(bool ok, const char* what) {
    if (!ok)
        shape_error(what);
}

float sigmoid_scalar(float v) {
    return 1.0f / (1.0f + std::exp(-v));
}

} // namespace

Tensor::Tensor(int channels, int height, int width)
    : c_(channels), h_(height), w_(width) {
    require(channels >= 1 && height >= 1 && width >= 1, "tensor dims must be >= 1");
    data_.assign(static_cast<std::size_t>(channels) * height * width, 0.0f);
}

Tensor Tensor::full(int channels, int height, int width, float value) {
    Tensor t(channels, height, width);
    std::fill(t.data_.begin(), t.data_.end(), value);
    return t;
}

bool Tensor::all_finite() const {
    for (float v : data_)
        if (!std::isfinite(v))
            return false;
    return true;
}

float Tensor::min_value() const {
    return *std::min_element(data_.begin(), data_.end());
}

float Tensor::max_value() const {
    return *std::max_element(data_.begin(), data_.end());
}

ConvParams ConvParams::seeded(int in_channels, int out_channels, Rng& rng, float gain) {
    ConvParams p;
    p.in_channels = in_channels;
    p.out_channels = out_channels;
    p.weights.resize(static_cast<std::size_t>(out_channels) * in_channels * 9);
    p.bias.resize(static_cast<std::size_t>(out_channels));
    const float k = gain / std::sqrt(static_cast<float>(in_channels) * 9.0f);
    for (float& w : p.weights)
        w = rng.uniform(-k, k);
    for (float& b : p.bias)
        b = rng.uniform(-k, k);
    return p;
}

ConvParams ConvParams::zeros(int in_channels, int out_channels) {
    ConvParams p;
    p.in_channels = in_channels;
    p.out_channels = out_channels;
    p.weights.assign(static_cast<std::size_t>(out_channels) * in_channels * 9, 0.0f);
    p.bias.assign(static_cast<std::size_t>(out_channels), 0.0f);
    return p;
}

ConvParams ConvParams::identity(int channels) {
    ConvParams p = zeros(channels, channels);
    for (int c = 0; c < channels; ++c)
        p.w(c, c, 1, 1) = 1.0f;
    return p;
}

LinearLayer LinearLayer::seeded(int in, int out, Rng& rng) {
    LinearLayer l;
    l.in = in;
    l.out = out;
    l.weights.resize(static_cast<std::size_t>(in) * out);
    l.bias.resize(static_cast<std::size_t>(out));
    const float k = 1.0f / std::sqrt(static_cast<float>(in));
    for (float& w : l.weights)
        w = rng.uniform(-k, k);
    for (float& b : l.bias)
        b = rng.uniform(-k, k);
    return l;
}

LinearLayer LinearLayer::zeros(int in, int out) {
    LinearLayer l;
    l.in = in;
    l.out = out;
    l.weights.assign(static_cast<std::size_t>(in) * out, 0.0f);
    l.bias.assign(static_cast<std::size_t>(out), 0.0f);
    return l;
}

int SEParams::clamp_reduction(int channels, int ratio) {
    int r = std::min(ratio, channels);
    while (r > 1 && channels % r != 0)
        --r;
    return r;
}

SEParams SEParams::seeded(int channels, Rng& rng, int ratio) {
    SEParams p;
    p.channels = channels;
    p.reduction = clamp_reduction(channels, ratio);
    const int mid = channels / p.reduction;
    p.squeeze = LinearLayer::seeded(channels, mid, rng);
    p.excite = LinearLayer::seeded(mid, channels, rng);
    return p;
}

SEParams SEParams::zeros(int channels, int ratio) {
    SEParams p;
    p.channels = channels;
    p.reduction = clamp_reduction(channels, ratio);
    const int mid = channels / p.reduction;
    p.squeeze = LinearLayer::zeros(channels, mid);
    p.excite = LinearLayer::zeros(mid, channels);
    return p;
}

SEParams make_block_shared_se(const SEParams& block, int copies) {
    require(copies >= 1, "block-shared SE needs copies >= 1");
    const int cb = block.channels;
    const int mb = cb / block.reduction;
    SEParams p;
    p.channels = cb * copies;
    p.reduction = block.reduction;
    p.squeeze = LinearLayer::zeros(cb * copies, mb * copies);
    p.excite = LinearLayer::zeros(mb * copies, cb * copies);
    for (int k = 0; k < copies; ++k) {
        for (int o = 0; o < mb; ++o) {
            for (int i = 0; i < cb; ++i)
                p.squeeze.weights[static_cast<std::size_t>(k * mb + o) * p.squeeze.in +
                                  (k * cb + i)] = block.squeeze.weights[static_cast<std::size_t>(o) * cb + i];
            p.squeeze.bias[static_cast<std::size_t>(k * mb + o)] = block.squeeze.bias[o];
        }
        for (int o = 0; o < cb; ++o) {
            for (int i = 0; i < mb; ++i)
                p.excite.weights[static_cast<std::size_t>(k * cb + o) * p.excite.in +
                                 (k * mb + i)] = block.excite.weights[static_cast<std::size_t>(o) * mb + i];
            p.excite.bias[static_cast<std::size_t>(k * cb + o)] = block.excite.bias[o];
        }
    }
    return p;
}

Tensor conv3x3(const Tensor& x, const ConvParams& p) {
    require(x.channels() == p.in_channels, "conv3x3 input channels != kernel in_channels");
    const int h = x.height(), w = x.width();
    Tensor out(p.out_channels, h, w);
    parallel_for(0, p.out_channels * h, [&](int job) {
        const int co = job / h;
        const int y = job % h;
        float* dst = out.channel(co) + static_cast<std::size_t>(y) * w;
        for (int xx = 0; xx < w; ++xx) {
            double acc = p.bias[co];
            for (int ci = 0; ci < p.in_channels; ++ci) {
                const float* src = x.channel(ci);
                for (int ky = 0; ky < 3; ++ky) {
                    const int sy = y + ky - 1;
                    if (sy < 0 || sy >= h)
                        continue;
                    const float* row = src + static_cast<std::size_t>(sy) * w;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int sx = xx + kx - 1;
                        if (sx < 0 || sx >= w)
                            continue;
                        acc += static_cast<double>(row[sx]) * p.w(co, ci, ky, kx);
                    }
                }
            }
            dst[xx] = static_cast<float>(acc);
        }
    });
    return out;
}

std::vector<float> global_avg_pool(const Tensor& x) {
    std::vector<float> out(static_cast<std::size_t>(x.channels()));
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
    for (int c = 0; c < x.channels(); ++c) {
        const float* src = x.channel(c);
        double acc = 0.0;
        for (std::size_t i = 0; i < plane; ++i)
            acc += src[i];
        out[static_cast<std::size_t>(c)] = static_cast<float>(acc / static_cast<double>(plane));
    }
    return out;
}

std::vector<float> fully_connected(std::span<const float> v, const LinearLayer& layer) {
    require(static_cast<int>(v.size()) == layer.in, "fully_connected input length != layer.in");
    std::vector<float> out(static_cast<std::size_t>(layer.out));
    for (int o = 0; o < layer.out; ++o) {
        double acc = layer.bias[static_cast<std::size_t>(o)];
        const float* row = layer.weights.data() + static_cast<std::size_t>(o) * layer.in;
        for (int i = 0; i < layer.in; ++i)
            acc += static_cast<double>(row[i]) * v[static_cast<std::size_t>(i)];
        out[static_cast<std::size_t>(o)] = static_cast<float>(acc);
    }
    return out;
}

std::vector<float> se_gate(const Tensor& x, const SEParams& p) {
    require(x.channels() == p.channels, "se_block channels != params channels");
    std::vector<float> g = global_avg_pool(x);
    std::vector<float> mid = fully_connected(g, p.squeeze);
    for (float& v : mid)
        v = std::max(v, 0.0f);
    std::vector<float> gate = fully_connected(mid, p.excite);
    for (float& v : gate)
        v = sigmoid_scalar(v);
    return gate;
}

Tensor se_block(const Tensor& x, const SEParams& p) {
    const std::vector<float> gate = se_gate(x, p);
    Tensor out(x.channels(), x.height(), x.width());
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
    for (int c = 0; c < x.channels(); ++c) {
        const float g = gate[static_cast<std::size_t>(c)];
        const float* src = x.channel(c);
        float* dst = out.channel(c);
        for (std::size_t i = 0; i < plane; ++i)
            dst[i] = g * src[i];
    }
    return out;
}

Tensor concat_channels(std::span<const Tensor> xs) {
    require(!xs.empty(), "concat_channels needs at least one tensor");
    const int h = xs[0].height(), w = xs[0].width();
    int total = 0;
    for (const Tensor& t : xs) {
        require(t.height() == h && t.width() == w, "concat_channels spatial dims mismatch");
        total += t.channels();
    }
    Tensor out(total, h, w);
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    int at = 0;
    for (const Tensor& t : xs)
        for (int c = 0; c < t.channels(); ++c, ++at)
            std::copy_n(t.channel(c), plane, out.channel(at));
    return out;
}

std::vector<Tensor> split_channels(const Tensor& x, int parts) {
    require(parts >= 1 && x.channels() % parts == 0,
            "split_channels channel count not divisible by parts");
    const int per = x.channels() / parts;
    const std::size_t plane = static_cast<std::size_t>(x.height()) * x.width();
    std::vector<Tensor> out;
    out.reserve(static_cast<std::size_t>(parts));
    for (int p = 0; p < parts; ++p) {
        Tensor t(per, x.height(), x.width());
        for (int c = 0; c < per; ++c)
            std::copy_n(x.channel(p * per + c), plane, t.channel(c));
        out.push_back(std::move(t));
    }
    return out;
}

Tensor bilinear_upsample(const Tensor& x, int factor) {
    require(factor >= 1, "bilinear_upsample factor must be >= 1");
    if (factor == 1)
        return x;
    const int h = x.height(), w = x.width();
    const int oh = h * factor, ow = w * factor;
    Tensor out(x.channels(), oh, ow);
    const float inv = 1.0f / static_cast<float>(factor);
    // Per-axis taps are the same on every row/column; precompute them.
    std::vector<int> x0(static_cast<std::size_t>(ow)), x1(static_cast<std::size_t>(ow));
    std::vector<float> fx(static_cast<std::size_t>(ow));
    for (int ox = 0; ox < ow; ++ox) {
        float sx = (static_cast<float>(ox) + 0.5f) * inv - 0.5f;
        float fl = std::floor(sx);
        int i0 = static_cast<int>(fl);
        fx[ox] = sx - fl;
        x0[ox] = std::clamp(i0, 0, w - 1);
        x1[ox] = std::clamp(i0 + 1, 0, w - 1);
    }
    parallel_for(0, x.channels() * oh, [&](int job) {
        const int c = job / oh;
        const int oy = job % oh;
        float sy = (static_cast<float>(oy) + 0.5f) * inv - 0.5f;
        float fl = std::floor(sy);
        int j0 = static_cast<int>(fl);
        const float fy = sy - fl;
        const int y0 = std::clamp(j0, 0, h - 1);
        const int y1 = std::clamp(j0 + 1, 0, h - 1);
        const float* r0 = x.channel(c) + static_cast<std::size_t>(y0) * w;
        const float* r1 = x.channel(c) + static_cast<std::size_t>(y1) * w;
        float* dst = out.channel(c) + static_cast<std::size_t>(oy) * ow;
        for (int ox = 0; ox < ow; ++ox) {
            const float a = r0[x0[ox]] * (1.0f - fx[ox]) + r0[x1[ox]] * fx[ox];
            const float b = r1[x0[ox]] * (1.0f - fx[ox]) + r1[x1[ox]] * fx[ox];
            dst[ox] = a * (1.0f - fy) + b * fy;
        }
    });
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), "add shape mismatch");
    Tensor out(a.channels(), a.height(), a.width());
    auto av = a.values(), bv = b.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i)
        ov[i] = av[i] + bv[i];
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    if (b.channels() == 1 && a.channels() != 1) {
        require(a.height() == b.height() && a.width() == b.width(),
                "hadamard broadcast spatial dims mismatch");
        Tensor out(a.channels(), a.height(), a.width());
        const std::size_t plane = static_cast<std::size_t>(a.height()) * a.width();
        const float* mask = b.channel(0);
        for (int c = 0; c < a.channels(); ++c) {
            const float* src = a.channel(c);
            float* dst = out.channel(c);
            for (std::size_t i = 0; i < plane; ++i)
                dst[i] = src[i] * mask[i];
        }
        return out;
    }
    require(a.same_shape(b), "hadamard shape mismatch");
    Tensor out(a.channels(), a.height(), a.width());
    auto av = a.values(), bv = b.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i)
        ov[i] = av[i] * bv[i];
    return out;
}

Tensor scale(const Tensor& x, float s) {
    Tensor out(x.channels(), x.height(), x.width());
    auto xv = x.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i)
        ov[i] = xv[i] * s;
    return out;
}

Tensor relu(const Tensor& x) {
    Tensor out(x.channels(), x.height(), x.width());
    auto xv = x.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i)
        ov[i] = xv[i] > 0.0f ? xv[i] : 0.0f;
    return out;
}

Tensor sigmoid(const Tensor& x) {
    Tensor out(x.channels(), x.height(), x.width());
    auto xv = x.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < ov.size(); ++i)
        ov[i] = sigmoid_scalar(xv[i]);
    return out;
}

Tensor avg_pool2(const Tensor& x) {
    require(x.height() % 2 == 0 && x.width() % 2 == 0, "avg_pool2 needs even spatial dims");
    const int oh = x.height() / 2, ow = x.width() / 2;
    Tensor out(x.channels(), oh, ow);
    for (int c = 0; c < x.channels(); ++c) {
        const float* src = x.channel(c);
        float* dst = out.channel(c);
        for (int y = 0; y < oh; ++y) {
            const float* r0 = src + static_cast<std::size_t>(2 * y) * x.width();
            const float* r1 = r0 + x.width();
            for (int xx = 0; xx < ow; ++xx)
                dst[static_cast<std::size_t>(y) * ow + xx] =
                    (r0[2 * xx] + r0[2 * xx + 1] + r1[2 * xx] + r1[2 * xx + 1]) * 0.25f;
        }
    }
    return out;
}

Tensor seeded_tensor(int c, int h, int w, Rng& rng, float lo, float hi) {
    Tensor t(c, h, w);
    for (float& v : t.values())
        v = rng.uniform(lo, hi);
    return t;
}

} // namespace omnisal
