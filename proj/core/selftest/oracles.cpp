#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace omnisal::oracle {

namespace {

constexpr double kEps = 2.220446049250313e-16;

double sigmoid_d(double v) {
    return 1.0 / (1.0 + std::exp(-v));
}

Tensor hadamard_naive(const Tensor& a, const Tensor& b) {
    Tensor out(a.channels(), a.height(), a.width());
    for (int c = 0; c < a.channels(); ++c)
        for (int y = 0; y < a.height(); ++y)
            for (int x = 0; x < a.width(); ++x)
                out.at(c, y, x) = a.at(c, y, x) * b.at(c, y, x);
    return out;
}

Tensor add_naive(const Tensor& a, const Tensor& b) {
    Tensor out(a.channels(), a.height(), a.width());
    for (int c = 0; c < a.channels(); ++c)
        for (int y = 0; y < a.height(); ++y)
            for (int x = 0; x < a.width(); ++x)
                out.at(c, y, x) = a.at(c, y, x) + b.at(c, y, x);
    return out;
}

Tensor relu_naive(const Tensor& a) {
    Tensor out(a.channels(), a.height(), a.width());
    for (int c = 0; c < a.channels(); ++c)
        for (int y = 0; y < a.height(); ++y)
            for (int x = 0; x < a.width(); ++x)
                out.at(c, y, x) = std::max(a.at(c, y, x), 0.0f);
    return out;
}

Tensor sigmoid_naive(const Tensor& a) {
    Tensor out(a.channels(), a.height(), a.width());
    for (int c = 0; c < a.channels(); ++c)
        for (int y = 0; y < a.height(); ++y)
            for (int x = 0; x < a.width(); ++x)
                out.at(c, y, x) = static_cast<float>(sigmoid_d(a.at(c, y, x)));
    return out;
}

Tensor concat_naive(const Tensor& a, const Tensor& b) {
    Tensor out(a.channels() + b.channels(), a.height(), a.width());
    for (int c = 0; c < a.channels(); ++c)
        for (int y = 0; y < a.height(); ++y)
            for (int x = 0; x < a.width(); ++x)
                out.at(c, y, x) = a.at(c, y, x);
    for (int c = 0; c < b.channels(); ++c)
        for (int y = 0; y < a.height(); ++y)
            for (int x = 0; x < a.width(); ++x)
                out.at(a.channels() + c, y, x) = b.at(c, y, x);
    return out;
}

} // namespace

Tensor conv3x3_naive(const Tensor& x, const ConvParams& p) {
    Tensor out(p.out_channels, x.height(), x.width());
    for (int co = 0; co < p.out_channels; ++co)
        for (int y = 0; y < x.height(); ++y)
            for (int xx = 0; xx < x.width(); ++xx) {
                double acc = p.bias[static_cast<std::size_t>(co)];
                // Taps outermost, channels innermost (opposite of the
                // library kernel).
                for (int ky = -1; ky <= 1; ++ky)
                    for (int kx = -1; kx <= 1; ++kx) {
                        const int sy = y + ky, sx = xx + kx;
                        if (sy < 0 || sy >= x.height() || sx < 0 || sx >= x.width())
                            continue;
                        for (int ci = 0; ci < p.in_channels; ++ci)
                            acc += static_cast<double>(x.at(ci, sy, sx)) *
                                   p.w(co, ci, ky + 1, kx + 1);
                    }
                out.at(co, y, xx) = static_cast<float>(acc);
            }
    return out;
}

std::vector<float> gap_naive(const Tensor& x) {
    std::vector<float> out;
    for (int c = 0; c < x.channels(); ++c) {
        double acc = 0.0;
        for (int y = 0; y < x.height(); ++y)
            for (int xx = 0; xx < x.width(); ++xx)
                acc += x.at(c, y, xx);
        out.push_back(static_cast<float>(acc / (static_cast<double>(x.height()) * x.width())));
    }
    return out;
}

std::vector<float> fc_naive(std::span<const float> v, const LinearLayer& l) {
    std::vector<float> out;
    for (int o = 0; o < l.out; ++o) {
        double acc = l.bias[static_cast<std::size_t>(o)];
        for (int i = 0; i < l.in; ++i)
            acc += static_cast<double>(l.weights[static_cast<std::size_t>(o) * l.in + i]) *
                   v[static_cast<std::size_t>(i)];
        out.push_back(static_cast<float>(acc));
    }
    return out;
}

Tensor se_block_naive(const Tensor& x, const SEParams& p) {
    const std::vector<float> pooled = gap_naive(x);
    std::vector<float> hidden = fc_naive(pooled, p.squeeze);
    for (float& h : hidden)
        h = h > 0.0f ? h : 0.0f;
    std::vector<float> gate = fc_naive(hidden, p.excite);
    for (float& g : gate)
        g = static_cast<float>(sigmoid_d(g));
    Tensor out(x.channels(), x.height(), x.width());
    for (int c = 0; c < x.channels(); ++c)
        for (int y = 0; y < x.height(); ++y)
            for (int xx = 0; xx < x.width(); ++xx)
                out.at(c, y, xx) = gate[static_cast<std::size_t>(c)] * x.at(c, y, xx);
    return out;
}

Tensor upsample2_naive(const Tensor& x) {
    Tensor out(x.channels(), 2 * x.height(), 2 * x.width());
    for (int c = 0; c < x.channels(); ++c)
        for (int oy = 0; oy < out.height(); ++oy)
            for (int ox = 0; ox < out.width(); ++ox) {
                const float sy = (oy + 0.5f) * 0.5f - 0.5f;
                const float sx = (ox + 0.5f) * 0.5f - 0.5f;
                const int y0 = static_cast<int>(std::floor(sy));
                const int x0 = static_cast<int>(std::floor(sx));
                const float fy = sy - std::floor(sy);
                const float fx = sx - std::floor(sx);
                auto pick = [&](int y, int xq) {
                    return x.at(c, std::clamp(y, 0, x.height() - 1), std::clamp(xq, 0, x.width() - 1));
                };
                const float a = pick(y0, x0) * (1.0f - fx) + pick(y0, x0 + 1) * fx;
                const float b = pick(y0 + 1, x0) * (1.0f - fx) + pick(y0 + 1, x0 + 1) * fx;
                out.at(c, oy, ox) = a * (1.0f - fy) + b * fy;
            }
    return out;
}

FusionWeights waf_naive(std::span<const Tensor> cu_feats, const SEParams& waf_se) {
    const int c = cu_feats[0].channels();
    std::vector<float> pooled;
    for (const Tensor& t : cu_feats)
        for (float v : gap_naive(t))
            pooled.push_back(v);
    std::vector<float> hidden = fc_naive(pooled, waf_se.squeeze);
    for (float& h : hidden)
        h = h > 0.0f ? h : 0.0f;
    std::vector<float> alpha = fc_naive(hidden, waf_se.excite);
    for (float& a : alpha)
        a = static_cast<float>(sigmoid_d(a));
    double sums[4] = {0, 0, 0, 0};
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < c; ++j)
            sums[i] += alpha[static_cast<std::size_t>(i * c + j)];
    const double total = sums[0] + sums[1] + sums[2] + sums[3];
    FusionWeights w;
    for (int i = 0; i < 4; ++i)
        w.w[static_cast<std::size_t>(i)] = static_cast<float>(sums[i] / total);
    return w;
}

Tensor fr_sequential_naive(const FrLevelInputs& inputs, const FrParams& params) {
    const Tensor reduced = conv3x3_naive(inputs.decoder, params.reduce);
    const Tensor a = conv3x3_naive(reduced, params.mod_a);
    const Tensor b = conv3x3_naive(reduced, params.mod_b);
    const Tensor enhanced = relu_naive(add_naive(hadamard_naive(a, reduced), b));

    Tensor sum;
    for (int j = 0; j < 5; ++j) {
        Tensor mask = conv3x3_naive(enhanced, params.mask_head_for(static_cast<FrSource>(j)));
        if (params.options.sigmoid_masks)
            mask = sigmoid_naive(mask);
        const Tensor enc = conv3x3_naive(inputs.encoders[static_cast<std::size_t>(j)],
                                         params.enc_conv[static_cast<std::size_t>(j)]);
        Tensor filtered = hadamard_naive(upsample2_naive(mask), enc);
        sum = j == 0 ? std::move(filtered) : add_naive(sum, filtered);
    }
    const Tensor aggregated = relu_naive(conv3x3_naive(sum, params.aggregate));

    Tensor detail = conv3x3_naive(aggregated, params.detail_mask);
    if (params.options.sigmoid_masks)
        detail = sigmoid_naive(detail);
    const Tensor refined = hadamard_naive(detail, upsample2_naive(enhanced));
    return relu_naive(conv3x3_naive(concat_naive(aggregated, refined), params.fuse));
}

Face owner_face_bruteforce(const Vec3& d) {
    double best_angle = std::numeric_limits<double>::infinity();
    Face best = Face::F;
    for (int f = 0; f < kFaceCount; ++f) {
        const double ang = angle_between(d, face_frame(static_cast<Face>(f)).axis);
        if (ang < best_angle) {
            best_angle = ang;
            best = static_cast<Face>(f);
        }
    }
    return best;
}

double mae_naive(const Tensor& sal, const Tensor& gt) {
    double acc = 0.0;
    for (int y = 0; y < sal.height(); ++y)
        for (int x = 0; x < sal.width(); ++x)
            acc += std::abs(static_cast<double>(sal.at(0, y, x)) - gt.at(0, y, x));
    return acc / (static_cast<double>(sal.height()) * sal.width());
}

double f_measure_naive(const Tensor& sal, const Tensor& gt) {
    double mean = 0.0;
    for (int y = 0; y < sal.height(); ++y)
        for (int x = 0; x < sal.width(); ++x)
            mean += sal.at(0, y, x);
    mean /= static_cast<double>(sal.height()) * sal.width();
    const double t = std::min(2.0 * mean, 1.0);

    bool any_fg = false;
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x)
            any_fg = any_fg || gt.at(0, y, x) != 0.0f;
    if (!any_fg) {
        for (int y = 0; y < sal.height(); ++y)
            for (int x = 0; x < sal.width(); ++x)
                if (static_cast<double>(sal.at(0, y, x)) > t)
                    return 0.0;
        return 1.0;
    }

    double tp = 0, fp = 0, fn = 0;
    for (int y = 0; y < sal.height(); ++y)
        for (int x = 0; x < sal.width(); ++x) {
            const bool pred = static_cast<double>(sal.at(0, y, x)) >= t;
            const bool truth = gt.at(0, y, x) != 0.0f;
            tp += pred && truth;
            fp += pred && !truth;
            fn += !pred && truth;
        }
    if (tp == 0.0)
        return 0.0;
    const double p = tp / (tp + fp);
    const double r = tp / (tp + fn);
    return std::min(1.0, 1.3 * p * r / (0.3 * p + r));
}

double weighted_f_naive(const Tensor& sal, const Tensor& gt) {
    const int rows = gt.height(), cols = gt.width();
    long fg = 0;
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x)
            fg += gt.at(0, y, x) != 0.0f;
    if (fg == 0) {
        for (int y = 0; y < rows; ++y)
            for (int x = 0; x < cols; ++x)
                if (sal.at(0, y, x) > 0.0f)
                    return 0.0;
        return 1.0;
    }

    std::vector<double> err(static_cast<std::size_t>(rows) * cols);
    std::vector<double> et(err.size()), dist(err.size(), 0.0);
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x)
            err[static_cast<std::size_t>(y) * cols + x] =
                std::abs(static_cast<double>(sal.at(0, y, x)) - gt.at(0, y, x));

    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            const std::size_t at = static_cast<std::size_t>(y) * cols + x;
            if (gt.at(0, y, x) != 0.0f) {
                et[at] = err[at];
                continue;
            }
            long best = std::numeric_limits<long>::max();
            double sum = 0.0;
            long count = 0;
            for (int fy = 0; fy < rows; ++fy)
                for (int fx = 0; fx < cols; ++fx) {
                    if (gt.at(0, fy, fx) == 0.0f)
                        continue;
                    const long d2 = static_cast<long>(fy - y) * (fy - y) +
                                    static_cast<long>(fx - x) * (fx - x);
                    if (d2 < best) {
                        best = d2;
                        sum = err[static_cast<std::size_t>(fy) * cols + fx];
                        count = 1;
                    } else if (d2 == best) {
                        sum += err[static_cast<std::size_t>(fy) * cols + fx];
                        ++count;
                    }
                }
            et[at] = sum / static_cast<double>(count);
            dist[at] = std::sqrt(static_cast<double>(best));
        }

    // Full 7x7 Gaussian kernel, sigma 5, zero padding.
    double kernel[7][7];
    double ksum = 0.0;
    for (int i = 0; i < 7; ++i)
        for (int j = 0; j < 7; ++j) {
            kernel[i][j] = std::exp(-((i - 3) * (i - 3) + (j - 3) * (j - 3)) / 50.0);
            ksum += kernel[i][j];
        }
    for (auto& row : kernel)
        for (double& v : row)
            v /= ksum;

    double sum_fg = 0.0, sum_bg = 0.0;
    for (int y = 0; y < rows; ++y)
        for (int x = 0; x < cols; ++x) {
            const std::size_t at = static_cast<std::size_t>(y) * cols + x;
            double ea = 0.0;
            for (int i = -3; i <= 3; ++i)
                for (int j = -3; j <= 3; ++j) {
                    const int yy = y + i, xx = x + j;
                    if (yy >= 0 && yy < rows && xx >= 0 && xx < cols)
                        ea += kernel[i + 3][j + 3] * et[static_cast<std::size_t>(yy) * cols + xx];
                }
            double e = err[at];
            if (gt.at(0, y, x) != 0.0f) {
                if (ea < e)
                    e = ea;
                sum_fg += e;
            } else {
                sum_bg += e * (2.0 - std::exp(std::log(0.5) / 5.0 * dist[at]));
            }
        }
    const double tpw = static_cast<double>(fg) - sum_fg;
    const double r = 1.0 - sum_fg / static_cast<double>(fg);
    const double p = tpw / (kEps + tpw + sum_bg);
    return std::clamp(2.0 * r * p / (kEps + r + p), 0.0, 1.0);
}

namespace {

double ssim_quad(const Tensor& sal, const Tensor& gt, int r0, int r1, int c0, int c1) {
    const long n = static_cast<long>(r1 - r0) * (c1 - c0);
    if (n == 0)
        return 0.0;
    double x = 0.0, y = 0.0;
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
            x += sal.at(0, r, c);
            y += gt.at(0, r, c);
        }
    x /= static_cast<double>(n);
    y /= static_cast<double>(n);
    double vx = 0.0, vy = 0.0, vxy = 0.0;
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
            vx += (sal.at(0, r, c) - x) * (sal.at(0, r, c) - x);
            vy += (gt.at(0, r, c) - y) * (gt.at(0, r, c) - y);
            vxy += (sal.at(0, r, c) - x) * (gt.at(0, r, c) - y);
        }
    const double dn = static_cast<double>(n - 1) + kEps;
    vx /= dn;
    vy /= dn;
    vxy /= dn;
    const double alpha = 4.0 * x * y * vxy;
    const double beta = (x * x + y * y) * (vx + vy);
    if (alpha != 0.0)
        return alpha / (beta + kEps);
    return beta == 0.0 ? 1.0 : 0.0;
}

double masked_object(const Tensor& vals, const Tensor& gt, bool fg) {
    double sum = 0.0;
    long n = 0;
    for (int r = 0; r < gt.height(); ++r)
        for (int c = 0; c < gt.width(); ++c) {
            if ((gt.at(0, r, c) != 0.0f) != fg)
                continue;
            sum += fg ? vals.at(0, r, c) : 1.0 - vals.at(0, r, c);
            ++n;
        }
    if (n == 0)
        return 0.0;
    const double mean = sum / static_cast<double>(n);
    double var = 0.0;
    for (int r = 0; r < gt.height(); ++r)
        for (int c = 0; c < gt.width(); ++c) {
            if ((gt.at(0, r, c) != 0.0f) != fg)
                continue;
            const double v = (fg ? vals.at(0, r, c) : 1.0 - vals.at(0, r, c)) - mean;
            var += v * v;
        }
    const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    return 2.0 * mean / (mean * mean + 1.0 + sd + kEps);
}

} // namespace

double s_measure_naive(const Tensor& sal, const Tensor& gt) {
    const int rows = gt.height(), cols = gt.width();
    double total = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            total += gt.at(0, r, c);
    const double u = total / (static_cast<double>(rows) * cols);
    double smean = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            smean += sal.at(0, r, c);
    smean /= static_cast<double>(rows) * cols;
    if (u == 0.0)
        return std::clamp(1.0 - smean, 0.0, 1.0);
    if (u == 1.0)
        return std::clamp(smean, 0.0, 1.0);

    const double so = u * masked_object(sal, gt, true) + (1.0 - u) * masked_object(sal, gt, false);

    // Centroid split by pixel centers: column c is left of the split when
    // (c + 0.5) < sum(g*(c+0.5))/total, evaluated in exact integer form.
    long two_mx = 0, two_my = 0, count = 0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            if (gt.at(0, r, c) != 0.0f) {
                two_mx += 2L * c + 1;
                two_my += 2L * r + 1;
                ++count;
            }
    int X = 0, Y = 0;
    while (X < cols && (2L * X + 1) * count < two_mx)
        ++X;
    while (Y < rows && (2L * Y + 1) * count < two_my)
        ++Y;
    const double area = static_cast<double>(rows) * cols;
    const double w1 = static_cast<double>(X) * Y / area;
    const double w2 = static_cast<double>(cols - X) * Y / area;
    const double w3 = static_cast<double>(X) * (rows - Y) / area;
    const double w4 = 1.0 - w1 - w2 - w3;
    const double sr = w1 * ssim_quad(sal, gt, 0, Y, 0, X) + w2 * ssim_quad(sal, gt, 0, Y, X, cols) +
                      w3 * ssim_quad(sal, gt, Y, rows, 0, X) +
                      w4 * ssim_quad(sal, gt, Y, rows, X, cols);
    return std::clamp(0.5 * so + 0.5 * sr, 0.0, 1.0);
}

double e_measure_naive(const Tensor& sal, const Tensor& gt) {
    const int rows = gt.height(), cols = gt.width();
    const double n = static_cast<double>(rows) * cols;
    double smean = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            smean += sal.at(0, r, c);
    smean /= n;
    const double t = std::min(2.0 * smean, 1.0);

    double fg = 0.0, fm_mean = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            fg += gt.at(0, r, c);
            fm_mean += static_cast<double>(sal.at(0, r, c)) >= t ? 1.0 : 0.0;
        }
    const double gt_mean = fg / n;
    fm_mean /= n;

    double sum = 0.0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double fm = static_cast<double>(sal.at(0, r, c)) >= t ? 1.0 : 0.0;
            if (fg == 0.0) {
                sum += 1.0 - fm;
            } else if (fg == n) {
                sum += fm;
            } else {
                const double af = fm - fm_mean;
                const double ag = gt.at(0, r, c) - gt_mean;
                const double align = 2.0 * ag * af / (ag * ag + af * af + kEps);
                sum += (align + 1.0) * (align + 1.0) / 4.0;
            }
        }
    return std::clamp(sum / (n - 1.0 + kEps), 0.0, 1.0);
}

} // namespace omnisal::oracle
