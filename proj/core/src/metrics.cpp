#include "omnisal/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "omnisal/threading.hpp"

namespace omnisal {

namespace {

constexpr double kEps = 2.220446049250313e-16; // MATLAB-style eps

void check_pair(const Tensor& sal, const Tensor& gt) {
    if (!sal.same_shape(gt))
        throw std::invalid_argument("metrics: saliency and ground-truth dims differ");
    if (sal.channels() != 1)
        throw std::invalid_argument("metrics: single-channel maps expected");
    for (float v : sal.values())
        if (!(v >= 0.0f && v <= 1.0f))
            throw std::invalid_argument("metrics: saliency values must lie in [0, 1]");
    for (float v : gt.values())
        if (v != 0.0f && v != 1.0f)
            throw std::invalid_argument("metrics: ground truth must be binary {0, 1}");
}

double mean_of(std::span<const float> v) {
    double acc = 0.0;
    for (float x : v)
        acc += x;
    return acc / static_cast<double>(v.size());
}

double clamp01(double v) {
    return std::clamp(v, 0.0, 1.0);
}

// ---- S-measure pieces (structure measure, object + region terms) ----

double object_score(const Tensor& pred, const Tensor& mask, bool complement_pred,
                    bool complement_mask) {
    const auto p = pred.values();
    const auto m = mask.values();
    double sum = 0.0;
    long n = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool in = complement_mask ? m[i] == 0.0f : m[i] != 0.0f;
        if (!in)
            continue;
        sum += complement_pred ? 1.0 - p[i] : p[i];
        ++n;
    }
    if (n == 0)
        return 0.0;
    const double x = sum / static_cast<double>(n);
    double var = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool in = complement_mask ? m[i] == 0.0f : m[i] != 0.0f;
        if (!in)
            continue;
        const double v = (complement_pred ? 1.0 - p[i] : p[i]) - x;
        var += v * v;
    }
    const double sigma = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
    return 2.0 * x / (x * x + 1.0 + sigma + kEps);
}

double s_object(const Tensor& sal, const Tensor& gt) {
    const double u = mean_of(gt.values());
    const double fg = object_score(sal, gt, false, false);
    const double bg = object_score(sal, gt, true, true);
    return u * fg + (1.0 - u) * bg;
}

struct Region {
    int r0, r1, c0, c1; // half-open
    long area() const { return static_cast<long>(r1 - r0) * (c1 - c0); }
};

double region_ssim(const Tensor& sal, const Tensor& gt, const Region& q) {
    const long n = q.area();
    if (n == 0)
        return 0.0; // zero-weight quadrant
    double sx = 0.0, sy = 0.0;
    for (int r = q.r0; r < q.r1; ++r)
        for (int c = q.c0; c < q.c1; ++c) {
            sx += sal.at(0, r, c);
            sy += gt.at(0, r, c);
        }
    const double x = sx / static_cast<double>(n);
    const double y = sy / static_cast<double>(n);
    double vx = 0.0, vy = 0.0, vxy = 0.0;
    for (int r = q.r0; r < q.r1; ++r)
        for (int c = q.c0; c < q.c1; ++c) {
            const double dx = sal.at(0, r, c) - x;
            const double dy = gt.at(0, r, c) - y;
            vx += dx * dx;
            vy += dy * dy;
            vxy += dx * dy;
        }
    const double denom_n = static_cast<double>(n - 1) + kEps;
    vx /= denom_n;
    vy /= denom_n;
    vxy /= denom_n;
    const double alpha = 4.0 * x * y * vxy;
    const double beta = (x * x + y * y) * (vx + vy);
    if (alpha != 0.0)
        return alpha / (beta + kEps);
    return beta == 0.0 ? 1.0 : 0.0;
}

double s_region(const Tensor& sal, const Tensor& gt) {
    // Quadrants split at the foreground centroid. Pixels are assigned by
    // their centers with exact integer arithmetic, so a horizontal or
    // vertical flip mirrors the partition exactly (the reference code's
    // rounded 1-indexed split does not have that symmetry).
    const int rows = gt.height(), cols = gt.width();
    long total = 0, two_mx = 0, two_my = 0;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (gt.at(0, r, c) == 0.0f)
                continue;
            ++total;
            two_mx += 2 * c + 1;
            two_my += 2 * r + 1;
        }
    int xi = 0, yi = 0;
    for (int c = 0; c < cols; ++c)
        xi += static_cast<long>(2 * c + 1) * total < two_mx;
    for (int r = 0; r < rows; ++r)
        yi += static_cast<long>(2 * r + 1) * total < two_my;
    const Region lt{0, yi, 0, xi};
    const Region rt{0, yi, xi, cols};
    const Region lb{yi, rows, 0, xi};
    const Region rb{yi, rows, xi, cols};
    const double area = static_cast<double>(rows) * cols;
    const double w1 = static_cast<double>(lt.area()) / area;
    const double w2 = static_cast<double>(rt.area()) / area;
    const double w3 = static_cast<double>(lb.area()) / area;
    const double w4 = 1.0 - w1 - w2 - w3;
    return w1 * region_ssim(sal, gt, lt) + w2 * region_ssim(sal, gt, rt) +
           w3 * region_ssim(sal, gt, lb) + w4 * region_ssim(sal, gt, rb);
}

// ---- weighted F-measure pieces ----

const std::array<double, 7>& gauss_taps() {
    // 7-tap Gaussian, sigma 5, normalized to sum 1 (matching the 7x7 kernel
    // of the reference procedure, which is separable).
    static const std::array<double, 7> taps = [] {
        std::array<double, 7> g{};
        double sum = 0.0;
        for (int i = 0; i < 7; ++i) {
            g[static_cast<std::size_t>(i)] = std::exp(-static_cast<double>((i - 3) * (i - 3)) / 50.0);
            sum += g[static_cast<std::size_t>(i)];
        }
        for (double& v : g)
            v /= sum;
        return g;
    }();
    return taps;
}

std::vector<double> gauss7_zero_pad(const std::vector<double>& src, int rows, int cols) {
    const auto& g = gauss_taps();
    std::vector<double> tmp(src.size(), 0.0), out(src.size(), 0.0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int k = -3; k <= 3; ++k) {
                const int cc = c + k;
                if (cc >= 0 && cc < cols)
                    acc += g[static_cast<std::size_t>(k + 3)] * src[static_cast<std::size_t>(r) * cols + cc];
            }
            tmp[static_cast<std::size_t>(r) * cols + c] = acc;
        }
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double acc = 0.0;
            for (int k = -3; k <= 3; ++k) {
                const int rr = r + k;
                if (rr >= 0 && rr < rows)
                    acc += g[static_cast<std::size_t>(k + 3)] * tmp[static_cast<std::size_t>(rr) * cols + c];
            }
            out[static_cast<std::size_t>(r) * cols + c] = acc;
        }
    return out;
}

} // namespace

ForegroundDistance nearest_foreground(const Tensor& gt, std::span<const double> values) {
    const int rows = gt.height(), cols = gt.width();
    const long inf = std::numeric_limits<long>::max() / 4;

    // Per column: distance to the nearest foreground row above / below.
    std::vector<long> up(static_cast<std::size_t>(rows) * cols, inf);
    std::vector<long> dn(static_cast<std::size_t>(rows) * cols, inf);
    for (int c = 0; c < cols; ++c) {
        long last = -inf;
        for (int r = 0; r < rows; ++r) {
            if (gt.at(0, r, c) != 0.0f)
                last = r;
            if (last > -inf)
                up[static_cast<std::size_t>(r) * cols + c] = r - last;
        }
        last = inf;
        for (int r = rows - 1; r >= 0; --r) {
            if (gt.at(0, r, c) != 0.0f)
                last = r;
            if (last < inf)
                dn[static_cast<std::size_t>(r) * cols + c] = last - r;
        }
    }

    ForegroundDistance out;
    out.dist2.assign(static_cast<std::size_t>(rows) * cols, -1.0);
    out.nearest_value.assign(static_cast<std::size_t>(rows) * cols, 0.0);

    parallel_for(0, rows, [&](int r) {
        for (int c = 0; c < cols; ++c) {
            const std::size_t at = static_cast<std::size_t>(r) * cols + c;
            if (gt.at(0, r, c) != 0.0f) {
                out.dist2[at] = 0.0;
                out.nearest_value[at] = values[at];
                continue;
            }
            long best = inf;
            for (int cc = 0; cc < cols; ++cc) {
                const std::size_t ai = static_cast<std::size_t>(r) * cols + cc;
                const long dv = std::min(up[ai], dn[ai]);
                if (dv >= inf)
                    continue;
                const long d2 = dv * dv + static_cast<long>(cc - c) * (cc - c);
                if (d2 < best)
                    best = d2;
            }
            if (best >= inf)
                continue; // no foreground at all
            // Average the values of every foreground pixel at that distance.
            double sum = 0.0;
            long count = 0;
            for (int cc = 0; cc < cols; ++cc) {
                const std::size_t ai = static_cast<std::size_t>(r) * cols + cc;
                const long horiz = static_cast<long>(cc - c) * (cc - c);
                if (horiz > best)
                    continue;
                const long want = best - horiz;
                const long du = up[ai], dd = dn[ai];
                if (du < inf && du * du == want) {
                    sum += values[static_cast<std::size_t>(r - du) * cols + cc];
                    ++count;
                }
                // dd == 0 would be the same pixel as du == 0; any dd > 0 is a
                // distinct foreground pixel below.
                if (dd < inf && dd > 0 && dd * dd == want) {
                    sum += values[static_cast<std::size_t>(r + dd) * cols + cc];
                    ++count;
                }
            }
            out.dist2[at] = static_cast<double>(best);
            out.nearest_value[at] = sum / static_cast<double>(count);
        }
    });
    return out;
}

double adaptive_threshold(const Tensor& sal) {
    return std::min(2.0 * mean_of(sal.values()), 1.0);
}

double mae(const Tensor& sal, const Tensor& gt) {
    check_pair(sal, gt);
    const auto s = sal.values();
    const auto g = gt.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i)
        acc += std::abs(static_cast<double>(s[i]) - g[i]);
    return acc / static_cast<double>(s.size());
}

double f_measure(const Tensor& sal, const Tensor& gt) {
    check_pair(sal, gt);
    const double t = adaptive_threshold(sal);
    const auto s = sal.values();
    const auto g = gt.values();
    long actual = 0;
    for (float v : g)
        actual += v != 0.0f;
    if (actual == 0) {
        // All-background ground truth: perfect only when nothing exceeds the
        // threshold anywhere.
        for (float v : s)
            if (static_cast<double>(v) > t)
                return 0.0;
        return 1.0;
    }
    long tp = 0, predicted = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (static_cast<double>(s[i]) >= t) {
            ++predicted;
            tp += g[i] != 0.0f;
        }
    }
    if (tp == 0)
        return 0.0;
    const double precision = static_cast<double>(tp) / static_cast<double>(predicted);
    const double recall = static_cast<double>(tp) / static_cast<double>(actual);
    constexpr double beta2 = 0.3;
    return clamp01((1.0 + beta2) * precision * recall / (beta2 * precision + recall));
}

double weighted_f(const Tensor& sal, const Tensor& gt) {
    check_pair(sal, gt);
    const int rows = gt.height(), cols = gt.width();
    const std::size_t n = static_cast<std::size_t>(rows) * cols;
    const auto s = sal.values();
    const auto g = gt.values();
    long fg = 0;
    for (float v : g)
        fg += v != 0.0f;
    if (fg == 0) {
        for (float v : s)
            if (v > 0.0f)
                return 0.0;
        return 1.0;
    }

    std::vector<double> err(n);
    for (std::size_t i = 0; i < n; ++i)
        err[i] = std::abs(static_cast<double>(s[i]) - g[i]);

    // Background errors are replaced by the error at the nearest foreground
    // pixel before smoothing (tie-averaged), then the smoothed error may only
    // lower the foreground error.
    const ForegroundDistance fd = nearest_foreground(gt, err);

    std::vector<double> et(n);
    for (std::size_t i = 0; i < n; ++i)
        et[i] = g[i] != 0.0f ? err[i] : fd.nearest_value[i];
    const std::vector<double> ea = gauss7_zero_pad(et, rows, cols);

    double sum_ew_fg = 0.0, sum_ew_bg = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double e = err[i];
        if (g[i] != 0.0f && ea[i] < e)
            e = ea[i];
        if (g[i] != 0.0f) {
            sum_ew_fg += e; // importance weight 1 on foreground
        } else {
            const double w = 2.0 - std::exp(std::log(0.5) / 5.0 * std::sqrt(fd.dist2[i]));
            sum_ew_bg += e * w;
        }
    }
    const double tpw = static_cast<double>(fg) - sum_ew_fg;
    const double fpw = sum_ew_bg;
    const double recall = 1.0 - sum_ew_fg / static_cast<double>(fg);
    const double precision = tpw / (kEps + tpw + fpw);
    constexpr double beta2 = 1.0;
    return clamp01((1.0 + beta2) * recall * precision / (kEps + recall + beta2 * precision));
}

double s_measure(const Tensor& sal, const Tensor& gt) {
    check_pair(sal, gt);
    const double u = mean_of(gt.values());
    if (u == 0.0)
        return clamp01(1.0 - mean_of(sal.values()));
    if (u == 1.0)
        return clamp01(mean_of(sal.values()));
    constexpr double alpha = 0.5;
    return clamp01(alpha * s_object(sal, gt) + (1.0 - alpha) * s_region(sal, gt));
}

double e_measure(const Tensor& sal, const Tensor& gt) {
    check_pair(sal, gt);
    const double t = adaptive_threshold(sal);
    const auto s = sal.values();
    const auto g = gt.values();
    const std::size_t n = s.size();

    std::vector<double> fm(n);
    long fg = 0, bg = 0;
    for (std::size_t i = 0; i < n; ++i) {
        fm[i] = static_cast<double>(s[i]) >= t ? 1.0 : 0.0;
        if (g[i] != 0.0f)
            ++fg;
        else
            ++bg;
    }

    double sum_enh = 0.0;
    if (fg == 0) {
        for (double v : fm)
            sum_enh += 1.0 - v;
    } else if (bg == 0) {
        for (double v : fm)
            sum_enh += v;
    } else {
        double mu_fm = 0.0, mu_gt = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mu_fm += fm[i];
            mu_gt += g[i];
        }
        mu_fm /= static_cast<double>(n);
        mu_gt /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double af = fm[i] - mu_fm;
            const double ag = static_cast<double>(g[i]) - mu_gt;
            const double align = 2.0 * ag * af / (ag * ag + af * af + kEps);
            sum_enh += (align + 1.0) * (align + 1.0) / 4.0;
        }
    }
    return clamp01(sum_enh / (static_cast<double>(n) - 1.0 + kEps));
}

EvalReport evaluate(const Tensor& sal, const Tensor& gt) {
    EvalReport r;
    r.mae = mae(sal, gt);
    r.f_beta = f_measure(sal, gt);
    r.weighted_f = weighted_f(sal, gt);
    r.s_measure = s_measure(sal, gt);
    r.e_phi = e_measure(sal, gt);
    r.threshold = adaptive_threshold(sal);
    return r;
}

double psnr(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b))
        throw std::invalid_argument("psnr: shape mismatch");
    const auto av = a.values();
    const auto bv = b.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < av.size(); ++i) {
        const double d = static_cast<double>(av[i]) - bv[i];
        acc += d * d;
    }
    const double mse = acc / static_cast<double>(av.size());
    if (mse == 0.0)
        return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

} // namespace omnisal
