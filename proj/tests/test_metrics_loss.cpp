#include <doctest.h>

#include <stdexcept>

#include <cmath>

#include "omnisal/loss.hpp"
#include "omnisal/metrics.hpp"
#include "oracles.hpp"

using namespace omnisal;

namespace {

Tensor random_sal(Rng& rng, int h = 8, int w = 8) {
    Tensor t(1, h, w);
    for (float& v : t.values())
        v = rng.uniform(0.0f, 1.0f);
    return t;
}

Tensor random_gt(Rng& rng, int h = 8, int w = 8, int density_octile = 4) {
    Tensor t(1, h, w);
    for (float& v : t.values())
        v = (rng.next_u64() % 8) < static_cast<std::uint64_t>(density_octile) ? 1.0f : 0.0f;
    return t;
}

Tensor flip_h(const Tensor& t) {
    Tensor out(1, t.height(), t.width());
    for (int y = 0; y < t.height(); ++y)
        for (int x = 0; x < t.width(); ++x)
            out.at(0, y, x) = t.at(0, y, t.width() - 1 - x);
    return out;
}

// Fixtures whose centroid coincides exactly with a pixel center put that
// row/column on different sides of the S-measure quadrant split under
// flipping; the flip-invariance property skips them.
bool centroid_is_ambiguous(const Tensor& gt) {
    long total = 0, two_mx = 0, two_my = 0;
    for (int y = 0; y < gt.height(); ++y)
        for (int x = 0; x < gt.width(); ++x)
            if (gt.at(0, y, x) != 0.0f) {
                ++total;
                two_mx += 2L * x + 1;
                two_my += 2L * y + 1;
            }
    if (total == 0)
        return false;
    for (int x = 0; x < gt.width(); ++x)
        if ((2L * x + 1) * total == two_mx)
            return true;
    for (int y = 0; y < gt.height(); ++y)
        if ((2L * y + 1) * total == two_my)
            return true;
    return false;
}

} // namespace

TEST_CASE("bce of a 0.5 map is ln 2") {
    Rng rng(401);
    const Tensor p = Tensor::full(1, 4, 4, 0.5f);
    Tensor g = random_gt(rng, 4, 4);
    CHECK(bce_loss(p, g) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("bce of a perfect prediction is effectively zero") {
    Rng rng(402);
    const Tensor g = random_gt(rng, 4, 4);
    CHECK(bce_loss(g, g) <= 1.1e-7);
    CHECK(bce_loss(g, g) >= 0.0);
}

TEST_CASE("bce decomposes into its per-pixel mean") {
    Rng rng(403);
    Tensor p(1, 4, 4);
    for (float& v : p.values())
        v = rng.uniform(0.01f, 0.99f);
    const Tensor g = random_gt(rng, 4, 4);
    double acc = 0.0;
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            Tensor p1(1, 1, 1), g1(1, 1, 1);
            p1.at(0, 0, 0) = p.at(0, y, x);
            g1.at(0, 0, 0) = g.at(0, y, x);
            acc += bce_loss(p1, g1);
        }
    CHECK(bce_loss(p, g) == doctest::Approx(acc / 16.0).epsilon(1e-9));
    CHECK(bce_loss(p, g) >= 0.0);
}

TEST_CASE("bce gradient matches central finite differences") {
    Rng rng(404);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor p(1, 4, 4);
        for (float& v : p.values())
            v = rng.uniform(0.05f, 0.95f);
        const Tensor g = random_gt(rng, 4, 4);
        const Tensor grad = bce_grad(p, g);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                Tensor hi = p, lo = p;
                hi.at(0, y, x) += 1e-6f;
                lo.at(0, y, x) -= 1e-6f;
                const double fd = (bce_loss(hi, g) - bce_loss(lo, g)) /
                                  (static_cast<double>(hi.at(0, y, x)) - lo.at(0, y, x));
                REQUIRE(std::abs(fd - grad.at(0, y, x)) / std::max(std::abs(fd), 1e-12) <= 1e-4);
            }
    }
}

TEST_CASE("bce rejects mismatched dims") {
    CHECK_THROWS_AS(bce_loss(Tensor(1, 4, 4), Tensor(1, 4, 5)), std::invalid_argument);
    CHECK_THROWS_AS(bce_grad(Tensor(1, 4, 4), Tensor(1, 5, 4)), std::invalid_argument);
}

TEST_CASE("total loss arithmetic") {
    CHECK(total_loss(0.7, {0.0, 0.0, 0.0}) == doctest::Approx(0.7));
    LossWeights zero;
    zero.alpha = {0.0, 0.0, 0.0};
    CHECK(total_loss(0.7, {0.5, 0.9, 0.1}, zero) == doctest::Approx(0.7));
    CHECK(total_loss(0.1, {0.2, 0.3, 0.4}) == doctest::Approx(1.0));
    LossWeights bad;
    bad.alpha = {-1.0, 0.0, 0.0};
    CHECK_THROWS_AS(total_loss(0.0, {0.0, 0.0, 0.0}, bad), std::invalid_argument);
}

TEST_CASE("perfect and inverted predictions hit the metric extremes") {
    Rng rng(405);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor g = random_gt(rng);
        bool has_fg = false, has_bg = false;
        for (float v : g.values()) {
            has_fg = has_fg || v == 1.0f;
            has_bg = has_bg || v == 0.0f;
        }
        if (!has_fg || !has_bg)
            continue;
        CHECK(mae(g, g) == 0.0);
        CHECK(f_measure(g, g) == doctest::Approx(1.0));
        CHECK(weighted_f(g, g) == doctest::Approx(1.0));

        Tensor inv(1, 8, 8);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x)
                inv.at(0, y, x) = 1.0f - g.at(0, y, x);
        CHECK(mae(inv, g) == doctest::Approx(1.0));
    }
}

TEST_CASE("mae is invariant under binary complement") {
    Rng rng(406);
    // 8-bit-grid saliency values so the complement is exactly representable.
    Tensor s(1, 8, 8);
    for (float& v : s.values())
        v = static_cast<float>(rng.next_u64() % 256) / 256.0f;
    const Tensor g = random_gt(rng);
    Tensor s2(1, 8, 8), g2(1, 8, 8);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            s2.at(0, y, x) = 1.0f - s.at(0, y, x);
            g2.at(0, y, x) = 1.0f - g.at(0, y, x);
        }
    CHECK(mae(s, g) == doctest::Approx(mae(s2, g2)).epsilon(1e-12));
}

TEST_CASE("all five metrics are invariant under a simultaneous horizontal flip") {
    Rng rng(407);
    int tested = 0;
    for (int trial = 0; tested < 40 && trial < 200; ++trial) {
        const Tensor s = random_sal(rng);
        const Tensor g = random_gt(rng, 8, 8, 1 + static_cast<int>(rng.next_u64() % 6));
        if (centroid_is_ambiguous(g))
            continue;
        ++tested;
        const Tensor fs = flip_h(s), fg = flip_h(g);
        CHECK(mae(s, g) == doctest::Approx(mae(fs, fg)).epsilon(1e-9));
        CHECK(f_measure(s, g) == doctest::Approx(f_measure(fs, fg)).epsilon(1e-9));
        CHECK(weighted_f(s, g) == doctest::Approx(weighted_f(fs, fg)).epsilon(1e-9));
        CHECK(s_measure(s, g) == doctest::Approx(s_measure(fs, fg)).epsilon(1e-9));
        CHECK(e_measure(s, g) == doctest::Approx(e_measure(fs, fg)).epsilon(1e-9));
    }
    CHECK(tested >= 30);
}

TEST_CASE("the ground truth is the best prediction of itself") {
    Rng rng(408);
    for (int trial = 0; trial < 10; ++trial) {
        Tensor g = random_gt(rng);
        bool has_fg = false, has_bg = false;
        for (float v : g.values()) {
            has_fg = has_fg || v == 1.0f;
            has_bg = has_bg || v == 0.0f;
        }
        if (!has_fg || !has_bg)
            continue;
        const double best = f_measure(g, g);
        for (int k = 0; k < 5; ++k)
            CHECK(f_measure(random_sal(rng), g) <= best);
    }
}

TEST_CASE("optimized metrics match the brute-force oracles") {
    Rng rng(409);
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        const Tensor s = random_sal(rng);
        const Tensor g = random_gt(rng, 8, 8, 1 + static_cast<int>(rng.next_u64() % 7));
        worst = std::max({worst, std::abs(mae(s, g) - oracle::mae_naive(s, g)),
                          std::abs(f_measure(s, g) - oracle::f_measure_naive(s, g)),
                          std::abs(weighted_f(s, g) - oracle::weighted_f_naive(s, g)),
                          std::abs(s_measure(s, g) - oracle::s_measure_naive(s, g)),
                          std::abs(e_measure(s, g) - oracle::e_measure_naive(s, g))});
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("degenerate ground-truth rules") {
    const Tensor zeros(1, 8, 8);
    const Tensor ones = Tensor::full(1, 8, 8, 1.0f);

    // Empty ground truth.
    CHECK(mae(zeros, zeros) == 0.0);
    CHECK(f_measure(zeros, zeros) == 1.0);
    CHECK(weighted_f(zeros, zeros) == 1.0);
    CHECK(s_measure(zeros, zeros) == 1.0);
    CHECK(e_measure(zeros, zeros) == 0.0); // binarizes to all-foreground at t = 0
    CHECK(weighted_f(ones, zeros) == 0.0);
    CHECK(s_measure(ones, zeros) == 0.0);

    // All-foreground ground truth.
    CHECK(f_measure(ones, ones) == doctest::Approx(1.0));
    CHECK(weighted_f(ones, ones) == doctest::Approx(1.0));
    CHECK(s_measure(ones, ones) == doctest::Approx(1.0));
    CHECK(e_measure(ones, ones) == doctest::Approx(1.0));

    // Single-pixel foreground and edge-hugging centroid.
    Tensor single(1, 8, 8);
    single.at(0, 3, 3) = 1.0f;
    Rng rng(410);
    const Tensor s = random_sal(rng);
    for (const Tensor& gt : {single}) {
        const double val = s_measure(s, gt);
        CHECK(std::isfinite(val));
        CHECK(val >= 0.0);
        CHECK(val <= 1.0);
        CHECK(val == doctest::Approx(oracle::s_measure_naive(s, gt)).epsilon(1e-9));
        CHECK(weighted_f(s, gt) == doctest::Approx(oracle::weighted_f_naive(s, gt)).epsilon(1e-9));
    }
    Tensor last_col(1, 8, 8);
    for (int r = 0; r < 8; ++r)
        last_col.at(0, r, 7) = 1.0f;
    const double edge = s_measure(s, last_col);
    CHECK(std::isfinite(edge));
    CHECK(edge == doctest::Approx(oracle::s_measure_naive(s, last_col)).epsilon(1e-9));
}

TEST_CASE("metric scores always land in [0,1]") {
    Rng rng(411);
    for (int trial = 0; trial < 50; ++trial) {
        const Tensor s = random_sal(rng);
        const Tensor g = random_gt(rng, 8, 8, static_cast<int>(rng.next_u64() % 9));
        const EvalReport r = evaluate(s, g);
        for (double v : {r.e_phi, r.s_measure, r.weighted_f, r.f_beta, r.mae}) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("metric input validation") {
    Tensor bad(1, 4, 4);
    bad.at(0, 0, 0) = 0.25f; // not binary
    CHECK_THROWS_AS(mae(Tensor(1, 4, 4), bad), std::invalid_argument);
    CHECK_THROWS_AS(mae(Tensor(1, 4, 4), Tensor(1, 4, 5)), std::invalid_argument);
    Tensor out_of_range(1, 4, 4);
    out_of_range.at(0, 0, 0) = 1.5f;
    CHECK_THROWS_AS(f_measure(out_of_range, Tensor(1, 4, 4)), std::invalid_argument);
}

TEST_CASE("psnr basics") {
    const Tensor a = Tensor::full(1, 4, 4, 0.5f);
    CHECK(std::isinf(psnr(a, a)));
    Tensor b = a;
    for (float& v : b.values())
        v += 0.1f;
    CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-4));
}
