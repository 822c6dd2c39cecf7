#include "omnisal/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace omnisal {

namespace {

constexpr double kEps = 1e-7;

void check_pair(const Tensor& pred, const Tensor& truth) {
    if (!pred.same_shape(truth))
        throw std::invalid_argument("bce: prediction and ground-truth dims differ");
    if (pred.channels() != 1)
        throw std::invalid_argument("bce: single-channel maps expected");
}

} // namespace

double bce_loss(const Tensor& pred, const Tensor& truth) {
    check_pair(pred, truth);
    const auto p = pred.values();
    const auto g = truth.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = std::clamp(static_cast<double>(p[i]), kEps, 1.0 - kEps);
        const double gi = g[i];
        acc += gi * std::log(pi) + (1.0 - gi) * std::log(1.0 - pi);
    }
    return -acc / static_cast<double>(p.size());
}

Tensor bce_grad(const Tensor& pred, const Tensor& truth) {
    check_pair(pred, truth);
    Tensor out(1, pred.height(), pred.width());
    const auto p = pred.values();
    const auto g = truth.values();
    auto o = out.values();
    const double inv_n = 1.0 / static_cast<double>(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = std::clamp(static_cast<double>(p[i]), kEps, 1.0 - kEps);
        o[i] = static_cast<float>((pi - static_cast<double>(g[i])) / (pi * (1.0 - pi)) * inv_n);
    }
    return out;
}

double total_loss(double dominant, const std::array<double, 3>& sides, const LossWeights& w) {
    for (double a : w.alpha)
        if (a < 0.0)
            throw std::invalid_argument("total_loss: side-output weights must be nonnegative");
    double acc = dominant;
    for (int i = 0; i < 3; ++i)
        acc += w.alpha[static_cast<std::size_t>(i)] * sides[static_cast<std::size_t>(i)];
    return acc;
}

} // namespace omnisal
