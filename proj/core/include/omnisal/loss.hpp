#ifndef OMNISAL_LOSS_HPP
#define OMNISAL_LOSS_HPP

#include <array>

#include "omnisal/tensor.hpp"

namespace omnisal {

/// Binary cross-entropy, averaged over pixels. Predictions are clamped to
/// [eps, 1 - eps] with eps = 1e-7 before the logs; evaluation is in double.
double bce_loss(const Tensor& pred, const Tensor& truth);

/// dL/dP at each pixel, evaluated on the clamped prediction:
/// (P - G) / (P (1 - P)) / (W H).
Tensor bce_grad(const Tensor& pred, const Tensor& truth);

struct LossWeights {
    std::array<double, 3> alpha = {1.0, 1.0, 1.0};
};

/// L_total = L_dom + sum_i alpha_i * L_side_i.
double total_loss(double dominant, const std::array<double, 3>& sides, const LossWeights& w = {});

} // namespace omnisal

#endif
