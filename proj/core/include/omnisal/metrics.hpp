#ifndef OMNISAL_METRICS_HPP
#define OMNISAL_METRICS_HPP

#include "omnisal/tensor.hpp"

namespace omnisal {

// The five salient-object-detection metrics. Conventions are pinned to the
// community-standard definitions (they are not given by this codebase's own
// experiments): adaptive threshold min(2*mean(S), 1) with >= binarization,
// beta^2 = 0.3 for F-measure, beta^2 = 1 for weighted F-measure,
// S-measure alpha = 0.5, E-measure on the adaptively binarized map.
//
// Degenerate all-background ground truth: F-measure and weighted F-measure
// score 1 only for an everywhere-non-positive prediction; S-measure scores
// 1 - mean(S); E-measure enhances the complement map. Final scores are
// clamped to [0, 1].
//
// Saliency maps are single-channel with values in [0, 1]; ground truth is
// single-channel binary {0, 1}.

struct EvalReport {
    double e_phi = 0.0;
    double s_measure = 0.0;
    double weighted_f = 0.0;
    double f_beta = 0.0;
    double mae = 0.0;
    double threshold = 0.0; // adaptive threshold used by f_beta and e_phi
};

double adaptive_threshold(const Tensor& sal);

double mae(const Tensor& sal, const Tensor& gt);
double f_measure(const Tensor& sal, const Tensor& gt);
double weighted_f(const Tensor& sal, const Tensor& gt);
double s_measure(const Tensor& sal, const Tensor& gt);
double e_measure(const Tensor& sal, const Tensor& gt);

EvalReport evaluate(const Tensor& sal, const Tensor& gt);

/// Peak signal-to-noise ratio for [0, 1] rasters, dB. Equal inputs give
/// +infinity.
double psnr(const Tensor& a, const Tensor& b);

/// Exact Euclidean distance transform of the foreground mask: squared
/// distance to the nearest foreground pixel, plus the mean of `values` over
/// all equidistant nearest foreground pixels (the tie rule used by the
/// weighted F-measure). Foreground pixels keep their own value and distance
/// zero. Exposed for the oracle tests.
struct ForegroundDistance {
    std::vector<double> dist2;      // squared distance, -1 when no foreground
    std::vector<double> nearest_value; // tie-averaged value at the nearest foreground
};
ForegroundDistance nearest_foreground(const Tensor& gt, std::span<const double> values);

} // namespace omnisal

#endif
