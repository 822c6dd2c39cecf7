#ifndef OMNISAL_SELFTEST_ORACLES_HPP
#define OMNISAL_SELFTEST_ORACLES_HPP

#include "omnisal/dwf.hpp"
#include "omnisal/fr.hpp"
#include "omnisal/projection.hpp"
#include "omnisal/tensor.hpp"

// Naive reference implementations used to cross-check the optimized kernels.
// Everything here is written as plain scalar loops, structured differently
// from the library code, and must stay independent of it.

namespace omnisal::oracle {

Tensor conv3x3_naive(const Tensor& x, const ConvParams& p);
Tensor se_block_naive(const Tensor& x, const SEParams& p);
std::vector<float> gap_naive(const Tensor& x);
std::vector<float> fc_naive(std::span<const float> v, const LinearLayer& l);
Tensor upsample2_naive(const Tensor& x);

/// Scalar re-implementation of the intra-fusion weight arithmetic.
FusionWeights waf_naive(std::span<const Tensor> cu_feats, const SEParams& waf_se);

/// Step-by-step composition of the FR level stages using the naive
/// primitives above.
Tensor fr_sequential_naive(const FrLevelInputs& inputs, const FrParams& params);

/// Face with the smallest angular distance to d among the six face centers,
/// ties resolved in face order F, B, L, R, T, D.
Face owner_face_bruteforce(const Vec3& d);

// Brute-force metric implementations (double loops, no decompositions).
double mae_naive(const Tensor& sal, const Tensor& gt);
double f_measure_naive(const Tensor& sal, const Tensor& gt);
double weighted_f_naive(const Tensor& sal, const Tensor& gt);
double s_measure_naive(const Tensor& sal, const Tensor& gt);
double e_measure_naive(const Tensor& sal, const Tensor& gt);

} // namespace omnisal::oracle

#endif
