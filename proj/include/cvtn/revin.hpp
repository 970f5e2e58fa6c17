#pragma once

#include <utility>
#include <vector>

#include "cvtn/tensor.hpp"

namespace cvtn {

/// Per-window statistics captured by revin_encode, needed to invert it.
struct RevinState {
    std::vector<double> mean;  // per variable
    std::vector<double> std;   // sqrt(var + eps), per variable
};

/// Learnable per-variable affine of the RevIN pair.
struct RevinAffine {
    Tensor gamma;  // [C]
    Tensor beta;   // [C]
    double eps = 1e-5;
};

/**
 * Removes per-window, per-variable statistics from a history block:
 * X'[:,c] = gamma_c * (X[:,c] - mean_c) / sqrt(var_c + eps) + beta_c,
 * with mean/var computed over this window's rows only. The input is the
 * data path and must not be differentiable; gradients flow into gamma
 * and beta.
 */
std::pair<Tensor, RevinState> revin_encode(const Tensor& x, const RevinAffine& affine);

/**
 * Exact inverse affine applied to a prediction in the encoded frame:
 * Y = ((Y' - beta) / gamma) * std + mean, with gamma guarded away from
 * zero by eps. Gradients flow into Y', gamma and beta.
 */
Tensor revin_decode(const Tensor& y, const RevinState& state, const RevinAffine& affine);

} // namespace cvtn
