#pragma once

#include <vector>

#include "cvtn/tensor.hpp"

namespace cvtn {

/// Mean squared error over all elements. Plain value, never taped.
double mse(const Tensor& pred, const Tensor& truth);

/// Mean absolute error over all elements. Plain value, never taped.
double mae(const Tensor& pred, const Tensor& truth);

/// Differentiable MSE: mean of the squared difference, recorded on the
/// active tape. The target is treated as a constant.
Tensor mse_loss(const Tensor& pred, const Tensor& truth);

struct Aggregate {
    double avg;
    double median;
};

/// Arithmetic mean plus median (mean of the middle pair when even).
Aggregate aggregate(std::vector<double> values);

} // namespace cvtn
