#include "cvtn/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace cvtn {

namespace {

void require_match(const Tensor& pred, const Tensor& truth, const char* who) {
    if (pred.shape() != truth.shape()) {
        throw ShapeError(std::string(who) + ": prediction and target shapes differ");
    }
}

} // namespace

double mse(const Tensor& pred, const Tensor& truth) {
    require_match(pred, truth, "mse");
    const int64_t n = pred.numel();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double d = pred.data()[i] - truth.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(n);
}

double mae(const Tensor& pred, const Tensor& truth) {
    require_match(pred, truth, "mae");
    const int64_t n = pred.numel();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) acc += std::abs(pred.data()[i] - truth.data()[i]);
    return acc / static_cast<double>(n);
}

Tensor mse_loss(const Tensor& pred, const Tensor& truth) {
    require_match(pred, truth, "mse_loss");
    Tensor diff = sub(pred, truth);
    return mean_all(mul(diff, diff));
}

Aggregate aggregate(std::vector<double> values) {
    if (values.empty()) throw ContractError("aggregate: no values");
    double sum = 0.0;
    for (double v : values) sum += v;
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    const double median = (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
    return {sum / static_cast<double>(n), median};
}

} // namespace cvtn
