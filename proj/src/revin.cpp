#include "cvtn/revin.hpp"

#include <cmath>
#include <memory>

namespace cvtn {

std::pair<Tensor, RevinState> revin_encode(const Tensor& x, const RevinAffine& affine) {
    if (x.ndim() != 2) throw ShapeError("revin_encode: expected [L x C] history");
    const int64_t rows = x.dim(0), c = x.dim(1);
    if (rows < 2) throw ContractError("revin_encode: needs at least 2 history rows");
    if (affine.gamma.dim(0) != c || affine.beta.dim(0) != c) {
        throw ShapeError("revin_encode: affine size does not match " + std::to_string(c) + " variables");
    }
    if (tracked_by_current_tape(x)) {
        throw ContractError("revin_encode: input is the data path and must not require gradients");
    }

    RevinState state;
    state.mean.resize(static_cast<size_t>(c));
    state.std.resize(static_cast<size_t>(c));
    for (int64_t j = 0; j < c; ++j) {
        double mean = 0.0;
        for (int64_t t = 0; t < rows; ++t) mean += x.data()[t * c + j];
        mean /= static_cast<double>(rows);
        double var = 0.0;
        for (int64_t t = 0; t < rows; ++t) {
            const double d = x.data()[t * c + j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(rows);
        state.mean[static_cast<size_t>(j)] = mean;
        state.std[static_cast<size_t>(j)] = std::sqrt(var + affine.eps);
    }

    Tensor out = Tensor::zeros(x.shape());
    auto xhat = std::make_shared<std::vector<double>>(static_cast<size_t>(rows * c));
    for (int64_t t = 0; t < rows; ++t) {
        for (int64_t j = 0; j < c; ++j) {
            const double h = (x.data()[t * c + j] - state.mean[static_cast<size_t>(j)]) /
                             state.std[static_cast<size_t>(j)];
            (*xhat)[static_cast<size_t>(t * c + j)] = h;
            out.data()[t * c + j] = affine.gamma.data()[j] * h + affine.beta.data()[j];
        }
    }
    Tensor recorded = record_or_value(
        out, {affine.gamma, affine.beta},
        [xhat, rows, c](const double* gout, const std::vector<double*>& gin) {
            for (int64_t t = 0; t < rows; ++t) {
                for (int64_t j = 0; j < c; ++j) {
                    const double g = gout[t * c + j];
                    if (gin[0]) gin[0][j] += g * (*xhat)[static_cast<size_t>(t * c + j)];
                    if (gin[1]) gin[1][j] += g;
                }
            }
        });
    return {recorded, state};
}

namespace {

double guarded(double gamma, double eps) {
    if (std::abs(gamma) >= eps) return gamma;
    return gamma < 0.0 ? -eps : eps;
}

} // namespace

Tensor revin_decode(const Tensor& y, const RevinState& state, const RevinAffine& affine) {
    if (y.ndim() != 2) throw ShapeError("revin_decode: expected [O x C] prediction");
    const int64_t rows = y.dim(0), c = y.dim(1);
    if (static_cast<int64_t>(state.mean.size()) != c) {
        throw ContractError("revin_decode: state covers " + std::to_string(state.mean.size()) +
                            " variables, prediction has " + std::to_string(c));
    }
    if (affine.gamma.dim(0) != c || affine.beta.dim(0) != c) {
        throw ShapeError("revin_decode: affine size does not match " + std::to_string(c) + " variables");
    }

    std::vector<double> denom(static_cast<size_t>(c));
    for (int64_t j = 0; j < c; ++j) denom[static_cast<size_t>(j)] = guarded(affine.gamma.data()[j], affine.eps);

    Tensor out = Tensor::zeros(y.shape());
    for (int64_t t = 0; t < rows; ++t) {
        for (int64_t j = 0; j < c; ++j) {
            const double z = (y.data()[t * c + j] - affine.beta.data()[j]) / denom[static_cast<size_t>(j)];
            out.data()[t * c + j] = z * state.std[static_cast<size_t>(j)] + state.mean[static_cast<size_t>(j)];
        }
    }
    std::vector<double> sdev = state.std;
    return record_or_value(
        out, {y, affine.gamma, affine.beta},
        [y, denom, sdev, rows, c, beta = affine.beta](const double* gout, const std::vector<double*>& gin) {
            for (int64_t t = 0; t < rows; ++t) {
                for (int64_t j = 0; j < c; ++j) {
                    const double g = gout[t * c + j];
                    const double s_over_g = sdev[static_cast<size_t>(j)] / denom[static_cast<size_t>(j)];
                    if (gin[0]) gin[0][t * c + j] += g * s_over_g;
                    if (gin[1]) {
                        const double centered = y.data()[t * c + j] - beta.data()[j];
                        gin[1][j] -= g * sdev[static_cast<size_t>(j)] * centered /
                                     (denom[static_cast<size_t>(j)] * denom[static_cast<size_t>(j)]);
                    }
                    if (gin[2]) gin[2][j] -= g * s_over_g;
                }
            }
        });
}

} // namespace cvtn
