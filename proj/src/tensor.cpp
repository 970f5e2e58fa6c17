#include "cvtn/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <sstream>
#include <utility>

namespace cvtn {

namespace {

int64_t shape_numel(const Shape& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
        if (d <= 0) throw ShapeError("tensor extents must be positive");
        n *= d;
    }
    return n;
}

std::string shape_str(const Shape& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

void require_2d(const Tensor& t, const char* who) {
    if (t.ndim() != 2) throw ShapeError(std::string(who) + ": expected a 2-d tensor, got " + shape_str(t.shape()));
}

thread_local Tape* g_current_tape = nullptr;
std::atomic<uint64_t> g_tape_counter{0};

} // namespace

// ---------------------------------------------------------------------------
// Tensor
// ---------------------------------------------------------------------------

Tensor Tensor::zeros(Shape shape) {
    return full(std::move(shape), 0.0);
}

Tensor Tensor::full(Shape shape, double value) {
    Tensor t;
    int64_t n = shape_numel(shape);
    t.d_ = std::make_shared<detail::TensorData>();
    t.d_->shape = std::move(shape);
    t.d_->values.assign(static_cast<size_t>(n), value);
    return t;
}

Tensor Tensor::from(Shape shape, std::vector<double> values) {
    int64_t n = shape_numel(shape);
    if (n != static_cast<int64_t>(values.size())) {
        throw ShapeError("Tensor::from: " + shape_str(shape) + " needs " + std::to_string(n) +
                         " values, got " + std::to_string(values.size()));
    }
    Tensor t;
    t.d_ = std::make_shared<detail::TensorData>();
    t.d_->shape = std::move(shape);
    t.d_->values = std::move(values);
    return t;
}

Tensor Tensor::scalar(double value) {
    return from({1}, {value});
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
    if (static_cast<int>(idx.size()) != ndim()) throw ShapeError("Tensor::at: index rank mismatch");
    int64_t flat = 0;
    int axis = 0;
    for (int64_t i : idx) {
        flat = flat * d_->shape[static_cast<size_t>(axis)] + i;
        ++axis;
    }
    return d_->values[static_cast<size_t>(flat)];
}

double& Tensor::at_mut(std::initializer_list<int64_t> idx) {
    if (static_cast<int>(idx.size()) != ndim()) throw ShapeError("Tensor::at_mut: index rank mismatch");
    int64_t flat = 0;
    int axis = 0;
    for (int64_t i : idx) {
        flat = flat * d_->shape[static_cast<size_t>(axis)] + i;
        ++axis;
    }
    return d_->values[static_cast<size_t>(flat)];
}

double Tensor::value() const {
    if (numel() != 1) throw ContractError("Tensor::value: tensor is not scalar, shape " + shape_str(shape()));
    return d_->values[0];
}

Tensor& Tensor::set_requires_grad(bool flag) {
    if (d_->node >= 0) throw ContractError("set_requires_grad: only leaf tensors can be differentiated");
    d_->requires_grad = flag;
    if (flag) {
        d_->grad.assign(d_->values.size(), 0.0);
    } else {
        d_->grad.clear();
    }
    return *this;
}

std::vector<double>& Tensor::grad() {
    if (d_->grad.empty()) throw ContractError("Tensor::grad: no gradient buffer (requires_grad is off)");
    return d_->grad;
}

const std::vector<double>& Tensor::grad() const {
    if (d_->grad.empty()) throw ContractError("Tensor::grad: no gradient buffer (requires_grad is off)");
    return d_->grad;
}

void Tensor::zero_grad() {
    std::fill(d_->grad.begin(), d_->grad.end(), 0.0);
}

Tensor Tensor::clone() const {
    return Tensor::from(d_->shape, d_->values);
}

// ---------------------------------------------------------------------------
// Tape
// ---------------------------------------------------------------------------

Tape::Tape() : id_(++g_tape_counter) {}

Tape* Tape::current() {
    return g_current_tape;
}

Tape::Scope::Scope(Tape& tape) : previous_(g_current_tape) {
    g_current_tape = &tape;
}

Tape::Scope::~Scope() {
    g_current_tape = previous_;
}

int64_t Tape::add_node(Node node) {
    nodes_.push_back(std::move(node));
    return static_cast<int64_t>(nodes_.size()) - 1;
}

namespace {

bool on_tape(const detail::TensorData& td, const Tape& tape) {
    return td.node >= 0 && td.tape_id == tape.id();
}

bool differentiable_input(const detail::TensorData& td, const Tape& tape) {
    return td.requires_grad || on_tape(td, tape);
}

} // namespace

void Tape::backward(const Tensor& loss) {
    if (!loss.defined() || !on_tape(*loss.d_, *this)) {
        throw ContractError("backward: loss is not recorded on this tape");
    }
    if (loss.numel() != 1) {
        throw ContractError("backward: loss must be scalar, shape " + shape_str(loss.shape()));
    }

    const int64_t start = loss.d_->node;
    std::vector<char> reachable(nodes_.size(), 0);
    std::vector<int64_t> stack{start};
    while (!stack.empty()) {
        int64_t i = stack.back();
        stack.pop_back();
        if (reachable[static_cast<size_t>(i)]) continue;
        reachable[static_cast<size_t>(i)] = 1;
        for (const auto& in : nodes_[static_cast<size_t>(i)].inputs) {
            if (on_tape(*in, *this) && !reachable[static_cast<size_t>(in->node)]) {
                stack.push_back(in->node);
            }
        }
    }

    std::vector<std::vector<double>> node_grads(nodes_.size());
    for (size_t i = 0; i <= static_cast<size_t>(start); ++i) {
        if (reachable[i]) node_grads[i].assign(static_cast<size_t>(nodes_[i].out_numel), 0.0);
    }
    node_grads[static_cast<size_t>(start)][0] = 1.0;

    std::vector<double*> gin;
    for (int64_t i = start; i >= 0; --i) {
        if (!reachable[static_cast<size_t>(i)]) continue;
        Node& node = nodes_[static_cast<size_t>(i)];
        gin.clear();
        for (const auto& in : node.inputs) {
            if (on_tape(*in, *this)) {
                gin.push_back(node_grads[static_cast<size_t>(in->node)].data());
            } else if (in->requires_grad) {
                gin.push_back(in->grad.data());
            } else {
                gin.push_back(nullptr);
            }
        }
        node.backward(node_grads[static_cast<size_t>(i)].data(), gin);
    }
}

bool tracked_by_current_tape(const Tensor& t) {
    Tape* tape = Tape::current();
    if (!t.defined()) return false;
    if (t.d_->requires_grad) return true;
    return tape && on_tape(*t.d_, *tape);
}

Tensor record_or_value(Tensor out, std::vector<Tensor> inputs,
                       std::function<void(const double*, const std::vector<double*>&)> backward) {
    Tape* tape = Tape::current();
    if (!tape) return out;
    bool any = false;
    for (const Tensor& in : inputs) {
        if (differentiable_input(*in.d_, *tape)) {
            any = true;
            break;
        }
    }
    if (!any) return out;

    Tape::Node node;
    node.inputs.reserve(inputs.size());
    for (Tensor& in : inputs) node.inputs.push_back(in.d_);
    node.backward = std::move(backward);
    node.out_numel = out.numel();
    out.d_->tape_id = tape->id();
    out.d_->node = tape->add_node(std::move(node));
    return out;
}

// ---------------------------------------------------------------------------
// Primitives
// ---------------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    require_2d(a, "matmul");
    require_2d(b, "matmul");
    const int64_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2) {
        throw ShapeError("matmul: inner extents differ, " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    Tensor out = Tensor::zeros({m, n});
    {
        const double* pa = a.data();
        const double* pb = b.data();
        double* pc = out.data();
        for (int64_t i = 0; i < m; ++i) {
            for (int64_t p = 0; p < k; ++p) {
                const double aik = pa[i * k + p];
                const double* brow = pb + p * n;
                double* crow = pc + i * n;
                for (int64_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
            }
        }
    }
    return record_or_value(out, {a, b}, [a, b, m, k, n](const double* gout, const std::vector<double*>& gin) {
        const double* pa = a.data();
        const double* pb = b.data();
        if (gin[0]) {
            // dA[i,p] += sum_j G[i,j] * B[p,j]
            for (int64_t i = 0; i < m; ++i) {
                const double* grow = gout + i * n;
                double* darow = gin[0] + i * k;
                for (int64_t p = 0; p < k; ++p) {
                    const double* brow = pb + p * n;
                    double acc = 0.0;
                    for (int64_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                    darow[p] += acc;
                }
            }
        }
        if (gin[1]) {
            // dB[p,j] += sum_i A[i,p] * G[i,j]
            for (int64_t i = 0; i < m; ++i) {
                const double* grow = gout + i * n;
                const double* arow = pa + i * k;
                for (int64_t p = 0; p < k; ++p) {
                    const double aip = arow[p];
                    double* dbrow = gin[1] + p * n;
                    for (int64_t j = 0; j < n; ++j) dbrow[j] += aip * grow[j];
                }
            }
        }
    });
}

Tensor transpose(const Tensor& x) {
    require_2d(x, "transpose");
    const int64_t m = x.dim(0), n = x.dim(1);
    Tensor out = Tensor::zeros({n, m});
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) out.data()[j * m + i] = x.data()[i * n + j];
    return record_or_value(out, {x}, [m, n](const double* gout, const std::vector<double*>& gin) {
        if (!gin[0]) return;
        for (int64_t j = 0; j < n; ++j)
            for (int64_t i = 0; i < m; ++i) gin[0][i * n + j] += gout[j * m + i];
    });
}

namespace {

void require_same_shape(const Tensor& a, const Tensor& b, const char* who) {
    if (a.shape() != b.shape()) {
        throw ShapeError(std::string(who) + ": shapes differ, " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
}

} // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = Tensor::zeros(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] + b.data()[i];
    return record_or_value(out, {a, b}, [n](const double* gout, const std::vector<double*>& gin) {
        for (int idx = 0; idx < 2; ++idx) {
            if (!gin[idx]) continue;
            for (int64_t i = 0; i < n; ++i) gin[idx][i] += gout[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = Tensor::zeros(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] - b.data()[i];
    return record_or_value(out, {a, b}, [n](const double* gout, const std::vector<double*>& gin) {
        if (gin[0])
            for (int64_t i = 0; i < n; ++i) gin[0][i] += gout[i];
        if (gin[1])
            for (int64_t i = 0; i < n; ++i) gin[1][i] -= gout[i];
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = Tensor::zeros(a.shape());
    const int64_t n = a.numel();
    for (int64_t i = 0; i < n; ++i) out.data()[i] = a.data()[i] * b.data()[i];
    return record_or_value(out, {a, b}, [a, b, n](const double* gout, const std::vector<double*>& gin) {
        if (gin[0])
            for (int64_t i = 0; i < n; ++i) gin[0][i] += gout[i] * b.data()[i];
        if (gin[1])
            for (int64_t i = 0; i < n; ++i) gin[1][i] += gout[i] * a.data()[i];
    });
}

Tensor scale(const Tensor& x, double s) {
    Tensor out = Tensor::zeros(x.shape());
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) out.data()[i] = x.data()[i] * s;
    return record_or_value(out, {x}, [s, n](const double* gout, const std::vector<double*>& gin) {
        if (!gin[0]) return;
        for (int64_t i = 0; i < n; ++i) gin[0][i] += gout[i] * s;
    });
}

Tensor add_bias_per_col(const Tensor& x, const Tensor& b) {
    require_2d(x, "add_bias_per_col");
    if (b.ndim() != 1 || b.dim(0) != x.dim(1)) {
        throw ShapeError("add_bias_per_col: bias " + shape_str(b.shape()) + " does not match columns of " +
                         shape_str(x.shape()));
    }
    const int64_t m = x.dim(0), n = x.dim(1);
    Tensor out = Tensor::zeros(x.shape());
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) out.data()[i * n + j] = x.data()[i * n + j] + b.data()[j];
    return record_or_value(out, {x, b}, [m, n](const double* gout, const std::vector<double*>& gin) {
        if (gin[0])
            for (int64_t i = 0; i < m * n; ++i) gin[0][i] += gout[i];
        if (gin[1])
            for (int64_t i = 0; i < m; ++i)
                for (int64_t j = 0; j < n; ++j) gin[1][j] += gout[i * n + j];
    });
}

Tensor add_bias_per_row(const Tensor& x, const Tensor& b) {
    require_2d(x, "add_bias_per_row");
    if (b.ndim() != 1 || b.dim(0) != x.dim(0)) {
        throw ShapeError("add_bias_per_row: bias " + shape_str(b.shape()) + " does not match rows of " +
                         shape_str(x.shape()));
    }
    const int64_t m = x.dim(0), n = x.dim(1);
    Tensor out = Tensor::zeros(x.shape());
    for (int64_t i = 0; i < m; ++i)
        for (int64_t j = 0; j < n; ++j) out.data()[i * n + j] = x.data()[i * n + j] + b.data()[i];
    return record_or_value(out, {x, b}, [m, n](const double* gout, const std::vector<double*>& gin) {
        if (gin[0])
            for (int64_t i = 0; i < m * n; ++i) gin[0][i] += gout[i];
        if (gin[1])
            for (int64_t i = 0; i < m; ++i)
                for (int64_t j = 0; j < n; ++j) gin[1][i] += gout[i * n + j];
    });
}

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

} // namespace

Tensor gelu(const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) {
        const double v = x.data()[i];
        out.data()[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    }
    return record_or_value(out, {x}, [x, n](const double* gout, const std::vector<double*>& gin) {
        if (!gin[0]) return;
        for (int64_t i = 0; i < n; ++i) {
            const double v = x.data()[i];
            const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
            gin[0][i] += gout[i] * (cdf + v * pdf);
        }
    });
}

Tensor relu(const Tensor& x) {
    Tensor out = Tensor::zeros(x.shape());
    const int64_t n = x.numel();
    for (int64_t i = 0; i < n; ++i) out.data()[i] = x.data()[i] > 0.0 ? x.data()[i] : 0.0;
    return record_or_value(out, {x}, [x, n](const double* gout, const std::vector<double*>& gin) {
        if (!gin[0]) return;
        for (int64_t i = 0; i < n; ++i)
            if (x.data()[i] > 0.0) gin[0][i] += gout[i];
    });
}

Tensor softmax_rows(const Tensor& x) {
    require_2d(x, "softmax_rows");
    const int64_t m = x.dim(0), n = x.dim(1);
    Tensor out = Tensor::zeros(x.shape());
    for (int64_t i = 0; i < m; ++i) {
        const double* row = x.data() + i * n;
        double mx = row[0];
        for (int64_t j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        if (std::isnan(mx)) throw NumericError("softmax_rows: NaN in row " + std::to_string(i));
        double* orow = out.data() + i * n;
        double sum = 0.0;
        for (int64_t j = 0; j < n; ++j) {
            orow[j] = std::exp(row[j] - mx);
            sum += orow[j];
        }
        for (int64_t j = 0; j < n; ++j) orow[j] /= sum;
    }
    return record_or_value(out, {x}, [out, m, n](const double* gout, const std::vector<double*>& gin) {
        if (!gin[0]) return;
        // dx = y * (g - sum_j g_j y_j) per row
        for (int64_t i = 0; i < m; ++i) {
            const double* y = out.data() + i * n;
            const double* g = gout + i * n;
            double dot = 0.0;
            for (int64_t j = 0; j < n; ++j) dot += g[j] * y[j];
            double* dx = gin[0] + i * n;
            for (int64_t j = 0; j < n; ++j) dx[j] += y[j] * (g[j] - dot);
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    require_2d(x, "layer_norm");
    const int64_t m = x.dim(0), n = x.dim(1);
    if (n < 2) throw ConfigError("layer_norm: needs at least 2 features per row");
    if (eps <= 0.0) throw ConfigError("layer_norm: eps must be positive");
    if (gamma.ndim() != 1 || gamma.dim(0) != n || beta.ndim() != 1 || beta.dim(0) != n) {
        throw ShapeError("layer_norm: gamma/beta must have one entry per column");
    }

    Tensor out = Tensor::zeros(x.shape());
    // xhat and 1/std are reused by the backward pass
    auto xhat = std::make_shared<std::vector<double>>(static_cast<size_t>(m * n));
    auto inv_std = std::make_shared<std::vector<double>>(static_cast<size_t>(m));
    for (int64_t i = 0; i < m; ++i) {
        const double* row = x.data() + i * n;
        double mean = 0.0;
        for (int64_t j = 0; j < n; ++j) mean += row[j];
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (int64_t j = 0; j < n; ++j) {
            const double d = row[j] - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[static_cast<size_t>(i)] = is;
        for (int64_t j = 0; j < n; ++j) {
            const double h = (row[j] - mean) * is;
            (*xhat)[static_cast<size_t>(i * n + j)] = h;
            out.data()[i * n + j] = gamma.data()[j] * h + beta.data()[j];
        }
    }
    return record_or_value(out, {x, gamma, beta},
                           [xhat, inv_std, gamma, m, n](const double* gout, const std::vector<double*>& gin) {
        for (int64_t i = 0; i < m; ++i) {
            const double* g = gout + i * n;
            const double* h = xhat->data() + i * n;
            if (gin[0]) {
                // dxhat = g * gamma; dx = (dxhat - mean(dxhat) - xhat*mean(dxhat*xhat)) * inv_std
                double mean_dh = 0.0, mean_dh_h = 0.0;
                for (int64_t j = 0; j < n; ++j) {
                    const double dh = g[j] * gamma.data()[j];
                    mean_dh += dh;
                    mean_dh_h += dh * h[j];
                }
                mean_dh /= static_cast<double>(n);
                mean_dh_h /= static_cast<double>(n);
                const double is = (*inv_std)[static_cast<size_t>(i)];
                double* dx = gin[0] + i * n;
                for (int64_t j = 0; j < n; ++j) {
                    const double dh = g[j] * gamma.data()[j];
                    dx[j] += (dh - mean_dh - h[j] * mean_dh_h) * is;
                }
            }
            if (gin[1])
                for (int64_t j = 0; j < n; ++j) gin[1][j] += g[j] * h[j];
            if (gin[2])
                for (int64_t j = 0; j < n; ++j) gin[2][j] += g[j];
        }
    });
}

Tensor conv1d_same(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_2d(x, "conv1d_same");
    if (w.ndim() != 3) throw ShapeError("conv1d_same: kernel must be [F_out x F_in x k]");
    const int64_t f_in = x.dim(0), t_len = x.dim(1);
    const int64_t f_out = w.dim(0), w_in = w.dim(1), k = w.dim(2);
    if (w_in != f_in) {
        throw ShapeError("conv1d_same: kernel input channels " + std::to_string(w_in) + " != input channels " +
                         std::to_string(f_in));
    }
    if (k % 2 == 0) throw ConfigError("conv1d_same: kernel size must be odd, got " + std::to_string(k));
    if (b.ndim() != 1 || b.dim(0) != f_out) throw ShapeError("conv1d_same: bias must have F_out entries");
    const int64_t pad = (k - 1) / 2;

    Tensor out = Tensor::zeros({f_out, t_len});
    for (int64_t f = 0; f < f_out; ++f) {
        double* orow = out.data() + f * t_len;
        for (int64_t t = 0; t < t_len; ++t) orow[t] = b.data()[f];
        for (int64_t c = 0; c < f_in; ++c) {
            const double* xrow = x.data() + c * t_len;
            const double* wrow = w.data() + (f * f_in + c) * k;
            for (int64_t kk = 0; kk < k; ++kk) {
                const double wv = wrow[kk];
                const int64_t off = kk - pad;
                const int64_t t0 = std::max<int64_t>(0, -off);
                const int64_t t1 = std::min<int64_t>(t_len, t_len - off);
                for (int64_t t = t0; t < t1; ++t) orow[t] += wv * xrow[t + off];
            }
        }
    }
    return record_or_value(out, {x, w, b},
                           [x, w, f_in, f_out, t_len, k, pad](const double* gout, const std::vector<double*>& gin) {
        for (int64_t f = 0; f < f_out; ++f) {
            const double* grow = gout + f * t_len;
            if (gin[2]) {
                double acc = 0.0;
                for (int64_t t = 0; t < t_len; ++t) acc += grow[t];
                gin[2][f] += acc;
            }
            for (int64_t c = 0; c < f_in; ++c) {
                const double* xrow = x.data() + c * t_len;
                const double* wrow = w.data() + (f * f_in + c) * k;
                for (int64_t kk = 0; kk < k; ++kk) {
                    const int64_t off = kk - pad;
                    const int64_t t0 = std::max<int64_t>(0, -off);
                    const int64_t t1 = std::min<int64_t>(t_len, t_len - off);
                    if (gin[1]) {
                        double acc = 0.0;
                        for (int64_t t = t0; t < t1; ++t) acc += grow[t] * xrow[t + off];
                        gin[1][(f * f_in + c) * k + kk] += acc;
                    }
                    if (gin[0]) {
                        double* dxrow = gin[0] + c * t_len;
                        const double wv = wrow[kk];
                        for (int64_t t = t0; t < t1; ++t) dxrow[t + off] += grow[t] * wv;
                    }
                }
            }
        }
    });
}

Tensor pointwise_conv(const Tensor& x, const Tensor& w, const Tensor& b) {
    require_2d(x, "pointwise_conv");
    require_2d(w, "pointwise_conv");
    if (w.dim(1) != x.dim(0)) {
        throw ShapeError("pointwise_conv: kernel " + shape_str(w.shape()) + " does not match input channels of " +
                         shape_str(x.shape()));
    }
    if (b.ndim() != 1 || b.dim(0) != w.dim(0)) throw ShapeError("pointwise_conv: bias must have F_out entries");
    return add_bias_per_row(matmul(w, x), b);
}

Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat_rows: nothing to concatenate");
    const int64_t n = parts[0].dim(1);
    int64_t rows = 0;
    for (const Tensor& p : parts) {
        require_2d(p, "concat_rows");
        if (p.dim(1) != n) throw ShapeError("concat_rows: column counts differ");
        rows += p.dim(0);
    }
    Tensor out = Tensor::zeros({rows, n});
    int64_t r = 0;
    for (const Tensor& p : parts) {
        std::copy(p.data(), p.data() + p.numel(), out.data() + r * n);
        r += p.dim(0);
    }
    std::vector<int64_t> part_rows;
    for (const Tensor& p : parts) part_rows.push_back(p.dim(0));
    return record_or_value(out, parts, [part_rows, n](const double* gout, const std::vector<double*>& gin) {
        int64_t r = 0;
        for (size_t idx = 0; idx < part_rows.size(); ++idx) {
            const int64_t count = part_rows[idx] * n;
            if (gin[idx]) {
                const double* g = gout + r * n;
                for (int64_t i = 0; i < count; ++i) gin[idx][i] += g[i];
            }
            r += part_rows[idx];
        }
    });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw ShapeError("concat_cols: nothing to concatenate");
    const int64_t m = parts[0].dim(0);
    int64_t cols = 0;
    for (const Tensor& p : parts) {
        require_2d(p, "concat_cols");
        if (p.dim(0) != m) throw ShapeError("concat_cols: row counts differ");
        cols += p.dim(1);
    }
    Tensor out = Tensor::zeros({m, cols});
    int64_t c = 0;
    for (const Tensor& p : parts) {
        const int64_t pn = p.dim(1);
        for (int64_t i = 0; i < m; ++i)
            std::copy(p.data() + i * pn, p.data() + (i + 1) * pn, out.data() + i * cols + c);
        c += pn;
    }
    std::vector<int64_t> part_cols;
    for (const Tensor& p : parts) part_cols.push_back(p.dim(1));
    return record_or_value(out, parts, [part_cols, m, cols](const double* gout, const std::vector<double*>& gin) {
        int64_t c = 0;
        for (size_t idx = 0; idx < part_cols.size(); ++idx) {
            const int64_t pn = part_cols[idx];
            if (gin[idx]) {
                for (int64_t i = 0; i < m; ++i) {
                    const double* g = gout + i * cols + c;
                    double* d = gin[idx] + i * pn;
                    for (int64_t j = 0; j < pn; ++j) d[j] += g[j];
                }
            }
            c += pn;
        }
    });
}

Tensor slice_rows(const Tensor& x, int64_t r0, int64_t r1) {
    require_2d(x, "slice_rows");
    const int64_t m = x.dim(0), n = x.dim(1);
    if (r0 < 0 || r1 > m || r0 >= r1) throw ShapeError("slice_rows: bad range [" + std::to_string(r0) + ", " +
                                                       std::to_string(r1) + ") for " + std::to_string(m) + " rows");
    Tensor out = Tensor::zeros({r1 - r0, n});
    std::copy(x.data() + r0 * n, x.data() + r1 * n, out.data());
    return record_or_value(out, {x}, [r0, r1, n](const double* gout, const std::vector<double*>& gin) {
        if (!gin[0]) return;
        const int64_t count = (r1 - r0) * n;
        double* d = gin[0] + r0 * n;
        for (int64_t i = 0; i < count; ++i) d[i] += gout[i];
    });
}

Tensor slice_cols(const Tensor& x, int64_t c0, int64_t c1) {
    require_2d(x, "slice_cols");
    const int64_t m = x.dim(0), n = x.dim(1);
    if (c0 < 0 || c1 > n || c0 >= c1) throw ShapeError("slice_cols: bad range [" + std::to_string(c0) + ", " +
                                                       std::to_string(c1) + ") for " + std::to_string(n) + " columns");
    const int64_t w = c1 - c0;
    Tensor out = Tensor::zeros({m, w});
    for (int64_t i = 0; i < m; ++i)
        std::copy(x.data() + i * n + c0, x.data() + i * n + c1, out.data() + i * w);
    return record_or_value(out, {x}, [c0, m, n, w](const double* gout, const std::vector<double*>& gin) {
        if (!gin[0]) return;
        for (int64_t i = 0; i < m; ++i) {
            const double* g = gout + i * w;
            double* d = gin[0] + i * n + c0;
            for (int64_t j = 0; j < w; ++j) d[j] += g[j];
        }
    });
}

Tensor sum_all(const Tensor& x) {
    const int64_t n = x.numel();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) acc += x.data()[i];
    Tensor out = Tensor::scalar(acc);
    return record_or_value(out, {x}, [n](const double* gout, const std::vector<double*>& gin) {
        if (!gin[0]) return;
        for (int64_t i = 0; i < n; ++i) gin[0][i] += gout[0];
    });
}

Tensor mean_all(const Tensor& x) {
    const int64_t n = x.numel();
    double acc = 0.0;
    for (int64_t i = 0; i < n; ++i) acc += x.data()[i];
    Tensor out = Tensor::scalar(acc / static_cast<double>(n));
    return record_or_value(out, {x}, [n](const double* gout, const std::vector<double*>& gin) {
        if (!gin[0]) return;
        const double g = gout[0] / static_cast<double>(n);
        for (int64_t i = 0; i < n; ++i) gin[0][i] += g;
    });
}

} // namespace cvtn
