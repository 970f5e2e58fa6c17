#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <vector>

#include "cvtn/errors.hpp"

namespace cvtn {

using Shape = std::vector<int64_t>;

class Tape;

namespace detail {

struct TensorData {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;     // leaf gradient accumulator, sized iff requires_grad
    bool requires_grad = false;
    uint64_t tape_id = 0;         // tape that produced this tensor, 0 = none
    int64_t node = -1;            // node index on that tape
};

} // namespace detail

/**
 * Dense n-dimensional array of doubles with value semantics over shared
 * storage. Copies alias the same buffer. When an operation runs inside an
 * active Tape::Scope and any input is differentiable, the op is recorded so
 * Tape::backward can later fill leaf gradients.
 */
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(Shape shape);
    static Tensor full(Shape shape, double value);
    static Tensor from(Shape shape, std::vector<double> values);
    static Tensor scalar(double value);

    bool defined() const { return d_ != nullptr; }
    const Shape& shape() const { return d_->shape; }
    int ndim() const { return static_cast<int>(d_->shape.size()); }
    int64_t dim(int axis) const { return d_->shape[static_cast<size_t>(axis)]; }
    int64_t numel() const { return static_cast<int64_t>(d_->values.size()); }

    double* data() { return d_->values.data(); }
    const double* data() const { return d_->values.data(); }
    std::vector<double>& values() { return d_->values; }
    const std::vector<double>& values() const { return d_->values; }

    double at(std::initializer_list<int64_t> idx) const;
    double& at_mut(std::initializer_list<int64_t> idx);

    /// Scalar extraction; throws ContractError unless numel() == 1.
    double value() const;

    /// Marks this tensor as a differentiable leaf (allocates a zero grad
    /// buffer) or clears leaf status. Only legal on tensors that are not
    /// the output of a recorded op.
    Tensor& set_requires_grad(bool flag);
    bool requires_grad() const { return d_->requires_grad; }

    bool has_grad() const { return d_ && !d_->grad.empty(); }
    std::vector<double>& grad();
    const std::vector<double>& grad() const;
    void zero_grad();

    /// Deep copy of the values, detached from any tape, requires_grad off.
    Tensor clone() const;

    friend class Tape;
    friend Tensor record_or_value(Tensor out, std::vector<Tensor> inputs,
                                  std::function<void(const double*, const std::vector<double*>&)> backward);

    std::shared_ptr<detail::TensorData> d_;
};

/**
 * Reverse-mode tape: an ordered list of recorded primitive applications.
 * Recording order is topological by construction (an op's inputs exist
 * before the op runs), so one reverse sweep visits each node exactly once.
 * A tape is built fresh per forward pass and discarded after backward.
 */
class Tape {
public:
    Tape();
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// Runs reverse-mode accumulation from a scalar loss recorded on this
    /// tape. Every reachable requires_grad leaf receives += dLoss/dLeaf;
    /// unreachable leaves keep their (zero-initialized) grad. Repeated
    /// calls without zero_grad accumulate.
    void backward(const Tensor& loss);

    int64_t node_count() const { return static_cast<int64_t>(nodes_.size()); }
    uint64_t id() const { return id_; }

    /// RAII activation of a tape for the current thread.
    class Scope {
    public:
        explicit Scope(Tape& tape);
        ~Scope();
        Scope(const Scope&) = delete;
        Scope& operator=(const Scope&) = delete;

    private:
        Tape* previous_;
    };

    static Tape* current();

private:
    struct Node {
        std::vector<std::shared_ptr<detail::TensorData>> inputs;
        // backward(gout, gin): gin[i] is the gradient sink for inputs[i]
        // (nullptr when that input needs no gradient).
        std::function<void(const double* gout, const std::vector<double*>& gin)> backward;
        int64_t out_numel = 0;
    };

    friend Tensor record_or_value(Tensor out, std::vector<Tensor> inputs,
                                  std::function<void(const double*, const std::vector<double*>&)> backward);

    int64_t add_node(Node node);

    uint64_t id_;
    std::vector<Node> nodes_;
};

/// Records `out = op(inputs)` on the active tape when any input is
/// differentiable; otherwise returns the bare value. Building block for
/// every primitive, exposed so other modules can define their own.
Tensor record_or_value(Tensor out, std::vector<Tensor> inputs,
                       std::function<void(const double*, const std::vector<double*>&)> backward);

/// True when t would carry gradient under the currently active tape
/// (requires_grad leaf, or an output recorded on that tape).
bool tracked_by_current_tape(const Tensor& t);

// ---------------------------------------------------------------------------
// Primitive operations. Forward always computes; a node is recorded only
// when a tape is active and some input is differentiable.
// ---------------------------------------------------------------------------

/// C[i,j] = sum_k A[i,k] * B[k,j]. Backward: dA += G*B^T, dB += A^T*G.
Tensor matmul(const Tensor& a, const Tensor& b);

/// Transpose of the last two axes (2-d only here).
Tensor transpose(const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double s);

/// x[i,j] + b[j] for every row i (bias per feature column).
Tensor add_bias_per_col(const Tensor& x, const Tensor& b);
/// x[i,j] + b[i] for every column j (bias per channel row).
Tensor add_bias_per_row(const Tensor& x, const Tensor& b);

Tensor gelu(const Tensor& x);
Tensor relu(const Tensor& x);

/// Row-wise softmax with max-subtraction. Rows sum to 1 within 1e-12.
Tensor softmax_rows(const Tensor& x);

/// Per-row standardization (population variance + eps) followed by a
/// per-column affine. gamma and beta have one entry per column.
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps);

/// Same-length 1-d convolution over [F_in x T] with kernel [F_out x F_in x k],
/// k odd, zero padding (k-1)/2 on both ends.
Tensor conv1d_same(const Tensor& x, const Tensor& w, const Tensor& b);

/// 1x1 convolution over the channel axis: W*X + b per time step.
Tensor pointwise_conv(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor concat_rows(const std::vector<Tensor>& parts);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_rows(const Tensor& x, int64_t r0, int64_t r1);
Tensor slice_cols(const Tensor& x, int64_t c0, int64_t c1);

Tensor sum_all(const Tensor& x);
Tensor mean_all(const Tensor& x);

} // namespace cvtn
