#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "cvtn/config.hpp"
#include "cvtn/revin.hpp"
#include "cvtn/tensor.hpp"

namespace cvtn {

/// Inverted dropout applied during training forwards; inactive when rng
/// is null or p == 0 (evaluation mode).
struct DropoutCtx {
    double p = 0.0;
    std::mt19937_64* rng = nullptr;
    bool active() const { return p > 0.0 && rng != nullptr; }

    static DropoutCtx off() { return {}; }
};

struct AttentionParams {
    Tensor wq, wk, wv, wo;  // each [L x L], no biases
};

struct TransformerBlockParams {
    Tensor ln1_gamma, ln1_beta;
    AttentionParams attn;
    Tensor ln2_gamma, ln2_beta;
    Tensor ffn_w1, ffn_b1;  // [L x d_ff], [d_ff]
    Tensor ffn_w2, ffn_b2;  // [d_ff x L], [L]
};

/**
 * All learnable state of the Cross-Variable Encoder. Attention, FFN and
 * the two projections are shared across variate tokens, so their count
 * does not depend on the number of variables; only the RevIN affine is
 * per-variable.
 */
struct CveParams {
    std::vector<TransformerBlockParams> blocks;
    Tensor w_proj, b_proj;    // [L x O], [O]
    Tensor w_trend, b_trend;  // [L x O], [O]
    RevinAffine revin;        // gamma/beta [C]

    void for_each(const std::function<void(const std::string&, Tensor&)>& fn);

    /// Count of the variable-count-independent weights (everything except
    /// the per-variable RevIN affine).
    int64_t shared_param_count() const;
    int64_t param_count() const;
};

/// V0[c, t] = X'[t, c]: one token per variable holding its full history.
Tensor tokenize(const Tensor& x_enc);

/**
 * Pre-norm residual block over variate tokens [C x L]: multi-head
 * self-attention across the C tokens followed by a shared FFN.
 */
Tensor transformer_block(const Tensor& v, const TransformerBlockParams& params, const ModelConfig& cfg,
                         const DropoutCtx& dropout);

struct CveOutput {
    Tensor z_normalized;  // [O x C], RevIN frame
    Tensor z_decoded;     // [O x C], pipeline frame
    Tensor x_encoded;     // [L x C], RevIN frame history
    RevinState state;
};

/**
 * Full Cross-Variable Encoder pass: RevIN encode, tokenize, M transformer
 * blocks, per-variable projection to the horizon plus the linear trend
 * branch, RevIN decode.
 */
CveOutput cve_forward(const Tensor& x, const CveParams& params, const ModelConfig& cfg,
                      const DropoutCtx& dropout);

/// Activation selected by the config (GELU by default).
Tensor activation(const Tensor& x, const ModelConfig& cfg);

/// Inverted dropout as a multiplicative constant mask; identity when the
/// context is inactive.
Tensor apply_dropout(const Tensor& x, const DropoutCtx& dropout);

} // namespace cvtn
