#include "cvtn/cve.hpp"

#include <cmath>

namespace cvtn {

namespace {
constexpr double kLayerNormEps = 1e-5;
}

void CveParams::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
    fn("revin.gamma", revin.gamma);
    fn("revin.beta", revin.beta);
    for (size_t m = 0; m < blocks.size(); ++m) {
        TransformerBlockParams& b = blocks[m];
        const std::string p = "block" + std::to_string(m) + ".";
        fn(p + "ln1.gamma", b.ln1_gamma);
        fn(p + "ln1.beta", b.ln1_beta);
        fn(p + "attn.wq", b.attn.wq);
        fn(p + "attn.wk", b.attn.wk);
        fn(p + "attn.wv", b.attn.wv);
        fn(p + "attn.wo", b.attn.wo);
        fn(p + "ln2.gamma", b.ln2_gamma);
        fn(p + "ln2.beta", b.ln2_beta);
        fn(p + "ffn.w1", b.ffn_w1);
        fn(p + "ffn.b1", b.ffn_b1);
        fn(p + "ffn.w2", b.ffn_w2);
        fn(p + "ffn.b2", b.ffn_b2);
    }
    fn("proj.w", w_proj);
    fn("proj.b", b_proj);
    fn("trend.w", w_trend);
    fn("trend.b", b_trend);
}

int64_t CveParams::shared_param_count() const {
    int64_t n = 0;
    for (const TransformerBlockParams& b : blocks) {
        n += b.ln1_gamma.numel() + b.ln1_beta.numel() + b.ln2_gamma.numel() + b.ln2_beta.numel();
        n += b.attn.wq.numel() + b.attn.wk.numel() + b.attn.wv.numel() + b.attn.wo.numel();
        n += b.ffn_w1.numel() + b.ffn_b1.numel() + b.ffn_w2.numel() + b.ffn_b2.numel();
    }
    n += w_proj.numel() + b_proj.numel() + w_trend.numel() + b_trend.numel();
    return n;
}

int64_t CveParams::param_count() const {
    return shared_param_count() + revin.gamma.numel() + revin.beta.numel();
}

Tensor tokenize(const Tensor& x_enc) {
    return transpose(x_enc);
}

Tensor activation(const Tensor& x, const ModelConfig& cfg) {
    return cfg.activation == Activation::Gelu ? gelu(x) : relu(x);
}

Tensor apply_dropout(const Tensor& x, const DropoutCtx& dropout) {
    if (!dropout.active()) return x;
    const double keep = 1.0 - dropout.p;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> mask(static_cast<size_t>(x.numel()));
    for (double& m : mask) m = u(*dropout.rng) < keep ? 1.0 / keep : 0.0;
    return mul(x, Tensor::from(x.shape(), std::move(mask)));
}

Tensor transformer_block(const Tensor& v, const TransformerBlockParams& params, const ModelConfig& cfg,
                         const DropoutCtx& dropout) {
    const int64_t width = v.dim(1);
    if (width % cfg.heads != 0) {
        throw ConfigError("transformer_block: token width " + std::to_string(width) +
                          " not divisible by head count " + std::to_string(cfg.heads));
    }
    const int64_t head_dim = width / cfg.heads;
    const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(head_dim));

    // attention sublayer
    Tensor normed = layer_norm(v, params.ln1_gamma, params.ln1_beta, kLayerNormEps);
    Tensor q = matmul(normed, params.attn.wq);
    Tensor k = matmul(normed, params.attn.wk);
    Tensor vals = matmul(normed, params.attn.wv);

    std::vector<Tensor> heads;
    heads.reserve(static_cast<size_t>(cfg.heads));
    for (int64_t h = 0; h < cfg.heads; ++h) {
        const int64_t c0 = h * head_dim, c1 = (h + 1) * head_dim;
        Tensor qh = slice_cols(q, c0, c1);
        Tensor kh = slice_cols(k, c0, c1);
        Tensor vh = slice_cols(vals, c0, c1);
        Tensor scores = scale(matmul(qh, transpose(kh)), inv_sqrt_d);
        Tensor probs = apply_dropout(softmax_rows(scores), dropout);
        heads.push_back(matmul(probs, vh));
    }
    Tensor attn_out = matmul(concat_cols(heads), params.attn.wo);
    Tensor after_attn = add(v, apply_dropout(attn_out, dropout));

    // shared FFN sublayer
    Tensor normed2 = layer_norm(after_attn, params.ln2_gamma, params.ln2_beta, kLayerNormEps);
    Tensor hidden = activation(add_bias_per_col(matmul(normed2, params.ffn_w1), params.ffn_b1), cfg);
    Tensor ffn_out = add_bias_per_col(matmul(apply_dropout(hidden, dropout), params.ffn_w2), params.ffn_b2);
    return add(after_attn, ffn_out);
}

CveOutput cve_forward(const Tensor& x, const CveParams& params, const ModelConfig& cfg,
                      const DropoutCtx& dropout) {
    if (x.ndim() != 2 || x.dim(0) != cfg.lookback || x.dim(1) != cfg.channels) {
        throw ShapeError("cve_forward: expected [" + std::to_string(cfg.lookback) + " x " +
                         std::to_string(cfg.channels) + "] history");
    }

    CveOutput out;
    auto [x_enc, state] = revin_encode(x, params.revin);
    out.x_encoded = x_enc;
    out.state = state;

    Tensor tokens = tokenize(x_enc);  // [C x L]
    Tensor v = tokens;
    for (const TransformerBlockParams& block : params.blocks) {
        v = transformer_block(v, block, cfg, dropout);
    }

    // per-variable horizon projection, weights shared across variables
    Tensor z = add_bias_per_col(matmul(v, params.w_proj), params.b_proj);  // [C x O]
    if (cfg.trend_branch) {
        Tensor trend = add_bias_per_col(matmul(tokens, params.w_trend), params.b_trend);
        z = add(z, trend);
    }
    out.z_normalized = transpose(z);  // [O x C]
    out.z_decoded = revin_decode(out.z_normalized, state, params.revin);
    return out;
}

} // namespace cvtn
