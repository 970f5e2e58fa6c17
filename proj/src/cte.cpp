#include "cvtn/cte.hpp"

namespace cvtn {

void CteParams::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
    fn("zproj.w", w_zproj);
    fn("zproj.b", b_zproj);
    for (size_t n = 0; n < layers.size(); ++n) {
        CteLayerParams& l = layers[n];
        const std::string p = "layer" + std::to_string(n) + ".";
        fn(p + "conv.w", l.conv_w);
        fn(p + "conv.b", l.conv_b);
        fn(p + "fds.w", l.fds_w);
        fn(p + "fds.b", l.fds_b);
    }
    fn("final.w", w_final);
    fn("final.b", b_final);
}

int64_t CteParams::param_count() const {
    int64_t n = w_zproj.numel() + b_zproj.numel() + w_final.numel() + b_final.numel();
    for (const CteLayerParams& l : layers) {
        n += l.conv_w.numel() + l.conv_b.numel() + l.fds_w.numel() + l.fds_b.numel();
    }
    return n;
}

Tensor target_projection(const Tensor& x_frame, const CteParams& params) {
    // [L x C] -> tokens [C x L] -> [C x O] -> [O x C]
    return transpose(add_bias_per_col(matmul(transpose(x_frame), params.w_zproj), params.b_zproj));
}

Tensor cross_time_block(const Tensor& t, const CteLayerParams& layer, const ModelConfig& cfg) {
    Tensor fresh = activation(conv1d_same(t, layer.conv_w, layer.conv_b), cfg);
    return concat_rows({t, fresh});
}

Tensor fds(const Tensor& t_cat, const CteLayerParams& layer) {
    return pointwise_conv(t_cat, layer.fds_w, layer.fds_b);
}

Tensor cte_forward(const Tensor& x_frame, const Tensor& z_frame, const CteParams& params,
                   const ModelConfig& cfg) {
    if (z_frame.ndim() != 2 || z_frame.dim(0) != cfg.horizon || z_frame.dim(1) != cfg.channels) {
        throw ShapeError("cte_forward: expected [" + std::to_string(cfg.horizon) + " x " +
                         std::to_string(cfg.channels) + "] CVE output");
    }

    Tensor t = add(target_projection(x_frame, params), z_frame);  // [O x C]
    t = transpose(t);                                             // channel-major [C x O]

    for (int64_t n = 0; n < cfg.cte_layers; ++n) {
        const CteLayerParams& layer = params.layers[static_cast<size_t>(n)];
        t = fds(cross_time_block(t, layer, cfg), layer);
        const int64_t expected = cfg.cte_channels(n + 1);
        if (t.dim(0) != expected || t.dim(1) != cfg.horizon) {
            throw ContractError("cte_forward: layer " + std::to_string(n) + " produced [" +
                                std::to_string(t.dim(0)) + " x " + std::to_string(t.dim(1)) + "], expected [" +
                                std::to_string(expected) + " x " + std::to_string(cfg.horizon) + "]");
        }
    }

    Tensor correction = transpose(pointwise_conv(t, params.w_final, params.b_final));  // [O x C]
    return add(z_frame, correction);
}

} // namespace cvtn
