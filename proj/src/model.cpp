#include "cvtn/model.hpp"

#include <cmath>
#include <random>

namespace cvtn {

namespace {

Tensor xavier_uniform(Shape shape, int64_t fan_in, int64_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor t = Tensor::zeros(std::move(shape));
    for (int64_t i = 0; i < t.numel(); ++i) t.data()[i] = u(rng);
    return t;
}

} // namespace

CvtnModel::CvtnModel(ModelConfig cfg, uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(seed);

    const int64_t L = cfg_.lookback;
    const int64_t O = cfg_.horizon;
    const int64_t C = cfg_.channels;
    const int64_t d_ff = cfg_.resolved_d_ff();
    const int64_t r = cfg_.growth_r;
    const int64_t k = cfg_.kernel;

    cve_.revin.gamma = Tensor::full({C}, 1.0);
    cve_.revin.beta = Tensor::zeros({C});
    cve_.revin.eps = cfg_.revin_eps;

    cve_.blocks.resize(static_cast<size_t>(cfg_.cve_layers));
    for (TransformerBlockParams& b : cve_.blocks) {
        b.ln1_gamma = Tensor::full({L}, 1.0);
        b.ln1_beta = Tensor::zeros({L});
        b.attn.wq = xavier_uniform({L, L}, L, L, rng);
        b.attn.wk = xavier_uniform({L, L}, L, L, rng);
        b.attn.wv = xavier_uniform({L, L}, L, L, rng);
        b.attn.wo = xavier_uniform({L, L}, L, L, rng);
        b.ln2_gamma = Tensor::full({L}, 1.0);
        b.ln2_beta = Tensor::zeros({L});
        b.ffn_w1 = xavier_uniform({L, d_ff}, L, d_ff, rng);
        b.ffn_b1 = Tensor::zeros({d_ff});
        b.ffn_w2 = xavier_uniform({d_ff, L}, d_ff, L, rng);
        b.ffn_b2 = Tensor::zeros({L});
    }
    cve_.w_proj = xavier_uniform({L, O}, L, O, rng);
    cve_.b_proj = Tensor::zeros({O});
    cve_.w_trend = xavier_uniform({L, O}, L, O, rng);
    cve_.b_trend = Tensor::zeros({O});

    cte_.w_zproj = xavier_uniform({L, O}, L, O, rng);
    cte_.b_zproj = Tensor::zeros({O});
    cte_.layers.resize(static_cast<size_t>(cfg_.cte_layers));
    for (int64_t n = 0; n < cfg_.cte_layers; ++n) {
        CteLayerParams& l = cte_.layers[static_cast<size_t>(n)];
        const int64_t f_in = cfg_.cte_channels(n);
        l.conv_w = xavier_uniform({r, f_in, k}, f_in * k, r * k, rng);
        l.conv_b = Tensor::zeros({r});
        l.fds_w = xavier_uniform({f_in + r / 2, f_in + r}, f_in + r, f_in + r / 2, rng);
        l.fds_b = Tensor::zeros({f_in + r / 2});
    }
    // zero-initialized so stage 2 starts exactly at the stage-1 solution
    cte_.w_final = Tensor::zeros({C, cfg_.cte_channels(cfg_.cte_layers)});
    cte_.b_final = Tensor::zeros({C});
}

Tensor CvtnModel::forward_cve(const Tensor& x, const DropoutCtx& dropout) const {
    return cve_forward(x, cve_, cfg_, dropout).z_decoded;
}

CvtnModel::FullOutput CvtnModel::forward_full(const Tensor& x, const DropoutCtx& dropout) const {
    CveOutput cve_out = cve_forward(x, cve_, cfg_, dropout);
    FullOutput out;
    out.z_cve = cve_out.z_decoded;
    if (cfg_.cte_frame == CteFrame::Normalized) {
        Tensor y_norm = cte_forward(cve_out.x_encoded, cve_out.z_normalized, cte_, cfg_);
        out.y = revin_decode(y_norm, cve_out.state, cve_.revin);
    } else {
        out.y = cte_forward(x, cve_out.z_decoded, cte_, cfg_);
    }
    return out;
}

std::vector<std::pair<std::string, Tensor*>> CvtnModel::cve_group() {
    std::vector<std::pair<std::string, Tensor*>> out;
    cve_.for_each([&](const std::string& name, Tensor& t) { out.emplace_back("cve." + name, &t); });
    return out;
}

std::vector<std::pair<std::string, Tensor*>> CvtnModel::cte_group() {
    std::vector<std::pair<std::string, Tensor*>> out;
    cte_.for_each([&](const std::string& name, Tensor& t) { out.emplace_back("cte." + name, &t); });
    return out;
}

std::vector<std::pair<std::string, Tensor*>> CvtnModel::all_params() {
    auto out = cve_group();
    auto cte_part = cte_group();
    out.insert(out.end(), cte_part.begin(), cte_part.end());
    return out;
}

void CvtnModel::set_group_requires_grad(std::vector<std::pair<std::string, Tensor*>>& group, bool flag) {
    for (auto& [name, tensor] : group) tensor->set_requires_grad(flag);
}

} // namespace cvtn
