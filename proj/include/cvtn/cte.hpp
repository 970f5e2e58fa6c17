#pragma once

#include <functional>
#include <string>
#include <vector>

#include "cvtn/config.hpp"
#include "cvtn/cve.hpp"
#include "cvtn/tensor.hpp"

namespace cvtn {

struct CteLayerParams {
    Tensor conv_w, conv_b;  // [r x F_n x k], [r]
    Tensor fds_w, fds_b;    // [(F_n + r/2) x (F_n + r)], [F_n + r/2]
};

/**
 * Learnable state of the Cross-Temporal Encoder. The final projection is
 * zero-initialized so a freshly attached CTE is the identity correction:
 * its first output equals the CVE prediction exactly.
 */
struct CteParams {
    Tensor w_zproj, b_zproj;  // [L x O], [O]
    std::vector<CteLayerParams> layers;
    Tensor w_final, b_final;  // [C x F_N], [C]

    void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
    int64_t param_count() const;
};

/// Per-variable shared linear map of the history onto the horizon: [O x C].
Tensor target_projection(const Tensor& x_frame, const CteParams& params);

/**
 * Conv block that loses nothing: concat(T, act(conv(T))) along the channel
 * axis, so the input channels survive verbatim as a prefix. [F x O] ->
 * [(F + r) x O].
 */
Tensor cross_time_block(const Tensor& t, const CteLayerParams& layer, const ModelConfig& cfg);

/// Feature down-sample: pointwise conv [(F + r) x O] -> [(F + r/2) x O].
Tensor fds(const Tensor& t_cat, const CteLayerParams& layer);

/**
 * Full Cross-Temporal Encoder pass in one normalization frame:
 * T0 = target_projection(x) + z, N rounds of fds(cross_time_block(.)),
 * then Y = z + final pointwise projection. Output [O x C], same frame as
 * the inputs. Channel counts are checked against C + n*r/2 every layer.
 */
Tensor cte_forward(const Tensor& x_frame, const Tensor& z_frame, const CteParams& params,
                   const ModelConfig& cfg);

} // namespace cvtn
