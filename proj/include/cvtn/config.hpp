#pragma once

#include <cstdint>
#include <string>

#include "cvtn/errors.hpp"

namespace cvtn {

enum class Activation { Gelu, Relu };
enum class CteFrame { Normalized, Raw };

/**
 * Hyperparameters of one CVTN instance. Defaults follow the evaluation
 * protocol: look-back 96, 2 transformer blocks of 8 heads, d_ff = 4L,
 * 2 conv layers growing r/2 = 4 channels each.
 */
struct ModelConfig {
    int64_t lookback = 96;      // L
    int64_t horizon = 96;       // O
    int64_t channels = 0;       // C, from the dataset
    int64_t cve_layers = 2;     // M
    int64_t cte_layers = 2;     // N
    int64_t heads = 8;
    int64_t d_ff = 0;           // 0 means 4 * lookback
    int64_t growth_r = 8;       // channels added by each conv block before FDS
    int64_t kernel = 3;
    bool trend_branch = true;
    CteFrame cte_frame = CteFrame::Normalized;
    Activation activation = Activation::Gelu;
    double dropout = 0.1;
    double revin_eps = 1e-5;

    int64_t resolved_d_ff() const { return d_ff > 0 ? d_ff : 4 * lookback; }

    /// Channel count entering CTE layer n (Algorithm ledger: C + n*r/2).
    int64_t cte_channels(int64_t layer) const { return channels + layer * growth_r / 2; }

    void validate() const {
        if (lookback < 2) throw ConfigError("lookback must be at least 2");
        if (horizon < 1) throw ConfigError("horizon must be positive");
        if (channels < 1) throw ConfigError("channels must be positive");
        if (cve_layers < 0 || cte_layers < 0) throw ConfigError("layer counts must be non-negative");
        if (heads < 1) throw ConfigError("heads must be positive");
        if (lookback % heads != 0) {
            throw ConfigError("lookback " + std::to_string(lookback) + " not divisible by head count " +
                              std::to_string(heads));
        }
        if (growth_r < 2 || growth_r % 2 != 0) {
            throw ConfigError("growth_r must be a positive even number, got " + std::to_string(growth_r));
        }
        if (kernel < 1 || kernel % 2 == 0) {
            throw ConfigError("kernel size must be odd, got " + std::to_string(kernel));
        }
        if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0, 1)");
        if (revin_eps <= 0.0) throw ConfigError("revin_eps must be positive");
    }
};

} // namespace cvtn
