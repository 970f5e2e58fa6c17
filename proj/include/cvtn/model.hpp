#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cvtn/config.hpp"
#include "cvtn/cte.hpp"
#include "cvtn/cve.hpp"

namespace cvtn {

/**
 * The full two-encoder forecaster. Learnable state is partitioned into a
 * CVE group and a CTE group; the two are disjoint and independently
 * freezable, which is what the two training stages rely on.
 */
class CvtnModel {
public:
    CvtnModel(ModelConfig cfg, uint64_t seed);

    const ModelConfig& config() const { return cfg_; }
    CveParams& cve() { return cve_; }
    CteParams& cte() { return cte_; }
    const CveParams& cve() const { return cve_; }
    const CteParams& cte() const { return cte_; }

    struct FullOutput {
        Tensor y;      // [O x C], pipeline frame
        Tensor z_cve;  // [O x C], pipeline frame (the stage-1 prediction)
    };

    /// Stage-1 path: CVE only. Output in the pipeline frame.
    Tensor forward_cve(const Tensor& x, const DropoutCtx& dropout) const;

    /// Both encoders. Dropout applies to the CVE blocks only; pass an
    /// inactive context for evaluation and for stage-2 training (where the
    /// CVE runs frozen in inference mode).
    FullOutput forward_full(const Tensor& x, const DropoutCtx& dropout) const;

    /// Named parameter groups, enumeration order fixed.
    std::vector<std::pair<std::string, Tensor*>> cve_group();
    std::vector<std::pair<std::string, Tensor*>> cte_group();
    std::vector<std::pair<std::string, Tensor*>> all_params();

    void set_group_requires_grad(std::vector<std::pair<std::string, Tensor*>>& group, bool flag);

private:
    ModelConfig cfg_;
    CveParams cve_;
    CteParams cte_;
};

} // namespace cvtn
