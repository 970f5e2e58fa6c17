#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "cvtn/data.hpp"
#include "cvtn/metrics.hpp"
#include "cvtn/model.hpp"

namespace cvtn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

/**
 * Adam with bias correction over one named parameter group. Moment
 * buffers shape-match their parameters; updates are deterministic given
 * the gradient sequence.
 */
class Adam {
public:
    Adam(std::vector<std::pair<std::string, Tensor*>> params, AdamConfig cfg);

    /// Applies one update from the accumulated gradients, scaled by
    /// grad_scale (1/batch for mean-of-batch semantics).
    void step(double grad_scale = 1.0);
    void zero_grad();
    int64_t step_count() const { return step_; }

private:
    std::vector<std::pair<std::string, Tensor*>> params_;
    AdamConfig cfg_;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
    int64_t step_ = 0;
};

/// Patience-based stop decision: halt once `patience` epochs have passed
/// since the best validation loss.
class EarlyStopper {
public:
    explicit EarlyStopper(int64_t patience) : patience_(patience) {}

    /// Feed the val loss of `epoch` (1-based); returns true when training
    /// should stop after this epoch.
    bool update(int64_t epoch, double val_loss);

    int64_t best_epoch() const { return best_epoch_; }
    double best_loss() const { return best_loss_; }
    void seed_baseline(double val_loss);  // epoch-0 candidate (stage 2)

private:
    int64_t patience_;
    int64_t best_epoch_ = 0;
    double best_loss_ = std::numeric_limits<double>::infinity();
};

struct TrainConfig {
    int64_t epochs = 10;
    int64_t patience = 3;
    int64_t batch_size = 32;
    AdamConfig adam;
    uint64_t seed = 0;
    bool track_test = false;
};

struct EpochRecord {
    int64_t epoch;      // 1-based
    double train_loss;
    double val_loss;
    double test_loss;   // NaN unless track_test
};

struct StageReport {
    int stage = 0;
    std::vector<EpochRecord> epochs;
    int64_t stop_epoch = 0;
    int64_t best_epoch = 0;       // best-val checkpoint id (0 = initial state)
    double best_val_loss = 0.0;
    double initial_val_loss = std::numeric_limits<double>::quiet_NaN();  // stage 2 only
    bool early_stopped = false;
    double wall_seconds = 0.0;
    std::string frozen_hash_before;  // SHA-256 of the untouched group
    std::string frozen_hash_after;
};

struct TrainReport {
    StageReport stage1;
    StageReport stage2;
};

/**
 * Stage 1: fits the CVE against the targets (MSE in the pipeline frame).
 * Only the CVE group receives gradients and updates; the report carries
 * SHA-256 hashes of the CTE group before and after as the freezing audit.
 */
StageReport train_stage1(CvtnModel& model, const TimeSeriesDataset& data, const TrainConfig& cfg);

/**
 * Stage 2: freezes the CVE (inference mode, no dropout, no tape on its
 * parameters) and fits the CTE on the fused output. The initial state is
 * evaluated first and kept as the epoch-0 checkpoint candidate, so the
 * stage can never end worse than it started.
 */
StageReport train_stage2(CvtnModel& model, const TimeSeriesDataset& data, const TrainConfig& cfg);

/// Runs both stages back to back with the same config.
TrainReport train_two_stage(CvtnModel& model, const TimeSeriesDataset& data, const TrainConfig& cfg);

} // namespace cvtn
