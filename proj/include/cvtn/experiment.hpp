#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvtn/data.hpp"
#include "cvtn/model.hpp"
#include "cvtn/trainer.hpp"

namespace cvtn {

/**
 * One experiment grid: a dataset, a list of horizons and seeds, and the
 * model/training hyperparameters shared by every grid point.
 */
struct ExperimentConfig {
    std::string data_path;
    std::string dataset_name;  // defaults to the file stem
    SplitScheme scheme = SplitScheme::ratio();
    int64_t lookback = 96;
    std::vector<int64_t> horizons{96, 192, 336, 720};
    std::vector<uint64_t> seeds{0, 1, 2};
    ModelConfig model;  // lookback/horizon/channels filled per grid point
    TrainConfig train;
    double mask_fraction = 0.0;
    bool mask_contiguous = false;
    std::string out_dir = "cvtn-out";
};

struct MetricsRecord {
    std::string dataset;
    int64_t horizon = 0;
    uint64_t seed = 0;
    std::string split;
    double mse = 0.0;
    double mae = 0.0;
    int64_t epochs_stage1 = 0;
    int64_t epochs_stage2 = 0;
    double wall_seconds = 0.0;
};

struct EvalOptions {
    double mask_fraction = 0.0;
    bool mask_contiguous = false;
    uint64_t mask_seed = 0;
    bool cve_only = false;  // score the stage-1 prediction instead of Y
};

/**
 * Deterministic single pass over one split, dropout off. When
 * mask_fraction > 0 every window's history is masked before inference
 * (per-window seed derived from mask_seed and the window origin).
 */
MetricsRecord evaluate(const CvtnModel& model, const TimeSeriesDataset& ds, SplitId split,
                       const EvalOptions& opts = {});

struct MaskingDiagnostic {
    double unmasked_mse = 0.0;
    double masked_mse = 0.0;
    double factor = 0.0;  // masked / unmasked
    double fraction = 0.0;
};

/// CVE-only test MSE with and without history masking.
MaskingDiagnostic run_masking_diagnostic(const CvtnModel& model, const TimeSeriesDataset& ds,
                                         double fraction, bool contiguous, uint64_t seed);

/// Plot-ready per-epoch losses: epoch,train_loss,val_loss,test_loss,stage.
void emit_loss_curves(const StageReport& report, const std::string& csv_path);
std::vector<EpochRecord> read_loss_curves(const std::string& csv_path);

/// Flat key=value snapshot of everything needed to re-run a grid point.
void write_config_snapshot(const std::string& path, const ExperimentConfig& cfg, int64_t horizon,
                           uint64_t seed, int64_t channels);

/**
 * Runs the full (horizon x seed) grid: trains both stages, evaluates the
 * test split, writes per-grid-point artifacts and the Avg/Me aggregation.
 * Failed grid points are recorded in failures.txt and skipped. Returns
 * the number of failures (0 means every point completed).
 */
int run_experiment(const ExperimentConfig& cfg);

} // namespace cvtn
