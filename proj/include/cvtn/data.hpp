#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cvtn/tensor.hpp"

namespace cvtn {

/// How a raw series is divided into train/val/test.
struct SplitScheme {
    enum class Kind { Ratio, EttMonths };
    Kind kind = Kind::Ratio;

    // Ratio split
    double train_frac = 0.7;
    double val_frac = 0.1;
    double test_frac = 0.2;

    // Month-based split (ETT convention: 30-day months)
    int64_t train_months = 12;
    int64_t val_months = 4;
    int64_t test_months = 4;
    int64_t rows_per_day = 24;  // hourly data; 96 for 15-minute sampling

    static SplitScheme ratio(double train = 0.7, double val = 0.1, double test = 0.2);
    static SplitScheme ett_months(int64_t train = 12, int64_t val = 4, int64_t test = 4,
                                  int64_t rows_per_day = 24);
};

/**
 * Raw multivariate series [T_total x C] with split boundaries and the
 * z-score statistics fitted on the train rows. Immutable once prepared.
 */
struct TimeSeriesDataset {
    std::vector<double> values;  // row-major [rows x cols]
    int64_t rows = 0;
    int64_t cols = 0;
    std::vector<std::string> variable_names;

    int64_t train_end = 0;  // first val row
    int64_t val_end = 0;    // first test row
    std::vector<double> mean;   // per variable, train rows only
    std::vector<double> stdev;  // population std, train rows only
    bool normalized = false;

    double value(int64_t t, int64_t c) const { return values[static_cast<size_t>(t * cols + c)]; }
    bool has_split() const { return train_end > 0 && val_end > train_end; }
    int64_t split_begin(int split_id) const;  // 0 train, 1 val, 2 test
    int64_t split_end(int split_id) const;
};

enum class SplitId { Train = 0, Val = 1, Test = 2 };

/// One training/eval sample: adjacent history and target blocks.
struct WindowPair {
    Tensor history;        // [L x C]
    Tensor target;         // [O x C]
    int64_t origin_index;  // absolute row of the first history step
};

/**
 * Parses a CSV with a header row whose first column is a timestamp
 * (ignored for modeling) and remaining columns are numeric variables.
 */
TimeSeriesDataset load_csv(const std::string& path);

/**
 * Sets split boundaries. Validates that every split can host at least one
 * (L, O) window under the border convention. The ETT scheme trims the
 * series to the train+val+test span, matching the public protocol.
 */
void split(TimeSeriesDataset& ds, const SplitScheme& scheme, int64_t lookback, int64_t horizon);

/**
 * Z-score normalization in place with statistics fitted on train rows
 * only (population std). Errors on any constant train variable.
 */
void zscore(TimeSeriesDataset& ds);

/**
 * All stride-1 windows of one split, deterministic order. Train windows
 * lie entirely inside the train rows; val/test histories may reach back
 * into the previous split, their targets may not.
 */
std::vector<WindowPair> make_windows(const TimeSeriesDataset& ds, int64_t lookback, int64_t horizon,
                                     SplitId split_id);

/**
 * History-masking ablation: zeroes floor(fraction * L) whole time steps
 * of the history (all variables; zero is the per-variable mean after
 * normalization). Random steps by default, one contiguous block when
 * contiguous is set. Deterministic under a fixed seed; target untouched.
 */
WindowPair mask_history(const WindowPair& w, double fraction, uint64_t seed, bool contiguous = false);

/**
 * Two-variable diagnostic series: y1 is a mix of sinusoids, y2 lags y1 by
 * 12 steps plus 0.05-scaled noise.
 */
TimeSeriesDataset make_tiny_synthetic(int64_t steps = 3000, uint64_t seed = 7);

} // namespace cvtn
