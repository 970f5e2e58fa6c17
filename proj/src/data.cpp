#include "cvtn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

namespace cvtn {

SplitScheme SplitScheme::ratio(double train, double val, double test) {
    SplitScheme s;
    s.kind = Kind::Ratio;
    s.train_frac = train;
    s.val_frac = val;
    s.test_frac = test;
    return s;
}

SplitScheme SplitScheme::ett_months(int64_t train, int64_t val, int64_t test, int64_t rows_per_day) {
    SplitScheme s;
    s.kind = Kind::EttMonths;
    s.train_months = train;
    s.val_months = val;
    s.test_months = test;
    s.rows_per_day = rows_per_day;
    return s;
}

int64_t TimeSeriesDataset::split_begin(int split_id) const {
    switch (split_id) {
        case 0: return 0;
        case 1: return train_end;
        default: return val_end;
    }
}

int64_t TimeSeriesDataset::split_end(int split_id) const {
    switch (split_id) {
        case 0: return train_end;
        case 1: return val_end;
        default: return rows;
    }
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

} // namespace

TimeSeriesDataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("load_csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw IoError("load_csv: '" + path + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> header = split_line(line);
    if (header.size() < 2) throw IoError("load_csv: header needs a timestamp column plus at least one variable");

    TimeSeriesDataset ds;
    ds.cols = static_cast<int64_t>(header.size()) - 1;
    ds.variable_names.assign(header.begin() + 1, header.end());
    if (ds.cols < 2) {
        std::cerr << "load_csv: warning: single-variable dataset '" << path << "'\n";
    }

    int64_t row_index = 1;  // header was row 0
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) {
            if (in.peek() == std::char_traits<char>::eof()) break;  // trailing newline
            throw IoError("load_csv: blank line at row " + std::to_string(row_index));
        }
        std::vector<std::string> cells = split_line(line);
        if (static_cast<int64_t>(cells.size()) != ds.cols + 1) {
            throw IoError("load_csv: row " + std::to_string(row_index) + " has " + std::to_string(cells.size()) +
                          " cells, expected " + std::to_string(ds.cols + 1));
        }
        for (int64_t c = 0; c < ds.cols; ++c) {
            const std::string& cell = cells[static_cast<size_t>(c + 1)];
            double v = 0.0;
            const char* first = cell.data();
            const char* last = cell.data() + cell.size();
            while (first != last && *first == ' ') ++first;
            auto [ptr, ec] = std::from_chars(first, last, v);
            if (ec != std::errc() || ptr != last) {
                throw IoError("load_csv: unparseable cell at row " + std::to_string(row_index) + ", column " +
                              std::to_string(c + 2) + ": '" + cell + "'");
            }
            ds.values.push_back(v);
        }
        ++row_index;
        ++ds.rows;
    }
    if (ds.rows < 2) throw IoError("load_csv: '" + path + "' has fewer than 2 data rows");
    return ds;
}

void split(TimeSeriesDataset& ds, const SplitScheme& scheme, int64_t lookback, int64_t horizon) {
    if (ds.rows < 1) throw ContractError("split: empty dataset");
    const int64_t min_window = lookback + horizon;

    if (scheme.kind == SplitScheme::Kind::Ratio) {
        const double total = scheme.train_frac + scheme.val_frac + scheme.test_frac;
        if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split: ratio fractions must sum to 1");
        ds.train_end = static_cast<int64_t>(static_cast<double>(ds.rows) * scheme.train_frac);
        ds.val_end = ds.train_end + static_cast<int64_t>(static_cast<double>(ds.rows) * scheme.val_frac);
    } else {
        const int64_t month = 30 * scheme.rows_per_day;
        const int64_t need = (scheme.train_months + scheme.val_months + scheme.test_months) * month;
        if (ds.rows < need) {
            throw ConfigError("split: ETT scheme needs " + std::to_string(need) + " rows, dataset has " +
                              std::to_string(ds.rows));
        }
        ds.train_end = scheme.train_months * month;
        ds.val_end = ds.train_end + scheme.val_months * month;
        // public ETT protocol caps the test span; drop rows past it
        const int64_t test_end = ds.val_end + scheme.test_months * month;
        if (ds.rows > test_end) {
            ds.rows = test_end;
            ds.values.resize(static_cast<size_t>(ds.rows * ds.cols));
        }
    }

    if (!(ds.train_end > 0 && ds.val_end > ds.train_end && ds.rows > ds.val_end)) {
        throw ConfigError("split: degenerate boundaries (" + std::to_string(ds.train_end) + ", " +
                          std::to_string(ds.val_end) + ") for " + std::to_string(ds.rows) + " rows");
    }
    // train needs a full window; val/test borrow history across the border
    if (ds.train_end < min_window) {
        throw ConfigError("split: train split (" + std::to_string(ds.train_end) + " rows) smaller than L+O = " +
                          std::to_string(min_window));
    }
    if (ds.val_end - ds.train_end < horizon || ds.rows - ds.val_end < horizon) {
        throw ConfigError("split: val/test split smaller than the horizon " + std::to_string(horizon));
    }
}

void zscore(TimeSeriesDataset& ds) {
    if (!ds.has_split()) throw ContractError("zscore: split boundaries must be set first");
    if (ds.normalized) throw ContractError("zscore: dataset already normalized");

    ds.mean.assign(static_cast<size_t>(ds.cols), 0.0);
    ds.stdev.assign(static_cast<size_t>(ds.cols), 0.0);
    const int64_t n = ds.train_end;
    for (int64_t c = 0; c < ds.cols; ++c) {
        double mean = 0.0;
        for (int64_t t = 0; t < n; ++t) mean += ds.value(t, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (int64_t t = 0; t < n; ++t) {
            const double d = ds.value(t, c) - mean;
            var += d * d;
        }
        var /= static_cast<double>(n);
        if (var <= 0.0) {
            throw ConfigError("zscore: variable '" + ds.variable_names[static_cast<size_t>(c)] +
                              "' is constant over the train split");
        }
        ds.mean[static_cast<size_t>(c)] = mean;
        ds.stdev[static_cast<size_t>(c)] = std::sqrt(var);
    }
    for (int64_t t = 0; t < ds.rows; ++t) {
        for (int64_t c = 0; c < ds.cols; ++c) {
            ds.values[static_cast<size_t>(t * ds.cols + c)] =
                (ds.value(t, c) - ds.mean[static_cast<size_t>(c)]) / ds.stdev[static_cast<size_t>(c)];
        }
    }
    ds.normalized = true;
}

std::vector<WindowPair> make_windows(const TimeSeriesDataset& ds, int64_t lookback, int64_t horizon,
                                     SplitId split_id) {
    if (lookback < 1 || horizon < 1) throw ConfigError("make_windows: L and O must be positive");
    if (!ds.has_split()) throw ContractError("make_windows: split boundaries must be set first");

    const int id = static_cast<int>(split_id);
    const int64_t begin = ds.split_begin(id);
    const int64_t end = ds.split_end(id);

    // Targets stay inside the split; val/test histories may cross backward.
    int64_t first_origin, last_origin;
    if (split_id == SplitId::Train) {
        first_origin = begin;
        last_origin = end - lookback - horizon;
    } else {
        first_origin = std::max<int64_t>(0, begin - lookback);
        last_origin = end - lookback - horizon;
    }
    const int64_t count = last_origin - first_origin + 1;
    if (count <= 0) {
        throw ConfigError("make_windows: split of " + std::to_string(end - begin) +
                          " rows cannot host a (" + std::to_string(lookback) + ", " + std::to_string(horizon) +
                          ") window");
    }

    std::vector<WindowPair> out;
    out.reserve(static_cast<size_t>(count));
    for (int64_t origin = first_origin; origin <= last_origin; ++origin) {
        WindowPair w;
        w.origin_index = origin;
        w.history = Tensor::zeros({lookback, ds.cols});
        w.target = Tensor::zeros({horizon, ds.cols});
        const double* src = ds.values.data() + origin * ds.cols;
        std::copy(src, src + lookback * ds.cols, w.history.data());
        src = ds.values.data() + (origin + lookback) * ds.cols;
        std::copy(src, src + horizon * ds.cols, w.target.data());
        out.push_back(std::move(w));
    }
    return out;
}

WindowPair mask_history(const WindowPair& w, double fraction, uint64_t seed, bool contiguous) {
    if (fraction < 0.0 || fraction > 1.0) throw ConfigError("mask_history: fraction must lie in [0, 1]");
    WindowPair out;
    out.origin_index = w.origin_index;
    out.target = w.target;
    out.history = w.history.clone();

    const int64_t rows = out.history.dim(0);
    const int64_t cols = out.history.dim(1);
    const int64_t masked = static_cast<int64_t>(fraction * static_cast<double>(rows));
    if (masked == 0) return out;

    std::mt19937_64 rng(seed);
    std::vector<int64_t> steps;
    if (contiguous) {
        std::uniform_int_distribution<int64_t> start_dist(0, rows - masked);
        const int64_t start = start_dist(rng);
        for (int64_t t = start; t < start + masked; ++t) steps.push_back(t);
    } else {
        steps.resize(static_cast<size_t>(rows));
        std::iota(steps.begin(), steps.end(), 0);
        std::shuffle(steps.begin(), steps.end(), rng);
        steps.resize(static_cast<size_t>(masked));
    }
    for (int64_t t : steps) {
        double* row = out.history.data() + t * cols;
        std::fill(row, row + cols, 0.0);
    }
    return out;
}

TimeSeriesDataset make_tiny_synthetic(int64_t steps, uint64_t seed) {
    // y2 trails y1 by 12 steps; generate y1 a little early to cover the lag.
    const int64_t lag = 12;
    std::vector<double> y1(static_cast<size_t>(steps + lag));
    for (int64_t i = 0; i < steps + lag; ++i) {
        const double t = static_cast<double>(i - lag);
        y1[static_cast<size_t>(i)] = 0.8 * std::sin(2.0 * M_PI * t / 24.0) +
                                     0.4 * std::sin(2.0 * M_PI * t / 57.0 + 0.9) +
                                     0.3 * std::sin(2.0 * M_PI * t / 13.0 + 2.2);
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);

    TimeSeriesDataset ds;
    ds.cols = 2;
    ds.rows = steps;
    ds.variable_names = {"y1", "y2"};
    ds.values.resize(static_cast<size_t>(steps * 2));
    for (int64_t t = 0; t < steps; ++t) {
        ds.values[static_cast<size_t>(t * 2 + 0)] = y1[static_cast<size_t>(t + lag)];
        ds.values[static_cast<size_t>(t * 2 + 1)] = y1[static_cast<size_t>(t)] + 0.05 * noise(rng);
    }
    return ds;
}

} // namespace cvtn
