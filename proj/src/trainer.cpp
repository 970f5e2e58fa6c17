#include "cvtn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>

#include "cvtn/checkpoint.hpp"

namespace cvtn {

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

Adam::Adam(std::vector<std::pair<std::string, Tensor*>> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& [name, tensor] : params_) {
        m_.emplace_back(static_cast<size_t>(tensor->numel()), 0.0);
        v_.emplace_back(static_cast<size_t>(tensor->numel()), 0.0);
    }
}

void Adam::step(double grad_scale) {
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (size_t p = 0; p < params_.size(); ++p) {
        Tensor& t = *params_[p].second;
        const std::vector<double>& grad = t.grad();
        double* x = t.data();
        std::vector<double>& m = m_[p];
        std::vector<double>& v = v_[p];
        for (size_t i = 0; i < grad.size(); ++i) {
            double g = grad[i] * grad_scale;
            if (cfg_.weight_decay != 0.0) g += cfg_.weight_decay * x[i];
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            x[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
        }
    }
}

void Adam::zero_grad() {
    for (auto& [name, tensor] : params_) tensor->zero_grad();
}

// ---------------------------------------------------------------------------
// EarlyStopper
// ---------------------------------------------------------------------------

void EarlyStopper::seed_baseline(double val_loss) {
    best_loss_ = val_loss;
    best_epoch_ = 0;
}

bool EarlyStopper::update(int64_t epoch, double val_loss) {
    if (val_loss < best_loss_) {
        best_loss_ = val_loss;
        best_epoch_ = epoch;
    }
    return epoch - best_epoch_ >= patience_;
}

// ---------------------------------------------------------------------------
// Stage driver
// ---------------------------------------------------------------------------

namespace {

using Group = std::vector<std::pair<std::string, Tensor*>>;
using ForwardFn = std::function<Tensor(const Tensor&, const DropoutCtx&)>;

std::vector<std::vector<double>> snapshot_group(const Group& group) {
    std::vector<std::vector<double>> out;
    out.reserve(group.size());
    for (const auto& [name, tensor] : group) out.push_back(tensor->values());
    return out;
}

void restore_group(Group& group, const std::vector<std::vector<double>>& snap) {
    for (size_t i = 0; i < group.size(); ++i) group[i].second->values() = snap[i];
}

double eval_pass(const ForwardFn& forward, const std::vector<WindowPair>& windows) {
    double acc = 0.0;
    for (const WindowPair& w : windows) {
        Tensor pred = forward(w.history, DropoutCtx::off());
        acc += mse(pred, w.target);
    }
    return acc / static_cast<double>(windows.size());
}

StageReport run_stage(int stage, CvtnModel& model, const TimeSeriesDataset& data, const TrainConfig& cfg,
                      Group trainable, Group frozen, const ForwardFn& forward, double train_dropout,
                      bool eval_initial) {
    const auto t_start = std::chrono::steady_clock::now();

    StageReport report;
    report.stage = stage;
    report.frozen_hash_before = sha256_hex(serialize_group(frozen));

    model.set_group_requires_grad(trainable, true);
    model.set_group_requires_grad(frozen, false);

    const int64_t L = model.config().lookback;
    const int64_t O = model.config().horizon;
    std::vector<WindowPair> train_windows = make_windows(data, L, O, SplitId::Train);
    std::vector<WindowPair> val_windows = make_windows(data, L, O, SplitId::Val);
    std::vector<WindowPair> test_windows;
    if (cfg.track_test) test_windows = make_windows(data, L, O, SplitId::Test);

    std::mt19937_64 rng(cfg.seed);
    Adam adam(trainable, cfg.adam);
    EarlyStopper stopper(cfg.patience);

    std::vector<std::vector<double>> best_snapshot;
    if (eval_initial) {
        report.initial_val_loss = eval_pass(forward, val_windows);
        stopper.seed_baseline(report.initial_val_loss);
        best_snapshot = snapshot_group(trainable);
    }

    std::vector<size_t> order(train_windows.size());
    std::iota(order.begin(), order.end(), 0);

    for (int64_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);

        double train_acc = 0.0;
        size_t batch_fill = 0;
        adam.zero_grad();
        for (size_t i = 0; i < order.size(); ++i) {
            const WindowPair& w = train_windows[order[i]];
            DropoutCtx dropout{train_dropout, &rng};

            Tape tape;
            Tape::Scope scope(tape);
            Tensor pred = forward(w.history, dropout);
            Tensor loss = mse_loss(pred, w.target);
            const double loss_value = loss.value();
            if (!std::isfinite(loss_value)) {
                throw NumericError("stage " + std::to_string(stage) + ": non-finite loss at epoch " +
                                   std::to_string(epoch) + ", batch index " + std::to_string(i / static_cast<size_t>(cfg.batch_size)) +
                                   " (lr " + std::to_string(cfg.adam.lr) + ")");
            }
            train_acc += loss_value;
            tape.backward(loss);

            if (++batch_fill == static_cast<size_t>(cfg.batch_size) || i + 1 == order.size()) {
                adam.step(1.0 / static_cast<double>(batch_fill));
                adam.zero_grad();
                batch_fill = 0;
            }
        }

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = train_acc / static_cast<double>(train_windows.size());
        rec.val_loss = eval_pass(forward, val_windows);
        rec.test_loss = cfg.track_test ? eval_pass(forward, test_windows)
                                       : std::numeric_limits<double>::quiet_NaN();
        report.epochs.push_back(rec);

        const bool was_best = rec.val_loss < stopper.best_loss();
        const bool stop = stopper.update(epoch, rec.val_loss);
        if (was_best) best_snapshot = snapshot_group(trainable);
        if (stop) {
            report.early_stopped = epoch < cfg.epochs;
            report.stop_epoch = epoch;
            break;
        }
        report.stop_epoch = epoch;
    }

    if (!best_snapshot.empty()) restore_group(trainable, best_snapshot);
    report.best_epoch = stopper.best_epoch();
    report.best_val_loss = stopper.best_loss();

    model.set_group_requires_grad(trainable, false);
    report.frozen_hash_after = sha256_hex(serialize_group(frozen));
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return report;
}

} // namespace

StageReport train_stage1(CvtnModel& model, const TimeSeriesDataset& data, const TrainConfig& cfg) {
    ForwardFn forward = [&model](const Tensor& x, const DropoutCtx& dropout) {
        return model.forward_cve(x, dropout);
    };
    return run_stage(1, model, data, cfg, model.cve_group(), model.cte_group(), forward,
                     model.config().dropout, /*eval_initial=*/false);
}

StageReport train_stage2(CvtnModel& model, const TimeSeriesDataset& data, const TrainConfig& cfg) {
    ForwardFn forward = [&model](const Tensor& x, const DropoutCtx& dropout) {
        (void)dropout;  // CVE runs in inference mode; CTE has no dropout
        return model.forward_full(x, DropoutCtx::off()).y;
    };
    return run_stage(2, model, data, cfg, model.cte_group(), model.cve_group(), forward,
                     /*train_dropout=*/0.0, /*eval_initial=*/true);
}

TrainReport train_two_stage(CvtnModel& model, const TimeSeriesDataset& data, const TrainConfig& cfg) {
    TrainReport report;
    report.stage1 = train_stage1(model, data, cfg);
    report.stage2 = train_stage2(model, data, cfg);
    return report;
}

} // namespace cvtn
