#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mhl/data/sample.hpp"
#include "mhl/error.hpp"
#include "mhl/losses/losses.hpp"
#include "mhl/model/network.hpp"
#include "mhl/model/params.hpp"
#include "mhl/numerics/rng.hpp"
#include "mhl/train/adam.hpp"
#include "mhl/train/checkpoint.hpp"

// Training only ever sees WeakSample: id, video-level label, features.

namespace mhl {

struct TrainConfig {
    double lr = 1e-4;
    std::size_t batch_size = 32;
    std::size_t epochs = 100;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t seed = 0;
    std::size_t eval_every = 1;
    std::string checkpoint_dir;  ///< empty: keep checkpoints in memory only

    void validate() const {
        if (!(lr > 0.0)) throw ConfigError("lr must be > 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    }

    AdamConfig adam() const { return {lr, beta1, beta2, eps}; }
};

struct StepLog {
    std::size_t step = 0;
    std::size_t epoch = 0;
    LossBreakdown loss;
    std::optional<double> val_map;
};

struct TrainState {
    std::size_t step = 0;
    AdamState<float> adam;
    double best_val_map = -1.0;
    std::size_t best_epoch = 0;
    std::string best_checkpoint;
    std::vector<StepLog> history;
};

struct TrainResult {
    ModelParams<float> final_params;
    ModelParams<float> best_params;
    TrainState state;
};

/// Raised when the objective or a gradient becomes non-finite.
class TrainingDiverged : public NumericError {
public:
    TrainingDiverged(const std::string& what, std::string last_good)
        : NumericError(what + (last_good.empty() ? std::string() : " (last good checkpoint: " + last_good + ")")),
          last_good_checkpoint(std::move(last_good)) {}
    std::string last_good_checkpoint;
};

/// Model-selection score for the current parameters (higher is better).
using Validator = std::function<double(const ModelParams<float>&)>;

inline std::string train_log_header() { return "step,epoch,mil,smooth,con,total,val_mAP"; }

inline std::string train_log_row(const StepLog& s) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "%zu,%zu,%.9g,%.9g,%.9g,%.9g,", s.step, s.epoch, s.loss.mil, s.loss.smooth,
                  s.loss.con, s.loss.total);
    std::string row(buf);
    if (s.val_map) {
        std::snprintf(buf, sizeof buf, "%.9g", *s.val_map);
        row += buf;
    }
    return row;
}

inline std::string format_train_log(const std::vector<StepLog>& history) {
    std::string out = train_log_header() + "\n";
    for (const auto& s : history) out += train_log_row(s) + "\n";
    return out;
}

/// Forward, objective and gradients for one batch.
struct BatchGradients {
    LossBreakdown loss;
    GradientMap<float> grads;
    std::vector<PredictionTrace> traces;
    std::vector<SelectionResult> selections;
};

inline BatchGradients compute_batch(std::span<const WeakSample* const> batch, const ModelParams<float>& params,
                                    const ModelConfig& cfg, const LossWeights& weights) {
    Tape<float> tape;
    const BoundParams<float> bound(tape, params, true);
    std::vector<ForwardPass<float>> passes;
    std::vector<int> labels;
    for (const WeakSample* s : batch) {
        passes.push_back(forward(tape, bound, cfg, *s));
        labels.push_back(s->label);
    }
    auto loss = total_loss<float>(passes, labels, weights, cfg);
    tape.backward(loss.total);
    BatchGradients out;
    out.loss = loss.breakdown;
    for (const auto& [name, var] : bound.all()) out.grads.emplace(name, var.grad());
    for (auto& p : passes) out.traces.push_back(std::move(p.trace));
    out.selections = std::move(loss.selections);
    return out;
}

/// Mini-batch Adam on the composite objective with seeded shuffling.
/// When a validator is given, the best-scoring parameters are retained
/// (and written to <checkpoint_dir>/best when a directory is set).
inline TrainResult train(std::span<const WeakSample* const> train_set, const ModelConfig& cfg, const LossWeights& weights,
                         const TrainConfig& tc, const Validator& validate = {},
                         std::optional<ModelParams<float>> init = std::nullopt) {
    cfg.validate();
    weights.validate();
    tc.validate();
    if (train_set.empty()) throw ArgumentError("train: empty training set");

    TrainResult result;
    result.final_params = init ? std::move(*init) : ModelParams<float>::initialize(cfg);
    result.final_params.audit(cfg);
    result.best_params = result.final_params;
    TrainState& st = result.state;
    ModelParams<float>& params = result.final_params;
    const std::filesystem::path ckpt = tc.checkpoint_dir;

    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<const WeakSample*> batch;
    for (std::size_t epoch = 1; epoch <= tc.epochs; ++epoch) {
        Rng rng(Rng::derive(tc.seed, epoch));
        rng.shuffle(order.begin(), order.end());
        for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
            batch.clear();
            for (std::size_t k = start; k < std::min(order.size(), start + tc.batch_size); ++k) batch.push_back(train_set[order[k]]);
            LossWeights w = weights;
            w.seed = Rng::derive(weights.seed, st.step);
            BatchGradients bg;
            try {
                bg = compute_batch(batch, params, cfg, w);
                if (!std::isfinite(bg.loss.total)) throw NumericError("non-finite loss");
                adam_step(params, bg.grads, st.adam, tc.adam());
            } catch (const NumericError& e) {
                throw TrainingDiverged(std::string("training diverged at step ") + std::to_string(st.step + 1) + ": " +
                                           e.what(),
                                       st.best_checkpoint);
            }
            ++st.step;
            st.history.push_back({st.step, epoch, bg.loss, std::nullopt});
        }
        if (validate && (epoch % tc.eval_every == 0 || epoch == tc.epochs)) {
            const double score = validate(params);
            st.history.back().val_map = score;
            if (score > st.best_val_map) {
                st.best_val_map = score;
                st.best_epoch = epoch;
                result.best_params = params;
                if (!ckpt.empty()) {
                    save_checkpoint(ckpt / "best", params, cfg);
                    st.best_checkpoint = (ckpt / "best").string();
                }
            }
        }
    }
    if (!validate) result.best_params = params;
    if (!ckpt.empty()) save_checkpoint(ckpt / "last", params, cfg);
    return result;
}

}  // namespace mhl
