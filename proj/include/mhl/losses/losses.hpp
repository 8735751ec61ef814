#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mhl/error.hpp"
#include "mhl/model/config.hpp"
#include "mhl/model/network.hpp"
#include "mhl/numerics/ops.hpp"
#include "mhl/numerics/rng.hpp"

namespace mhl {

struct LossWeights {
    double lambda_smooth = 0.1;
    double lambda_con = 0.2;
    double tau = 0.1;
    std::size_t k_div = 3;
    /// Per-video cap on contrastive timestamps; 0 keeps every frame.
    std::size_t max_ctr_frames = 0;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(lambda_smooth >= 0.0) || !(lambda_con >= 0.0)) throw ConfigError("loss weights must be >= 0");
        if (!(tau > 0.0)) throw ConfigError("contrastive temperature must be > 0");
        if (k_div < 1) throw ConfigError("k_div must be >= 1");
    }
};

/// Scalar values of the objective, kept for logging.
struct LossBreakdown {
    double mil = 0.0;
    double smooth = 0.0;
    double con = 0.0;
    double total = 0.0;
};

inline constexpr double kLogClampLo = 1e-7;
inline constexpr double kLogClampHi = 1.0 - 1e-7;

/// max(1, ceil(T / k_div))
inline std::size_t selection_size(std::size_t frames, std::size_t k_div) {
    if (k_div == 0) throw ArgumentError("k_div must be >= 1");
    return std::max<std::size_t>(1, (frames + k_div - 1) / k_div);
}

/// Indices of the selection_size(T, k_div) largest scores, ties toward the
/// smaller index; returned in ascending index order.
inline std::vector<std::size_t> topk_select(std::span<const double> scores, std::size_t k_div) {
    if (scores.empty()) throw ArgumentError("topk_select: empty score vector");
    const std::size_t n = selection_size(scores.size(), k_div);
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
    });
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Builds S_m from gate-scaled branch scores, S_fused from the fused
/// probabilities, and S_final as their index union. Without modality
/// awareness (or without branch heads) S_final is S_fused.
inline SelectionResult build_final_set(const PredictionTrace& trace, std::size_t k_div, bool modality_aware = true) {
    SelectionResult s;
    s.target_size = selection_size(trace.frames, k_div);
    s.fused = topk_select(trace.fused, k_div);
    std::vector<std::size_t> merged = s.fused;
    for (std::size_t m = 0; m < 3; ++m) {
        const auto& g = trace.gate[m];
        s.modality_weight[m] = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
        if (!modality_aware || !trace.has_branch_heads) continue;
        std::vector<double> scaled(trace.branch[m]);
        for (auto& v : scaled) v *= s.modality_weight[m];
        s.per_modality[m] = topk_select(scaled, k_div);
        merged.insert(merged.end(), s.per_modality[m].begin(), s.per_modality[m].end());
    }
    std::sort(merged.begin(), merged.end());
    merged.erase(std::unique(merged.begin(), merged.end()), merged.end());
    s.final_set = std::move(merged);
    return s;
}

/// Mean over S_final of -log(yhat) for positive bags and -log(1 - yhat)
/// for negative bags, with the argument clamped to [1e-7, 1 - 1e-7].
template <typename T>
Var<T> mil_loss(const Var<T>& fused, const SelectionResult& sel, int label) {
    if (sel.final_set.empty()) throw ArgumentError("mil_loss: empty selection");
    auto picked = gather_rows(fused, sel.final_set);
    if (label == 0) picked = one_minus(picked);
    const auto logs = log_clamped(picked, static_cast<T>(kLogClampLo), static_cast<T>(kLogClampHi));
    return scale(sum(logs), static_cast<T>(-1.0 / static_cast<double>(sel.final_set.size())));
}

/// Mean squared difference of adjacent frame probabilities; 0 for T = 1.
template <typename T>
Var<T> smoothness_loss(const Var<T>& probs) {
    const std::size_t frames = probs.rows();
    if (frames < 2) return probs.tape().constant(Matrix<T>(1, 1));
    const auto diff = sub(slice_rows(probs, 1, frames - 1), slice_rows(probs, 0, frames - 1));
    return scale(sum(mul(diff, diff)), T{1} / static_cast<T>(frames - 1));
}

inline constexpr std::array<std::array<std::size_t, 2>, 3> kContrastPairs{{{0, 1}, {1, 2}, {0, 2}}};

/// Cross-modal InfoNCE over a batch. For each pair (m, n) each modality-m
/// frame is an anchor whose positive is the modality-n frame of the same
/// video and timestamp; every modality-n frame in the batch is a candidate.
/// Averaged over anchors, then over the three pairs.
template <typename T>
Var<T> contrastive_loss(std::span<const std::array<Var<T>, 3>> encoded, double tau, std::size_t max_frames = 0,
                        std::uint64_t seed = 0) {
    if (encoded.empty()) throw ArgumentError("contrastive_loss: empty batch");
    if (!(tau > 0.0)) throw ArgumentError("contrastive_loss: tau must be > 0");
    std::array<std::vector<Var<T>>, 3> stacks;
    for (std::size_t i = 0; i < encoded.size(); ++i) {
        const std::size_t frames = encoded[i][0].rows();
        std::vector<std::size_t> keep;
        if (max_frames > 0 && frames > max_frames) {
            keep.resize(frames);
            std::iota(keep.begin(), keep.end(), std::size_t{0});
            Rng rng(Rng::derive(seed, i));
            rng.shuffle(keep.begin(), keep.end());
            keep.resize(max_frames);
            std::sort(keep.begin(), keep.end());
        }
        for (std::size_t m = 0; m < 3; ++m) {
            if (encoded[i][m].rows() != frames) throw DimensionError("contrastive_loss: streams not aligned");
            stacks[m].push_back(keep.empty() ? encoded[i][m] : gather_rows(encoded[i][m], keep));
        }
    }
    std::array<Var<T>, 3> normed;
    for (std::size_t m = 0; m < 3; ++m) {
        const auto all = stacks[m].size() == 1 ? stacks[m].front() : concat_rows(stacks[m]);
        normed[m] = l2_normalize_rows(all);
    }
    const std::size_t n = normed[0].rows();
    std::vector<std::size_t> targets(n);
    std::iota(targets.begin(), targets.end(), std::size_t{0});
    std::vector<Var<T>> terms;
    for (const auto& [a, b] : kContrastPairs) {
        const auto logits = scale(matmul_nt(normed[a], normed[b]), static_cast<T>(1.0 / tau));
        terms.push_back(softmax_cross_entropy(logits, targets));
    }
    return scale(add(add(terms[0], terms[1]), terms[2]), T{1} / T{3});
}

inline double combine_losses(double mil, double smooth, double con, const LossWeights& w) {
    return mil + w.lambda_smooth * smooth + w.lambda_con * con;
}

template <typename T>
struct BatchLoss {
    Var<T> total;
    LossBreakdown breakdown;
    std::vector<SelectionResult> selections;
};

/// Batch objective: mean MIL + lambda_smooth * mean smoothness +
/// lambda_con * batch contrastive term. Disabled modules contribute 0.
template <typename T>
BatchLoss<T> total_loss(std::span<const ForwardPass<T>> passes, std::span<const int> labels, const LossWeights& w,
                        const ModelConfig& cfg) {
    w.validate();
    if (passes.empty()) throw ArgumentError("total_loss: empty batch");
    if (passes.size() != labels.size()) throw ArgumentError("total_loss: label count does not match batch");
    Tape<T>& tape = passes.front().fused.tape();
    tape.set_scope("loss");
    BatchLoss<T> out;
    std::vector<Var<T>> mils, smooths;
    for (std::size_t i = 0; i < passes.size(); ++i) {
        auto sel = build_final_set(passes[i].trace, w.k_div, cfg.use_mamil);
        mils.push_back(mil_loss(passes[i].fused, sel, labels[i]));
        smooths.push_back(smoothness_loss(passes[i].fused));
        out.selections.push_back(std::move(sel));
    }
    const T inv_b = T{1} / static_cast<T>(passes.size());
    const auto mil = scale(sum(concat_rows(mils)), inv_b);
    const auto smooth = scale(sum(concat_rows(smooths)), inv_b);
    auto total = add(mil, scale(smooth, static_cast<T>(w.lambda_smooth)));
    out.breakdown.mil = static_cast<double>(mil.scalar());
    out.breakdown.smooth = static_cast<double>(smooth.scalar());
    if (cfg.use_contrast && w.lambda_con > 0.0) {
        std::vector<std::array<Var<T>, 3>> enc;
        for (const auto& p : passes) enc.push_back(p.encoded);
        const auto con = contrastive_loss<T>(enc, w.tau, w.max_ctr_frames, w.seed);
        out.breakdown.con = static_cast<double>(con.scalar());
        total = add(total, scale(con, static_cast<T>(w.lambda_con)));
    }
    out.breakdown.total = static_cast<double>(total.scalar());
    out.total = total;
    tape.set_scope("");
    return out;
}

}  // namespace mhl
