#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhl/data/sample.hpp"
#include "mhl/error.hpp"
#include "mhl/model/network.hpp"

// Frame-level ranking metrics. Equal scores form one rank block: AP and the
// PR curve only take a point at the end of each block, and ROC credits
// tied positive/negative pairs with one half.

namespace mhl {

namespace detail {

struct Counts {
    std::size_t positives = 0;
    std::size_t negatives = 0;
};

inline Counts count_labels(std::span<const double> scores, std::span<const std::uint8_t> truth) {
    if (scores.size() != truth.size()) {
        throw DimensionError("metric: " + std::to_string(scores.size()) + " scores vs " + std::to_string(truth.size()) +
                             " labels");
    }
    Counts c;
    for (auto t : truth) (t ? c.positives : c.negatives)++;
    return c;
}

/// Indices ordered by descending score.
inline std::vector<std::size_t> descending_order(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

/// (true positives, retrieved) at the end of each tie block, best first.
inline std::vector<std::pair<std::size_t, std::size_t>> block_curve(std::span<const double> scores,
                                                                    std::span<const std::uint8_t> truth) {
    const auto order = descending_order(scores);
    std::vector<std::pair<std::size_t, std::size_t>> pts;
    std::size_t tp = 0, n = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            tp += truth[order[j]] ? 1 : 0;
            ++j;
        }
        n = j;
        pts.emplace_back(tp, n);
        i = j;
    }
    return pts;
}

}  // namespace detail

/// Sum over tie blocks of (positives in block / total positives) times the
/// precision at the end of the block.
inline double average_precision(std::span<const double> scores, std::span<const std::uint8_t> truth) {
    const auto c = detail::count_labels(scores, truth);
    if (c.positives == 0) throw MetricError("average precision is undefined without positive frames");
    double ap = 0.0;
    std::size_t prev_tp = 0;
    for (const auto& [tp, n] : detail::block_curve(scores, truth)) {
        ap += static_cast<double>(tp - prev_tp) * (static_cast<double>(tp) / static_cast<double>(n));
        prev_tp = tp;
    }
    return ap / static_cast<double>(c.positives);
}

/// Mann-Whitney estimate of P(score_pos > score_neg), ties counted 1/2,
/// via average ranks.
inline double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> truth) {
    const auto c = detail::count_labels(scores, truth);
    if (c.positives == 0 || c.negatives == 0) throw MetricError("ROC AUC is undefined for single-class input");
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    // Twice the rank sum of positives, kept integral.
    std::uint64_t rank2 = 0;
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        std::size_t pos = 0;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
            pos += truth[idx[j]] ? 1 : 0;
            ++j;
        }
        // Ranks i+1..j average to (i + 1 + j) / 2.
        rank2 += static_cast<std::uint64_t>(pos) * (i + 1 + j);
        i = j;
    }
    const double p = static_cast<double>(c.positives);
    const double u2 = static_cast<double>(rank2) - p * (p + 1.0);
    return u2 / (2.0 * p * static_cast<double>(c.negatives));
}

/// Trapezoidal area under the precision-recall curve through (0, 1) and
/// the end point of every tie block.
inline double pr_auc(std::span<const double> scores, std::span<const std::uint8_t> truth) {
    const auto c = detail::count_labels(scores, truth);
    if (c.positives == 0) throw MetricError("PR AUC is undefined without positive frames");
    double area = 0.0, r0 = 0.0, p0 = 1.0;
    for (const auto& [tp, n] : detail::block_curve(scores, truth)) {
        const double r = static_cast<double>(tp) / static_cast<double>(c.positives);
        const double p = static_cast<double>(tp) / static_cast<double>(n);
        area += (r - r0) * (p + p0) / 2.0;
        r0 = r;
        p0 = p;
    }
    return area;
}

struct EvalReport {
    double mAP = 0.0;
    std::optional<double> roc_auc;
    std::string roc_auc_error;  ///< set when roc_auc is undefined
    double pr_auc = 0.0;
    std::size_t frame_count = 0;
    double positive_fraction = 0.0;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["mAP"] = mAP;
        j["roc_auc"] = roc_auc ? nlohmann::json(*roc_auc) : nlohmann::json(nullptr);
        if (!roc_auc_error.empty()) j["roc_auc_error"] = roc_auc_error;
        j["pr_auc"] = pr_auc;
        j["frame_count"] = frame_count;
        j["positive_fraction"] = positive_fraction;
        return j;
    }

    static std::string csv_header() { return "mAP,roc_auc,pr_auc,frame_count,positive_fraction"; }

    std::string csv_row() const {
        std::ostringstream os;
        os.precision(10);
        os << mAP << ',';
        if (roc_auc) os << *roc_auc;
        os << ',' << pr_auc << ',' << frame_count << ',' << positive_fraction;
        return os.str();
    }
};

/// Concatenates every frame of the split into one ranking.
inline EvalReport evaluate_split(std::span<const VideoSample> samples, std::span<const PredictionTrace> traces) {
    if (samples.size() != traces.size()) throw ArgumentError("evaluate_split: sample/trace count mismatch");
    if (samples.empty()) throw MetricError("evaluate_split: empty split");
    std::vector<double> scores;
    std::vector<std::uint8_t> truth;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!samples[i].frame_truth) throw MetricError("evaluate_split: sample '" + samples[i].id + "' has no frame truth");
        const auto& ft = *samples[i].frame_truth;
        if (ft.size() != traces[i].fused.size()) {
            throw DimensionError("evaluate_split: sample '" + samples[i].id + "' truth/prediction length mismatch");
        }
        scores.insert(scores.end(), traces[i].fused.begin(), traces[i].fused.end());
        truth.insert(truth.end(), ft.begin(), ft.end());
    }
    EvalReport r;
    r.frame_count = scores.size();
    const auto pos = static_cast<double>(std::count(truth.begin(), truth.end(), std::uint8_t{1}));
    r.positive_fraction = pos / static_cast<double>(r.frame_count);
    r.mAP = average_precision(scores, truth);
    r.pr_auc = pr_auc(scores, truth);
    try {
        r.roc_auc = roc_auc(scores, truth);
    } catch (const MetricError& e) {
        r.roc_auc_error = e.what();
    }
    return r;
}

}  // namespace mhl
