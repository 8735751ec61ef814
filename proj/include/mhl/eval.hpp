#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mhl/metrics/metrics.hpp"
#include "mhl/model/network.hpp"
#include "mhl/train/trainer.hpp"

namespace mhl {

/// Worker cap from MHL_THREADS (default: hardware concurrency).
inline std::size_t thread_budget() {
    std::size_t n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("MHL_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) n = static_cast<std::size_t>(v);
    }
    return n;
}

/// Evaluation-mode traces for every sample. Samples are independent, so
/// they are spread over up to thread_budget() workers; results do not
/// depend on the worker count.
template <typename Sample>
std::vector<PredictionTrace> predict_all(std::span<const Sample> samples, const ModelParams<float>& params,
                                         const ModelConfig& cfg) {
    std::vector<PredictionTrace> out(samples.size());
    const std::size_t workers = std::min(thread_budget(), std::max<std::size_t>(1, samples.size()));
    if (workers <= 1) {
        for (std::size_t i = 0; i < samples.size(); ++i) out[i] = predict(samples[i], params, cfg);
        return out;
    }
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            for (std::size_t i = w; i < samples.size(); i += workers) out[i] = predict(samples[i], params, cfg);
        });
    }
    for (auto& t : pool) t.join();
    return out;
}

inline EvalReport evaluate(std::span<const VideoSample> samples, const ModelParams<float>& params, const ModelConfig& cfg) {
    const auto traces = predict_all(samples, params, cfg);
    return evaluate_split(samples, traces);
}

/// Validator scoring frame-level mAP on a held-out split.
inline Validator map_validator(std::span<const VideoSample> val, const ModelConfig& cfg) {
    return [val, cfg](const ModelParams<float>& p) { return evaluate(val, p, cfg).mAP; };
}

/// Pointers to the weakly labelled view of each sample.
inline std::vector<const WeakSample*> weak_view(std::span<const VideoSample> samples) {
    std::vector<const WeakSample*> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(&s);
    return out;
}

template <typename Sample>
std::vector<Sample> select(const std::vector<Sample>& all, const std::vector<std::size_t>& idx) {
    std::vector<Sample> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(all.at(i));
    return out;
}

}  // namespace mhl
