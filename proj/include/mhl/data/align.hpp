#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>

#include "mhl/data/sample.hpp"
#include "mhl/error.hpp"
#include "mhl/numerics/matrix.hpp"

namespace mhl {

/// Per-column linear interpolation of S rows onto T rows over normalised
/// positions i*(S-1)/(T-1). S == 1 or T == 1 degenerates to repetition.
inline Matrix<float> interpolate_audio(const Matrix<float>& raw, std::size_t frames) {
    const std::size_t s = raw.rows();
    if (s == 0) throw ArgumentError("interpolate_audio: empty input");
    if (frames == 0) throw ArgumentError("interpolate_audio: target length must be >= 1");
    Matrix<float> out(frames, raw.cols());
    for (std::size_t i = 0; i < frames; ++i) {
        if (s == 1 || frames == 1) {
            std::copy_n(raw.row(0).data(), raw.cols(), out.row(i).data());
            continue;
        }
        const double pos = static_cast<double>(i * (s - 1)) / static_cast<double>(frames - 1);
        std::size_t lo = static_cast<std::size_t>(std::floor(pos));
        if (lo >= s - 1) lo = s - 1;
        const std::size_t hi = std::min(lo + 1, s - 1);
        const double frac = pos - static_cast<double>(lo);
        auto a = raw.row(lo);
        auto b = raw.row(hi);
        auto o = out.row(i);
        for (std::size_t c = 0; c < raw.cols(); ++c) {
            const double av = a[c], bv = b[c];
            o[c] = static_cast<float>(av + frac * (bv - av));
        }
    }
    return out;
}

inline void validate_spans(std::span<const SentenceSpan> spans) {
    for (std::size_t i = 0; i < spans.size(); ++i) {
        const auto& s = spans[i];
        if (!(s.start_s >= 0.0 && s.start_s < s.end_s)) {
            throw ArgumentError("sentence " + std::to_string(i) + ": need 0 <= start_s < end_s");
        }
        if (i > 0 && s.start_s < spans[i - 1].end_s) {
            throw ArgumentError("sentence " + std::to_string(i) + ": spans must be sorted and non-overlapping");
        }
    }
}

/// Frame t covers [t/fps, (t+1)/fps) and takes the embedding of the span
/// containing its midpoint; uncovered frames stay zero.
inline Matrix<float> expand_sentences(std::span<const SentenceSpan> spans, const Matrix<float>& embeddings,
                                      std::size_t frames, double fps) {
    if (!(fps > 0.0)) throw ArgumentError("expand_sentences: fps must be > 0");
    validate_spans(spans);
    for (const auto& s : spans) {
        if (s.embedding_row >= embeddings.rows()) {
            throw IndexError("expand_sentences: embedding row " + std::to_string(s.embedding_row) +
                             " out of range for " + std::to_string(embeddings.rows()) + " sentences");
        }
    }
    Matrix<float> out(frames, embeddings.cols());
    std::size_t k = 0;
    for (std::size_t t = 0; t < frames; ++t) {
        const double mid = (static_cast<double>(t) + 0.5) / fps;
        while (k < spans.size() && spans[k].end_s <= mid) ++k;
        if (k < spans.size() && spans[k].start_s <= mid) {
            auto src = embeddings.row(spans[k].embedding_row);
            std::copy(src.begin(), src.end(), out.row(t).begin());
        }
    }
    return out;
}

/// Whole-transcript embedding repeated on every frame.
inline Matrix<float> naive_text_expand(const Matrix<float>& global_embedding, std::size_t frames) {
    if (global_embedding.rows() != 1) {
        throw DimensionError("naive_text_expand: expected a 1xD embedding, got " + global_embedding.shape());
    }
    if (frames == 0) throw ArgumentError("naive_text_expand: T must be >= 1");
    Matrix<float> out(frames, global_embedding.cols());
    for (std::size_t t = 0; t < frames; ++t)
        std::copy_n(global_embedding.data(), global_embedding.cols(), out.row(t).data());
    return out;
}

}  // namespace mhl
