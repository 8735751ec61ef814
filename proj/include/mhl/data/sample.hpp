#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mhl/error.hpp"
#include "mhl/numerics/matrix.hpp"

namespace mhl {

enum class Modality : std::size_t { kVideo = 0, kAudio = 1, kText = 2 };

inline constexpr std::array<Modality, 3> kModalities{Modality::kVideo, Modality::kAudio, Modality::kText};

inline constexpr std::size_t index_of(Modality m) noexcept { return static_cast<std::size_t>(m); }

/// Short tag used in parameter names and output columns.
inline constexpr std::string_view tag(Modality m) noexcept {
    switch (m) {
        case Modality::kVideo: return "v";
        case Modality::kAudio: return "a";
        case Modality::kText: return "l";
    }
    return "?";
}

/// T x D sequence for one modality.
struct FeatureMatrix {
    Modality modality = Modality::kVideo;
    Matrix<float> values;

    std::size_t frames() const noexcept { return values.rows(); }
    std::size_t dim() const noexcept { return values.cols(); }
};

using FeatureSet = std::array<FeatureMatrix, 3>;

/// What the training path is allowed to see: id, video-level label and the
/// aligned features. Frame-level truth is deliberately not part of it.
struct WeakSample {
    std::string id;
    int label = 0;
    double fps = 1.0;
    FeatureSet features;

    std::size_t frames() const noexcept { return features[0].frames(); }
    const FeatureMatrix& feature(Modality m) const { return features[index_of(m)]; }
};

/// A weakly labelled video plus optional frame-level truth for evaluation.
struct VideoSample : WeakSample {
    std::optional<std::vector<std::uint8_t>> frame_truth;

    /// Checks stream alignment and label/truth consistency.
    void validate() const {
        const std::size_t t = frames();
        if (t == 0) throw FormatError("sample '" + id + "': zero frames");
        for (Modality m : kModalities) {
            const auto& f = feature(m);
            if (f.modality != m) throw FormatError("sample '" + id + "': modality slot mismatch");
            if (f.frames() != t) {
                throw FormatError("sample '" + id + "': stream " + std::string(tag(m)) + " has " +
                                  std::to_string(f.frames()) + " rows, expected " + std::to_string(t));
            }
        }
        if (label != 0 && label != 1) throw FormatError("sample '" + id + "': label must be 0 or 1");
        if (frame_truth) {
            if (frame_truth->size() != t) throw FormatError("sample '" + id + "': truth length mismatch");
            bool any = false;
            for (auto v : *frame_truth) {
                if (v > 1) throw FormatError("sample '" + id + "': truth values must be 0/1");
                any = any || v == 1;
            }
            if (any != (label == 1)) throw FormatError("sample '" + id + "': label inconsistent with frame truth");
        }
    }
};

/// One transcribed sentence: [start_s, end_s) and its row in the
/// sentence-embedding matrix.
struct SentenceSpan {
    double start_s = 0.0;
    double end_s = 0.0;
    std::size_t embedding_row = 0;
};

enum class TextMode { kSentence, kNaive, kNone };

inline std::string_view to_string(TextMode m) {
    switch (m) {
        case TextMode::kSentence: return "sentence";
        case TextMode::kNaive: return "naive";
        case TextMode::kNone: return "none";
    }
    return "?";
}

inline TextMode parse_text_mode(std::string_view s) {
    if (s == "sentence") return TextMode::kSentence;
    if (s == "naive") return TextMode::kNaive;
    if (s == "none") return TextMode::kNone;
    throw ArgumentError("unknown text mode '" + std::string(s) + "' (expected sentence|naive|none)");
}

}  // namespace mhl
