#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mhl/data/align.hpp"
#include "mhl/data/sample.hpp"

namespace mhl {

/// A sample as stored on disk, before temporal alignment: audio at its
/// native clip rate, text as sentence spans plus a whole-transcript
/// embedding.
struct RawSample {
    std::string id;
    int label = 0;
    double fps = 1.0;
    Matrix<float> video;                ///< T x Dv
    Matrix<float> audio;                ///< S_a x Da
    std::vector<SentenceSpan> sentences;
    Matrix<float> sentence_embeddings;  ///< S x Dt
    Matrix<float> naive_text;           ///< 1 x Dt
    std::optional<std::vector<std::uint8_t>> frame_truth;

    std::size_t frames() const noexcept { return video.rows(); }
};

/// Aligns all three streams to the video frame count.
inline VideoSample ingest(const RawSample& raw, TextMode mode) {
    const std::size_t t = raw.frames();
    if (t == 0) throw FormatError("sample '" + raw.id + "': empty video stream");
    VideoSample s;
    s.id = raw.id;
    s.label = raw.label;
    s.fps = raw.fps;
    s.features[0] = {Modality::kVideo, raw.video};
    s.features[1] = {Modality::kAudio, interpolate_audio(raw.audio, t)};
    const std::size_t text_dim = raw.sentence_embeddings.cols() > 0 ? raw.sentence_embeddings.cols() : raw.naive_text.cols();
    Matrix<float> text;
    switch (mode) {
        case TextMode::kSentence:
            text = expand_sentences(raw.sentences, raw.sentence_embeddings, t, raw.fps);
            break;
        case TextMode::kNaive:
            text = naive_text_expand(raw.naive_text, t);
            break;
        case TextMode::kNone:
            text = Matrix<float>(t, text_dim);
            break;
    }
    s.features[2] = {Modality::kText, std::move(text)};
    s.frame_truth = raw.frame_truth;
    s.validate();
    return s;
}

}  // namespace mhl
