#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "mhl/data/ingest.hpp"
#include "mhl/data/sample.hpp"
#include "mhl/error.hpp"
#include "mhl/numerics/rng.hpp"

namespace mhl {

/// Bit set over modalities: bit 0 video, bit 1 audio, bit 2 text.
using CarrierSet = std::uint8_t;

inline constexpr CarrierSet carrier_bit(Modality m) { return static_cast<CarrierSet>(1u << index_of(m)); }

inline CarrierSet parse_carrier(const std::string& s) {
    CarrierSet c = 0;
    for (char ch : s) {
        switch (ch) {
            case 'v': c |= carrier_bit(Modality::kVideo); break;
            case 'a': c |= carrier_bit(Modality::kAudio); break;
            case 't':
            case 'l': c |= carrier_bit(Modality::kText); break;
            default: throw ArgumentError("bad carrier set '" + s + "' (use letters v, a, t)");
        }
    }
    if (c == 0) throw ArgumentError("empty carrier set");
    return c;
}

inline std::string carrier_name(CarrierSet c) {
    std::string s;
    if (c & carrier_bit(Modality::kVideo)) s += 'v';
    if (c & carrier_bit(Modality::kAudio)) s += 'a';
    if (c & carrier_bit(Modality::kText)) s += 't';
    return s;
}

inline std::vector<CarrierSet> all_carrier_sets() { return {0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111}; }

struct SyntheticSpec {
    std::size_t num_videos = 200;
    double positive_fraction = 0.5;
    std::size_t t_min = 40;
    std::size_t t_max = 120;
    std::size_t segments_min = 2;
    std::size_t segments_max = 4;
    std::size_t segment_len_min = 8;
    std::size_t segment_len_max = 20;
    std::vector<CarrierSet> carriers = all_carrier_sets();
    double signal_shift = 2.0;
    double noise_scale = 1.0;
    /// Coordinates per modality that carry the planted pattern.
    std::size_t signal_dims = 16;
    std::uint64_t seed = 0;
    /// Seed of the planted patterns; shared across dataset seeds so that
    /// different draws carry the same signal semantics.
    std::uint64_t pattern_seed = 7;
    double fps = 1.0;
    std::array<std::size_t, 3> dims{768, 128, 768};
    /// Length range, in frames, of non-target sentences.
    std::size_t sentence_len_min = 2;
    std::size_t sentence_len_max = 6;
    /// Probability that a non-target sentence slot is silence.
    double silence_probability = 0.1;

    void validate() const {
        if (num_videos == 0) throw SpecError("num_videos must be >= 1");
        if (!(positive_fraction >= 0.0 && positive_fraction <= 1.0)) throw SpecError("positive_fraction must be in [0,1]");
        if (t_min == 0 || t_min > t_max) throw SpecError("need 1 <= t_min <= t_max");
        if (segments_min == 0 || segments_min > segments_max) throw SpecError("need 1 <= segments_min <= segments_max");
        if (segment_len_min == 0 || segment_len_min > segment_len_max) {
            throw SpecError("need 1 <= segment_len_min <= segment_len_max");
        }
        if (segment_len_max > t_min) {
            throw SpecError("segment length " + std::to_string(segment_len_max) + " exceeds shortest video T=" +
                            std::to_string(t_min));
        }
        if (carriers.empty()) throw SpecError("carrier distribution is empty");
        for (auto c : carriers)
            if (c == 0 || c > 7) throw SpecError("invalid carrier set");
        if (!(noise_scale >= 0.0) || !(signal_shift >= 0.0)) throw SpecError("noise and signal must be >= 0");
        if (!(fps > 0.0)) throw SpecError("fps must be > 0");
        for (auto d : dims)
            if (d == 0) throw SpecError("feature dims must be >= 1");
        for (auto d : dims)
            if (signal_dims > d) throw SpecError("signal_dims exceeds a feature dimension");
        if (sentence_len_min == 0 || sentence_len_min > sentence_len_max) throw SpecError("bad sentence length range");
        if (!(silence_probability >= 0.0 && silence_probability < 1.0)) throw SpecError("silence_probability in [0,1)");
    }
};

struct PlantedSegment {
    std::size_t start = 0;
    std::size_t length = 0;
    CarrierSet carriers = 0;
};

namespace detail {

inline std::array<std::vector<float>, 3> planted_patterns(const SyntheticSpec& spec) {
    std::array<std::vector<float>, 3> out;
    for (Modality m : kModalities) {
        Rng rng(Rng::derive(spec.pattern_seed, 100 + index_of(m)));
        const std::size_t d = spec.dims[index_of(m)];
        std::vector<std::size_t> coords(d);
        for (std::size_t i = 0; i < d; ++i) coords[i] = i;
        rng.shuffle(coords.begin(), coords.end());
        std::vector<float> p(d, 0.0f);
        for (std::size_t k = 0; k < spec.signal_dims; ++k) p[coords[k]] = rng.uniform() < 0.5 ? -1.0f : 1.0f;
        out[index_of(m)] = std::move(p);
    }
    return out;
}

inline void fill_noise(Matrix<float>& m, Rng& rng, double scale) {
    for (auto& v : m.values()) v = static_cast<float>(scale * rng.normal());
}

inline void add_pattern(std::span<float> row, const std::vector<float>& pattern, double shift) {
    for (std::size_t c = 0; c < row.size(); ++c)
        if (pattern[c] != 0.0f) row[c] = static_cast<float>(row[c] + shift * pattern[c]);
}

/// Non-overlapping segments separated by at least one background frame.
inline std::vector<PlantedSegment> place_segments(const SyntheticSpec& spec, std::size_t frames, Rng& rng) {
    const auto wanted = static_cast<std::size_t>(rng.uniform_int(
        static_cast<std::int64_t>(spec.segments_min), static_cast<std::int64_t>(spec.segments_max)));
    std::vector<PlantedSegment> segs;
    for (std::size_t attempt = 0; segs.size() < wanted && attempt < 200; ++attempt) {
        const auto len = static_cast<std::size_t>(rng.uniform_int(
            static_cast<std::int64_t>(spec.segment_len_min), static_cast<std::int64_t>(spec.segment_len_max)));
        const auto start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(frames - len)));
        bool clash = false;
        for (const auto& s : segs) {
            if (start < s.start + s.length + 1 && s.start < start + len + 1) clash = true;
        }
        if (clash) continue;
        const auto& pool = spec.carriers;
        const auto c = pool[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1))];
        segs.push_back({start, len, c});
    }
    std::sort(segs.begin(), segs.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    return segs;
}

}  // namespace detail

/// One synthetic video in raw (pre-alignment) form, plus the planted segments.
struct SyntheticVideo {
    RawSample raw;
    std::vector<PlantedSegment> segments;
};

inline SyntheticVideo generate_synthetic_video(const SyntheticSpec& spec, std::size_t index, bool positive,
                                               const std::array<std::vector<float>, 3>& patterns) {
    Rng rng(Rng::derive(spec.seed, index));
    const auto frames = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(spec.t_min), static_cast<std::int64_t>(spec.t_max)));
    SyntheticVideo out;
    RawSample& raw = out.raw;
    raw.id = "vid" + std::to_string(index);
    raw.label = positive ? 1 : 0;
    raw.fps = spec.fps;
    if (positive) out.segments = detail::place_segments(spec, frames, rng);

    const auto has = [](const PlantedSegment& s, Modality m) { return (s.carriers & carrier_bit(m)) != 0; };

    raw.video = Matrix<float>(frames, spec.dims[0]);
    detail::fill_noise(raw.video, rng, spec.noise_scale);
    for (const auto& s : out.segments)
        if (has(s, Modality::kVideo))
            for (std::size_t t = s.start; t < s.start + s.length; ++t)
                detail::add_pattern(raw.video.row(t), patterns[0], spec.signal_shift);

    // Audio clips are one second long; a clip carries signal when it
    // overlaps an audio-carrying segment.
    const double duration = static_cast<double>(frames) / spec.fps;
    const auto clips = static_cast<std::size_t>(std::max(1.0, std::ceil(duration - 1e-9)));
    raw.audio = Matrix<float>(clips, spec.dims[1]);
    detail::fill_noise(raw.audio, rng, spec.noise_scale);
    for (std::size_t k = 0; k < clips; ++k) {
        for (const auto& s : out.segments) {
            const double s0 = static_cast<double>(s.start) / spec.fps;
            const double s1 = static_cast<double>(s.start + s.length) / spec.fps;
            if (has(s, Modality::kAudio) && static_cast<double>(k) < s1 && s0 < static_cast<double>(k + 1)) {
                detail::add_pattern(raw.audio.row(k), patterns[1], spec.signal_shift);
                break;
            }
        }
    }

    // Text: each planted segment is one sentence; the rest of the timeline
    // is chopped into sentences of random length, some left silent.
    struct Slot {
        std::size_t start, length;
        bool text_signal;
    };
    std::vector<Slot> slots;
    std::size_t cursor = 0;
    auto fill_gap = [&](std::size_t end) {
        while (cursor < end) {
            const auto len = std::min<std::size_t>(
                end - cursor, static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(spec.sentence_len_min),
                                                                       static_cast<std::int64_t>(spec.sentence_len_max))));
            if (rng.uniform() >= spec.silence_probability) slots.push_back({cursor, len, false});
            cursor += len;
        }
    };
    for (const auto& s : out.segments) {
        fill_gap(s.start);
        slots.push_back({s.start, s.length, has(s, Modality::kText)});
        cursor = s.start + s.length;
    }
    fill_gap(frames);

    raw.sentence_embeddings = Matrix<float>(slots.size(), spec.dims[2]);
    detail::fill_noise(raw.sentence_embeddings, rng, spec.noise_scale);
    raw.naive_text = Matrix<float>(1, spec.dims[2]);
    for (std::size_t k = 0; k < slots.size(); ++k) {
        if (slots[k].text_signal) detail::add_pattern(raw.sentence_embeddings.row(k), patterns[2], spec.signal_shift);
        raw.sentences.push_back({static_cast<double>(slots[k].start) / spec.fps,
                                 static_cast<double>(slots[k].start + slots[k].length) / spec.fps, k});
        auto row = raw.sentence_embeddings.row(k);
        for (std::size_t c = 0; c < row.size(); ++c) raw.naive_text[c] += row[c];
    }
    if (!slots.empty()) {
        const float norm = static_cast<float>(1.0 / std::sqrt(static_cast<double>(slots.size())));
        for (auto& v : raw.naive_text.values()) v *= norm;
    }

    std::vector<std::uint8_t> truth(frames, 0);
    for (const auto& s : out.segments)
        for (std::size_t t = s.start; t < s.start + s.length; ++t) truth[t] = 1;
    raw.frame_truth = std::move(truth);
    return out;
}

/// Full synthetic dataset in raw form. Deterministic in spec.seed.
inline std::vector<SyntheticVideo> generate_synthetic_raw(const SyntheticSpec& spec) {
    spec.validate();
    const auto positives = static_cast<std::size_t>(std::llround(spec.positive_fraction * static_cast<double>(spec.num_videos)));
    std::vector<std::size_t> order(spec.num_videos);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(Rng::derive(spec.seed, 0xABCDEF));
    rng.shuffle(order.begin(), order.end());
    std::vector<bool> is_positive(spec.num_videos, false);
    for (std::size_t k = 0; k < positives; ++k) is_positive[order[k]] = true;

    const auto patterns = detail::planted_patterns(spec);
    std::vector<SyntheticVideo> out;
    out.reserve(spec.num_videos);
    for (std::size_t i = 0; i < spec.num_videos; ++i)
        out.push_back(generate_synthetic_video(spec, i, is_positive[i], patterns));
    return out;
}

/// Synthetic dataset aligned and ready for the model.
inline std::vector<VideoSample> generate_synthetic(const SyntheticSpec& spec, TextMode mode = TextMode::kSentence) {
    std::vector<VideoSample> out;
    for (const auto& v : generate_synthetic_raw(spec)) out.push_back(ingest(v.raw, mode));
    return out;
}

}  // namespace mhl
