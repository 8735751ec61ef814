#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mhl/data/ingest.hpp"
#include "mhl/data/io.hpp"
#include "mhl/data/sample.hpp"
#include "mhl/numerics/rng.hpp"

namespace mhl {

namespace fs = std::filesystem;

/// One manifest.json record. Paths are relative to the manifest directory.
struct ManifestEntry {
    std::string id;
    int label = 0;
    std::size_t frames = 0;
    double fps = 1.0;
    std::string video_path;
    std::string audio_path;
    TextMode text_mode = TextMode::kSentence;
    std::optional<std::string> sentences_path;  ///< sentences.json
    std::optional<std::string> naive_path;      ///< 1 x D whole-transcript embedding
    std::optional<std::string> truth_path;
};

inline nlohmann::json to_json(const ManifestEntry& e) {
    nlohmann::json j;
    j["id"] = e.id;
    j["label"] = e.label;
    j["T"] = e.frames;
    j["fps"] = e.fps;
    j["video_path"] = e.video_path;
    j["audio_path"] = e.audio_path;
    j["text_mode"] = std::string(to_string(e.text_mode));
    nlohmann::json tp = nlohmann::json::object();
    if (e.sentences_path) tp["sentences"] = *e.sentences_path;
    if (e.naive_path) tp["naive"] = *e.naive_path;
    j["text_paths"] = tp;
    if (e.truth_path) j["truth_path"] = *e.truth_path;
    return j;
}

inline ManifestEntry manifest_entry_from_json(const nlohmann::json& j, const std::string& origin) {
    auto need = [&](const char* key) -> const nlohmann::json& {
        if (!j.contains(key)) throw FormatError(origin + ": manifest entry missing '" + key + "'");
        return j.at(key);
    };
    try {
        ManifestEntry e;
        e.id = need("id").get<std::string>();
        e.label = need("label").get<int>();
        e.frames = need("T").get<std::size_t>();
        e.fps = need("fps").get<double>();
        e.video_path = need("video_path").get<std::string>();
        e.audio_path = need("audio_path").get<std::string>();
        e.text_mode = parse_text_mode(need("text_mode").get<std::string>());
        const auto& tp = need("text_paths");
        if (tp.contains("sentences")) e.sentences_path = tp.at("sentences").get<std::string>();
        if (tp.contains("naive")) e.naive_path = tp.at("naive").get<std::string>();
        if (j.contains("truth_path") && !j.at("truth_path").is_null()) e.truth_path = j.at("truth_path").get<std::string>();
        if (e.label != 0 && e.label != 1) throw FormatError(origin + ": entry '" + e.id + "' label must be 0 or 1");
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(origin + ": " + ex.what());
    }
}

inline std::string encode_truth(const std::vector<std::uint8_t>& truth) {
    std::string s;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (i) s += ',';
        s += truth[i] ? '1' : '0';
    }
    s += '\n';
    return s;
}

inline std::vector<std::uint8_t> decode_truth(const std::string& text, const std::string& origin) {
    std::vector<std::uint8_t> out;
    std::string line = text.substr(0, text.find('\n'));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok == "0") out.push_back(0);
        else if (tok == "1") out.push_back(1);
        else throw FormatError(origin + ": truth value '" + tok + "' at position " + std::to_string(out.size()) + " is not 0/1");
    }
    return out;
}

inline nlohmann::json sentences_to_json(const std::vector<SentenceSpan>& spans, const std::string& embeddings_file) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& s : spans) arr.push_back({{"start_s", s.start_s}, {"end_s", s.end_s}, {"row", s.embedding_row}});
    return {{"embeddings", embeddings_file}, {"sentences", arr}};
}

namespace detail {

inline fs::path resolve(const fs::path& base, const std::string& rel) {
    const fs::path p = base / rel;
    if (!fs::exists(p)) throw IoError("missing file '" + p.string() + "'");
    return p;
}

}  // namespace detail

/// Writes one raw sample into `root/<id>/` and returns its manifest record.
inline ManifestEntry write_sample(const fs::path& root, const RawSample& raw) {
    const fs::path dir = root / raw.id;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
    ManifestEntry e;
    e.id = raw.id;
    e.label = raw.label;
    e.frames = raw.frames();
    e.fps = raw.fps;
    e.video_path = raw.id + "/video.mhlf";
    e.audio_path = raw.id + "/audio.mhlf";
    write_matrix(root / e.video_path, raw.video);
    write_matrix(root / e.audio_path, raw.audio);
    write_matrix(dir / "sentences.mhlf", raw.sentence_embeddings);
    write_file_text(dir / "sentences.json", sentences_to_json(raw.sentences, "sentences.mhlf").dump(1) + "\n");
    e.sentences_path = raw.id + "/sentences.json";
    write_matrix(dir / "naive.mhlf", raw.naive_text);
    e.naive_path = raw.id + "/naive.mhlf";
    if (raw.frame_truth) {
        e.truth_path = raw.id + "/truth.csv";
        write_file_text(root / *e.truth_path, encode_truth(*raw.frame_truth));
    }
    return e;
}

inline RawSample read_raw_sample(const fs::path& root, const ManifestEntry& e) {
    RawSample raw;
    raw.id = e.id;
    raw.label = e.label;
    raw.fps = e.fps;
    raw.video = read_matrix(detail::resolve(root, e.video_path));
    raw.audio = read_matrix(detail::resolve(root, e.audio_path));
    if (raw.video.rows() != e.frames) {
        throw FormatError(e.video_path + ": has " + std::to_string(raw.video.rows()) + " rows but manifest T=" +
                          std::to_string(e.frames));
    }
    if (e.sentences_path) {
        const fs::path sp = detail::resolve(root, *e.sentences_path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file_text(sp));
            raw.sentence_embeddings = read_matrix(detail::resolve(sp.parent_path(), j.at("embeddings").get<std::string>()));
            for (const auto& s : j.at("sentences"))
                raw.sentences.push_back({s.at("start_s").get<double>(), s.at("end_s").get<double>(),
                                         s.at("row").get<std::size_t>()});
        } catch (const nlohmann::json::exception& ex) {
            throw FormatError(sp.string() + ": " + ex.what());
        }
    }
    if (e.naive_path) raw.naive_text = read_matrix(detail::resolve(root, *e.naive_path));
    if (e.truth_path) {
        const fs::path tp = detail::resolve(root, *e.truth_path);
        raw.frame_truth = decode_truth(read_file_text(tp), tp.string());
    }
    return raw;
}

/// Reads and aligns a sample. `mode` overrides the manifest's text mode.
inline VideoSample read_sample(const fs::path& root, const ManifestEntry& e, std::optional<TextMode> mode = std::nullopt) {
    const TextMode m = mode.value_or(e.text_mode);
    if (m == TextMode::kSentence && !e.sentences_path) throw FormatError("sample '" + e.id + "': no sentence text files");
    if (m == TextMode::kNaive && !e.naive_path) throw FormatError("sample '" + e.id + "': no naive text embedding");
    return ingest(read_raw_sample(root, e), m);
}

inline void write_manifest(const fs::path& root, const std::vector<ManifestEntry>& entries) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : entries) arr.push_back(to_json(e));
    write_file_text(root / "manifest.json", arr.dump(1) + "\n");
}

inline std::vector<ManifestEntry> read_manifest(const fs::path& root) {
    const fs::path mp = root / "manifest.json";
    if (!fs::exists(mp)) throw IoError("missing file '" + mp.string() + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file_text(mp));
    } catch (const nlohmann::json::exception& ex) {
        throw FormatError(mp.string() + ": " + ex.what());
    }
    if (!j.is_array()) throw FormatError(mp.string() + ": manifest must be a JSON array");
    std::vector<ManifestEntry> out;
    for (const auto& item : j) out.push_back(manifest_entry_from_json(item, mp.string()));
    return out;
}

inline void write_dataset(const fs::path& root, const std::vector<RawSample>& samples) {
    std::vector<ManifestEntry> entries;
    for (const auto& s : samples) entries.push_back(write_sample(root, s));
    write_manifest(root, entries);
}

inline std::vector<VideoSample> load_dataset(const fs::path& root, std::optional<TextMode> mode = std::nullopt) {
    std::vector<VideoSample> out;
    for (const auto& e : read_manifest(root)) out.push_back(read_sample(root, e, mode));
    return out;
}

/// Index partition of a dataset into train/val/test.
struct Split {
    std::vector<std::size_t> train, val, test;
};

/// Seeded shuffle, then val and test take floor(n * fraction) each and the
/// remainder trains.
inline Split split_indices(std::size_t n, double val_fraction, double test_fraction, std::uint64_t seed) {
    if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction >= 1.0) {
        throw ArgumentError("split fractions must be >= 0 and leave a training share");
    }
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(Rng::derive(seed, 0x5B117));
    rng.shuffle(order.begin(), order.end());
    const auto nv = static_cast<std::size_t>(static_cast<double>(n) * val_fraction);
    const auto nt = static_cast<std::size_t>(static_cast<double>(n) * test_fraction);
    Split s;
    s.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nv));
    s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(nv), order.begin() + static_cast<std::ptrdiff_t>(nv + nt));
    s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(nv + nt), order.end());
    return s;
}

}  // namespace mhl
