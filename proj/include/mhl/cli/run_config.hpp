#pragma once

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mhl/data/io.hpp"
#include "mhl/data/synthetic.hpp"
#include "mhl/losses/losses.hpp"
#include "mhl/model/config.hpp"
#include "mhl/train/trainer.hpp"

namespace mhl {

/// Everything a command needs, read from a flat `key = value` file.
struct RunConfig {
    SyntheticSpec data;
    ModelConfig model;
    LossWeights loss;
    TrainConfig train;
    double val_fraction = 0.15;
    double test_fraction = 0.15;
    std::uint64_t split_seed = 0;
    TextMode text_mode = TextMode::kSentence;
    std::string data_dir = "data";

    /// Applies one seed to every seeded component.
    void set_seed(std::uint64_t s) {
        data.seed = s;
        model.seed = s;
        loss.seed = s;
        train.seed = s;
        split_seed = s;
    }

    void validate() const {
        data.validate();
        model.validate();
        loss.validate();
        train.validate();
        if (val_fraction < 0 || test_fraction < 0 || val_fraction + test_fraction >= 1.0) {
            throw ConfigError("split.val_fraction + split.test_fraction must be < 1");
        }
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
    T out{};
    const char* end = v.data() + v.size();
    auto [p, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || p != end) throw ConfigError("key '" + key + "': cannot parse '" + v + "' as a number");
    return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "on") return true;
    if (v == "false" || v == "0" || v == "off") return false;
    throw ConfigError("key '" + key + "': expected true|false, got '" + v + "'");
}

inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    // Shortest form that round-trips.
    for (int prec = 1; prec <= 17; ++prec) {
        char tmp[64];
        std::snprintf(tmp, sizeof tmp, "%.*g", prec, v);
        if (std::strtod(tmp, nullptr) == v) return tmp;
    }
    return buf;
}

inline std::string fmt_bool(bool b) { return b ? "true" : "false"; }

template <std::size_t N>
std::string fmt_dims(const std::array<std::size_t, N>& d) {
    std::string s;
    for (std::size_t i = 0; i < N; ++i) s += (i ? "," : "") + std::to_string(d[i]);
    return s;
}

inline std::array<std::size_t, 3> parse_dims(const std::string& key, const std::string& v) {
    const auto parts = split_list(v);
    if (parts.size() != 3) throw ConfigError("key '" + key + "': expected three comma-separated widths (v,a,t)");
    std::array<std::size_t, 3> out{};
    for (std::size_t i = 0; i < 3; ++i) out[i] = parse_number<std::size_t>(key, parts[i]);
    return out;
}

}  // namespace detail

/// One documented configuration key.
struct ConfigKey {
    std::string name;
    std::string source;  ///< "method" or "implementation"
    std::string help;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

inline const std::vector<ConfigKey>& config_keys() {
    using namespace detail;
    using R = RunConfig;
    using S = const std::string&;
#define MHL_SIZE(key, src, help, field)                                                        \
    ConfigKey{key, src, help, [](R& c, S v) { c.field = parse_number<std::size_t>(key, v); }, \
              [](const R& c) { return std::to_string(c.field); }}
#define MHL_U64(key, src, help, field)                                                           \
    ConfigKey{key, src, help, [](R& c, S v) { c.field = parse_number<std::uint64_t>(key, v); }, \
              [](const R& c) { return std::to_string(c.field); }}
#define MHL_REAL(key, src, help, field)                                                   \
    ConfigKey{key, src, help, [](R& c, S v) { c.field = parse_number<double>(key, v); }, \
              [](const R& c) { return fmt(c.field); }}
#define MHL_BOOL(key, src, help, field) \
    ConfigKey{key, src, help, [](R& c, S v) { c.field = parse_bool(key, v); }, [](const R& c) { return fmt_bool(c.field); }}

    static const std::vector<ConfigKey> keys = {
        {"data_dir", "implementation", "dataset directory (manifest.json + matrices)", [](R& c, S v) { c.data_dir = v; },
         [](const R& c) { return c.data_dir; }},
        {"text_mode", "implementation", "text alignment: sentence|naive|none",
         [](R& c, S v) { c.text_mode = parse_text_mode(v); }, [](const R& c) { return std::string(to_string(c.text_mode)); }},

        MHL_SIZE("data.num_videos", "implementation", "synthetic videos", data.num_videos),
        MHL_REAL("data.positive_fraction", "implementation", "share of positive videos", data.positive_fraction),
        MHL_SIZE("data.t_min", "implementation", "shortest video (frames)", data.t_min),
        MHL_SIZE("data.t_max", "implementation", "longest video (frames)", data.t_max),
        MHL_SIZE("data.segments_min", "implementation", "planted segments per positive, lower bound", data.segments_min),
        MHL_SIZE("data.segments_max", "implementation", "planted segments per positive, upper bound", data.segments_max),
        MHL_SIZE("data.segment_len_min", "implementation", "segment length lower bound", data.segment_len_min),
        MHL_SIZE("data.segment_len_max", "implementation", "segment length upper bound", data.segment_len_max),
        {"data.carriers", "implementation", "carrier sets drawn uniformly per segment, e.g. v,a,t,va,vt,at,vat",
         [](R& c, S v) {
             c.data.carriers.clear();
             for (const auto& p : split_list(v)) {
                 try {
                     c.data.carriers.push_back(parse_carrier(p));
                 } catch (const ArgumentError& e) {
                     throw ConfigError(std::string("key 'data.carriers': ") + e.what());
                 }
             }
         },
         [](const R& c) {
             std::string s;
             for (std::size_t i = 0; i < c.data.carriers.size(); ++i) s += (i ? "," : "") + carrier_name(c.data.carriers[i]);
             return s;
         }},
        MHL_REAL("data.signal_shift", "implementation", "amplitude of the planted pattern", data.signal_shift),
        MHL_REAL("data.noise_scale", "implementation", "standard deviation of background noise", data.noise_scale),
        MHL_SIZE("data.signal_dims", "implementation", "coordinates per modality carrying the pattern", data.signal_dims),
        MHL_U64("data.seed", "implementation", "dataset draw seed", data.seed),
        MHL_U64("data.pattern_seed", "implementation", "planted pattern seed", data.pattern_seed),
        MHL_REAL("data.fps", "implementation", "frames per second", data.fps),
        {"data.dims", "method", "raw feature widths v,a,t", [](R& c, S v) { c.data.dims = parse_dims("data.dims", v); },
         [](const R& c) { return fmt_dims(c.data.dims); }},
        MHL_SIZE("data.sentence_len_min", "implementation", "non-target sentence length lower bound", data.sentence_len_min),
        MHL_SIZE("data.sentence_len_max", "implementation", "non-target sentence length upper bound", data.sentence_len_max),
        MHL_REAL("data.silence_probability", "implementation", "chance a non-target sentence slot is silent",
                 data.silence_probability),

        MHL_SIZE("model.hidden", "implementation", "shared hidden width", model.hidden),
        MHL_SIZE("model.heads", "method", "attention heads (encoder and cross-modal)", model.heads),
        MHL_SIZE("model.ffn_width", "implementation", "feed-forward width, 0 means 2 * hidden", model.ffn_width),
        MHL_BOOL("model.encoder", "method", "temporal self-attention encoders", model.use_encoder),
        MHL_BOOL("model.cma", "method", "cross-modal attention fusion", model.use_cma),
        MHL_BOOL("model.dms", "method", "dynamic modality gates", model.use_dms),
        MHL_BOOL("model.contrast", "method", "contrastive alignment term", model.use_contrast),
        MHL_BOOL("model.mamil", "method", "modality-aware top-K selection", model.use_mamil),
        {"model.fusion", "method", "fusion variant: early|late|dcm", [](R& c, S v) { c.model.fusion = parse_fusion(v); },
         [](const R& c) { return std::string(to_string(c.model.fusion)); }},
        {"model.positional", "implementation", "positional encoding: none|sinusoidal",
         [](R& c, S v) {
             if (v == "none") c.model.positional = PositionalEncoding::kNone;
             else if (v == "sinusoidal") c.model.positional = PositionalEncoding::kSinusoidal;
             else throw ConfigError("key 'model.positional': expected none|sinusoidal, got '" + v + "'");
         },
         [](const R& c) { return std::string(c.model.positional == PositionalEncoding::kNone ? "none" : "sinusoidal"); }},
        MHL_U64("model.seed", "implementation", "parameter initialisation seed", model.seed),

        MHL_REAL("loss.lambda_smooth", "method", "weight of the smoothness term", loss.lambda_smooth),
        MHL_REAL("loss.lambda_con", "method", "weight of the contrastive term", loss.lambda_con),
        MHL_REAL("loss.tau", "implementation", "contrastive temperature", loss.tau),
        MHL_SIZE("loss.k_div", "method", "top-K divisor: K = max(1, ceil(T / k_div))", loss.k_div),
        MHL_SIZE("loss.max_ctr_frames", "implementation", "per-video contrastive frame cap, 0 keeps all", loss.max_ctr_frames),
        MHL_U64("loss.seed", "implementation", "seed for contrastive frame subsampling", loss.seed),

        MHL_REAL("train.lr", "method", "Adam learning rate", train.lr),
        MHL_SIZE("train.batch_size", "method", "videos per batch", train.batch_size),
        MHL_SIZE("train.epochs", "method", "training epochs", train.epochs),
        MHL_REAL("train.beta1", "implementation", "Adam first-moment decay", train.beta1),
        MHL_REAL("train.beta2", "implementation", "Adam second-moment decay", train.beta2),
        MHL_REAL("train.eps", "implementation", "Adam epsilon", train.eps),
        MHL_U64("train.seed", "implementation", "shuffle seed", train.seed),
        MHL_SIZE("train.eval_every", "implementation", "validation interval in epochs", train.eval_every),

        MHL_REAL("split.val_fraction", "implementation", "validation share", val_fraction),
        MHL_REAL("split.test_fraction", "implementation", "test share", test_fraction),
        MHL_U64("split.seed", "implementation", "split shuffle seed", split_seed),
    };
#undef MHL_SIZE
#undef MHL_U64
#undef MHL_REAL
#undef MHL_BOOL
    return keys;
}

inline const ConfigKey& find_config_key(const std::string& name) {
    for (const auto& k : config_keys())
        if (k.name == name) return k;
    throw ConfigError("unknown config key '" + name + "'");
}

/// Parses `key = value` lines on top of `base`. `#` starts a comment.
inline RunConfig parse_run_config(std::string_view text, const std::string& origin = "<config>",
                                  RunConfig base = RunConfig{}) {
    std::map<std::string, std::size_t> seen;
    std::size_t line_no = 0;
    std::string_view rest = text;
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        const std::string body = detail::trim(line);
        if (body.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError(where + ": expected 'key = value'");
        const std::string key = detail::trim(std::string_view(body).substr(0, eq));
        const std::string value = detail::trim(std::string_view(body).substr(eq + 1));
        if (auto it = seen.find(key); it != seen.end()) {
            throw ConfigError(where + ": key '" + key + "' already set on line " + std::to_string(it->second));
        }
        seen[key] = line_no;
        try {
            find_config_key(key).set(base, value);
        } catch (const Error& e) {
            throw ConfigError(where + ": " + e.what());
        }
    }
    return base;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    return parse_run_config(read_file_text(path), path.string());
}

/// Every key with its current value, one per line, parseable again.
inline std::string format_run_config(const RunConfig& c) {
    std::string out;
    for (const auto& k : config_keys()) out += k.name + " = " + k.get(c) + "\n";
    return out;
}

/// Key reference with defaults and sources.
inline std::string describe_config_keys() {
    const RunConfig defaults;
    std::string out;
    for (const auto& k : config_keys()) {
        out += k.name + " = " + k.get(defaults) + "    # [" + k.source + "] " + k.help + "\n";
    }
    return out;
}

}  // namespace mhl
