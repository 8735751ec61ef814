#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mhl/data/io.hpp"
#include "mhl/error.hpp"
#include "mhl/model/config.hpp"
#include "mhl/model/params.hpp"

// Checkpoint layout: <dir>/params.json maps each parameter name to its
// matrix-container file and shape; <dir>/<name>.mhlf holds the values.

namespace mhl {

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
    return {{"hidden", c.hidden},
            {"heads", c.heads},
            {"ffn_width", c.ffn()},
            {"input_dims", c.input_dims},
            {"use_encoder", c.use_encoder},
            {"use_cma", c.use_cma},
            {"use_dms", c.use_dms},
            {"use_contrast", c.use_contrast},
            {"use_mamil", c.use_mamil},
            {"fusion", std::string(to_string(c.fusion))},
            {"positional_encoding", c.positional == PositionalEncoding::kSinusoidal ? "sinusoidal" : "none"},
            {"seed", c.seed}};
}

inline void save_checkpoint(const std::filesystem::path& dir, const ModelParams<float>& params, const ModelConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create checkpoint directory '" + dir.string() + "': " + ec.message());
    nlohmann::json index = nlohmann::json::object();
    for (const auto& name : params.names()) {
        const auto& m = params.at(name);
        const std::string file = name + ".mhlf";
        write_matrix(dir / file, m);
        index[name] = {{"file", file}, {"rows", m.rows()}, {"cols", m.cols()}};
    }
    nlohmann::json doc{{"format", "mhl-checkpoint"}, {"version", 1}, {"config", model_config_to_json(cfg)}, {"params", index}};
    write_file_text(dir / "params.json", doc.dump(1) + "\n");
}

/// Loads and validates every parameter against `cfg`; mismatches raise
/// LoadError naming the parameter.
inline ModelParams<float> load_checkpoint(const std::filesystem::path& dir, const ModelConfig& cfg) {
    const auto index_path = dir / "params.json";
    if (!std::filesystem::exists(index_path)) throw IoError("missing file '" + index_path.string() + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(read_file_text(index_path));
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(index_path.string() + ": " + e.what());
    }
    if (!doc.contains("params") || !doc["params"].is_object()) throw FormatError(index_path.string() + ": no params table");
    const auto& table = doc["params"];
    ModelParams<float> params;
    for (const auto& s : parameter_shapes(cfg)) {
        if (!table.contains(s.name)) throw LoadError("checkpoint '" + dir.string() + "' has no parameter '" + s.name + "'");
        const auto& e = table[s.name];
        const auto rows = e.at("rows").get<std::size_t>();
        const auto cols = e.at("cols").get<std::size_t>();
        if (rows != s.rows || cols != s.cols) {
            throw LoadError("parameter '" + s.name + "' is " + Matrix<float>::shape_string(rows, cols) +
                            " in checkpoint but config expects " + Matrix<float>::shape_string(s.rows, s.cols));
        }
        auto m = read_matrix(dir / e.at("file").get<std::string>());
        if (m.rows() != rows || m.cols() != cols) {
            throw LoadError("parameter '" + s.name + "' file shape " + m.shape() + " disagrees with params.json");
        }
        params.insert(s.name, std::move(m));
    }
    for (auto it = table.begin(); it != table.end(); ++it) {
        if (!params.contains(it.key())) throw LoadError("checkpoint parameter '" + it.key() + "' is not part of this configuration");
    }
    params.audit(cfg);
    return params;
}

}  // namespace mhl
