#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mhl/error.hpp"

namespace mhl {

enum class FusionVariant { kEarly, kLate, kDcm };
enum class PositionalEncoding { kNone, kSinusoidal };

inline std::string_view to_string(FusionVariant f) {
    switch (f) {
        case FusionVariant::kEarly: return "early";
        case FusionVariant::kLate: return "late";
        case FusionVariant::kDcm: return "dcm";
    }
    return "?";
}

inline FusionVariant parse_fusion(std::string_view s) {
    if (s == "early") return FusionVariant::kEarly;
    if (s == "late") return FusionVariant::kLate;
    if (s == "dcm") return FusionVariant::kDcm;
    throw ConfigError("unknown fusion variant '" + std::string(s) + "' (expected early|late|dcm)");
}

struct ModelConfig {
    std::size_t hidden = 128;  ///< shared width D
    std::size_t heads = 4;
    std::size_t ffn_width = 0;  ///< 0 means 2 * hidden
    std::array<std::size_t, 3> input_dims{768, 128, 768};

    bool use_encoder = true;
    bool use_cma = true;
    bool use_dms = true;
    bool use_contrast = true;
    bool use_mamil = true;
    FusionVariant fusion = FusionVariant::kDcm;
    PositionalEncoding positional = PositionalEncoding::kSinusoidal;
    std::uint64_t seed = 0;

    std::size_t head_width() const { return hidden / heads; }
    std::size_t ffn() const { return ffn_width == 0 ? 2 * hidden : ffn_width; }
    bool has_branch_heads() const {
        return fusion == FusionVariant::kLate || (fusion == FusionVariant::kDcm && use_mamil);
    }
    bool has_gates() const { return fusion == FusionVariant::kDcm && use_dms; }
    bool has_cma() const { return fusion == FusionVariant::kDcm && use_cma; }

    void validate() const {
        if (hidden == 0 || heads == 0) throw ConfigError("hidden width and head count must be >= 1");
        if (hidden % heads != 0) {
            throw ConfigError("hidden width " + std::to_string(hidden) + " is not divisible by heads=" +
                              std::to_string(heads));
        }
        for (auto d : input_dims)
            if (d == 0) throw ConfigError("input dims must be >= 1");
        if (fusion != FusionVariant::kDcm && (use_cma || use_dms)) {
            throw ConfigError("CMA and DMS are only defined for the dcm fusion variant");
        }
    }
};

/// One row of the incremental module ablation.
struct AblationRow {
    std::string name;
    ModelConfig config;
};

/// Module toggle grid from the early-fusion baseline to the full model.
inline std::vector<AblationRow> ablation_grid(const ModelConfig& base) {
    auto make = [&](FusionVariant f, bool enc, bool cma, bool dms, bool con, bool mil) {
        ModelConfig c = base;
        c.fusion = f;
        c.use_encoder = enc;
        c.use_cma = cma;
        c.use_dms = dms;
        c.use_contrast = con;
        c.use_mamil = mil;
        return c;
    };
    using F = FusionVariant;
    return {
        {"baseline_early_fusion", make(F::kEarly, false, false, false, false, false)},
        {"baseline_early_fusion_encoder", make(F::kEarly, true, false, false, false, false)},
        {"baseline_late_fusion_encoder", make(F::kLate, true, false, false, false, false)},
        {"encoder_cma", make(F::kDcm, true, true, false, false, false)},
        {"encoder_cma_dms", make(F::kDcm, true, true, true, false, false)},
        {"encoder_cma_dms_contrast", make(F::kDcm, true, true, true, true, false)},
        {"full", make(F::kDcm, true, true, true, true, true)},
    };
}

}  // namespace mhl
