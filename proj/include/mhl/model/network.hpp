#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mhl/data/sample.hpp"
#include "mhl/model/config.hpp"
#include "mhl/model/params.hpp"
#include "mhl/numerics/ops.hpp"

namespace mhl {

/// Frame indices chosen for the MIL objective.
struct SelectionResult {
    std::array<std::vector<std::size_t>, 3> per_modality;  ///< S_v, S_a, S_l (empty without branch heads)
    std::vector<std::size_t> fused;                        ///< S_fused
    std::vector<std::size_t> final_set;                    ///< S_final, ascending
    std::array<double, 3> modality_weight{1.0, 1.0, 1.0};  ///< w_m = mean gate value
    std::size_t target_size = 0;                           ///< max(1, ceil(T / K_div))
};

/// Plain per-frame outputs of one forward pass.
struct PredictionTrace {
    std::size_t frames = 0;
    std::vector<double> fused;                  ///< final frame probabilities
    std::array<std::vector<double>, 3> branch;  ///< P_m; 0.5 where the config has no branch heads
    std::array<std::vector<double>, 3> gate;    ///< alpha_m; 1.0 where DMS is off
    bool has_branch_heads = false;
    bool has_gates = false;
    bool has_cma = false;
    std::optional<SelectionResult> selection;
};

/// Tape handles of one forward pass plus its extracted trace.
template <typename T>
struct ForwardPass {
    PredictionTrace trace;
    Var<T> fused;                    ///< T x 1 probabilities
    std::array<Var<T>, 3> encoded;   ///< F'_m
    std::array<Var<T>, 3> weighted;  ///< alpha_m * F'_m
    Var<T> fused_features;           ///< pre-head fused representation
    std::array<Var<T>, 3> branch;    ///< P_m when branch heads exist
};

/// sin/cos position table, T x D.
template <typename T>
Matrix<T> sinusoidal_positions(std::size_t frames, std::size_t width) {
    Matrix<T> pe(frames, width);
    for (std::size_t t = 0; t < frames; ++t) {
        for (std::size_t i = 0; i < width; i += 2) {
            const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(width));
            pe(t, i) = static_cast<T>(std::sin(static_cast<double>(t) * freq));
            if (i + 1 < width) pe(t, i + 1) = static_cast<T>(std::cos(static_cast<double>(t) * freq));
        }
    }
    return pe;
}

/// Multi-head scaled dot-product attention of `x` onto itself, heads
/// concatenated without an output projection.
template <typename T>
Var<T> multi_head_attention(const Var<T>& x, const BoundParams<T>& p, const std::string& prefix, std::size_t heads,
                            std::size_t head_width) {
    const T inv_sqrt = T{1} / static_cast<T>(std::sqrt(static_cast<double>(head_width)));
    std::vector<Var<T>> outs;
    outs.reserve(heads);
    for (std::size_t h = 0; h < heads; ++h) {
        const std::string hs = std::to_string(h);
        const auto q = matmul(x, p[prefix + ".Wq." + hs]);
        const auto k = matmul(x, p[prefix + ".Wk." + hs]);
        const auto v = matmul(x, p[prefix + ".Wv." + hs]);
        const auto attn = softmax_rows(scale(matmul_nt(q, k), inv_sqrt));
        outs.push_back(matmul(attn, v));
    }
    return heads == 1 ? outs.front() : concat_cols(outs);
}

/// Input projection plus (optionally) one self-attention/FFN block with a
/// residual from the projected input.
template <typename T>
Var<T> encode_modality(const Var<T>& input, Modality m, const BoundParams<T>& p, const ModelConfig& cfg) {
    Tape<T>& tape = input.tape();
    const std::string t(tag(m));
    tape.set_scope("projection[" + t + "]");
    auto x = add_row(matmul(input, p["proj." + t + ".W"]), p["proj." + t + ".b"]);
    if (!cfg.use_encoder) return x;
    tape.set_scope("encoder[" + t + "]");
    if (cfg.positional == PositionalEncoding::kSinusoidal) {
        x = add(x, tape.constant(sinusoidal_positions<T>(x.rows(), cfg.hidden)));
    }
    const auto attn = multi_head_attention(x, p, "enc." + t, cfg.heads, cfg.head_width());
    const auto h = relu(add_row(matmul(attn, p["enc." + t + ".ffn1.W"]), p["enc." + t + ".ffn1.b"]));
    const auto f = add_row(matmul(h, p["enc." + t + ".ffn2.W"]), p["enc." + t + ".ffn2.b"]);
    return add(f, x);
}

/// alpha_m[t] = sigmoid(F'_m[t] . W + b), T x 1.
template <typename T>
Var<T> gate_weights(const Var<T>& encoded, Modality m, const BoundParams<T>& p) {
    const std::string t(tag(m));
    encoded.tape().set_scope("gate[" + t + "]");
    return sigmoid(add_row(matmul(encoded, p["gate." + t + ".W"]), p["gate." + t + ".b"]));
}

/// Concatenate the gated streams in (v, a, l) order and attend across time.
template <typename T>
Var<T> cross_modal_attention(const std::array<Var<T>, 3>& weighted, const BoundParams<T>& p, const ModelConfig& cfg) {
    weighted[0].tape().set_scope("cma");
    const auto concat = concat_cols<T>({weighted[0], weighted[1], weighted[2]});
    return multi_head_attention(concat, p, "cma", cfg.heads, cfg.head_width());
}

template <typename T>
Var<T> probability_head(const Var<T>& features, const BoundParams<T>& p, const std::string& name) {
    features.tape().set_scope("head[" + name + "]");
    return sigmoid(add_row(matmul(features, p["head." + name + ".W"]), p["head." + name + ".b"]));
}

namespace detail {

template <typename T>
std::vector<double> column_values(const Var<T>& v) {
    std::vector<double> out(v.rows());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<double>(v.value()[i]);
    return out;
}

}  // namespace detail

/// Full model (or one of its baseline variants, per cfg.fusion) on one
/// sample, recorded onto `tape`.
template <typename T>
ForwardPass<T> forward(Tape<T>& tape, const BoundParams<T>& p, const ModelConfig& cfg, const WeakSample& sample) {
    const std::size_t frames = sample.frames();
    if (frames == 0) throw ArgumentError("forward: sample '" + sample.id + "' has no frames");
    ForwardPass<T> out;
    for (Modality m : kModalities) {
        const auto& f = sample.feature(m);
        if (f.frames() != frames) throw DimensionError("forward: sample '" + sample.id + "' streams are not aligned");
        if (f.dim() != cfg.input_dims[index_of(m)]) {
            throw DimensionError("forward: stream " + std::string(tag(m)) + " has width " + std::to_string(f.dim()) +
                                 ", model expects " + std::to_string(cfg.input_dims[index_of(m)]));
        }
        const auto input = tape.constant(f.values.template cast<T>());
        out.encoded[index_of(m)] = encode_modality(input, m, p, cfg);
    }

    PredictionTrace& tr = out.trace;
    tr.frames = frames;
    tr.has_branch_heads = cfg.has_branch_heads();
    tr.has_gates = cfg.has_gates();
    tr.has_cma = cfg.has_cma();
    for (std::size_t i = 0; i < 3; ++i) {
        tr.branch[i].assign(frames, 0.5);
        tr.gate[i].assign(frames, 1.0);
    }

    if (tr.has_branch_heads) {
        for (Modality m : kModalities) {
            const auto i = index_of(m);
            out.branch[i] = probability_head(out.encoded[i], p, std::string(tag(m)));
            tr.branch[i] = detail::column_values(out.branch[i]);
        }
    }

    switch (cfg.fusion) {
        case FusionVariant::kEarly: {
            tape.set_scope("early_fusion");
            out.fused_features = concat_cols<T>({out.encoded[0], out.encoded[1], out.encoded[2]});
            out.fused = probability_head(out.fused_features, p, "early");
            out.weighted = out.encoded;
            break;
        }
        case FusionVariant::kLate: {
            tape.set_scope("late_fusion");
            out.weighted = out.encoded;
            out.fused = scale(add(add(out.branch[0], out.branch[1]), out.branch[2]), T{1} / T{3});
            break;
        }
        case FusionVariant::kDcm: {
            for (Modality m : kModalities) {
                const auto i = index_of(m);
                if (cfg.use_dms) {
                    const auto alpha = gate_weights(out.encoded[i], m, p);
                    tr.gate[i] = detail::column_values(alpha);
                    out.weighted[i] = scale_rows(out.encoded[i], alpha);
                } else {
                    out.weighted[i] = out.encoded[i];
                }
            }
            if (cfg.use_cma) {
                out.fused_features = cross_modal_attention(out.weighted, p, cfg);
            } else {
                tape.set_scope("mean_fusion");
                out.fused_features = scale(add(add(out.weighted[0], out.weighted[1]), out.weighted[2]), T{1} / T{3});
            }
            out.fused = probability_head(out.fused_features, p, "fused");
            break;
        }
    }
    tr.fused = detail::column_values(out.fused);
    tape.set_scope("");
    return out;
}

/// Evaluation-mode forward pass on a private tape.
template <typename T>
PredictionTrace predict(const WeakSample& sample, const ModelParams<T>& params, const ModelConfig& cfg) {
    Tape<T> tape;
    const BoundParams<T> bound(tape, params, false);
    return forward(tape, bound, cfg, sample).trace;
}

/// Early- or late-fusion baseline on the given parameters.
template <typename T>
PredictionTrace baseline_forward(const WeakSample& sample, const ModelParams<T>& params, ModelConfig cfg,
                                 FusionVariant variant) {
    if (variant == FusionVariant::kDcm) throw ArgumentError("baseline_forward: variant must be early or late");
    cfg.fusion = variant;
    cfg.use_cma = false;
    cfg.use_dms = false;
    return predict(sample, params, cfg);
}

}  // namespace mhl
