#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "mhl/data/sample.hpp"
#include "mhl/error.hpp"
#include "mhl/model/config.hpp"
#include "mhl/numerics/matrix.hpp"
#include "mhl/numerics/rng.hpp"
#include "mhl/numerics/tape.hpp"

namespace mhl {

struct ParamShape {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    bool bias = false;
};

/// Every learnable matrix implied by a configuration, in canonical order.
inline std::vector<ParamShape> parameter_shapes(const ModelConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.hidden, dk = cfg.head_width(), f = cfg.ffn();
    std::vector<ParamShape> out;
    auto w = [&](std::string n, std::size_t r, std::size_t c) { out.push_back({std::move(n), r, c, false}); };
    auto b = [&](std::string n, std::size_t c) { out.push_back({std::move(n), 1, c, true}); };
    for (Modality m : kModalities) {
        const std::string t(tag(m));
        w("proj." + t + ".W", cfg.input_dims[index_of(m)], d);
        b("proj." + t + ".b", d);
        if (cfg.use_encoder) {
            for (std::size_t h = 0; h < cfg.heads; ++h) {
                const std::string hs = std::to_string(h);
                w("enc." + t + ".Wq." + hs, d, dk);
                w("enc." + t + ".Wk." + hs, d, dk);
                w("enc." + t + ".Wv." + hs, d, dk);
            }
            w("enc." + t + ".ffn1.W", d, f);
            b("enc." + t + ".ffn1.b", f);
            w("enc." + t + ".ffn2.W", f, d);
            b("enc." + t + ".ffn2.b", d);
        }
        if (cfg.has_gates()) {
            w("gate." + t + ".W", d, 1);
            b("gate." + t + ".b", 1);
        }
        if (cfg.has_branch_heads()) {
            w("head." + t + ".W", d, 1);
            b("head." + t + ".b", 1);
        }
    }
    if (cfg.has_cma()) {
        for (std::size_t h = 0; h < cfg.heads; ++h) {
            const std::string hs = std::to_string(h);
            w("cma.Wq." + hs, 3 * d, dk);
            w("cma.Wk." + hs, 3 * d, dk);
            w("cma.Wv." + hs, 3 * d, dk);
        }
    }
    if (cfg.fusion == FusionVariant::kDcm) {
        w("head.fused.W", d, 1);
        b("head.fused.b", 1);
    } else if (cfg.fusion == FusionVariant::kEarly) {
        w("head.early.W", 3 * d, 1);
        b("head.early.b", 1);
    }
    return out;
}

inline std::size_t parameter_count(const std::vector<ParamShape>& shapes) {
    std::size_t n = 0;
    for (const auto& s : shapes) n += s.rows * s.cols;
    return n;
}

namespace detail {

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace detail

/// Named learnable matrices. Names iterate in canonical shape order.
template <typename T>
class ModelParams {
public:
    ModelParams() = default;

    /// Glorot-uniform weights, zero biases. Each matrix draws from its own
    /// stream keyed by (seed, name), so toggling one module leaves the
    /// initial values of the others unchanged.
    static ModelParams initialize(const ModelConfig& cfg) {
        ModelParams p;
        for (const auto& s : parameter_shapes(cfg)) {
            Matrix<T> m(s.rows, s.cols);
            if (!s.bias) {
                Rng rng(Rng::derive(cfg.seed, detail::fnv1a(s.name)));
                const double bound = std::sqrt(6.0 / static_cast<double>(s.rows + s.cols));
                for (auto& v : m.values()) v = static_cast<T>(rng.uniform(-bound, bound));
            }
            p.insert(s.name, std::move(m));
        }
        return p;
    }

    void insert(const std::string& name, Matrix<T> value) {
        if (!values_.count(name)) names_.push_back(name);
        values_[name] = std::move(value);
    }

    bool contains(const std::string& name) const { return values_.count(name) != 0; }

    const Matrix<T>& at(const std::string& name) const {
        auto it = values_.find(name);
        if (it == values_.end()) throw IndexError("unknown parameter '" + name + "'");
        return it->second;
    }
    Matrix<T>& at(const std::string& name) {
        auto it = values_.find(name);
        if (it == values_.end()) throw IndexError("unknown parameter '" + name + "'");
        return it->second;
    }

    const std::vector<std::string>& names() const noexcept { return names_; }
    std::size_t scalar_count() const {
        std::size_t n = 0;
        for (const auto& [_, m] : values_) n += m.size();
        return n;
    }

    /// Throws LoadError naming the first parameter whose presence or shape
    /// disagrees with the configuration.
    void audit(const ModelConfig& cfg) const {
        const auto shapes = parameter_shapes(cfg);
        for (const auto& s : shapes) {
            auto it = values_.find(s.name);
            if (it == values_.end()) throw LoadError("parameter '" + s.name + "' is missing");
            if (it->second.rows() != s.rows || it->second.cols() != s.cols) {
                throw LoadError("parameter '" + s.name + "' has shape " + it->second.shape() + " but config expects " +
                                Matrix<T>::shape_string(s.rows, s.cols));
            }
        }
        if (values_.size() != shapes.size()) {
            for (const auto& n : names_) {
                bool known = false;
                for (const auto& s : shapes) known = known || s.name == n;
                if (!known) throw LoadError("parameter '" + n + "' is not part of this configuration");
            }
        }
    }

    template <typename U>
    ModelParams<U> cast() const {
        ModelParams<U> out;
        for (const auto& n : names_) out.insert(n, values_.at(n).template cast<U>());
        return out;
    }

private:
    std::vector<std::string> names_;
    std::map<std::string, Matrix<T>> values_;
};

/// Parameters registered as tape leaves for one forward pass.
template <typename T>
class BoundParams {
public:
    BoundParams(Tape<T>& tape, const ModelParams<T>& params, bool trainable) {
        for (const auto& n : params.names()) {
            vars_.emplace(n, trainable ? tape.variable(params.at(n)) : tape.constant(params.at(n)));
        }
    }

    const Var<T>& operator[](const std::string& name) const {
        auto it = vars_.find(name);
        if (it == vars_.end()) throw IndexError("parameter '" + name + "' not bound");
        return it->second;
    }

    const std::map<std::string, Var<T>>& all() const noexcept { return vars_; }

    /// Replaces the node bound to an existing parameter name.
    void bind(const std::string& name, const Var<T>& v) {
        auto it = vars_.find(name);
        if (it == vars_.end()) throw IndexError("parameter '" + name + "' not bound");
        it->second = v;
    }

private:
    std::map<std::string, Var<T>> vars_;
};

}  // namespace mhl
