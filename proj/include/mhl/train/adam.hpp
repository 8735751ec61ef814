#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>

#include "mhl/error.hpp"
#include "mhl/model/params.hpp"
#include "mhl/numerics/matrix.hpp"

namespace mhl {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

template <typename T>
struct AdamState {
    std::size_t step = 0;
    std::map<std::string, Matrix<T>> first;
    std::map<std::string, Matrix<T>> second;
};

template <typename T>
using GradientMap = std::map<std::string, Matrix<T>>;

/// One bias-corrected Adam update. Entries whose gradient is exactly zero
/// are skipped entirely (no moment decay, no parameter change).
template <typename T>
void adam_step(ModelParams<T>& params, const GradientMap<T>& grads, AdamState<T>& state, const AdamConfig& cfg) {
    for (const auto& name : params.names()) {
        auto it = grads.find(name);
        if (it == grads.end()) throw ArgumentError("adam_step: no gradient for parameter '" + name + "'");
        if (!it->second.same_shape(params.at(name))) {
            throw DimensionError("adam_step: gradient for '" + name + "' has shape " + it->second.shape() +
                                 ", parameter is " + params.at(name).shape());
        }
        if (!it->second.all_finite()) throw NumericError("adam_step: non-finite gradient for parameter '" + name + "'");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (const auto& name : params.names()) {
        Matrix<T>& p = params.at(name);
        const Matrix<T>& g = grads.at(name);
        auto& m = state.first[name];
        auto& v = state.second[name];
        if (m.empty()) m = Matrix<T>(p.rows(), p.cols());
        if (v.empty()) v = Matrix<T>(p.rows(), p.cols());
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = static_cast<double>(g[i]);
            if (gi == 0.0) continue;
            const double mi = cfg.beta1 * static_cast<double>(m[i]) + (1.0 - cfg.beta1) * gi;
            const double vi = cfg.beta2 * static_cast<double>(v[i]) + (1.0 - cfg.beta2) * gi * gi;
            m[i] = static_cast<T>(mi);
            v[i] = static_cast<T>(vi);
            const double mhat = mi / c1;
            const double vhat = vi / c2;
            p[i] = static_cast<T>(static_cast<double>(p[i]) - cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps));
        }
    }
}

}  // namespace mhl
