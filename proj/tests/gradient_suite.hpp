#pragma once

#include <functional>
#include <string>
#include <vector>

#include "support.hpp"

// Central-difference checks over every primitive and the composite batch
// objective. Shared by the unit tests and the acceptance runner.

namespace mhl::testing {

struct GradientCase {
    std::string name;
    double error = 0.0;
};

inline std::vector<GradientCase> primitive_gradient_cases(std::uint64_t seed = 11) {
    Rng rng(seed);
    std::vector<GradientCase> out;
    auto run = [&](const std::string& name, const Matrix<double>& x, const ScalarFunction& f) {
        out.push_back({name, grad_check(f, x)});
    };
    // Entries kept away from zero so relu's kink is never straddled.
    auto away_from_zero = [&](std::size_t r, std::size_t c) {
        auto m = random_matrix(r, c, rng);
        for (auto& v : m.values())
            if (std::abs(v) < 0.05) v = v < 0 ? -0.05 - rng.uniform() : 0.05 + rng.uniform();
        return m;
    };
    // A weighted sum exposes every entry of a matrix-valued op.
    auto probe = [](Tape<double>& t, const Var<double>& y, std::uint64_t s) {
        Rng r(s);
        Matrix<double> w(y.rows(), y.cols());
        for (auto& v : w.values()) v = r.uniform(-1.0, 1.0);
        return sum(mul(y, t.constant(w)));
    };

    const auto b34 = random_matrix(4, 3, rng);
    const auto a34 = random_matrix(3, 4, rng);
    const auto c34 = random_matrix(3, 4, rng);
    const auto bias = random_matrix(1, 4, rng);
    const auto scol = random_matrix(3, 1, rng);

    run("matmul.lhs", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, matmul(x, t.constant(b34)), 1); });
    run("matmul.rhs", random_matrix(4, 3, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, matmul(t.constant(a34), x), 2); });
    run("matmul_nt.lhs", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, matmul_nt(x, t.constant(c34)), 3); });
    run("matmul_nt.rhs", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, matmul_nt(t.constant(a34), x), 4); });
    run("add", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, add(x, t.constant(a34)), 5); });
    run("sub", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, sub(t.constant(a34), x), 6); });
    run("mul", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, mul(x, x), 7); });
    run("add_row.matrix", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, add_row(x, t.constant(bias)), 8); });
    run("add_row.bias", random_matrix(1, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, add_row(t.constant(a34), x), 9); });
    run("scale", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, scale(x, -1.7), 10); });
    run("scale_rows.matrix", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, scale_rows(x, t.constant(scol)), 11); });
    run("scale_rows.scale", random_matrix(3, 1, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, scale_rows(t.constant(a34), x), 12); });
    run("relu", away_from_zero(3, 4),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, relu(x), 13); });
    run("sigmoid", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, sigmoid(x), 14); });
    run("softmax_rows", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, softmax_rows(x), 15); });
    run("log_clamped", random_matrix(3, 4, rng, 0.1, 0.9),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, log_clamped(x, 1e-7, 1.0 - 1e-7), 16); });
    run("one_minus", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, one_minus(x), 17); });
    run("concat_cols", random_matrix(3, 2, rng), [&](Tape<double>& t, const Var<double>& x) {
        return probe(t, concat_cols<double>({t.constant(a34), x, x}), 18);
    });
    run("concat_rows", random_matrix(2, 4, rng), [&](Tape<double>& t, const Var<double>& x) {
        return probe(t, concat_rows<double>({x, t.constant(a34), x}), 19);
    });
    run("slice_rows", random_matrix(5, 3, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, slice_rows(x, 1, 3), 20); });
    run("gather_rows", random_matrix(5, 3, rng), [&](Tape<double>& t, const Var<double>& x) {
        return probe(t, gather_rows(x, std::vector<std::size_t>{4, 0, 4, 2}), 21);
    });
    run("l2_normalize_rows", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return probe(t, l2_normalize_rows(x), 22); });
    run("sum", random_matrix(3, 4, rng), [&](Tape<double>&, const Var<double>& x) { return sum(x); });
    run("mean", random_matrix(3, 4, rng),
        [&](Tape<double>& t, const Var<double>& x) { return mean(mul(x, t.constant(a34))); });
    run("softmax_cross_entropy", random_matrix(4, 5, rng), [&](Tape<double>&, const Var<double>& x) {
        return softmax_cross_entropy(x, std::vector<std::size_t>{0, 3, 4, 1});
    });
    return out;
}

/// Two-video toy batch (one positive, one negative) for the composite loss.
struct ToyBatch {
    ModelConfig cfg;
    LossWeights weights;
    ModelParams<double> params;
    std::vector<VideoSample> samples;
};

inline ToyBatch toy_batch() {
    ToyBatch b;
    b.cfg = tiny_config(5);
    b.cfg.seed = 3;
    b.params = ModelParams<float>::initialize(b.cfg).cast<double>();
    b.samples.push_back(random_sample(5, b.cfg.input_dims, 101, 1));
    b.samples.push_back(random_sample(4, b.cfg.input_dims, 202, 0));
    return b;
}

/// Composite objective of the toy batch with parameter `name` replaced by x.
inline Var<double> toy_objective(const ToyBatch& b, const std::string& name, Tape<double>& tape, const Var<double>& x) {
    BoundParams<double> bound(tape, b.params, false);
    bound.bind(name, x);
    std::vector<ForwardPass<double>> passes;
    std::vector<int> labels;
    for (const auto& s : b.samples) {
        passes.push_back(forward(tape, bound, b.cfg, s));
        labels.push_back(s.label);
    }
    return total_loss<double>(passes, labels, b.weights, b.cfg).total;
}

/// One case per parameter matrix of the toy model.
inline std::vector<GradientCase> loss_gradient_cases() {
    const ToyBatch b = toy_batch();
    std::vector<GradientCase> out;
    for (const auto& name : b.params.names()) {
        const ScalarFunction f = [&](Tape<double>& t, const Var<double>& x) { return toy_objective(b, name, t, x); };
        out.push_back({"loss/" + name, grad_check(f, b.params.at(name))});
    }
    return out;
}

}  // namespace mhl::testing
