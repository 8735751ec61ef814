#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "gradient_suite.hpp"

using namespace mhl;
using mhl::testing::random_matrix;

namespace {

std::vector<std::size_t> sort_oracle(const std::vector<double>& s, std::size_t k_div) {
    std::vector<std::size_t> idx(s.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
    const std::size_t n = std::max<std::size_t>(1, (s.size() + k_div - 1) / k_div);
    idx.resize(n);
    std::sort(idx.begin(), idx.end());
    return idx;
}

SelectionResult selection_of(std::vector<std::size_t> idx) {
    SelectionResult s;
    s.final_set = std::move(idx);
    return s;
}

double mil_value(const std::vector<double>& yhat, std::vector<std::size_t> idx, int label) {
    Tape<double> t;
    return mil_loss(t.constant(Matrix<double>::column(yhat)), selection_of(std::move(idx)), label).scalar();
}

double smooth_value(const std::vector<double>& y) {
    Tape<double> t;
    return smoothness_loss(t.constant(Matrix<double>::column(y))).scalar();
}

PredictionTrace random_trace(std::size_t frames, Rng& rng) {
    PredictionTrace tr;
    tr.frames = frames;
    tr.has_branch_heads = tr.has_gates = true;
    tr.fused.resize(frames);
    for (auto& v : tr.fused) v = rng.uniform();
    for (std::size_t m = 0; m < 3; ++m) {
        tr.branch[m].resize(frames);
        tr.gate[m].resize(frames);
        for (auto& v : tr.branch[m]) v = rng.uniform();
        for (auto& v : tr.gate[m]) v = rng.uniform();
    }
    return tr;
}

// Direct double loop over anchors and candidates.
double brute_contrastive(const std::vector<std::array<Matrix<double>, 3>>& videos, double tau) {
    auto normed = [](std::span<const double> r) {
        double n = 0.0;
        for (double v : r) n += v * v;
        n = std::max(std::sqrt(n), 1e-12);
        std::vector<double> out(r.begin(), r.end());
        for (auto& v : out) v /= n;
        return out;
    };
    double total = 0.0;
    for (const auto& [m, n] : kContrastPairs) {
        double pair_sum = 0.0;
        std::size_t anchors = 0;
        for (std::size_t i = 0; i < videos.size(); ++i) {
            for (std::size_t t = 0; t < videos[i][m].rows(); ++t) {
                const auto a = normed(videos[i][m].row(t));
                double denom = 0.0, pos = 0.0;
                for (std::size_t j = 0; j < videos.size(); ++j) {
                    for (std::size_t s = 0; s < videos[j][n].rows(); ++s) {
                        const auto c = normed(videos[j][n].row(s));
                        double dot = 0.0;
                        for (std::size_t k = 0; k < a.size(); ++k) dot += a[k] * c[k];
                        denom += std::exp(dot / tau);
                        if (i == j && s == t) pos = dot / tau;
                    }
                }
                pair_sum += -(pos - std::log(denom));
                ++anchors;
            }
        }
        total += pair_sum / static_cast<double>(anchors);
    }
    return total / 3.0;
}

double contrastive_value(const std::vector<std::array<Matrix<double>, 3>>& videos, double tau) {
    Tape<double> t;
    std::vector<std::array<Var<double>, 3>> enc;
    for (const auto& v : videos) enc.push_back({t.constant(v[0]), t.constant(v[1]), t.constant(v[2])});
    return contrastive_loss<double>(enc, tau).scalar();
}

}  // namespace

TEST(TopK, MatchesSortOracle) {
    Rng rng(3);
    std::vector<double> s(9);
    for (auto& v : s) v = rng.uniform();
    const auto got = topk_select(s, 3);
    EXPECT_EQ(got.size(), 3u);
    EXPECT_EQ(got, sort_oracle(s, 3));
}

TEST(TopK, TiesGoToSmallerIndex) {
    EXPECT_EQ(topk_select(std::vector<double>{0.4, 0.4, 0.4, 0.4}, 2), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(topk_select(std::vector<double>{0.1, 0.5, 0.2, 0.5, 0.5}, 2), (std::vector<std::size_t>{1, 3, 4}));
}

TEST(TopK, MinimumOneAndEmptyInput) {
    EXPECT_EQ(topk_select(std::vector<double>{0.3, 0.9}, 3), (std::vector<std::size_t>{1}));
    EXPECT_THROW(topk_select(std::vector<double>{}, 3), ArgumentError);
    EXPECT_THROW(selection_size(5, 0), ArgumentError);
}

TEST(TopK, PositiveScalingInvariance) {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s(1 + static_cast<std::size_t>(rng.uniform_int(0, 40)));
        for (auto& v : s) v = rng.uniform();
        const double c = std::exp(rng.uniform(-5.0, 5.0));
        std::vector<double> scaled(s);
        for (auto& v : scaled) v *= c;
        for (std::size_t k : {1u, 2u, 3u, 5u}) EXPECT_EQ(topk_select(s, k), topk_select(scaled, k));
    }
}

TEST(FinalSet, SymmetricTraceCollapsesToFused) {
    Rng rng(5);
    PredictionTrace tr = random_trace(10, rng);
    for (std::size_t m = 0; m < 3; ++m) {
        tr.branch[m] = tr.fused;
        tr.gate[m].assign(10, 0.5);
    }
    const auto s = build_final_set(tr, 3);
    EXPECT_EQ(s.final_set, s.fused);
    for (std::size_t m = 0; m < 3; ++m) {
        EXPECT_EQ(s.per_modality[m], s.fused);
        EXPECT_DOUBLE_EQ(s.modality_weight[m], 0.5);
    }
}

TEST(FinalSet, NearZeroGateKeepsBranchSelection) {
    Rng rng(6);
    PredictionTrace tr = random_trace(12, rng);
    tr.gate[1].assign(12, 1e-9);
    const auto s = build_final_set(tr, 3);
    EXPECT_EQ(s.per_modality[1], topk_select(tr.branch[1], 3));
}

TEST(FinalSet, UnionMatchesSetOracle) {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const auto tr = random_trace(1 + static_cast<std::size_t>(rng.uniform_int(0, 30)), rng);
        for (std::size_t k : {1u, 2u, 3u, 5u}) {
            const auto s = build_final_set(tr, k);
            std::set<std::size_t> oracle(s.fused.begin(), s.fused.end());
            const auto n = selection_size(tr.frames, k);
            EXPECT_EQ(s.fused.size(), n);
            for (std::size_t m = 0; m < 3; ++m) {
                const double w = std::accumulate(tr.gate[m].begin(), tr.gate[m].end(), 0.0) / static_cast<double>(tr.frames);
                std::vector<double> scaled(tr.branch[m]);
                for (auto& v : scaled) v *= w;
                const auto sm = sort_oracle(scaled, k);
                EXPECT_EQ(s.per_modality[m], sm);
                oracle.insert(sm.begin(), sm.end());
            }
            EXPECT_EQ(s.final_set, std::vector<std::size_t>(oracle.begin(), oracle.end()));
            EXPECT_EQ(s.target_size, n);
        }
    }
}

TEST(FinalSet, WithoutModalityAwarenessUsesFusedOnly) {
    Rng rng(8);
    const auto tr = random_trace(15, rng);
    const auto s = build_final_set(tr, 3, false);
    EXPECT_EQ(s.final_set, s.fused);
    for (const auto& p : s.per_modality) EXPECT_TRUE(p.empty());
}

TEST(Mil, ReferenceValues) {
    EXPECT_NEAR(mil_value({0.5, 0.5, 0.5, 0.1}, {0, 1, 2}, 1), std::log(2.0), 1e-9);
    EXPECT_NEAR(mil_value({0.2, 0.9, 0.4}, {0, 2}, 0), -(std::log(0.8) + std::log(0.6)) / 2.0, 1e-12);
    EXPECT_NEAR(mil_value({0.2, 0.9, 0.4}, {0, 2}, 0), 0.3670, 1e-4);
    EXPECT_LT(mil_value({1.0 - 1e-7, 1.0 - 1e-7}, {0, 1}, 1), 1e-6);
    EXPECT_THROW(mil_value({0.5}, {}, 1), ArgumentError);
}

TEST(Mil, GradientDirection) {
    for (int label : {0, 1}) {
        Tape<double> t;
        const auto y = t.variable(Matrix<double>::column(std::vector<double>{0.3, 0.6, 0.8, 0.1}));
        t.backward(mil_loss(y, selection_of({1, 2}), label));
        const auto g = y.grad();
        for (std::size_t i : {1u, 2u}) {
            if (label == 1) EXPECT_LT(g[i], 0.0);
            else EXPECT_GT(g[i], 0.0);
        }
        EXPECT_EQ(g[0], 0.0);
        EXPECT_EQ(g[3], 0.0);
    }
}

TEST(Smoothness, ReferenceValues) {
    EXPECT_EQ(smooth_value({0.3, 0.3, 0.3, 0.3}), 0.0);
    EXPECT_DOUBLE_EQ(smooth_value({0.0, 1.0}), 1.0);
    EXPECT_DOUBLE_EQ(smooth_value({0.0, 0.5, 1.0}), 0.25);
    EXPECT_EQ(smooth_value({0.7}), 0.0);
}

TEST(Smoothness, LinearRampIsMinimalOnGrid) {
    // Endpoints fixed at 0 and 1, interior values from a grid of step 1/8.
    const double ramp = smooth_value({0.0, 0.25, 0.5, 0.75, 1.0});
    double best = 1e9;
    for (int a = 0; a <= 8; ++a)
        for (int b = 0; b <= 8; ++b)
            for (int c = 0; c <= 8; ++c) best = std::min(best, smooth_value({0.0, a / 8.0, b / 8.0, c / 8.0, 1.0}));
    EXPECT_DOUBLE_EQ(best, ramp);
}

TEST(Contrastive, SingleCandidateIsZero) {
    Rng rng(9);
    const std::vector<std::array<Matrix<double>, 3>> v{
        {random_matrix(1, 4, rng), random_matrix(1, 4, rng), random_matrix(1, 4, rng)}};
    EXPECT_NEAR(contrastive_value(v, 0.1), 0.0, 1e-9);
}

TEST(Contrastive, UniformSimilarityIsLogN) {
    const Matrix<double> same(3, 4, 1.0);
    const std::vector<std::array<Matrix<double>, 3>> v{{same, same, same}, {Matrix<double>(2, 4, 1.0), Matrix<double>(2, 4, 1.0), Matrix<double>(2, 4, 1.0)}};
    EXPECT_NEAR(contrastive_value(v, 0.1), std::log(5.0), 1e-6);
}

TEST(Contrastive, MatchesBruteForceEnumeration) {
    Rng rng(10);
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<std::array<Matrix<double>, 3>> v;
        for (int i = 0; i < 2; ++i) v.push_back({random_matrix(3, 5, rng), random_matrix(3, 5, rng), random_matrix(3, 5, rng)});
        EXPECT_NEAR(contrastive_value(v, 0.1), brute_contrastive(v, 0.1), 1e-10);
    }
}

TEST(Contrastive, NonNegativeAndNearZeroWhenPositiveDominates) {
    Rng rng(11);
    std::vector<std::array<Matrix<double>, 3>> v;
    for (int i = 0; i < 3; ++i) v.push_back({random_matrix(4, 6, rng), random_matrix(4, 6, rng), random_matrix(4, 6, rng)});
    EXPECT_GE(contrastive_value(v, 0.1), 0.0);
    // Identical streams built from one-hot rows: the positive has cosine 1,
    // every other candidate 0.
    std::vector<std::array<Matrix<double>, 3>> aligned;
    for (int i = 0; i < 2; ++i) {
        Matrix<double> m(3, 6);
        for (int r = 0; r < 3; ++r) m(r, i * 3 + r) = 1.0;
        aligned.push_back({m, m, m});
    }
    EXPECT_LT(contrastive_value(aligned, 0.01), 1e-20);
    EXPECT_THROW(contrastive_value({}, 0.1), ArgumentError);
}

TEST(Contrastive, FrameCapSubsamplesDeterministically) {
    Rng rng(12);
    std::vector<std::array<Matrix<double>, 3>> v;
    for (int i = 0; i < 2; ++i) v.push_back({random_matrix(8, 4, rng), random_matrix(8, 4, rng), random_matrix(8, 4, rng)});
    auto capped = [&](std::uint64_t seed) {
        Tape<double> t;
        std::vector<std::array<Var<double>, 3>> enc;
        for (const auto& x : v) enc.push_back({t.constant(x[0]), t.constant(x[1]), t.constant(x[2])});
        return contrastive_loss<double>(enc, 0.1, 3, seed).scalar();
    };
    EXPECT_EQ(capped(1), capped(1));
    EXPECT_NE(capped(1), contrastive_value(v, 0.1));
}

TEST(Total, CombinesWithDefaultWeights) {
    EXPECT_NEAR(combine_losses(1.0, 0.5, 0.25, LossWeights{}), 1.10, 1e-15);
    LossWeights zero;
    zero.lambda_smooth = zero.lambda_con = 0.0;
    EXPECT_EQ(combine_losses(0.7, 0.5, 0.25, zero), 0.7);
}

TEST(Total, EqualsSumOfIndependentComponents) {
    const auto b = mhl::testing::toy_batch();
    auto run = [&](const LossWeights& w, const ModelConfig& cfg) {
        Tape<double> t;
        const BoundParams<double> bound(t, b.params, false);
        std::vector<ForwardPass<double>> passes;
        std::vector<int> labels;
        for (const auto& s : b.samples) {
            passes.push_back(forward(t, bound, cfg, s));
            labels.push_back(s.label);
        }
        const auto out = total_loss<double>(passes, labels, w, cfg);
        double mil = 0.0, smooth = 0.0;
        std::vector<std::array<Matrix<double>, 3>> enc;
        for (std::size_t i = 0; i < passes.size(); ++i) {
            const auto sel = build_final_set(passes[i].trace, w.k_div, cfg.use_mamil);
            mil += mil_value(passes[i].trace.fused, sel.final_set, labels[i]);
            smooth += smooth_value(passes[i].trace.fused);
            enc.push_back({passes[i].encoded[0].value(), passes[i].encoded[1].value(), passes[i].encoded[2].value()});
        }
        mil /= 2.0;
        smooth /= 2.0;
        const double con = cfg.use_contrast && w.lambda_con > 0.0 ? brute_contrastive(enc, w.tau) : 0.0;
        EXPECT_NEAR(out.breakdown.mil, mil, 1e-12);
        EXPECT_NEAR(out.breakdown.smooth, smooth, 1e-12);
        EXPECT_NEAR(out.breakdown.con, con, 1e-10);
        EXPECT_NEAR(out.breakdown.total, mil + w.lambda_smooth * smooth + w.lambda_con * con, 1e-10);
        EXPECT_EQ(out.breakdown.total, out.total.scalar());
        EXPECT_GE(out.breakdown.mil, 0.0);
        EXPECT_GE(out.breakdown.smooth, 0.0);
        EXPECT_GE(out.breakdown.con, 0.0);
        return out.breakdown;
    };
    run(b.weights, b.cfg);
    LossWeights zero = b.weights;
    zero.lambda_smooth = zero.lambda_con = 0.0;
    const auto z = run(zero, b.cfg);
    EXPECT_EQ(z.total, z.mil);
    auto no_con = b.cfg;
    no_con.use_contrast = false;
    EXPECT_EQ(run(b.weights, no_con).con, 0.0);
    auto no_mil = b.cfg;
    no_mil.use_mamil = false;
    run(b.weights, no_mil);
}

TEST(Total, RejectsBadInputs) {
    LossWeights w;
    w.tau = 0.0;
    EXPECT_THROW(w.validate(), ConfigError);
    w = LossWeights{};
    w.k_div = 0;
    EXPECT_THROW(w.validate(), ConfigError);
    w = LossWeights{};
    w.lambda_con = -1.0;
    EXPECT_THROW(w.validate(), ConfigError);
}
