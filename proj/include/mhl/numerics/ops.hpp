#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mhl/numerics/kernels.hpp"
#include "mhl/numerics/matrix.hpp"
#include "mhl/numerics/tape.hpp"

// Differentiable primitives over Var. Only row-vector bias addition
// broadcasts; every other shape mismatch is a DimensionError.

namespace mhl {

namespace detail {

template <typename T>
bool wants(const Tape<T>& tape, std::size_t id) {
    return tape.needs_grad(id);
}

template <typename T>
void add_into(Matrix<T>& dst, const Matrix<T>& src, T factor = T{1}) {
    T* d = dst.data();
    const T* s = src.data();
    for (std::size_t i = 0; i < dst.size(); ++i) d[i] += factor * s[i];
}

}  // namespace detail

/// Numerically stable logistic function. The result is kept strictly
/// inside (0, 1) even where the exact value would round to an endpoint.
template <typename T>
T stable_sigmoid(T x) {
    T s;
    if (x >= T{0}) {
        s = T{1} / (T{1} + std::exp(-x));
    } else {
        const T e = std::exp(x);
        s = e / (T{1} + e);
    }
    constexpr T lo = std::numeric_limits<T>::min();
    constexpr T hi = T{1} - std::numeric_limits<T>::epsilon() / T{2};
    return std::clamp(s, lo, hi);
}

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
    const Matrix<T>& av = a.value();
    const Matrix<T>& bv = b.value();
    require_shape(av.cols() == bv.rows(), "matmul", av.shape(), bv.shape());
    Matrix<T> out(av.rows(), bv.cols());
    kernels::gemm_nn(av, bv, out);
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record("matmul", std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Matrix<T>& up) {
        if (detail::wants(t, ia)) kernels::gemm_nt(up, t.value(ib), t.adjoint(ia), true);
        if (detail::wants(t, ib)) kernels::gemm_tn(t.value(ia), up, t.adjoint(ib), true);
    });
}

/// a * b^T
template <typename T>
Var<T> matmul_nt(const Var<T>& a, const Var<T>& b) {
    const Matrix<T>& av = a.value();
    const Matrix<T>& bv = b.value();
    require_shape(av.cols() == bv.cols(), "matmul_nt", av.shape(), bv.shape());
    Matrix<T> out(av.rows(), bv.rows());
    kernels::gemm_nt(av, bv, out);
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record("matmul_nt", std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Matrix<T>& up) {
        if (detail::wants(t, ia)) kernels::gemm_nn(up, t.value(ib), t.adjoint(ia), true);
        if (detail::wants(t, ib)) kernels::gemm_tn(up, t.value(ia), t.adjoint(ib), true);
    });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    require_shape(a.value().same_shape(b.value()), "add", a.value().shape(), b.value().shape());
    Matrix<T> out = a.value();
    detail::add_into(out, b.value());
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record("add", std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Matrix<T>& up) {
        if (detail::wants(t, ia)) detail::add_into(t.adjoint(ia), up);
        if (detail::wants(t, ib)) detail::add_into(t.adjoint(ib), up);
    });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    require_shape(a.value().same_shape(b.value()), "sub", a.value().shape(), b.value().shape());
    Matrix<T> out = a.value();
    detail::add_into(out, b.value(), T{-1});
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record("sub", std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Matrix<T>& up) {
        if (detail::wants(t, ia)) detail::add_into(t.adjoint(ia), up);
        if (detail::wants(t, ib)) detail::add_into(t.adjoint(ib), up, T{-1});
    });
}

/// Elementwise product.
template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    require_shape(a.value().same_shape(b.value()), "mul", a.value().shape(), b.value().shape());
    Matrix<T> out = a.value();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
    const std::size_t ia = a.id(), ib = b.id();
    return a.tape().record("mul", std::move(out), {a, b}, [ia, ib](Tape<T>& t, const Matrix<T>& up) {
        if (detail::wants(t, ia)) {
            Matrix<T>& g = t.adjoint(ia);
            const Matrix<T>& bv = t.value(ib);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += up[i] * bv[i];
        }
        if (detail::wants(t, ib)) {
            Matrix<T>& g = t.adjoint(ib);
            const Matrix<T>& av = t.value(ia);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += up[i] * av[i];
        }
    });
}

/// x + bias, where bias is 1 x cols and is added to every row.
template <typename T>
Var<T> add_row(const Var<T>& x, const Var<T>& bias) {
    const Matrix<T>& xv = x.value();
    const Matrix<T>& bv = bias.value();
    require_shape(bv.rows() == 1 && bv.cols() == xv.cols(), "add_row", xv.shape(), bv.shape());
    Matrix<T> out = xv;
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] += bv[c];
    }
    const std::size_t ix = x.id(), ib = bias.id();
    return x.tape().record("add_row", std::move(out), {x, bias}, [ix, ib](Tape<T>& t, const Matrix<T>& up) {
        if (detail::wants(t, ix)) detail::add_into(t.adjoint(ix), up);
        if (detail::wants(t, ib)) {
            Matrix<T>& g = t.adjoint(ib);
            for (std::size_t r = 0; r < up.rows(); ++r) {
                auto row = up.row(r);
                for (std::size_t c = 0; c < row.size(); ++c) g[c] += row[c];
            }
        }
    });
}

template <typename T>
Var<T> scale(const Var<T>& x, T factor) {
    Matrix<T> out = x.value();
    for (auto& v : out.values()) v *= factor;
    const std::size_t ix = x.id();
    return x.tape().record("scale", std::move(out), {x}, [ix, factor](Tape<T>& t, const Matrix<T>& up) {
        detail::add_into(t.adjoint(ix), up, factor);
    });
}

/// Row t of x multiplied by s[t]; s is rows x 1.
template <typename T>
Var<T> scale_rows(const Var<T>& x, const Var<T>& s) {
    const Matrix<T>& xv = x.value();
    const Matrix<T>& sv = s.value();
    require_shape(sv.cols() == 1 && sv.rows() == xv.rows(), "scale_rows", xv.shape(), sv.shape());
    Matrix<T> out = xv;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (auto& v : out.row(r)) v *= sv[r];
    const std::size_t ix = x.id(), is = s.id();
    return x.tape().record("scale_rows", std::move(out), {x, s}, [ix, is](Tape<T>& t, const Matrix<T>& up) {
        const Matrix<T>& sv = t.value(is);
        if (detail::wants(t, ix)) {
            Matrix<T>& g = t.adjoint(ix);
            for (std::size_t r = 0; r < up.rows(); ++r) {
                auto gr = g.row(r);
                auto ur = up.row(r);
                for (std::size_t c = 0; c < ur.size(); ++c) gr[c] += sv[r] * ur[c];
            }
        }
        if (detail::wants(t, is)) {
            Matrix<T>& g = t.adjoint(is);
            const Matrix<T>& xv = t.value(ix);
            for (std::size_t r = 0; r < up.rows(); ++r) {
                auto xr = xv.row(r);
                auto ur = up.row(r);
                T acc{0};
                for (std::size_t c = 0; c < ur.size(); ++c) acc += xr[c] * ur[c];
                g[r] += acc;
            }
        }
    });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
    Matrix<T> out = x.value();
    for (auto& v : out.values()) v = v > T{0} ? v : T{0};
    const std::size_t ix = x.id();
    return x.tape().record("relu", std::move(out), {x}, [ix](Tape<T>& t, const Matrix<T>& up) {
        Matrix<T>& g = t.adjoint(ix);
        const Matrix<T>& xv = t.value(ix);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (xv[i] > T{0}) g[i] += up[i];
    });
}

template <typename T>
Var<T> sigmoid(const Var<T>& x) {
    Matrix<T> out = x.value();
    for (auto& v : out.values()) v = stable_sigmoid(v);
    Matrix<T> y = out;
    const std::size_t ix = x.id();
    return x.tape().record("sigmoid", std::move(out), {x}, [ix, y = std::move(y)](Tape<T>& t, const Matrix<T>& up) {
        Matrix<T>& g = t.adjoint(ix);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += up[i] * y[i] * (T{1} - y[i]);
    });
}

/// Row-wise softmax with max subtraction.
template <typename T>
Var<T> softmax_rows(const Var<T>& x) {
    Matrix<T> out = x.value();
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        const T mx = *std::max_element(row.begin(), row.end());
        T sum{0};
        for (auto& v : row) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (auto& v : row) v /= sum;
    }
    Matrix<T> y = out;
    const std::size_t ix = x.id();
    return x.tape().record("softmax_rows", std::move(out), {x}, [ix, y = std::move(y)](Tape<T>& t, const Matrix<T>& up) {
        Matrix<T>& g = t.adjoint(ix);
        for (std::size_t r = 0; r < up.rows(); ++r) {
            auto yr = y.row(r);
            auto ur = up.row(r);
            T dot{0};
            for (std::size_t c = 0; c < yr.size(); ++c) dot += yr[c] * ur[c];
            auto gr = g.row(r);
            for (std::size_t c = 0; c < yr.size(); ++c) gr[c] += yr[c] * (ur[c] - dot);
        }
    });
}

/// log(clamp(x, lo, hi)); zero gradient where the clamp is active.
template <typename T>
Var<T> log_clamped(const Var<T>& x, T lo, T hi) {
    Matrix<T> out = x.value();
    for (auto& v : out.values()) v = std::log(std::clamp(v, lo, hi));
    const std::size_t ix = x.id();
    return x.tape().record("log_clamped", std::move(out), {x}, [ix, lo, hi](Tape<T>& t, const Matrix<T>& up) {
        Matrix<T>& g = t.adjoint(ix);
        const Matrix<T>& xv = t.value(ix);
        for (std::size_t i = 0; i < g.size(); ++i)
            if (xv[i] >= lo && xv[i] <= hi) g[i] += up[i] / xv[i];
    });
}

/// 1 - x, elementwise.
template <typename T>
Var<T> one_minus(const Var<T>& x) {
    Matrix<T> out = x.value();
    for (auto& v : out.values()) v = T{1} - v;
    const std::size_t ix = x.id();
    return x.tape().record("one_minus", std::move(out), {x}, [ix](Tape<T>& t, const Matrix<T>& up) {
        detail::add_into(t.adjoint(ix), up, T{-1});
    });
}

/// Horizontal concatenation in argument order.
template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
    if (parts.empty()) throw ArgumentError("concat_cols: no inputs");
    const std::size_t rows = parts.front().rows();
    std::size_t cols = 0;
    for (const auto& p : parts) {
        require_shape(p.rows() == rows, "concat_cols", parts.front().value().shape(), p.value().shape());
        cols += p.cols();
    }
    Matrix<T> out(rows, cols);
    std::vector<std::size_t> ids, offsets;
    std::size_t off = 0;
    for (const auto& p : parts) {
        const Matrix<T>& pv = p.value();
        for (std::size_t r = 0; r < rows; ++r) std::copy_n(pv.row(r).data(), pv.cols(), out.row(r).data() + off);
        ids.push_back(p.id());
        offsets.push_back(off);
        off += pv.cols();
    }
    return parts.front().tape().record(
        "concat_cols", std::move(out), parts, [ids, offsets](Tape<T>& t, const Matrix<T>& up) {
            for (std::size_t k = 0; k < ids.size(); ++k) {
                if (!detail::wants(t, ids[k])) continue;
                Matrix<T>& g = t.adjoint(ids[k]);
                for (std::size_t r = 0; r < g.rows(); ++r) {
                    auto gr = g.row(r);
                    const T* ur = up.row(r).data() + offsets[k];
                    for (std::size_t c = 0; c < gr.size(); ++c) gr[c] += ur[c];
                }
            }
        });
}

/// Vertical concatenation in argument order.
template <typename T>
Var<T> concat_rows(const std::vector<Var<T>>& parts) {
    if (parts.empty()) throw ArgumentError("concat_rows: no inputs");
    const std::size_t cols = parts.front().cols();
    std::size_t rows = 0;
    for (const auto& p : parts) {
        require_shape(p.cols() == cols, "concat_rows", parts.front().value().shape(), p.value().shape());
        rows += p.rows();
    }
    Matrix<T> out(rows, cols);
    std::vector<std::size_t> ids, offsets;
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p.value().values().begin(), p.value().values().end(), out.data() + off * cols);
        ids.push_back(p.id());
        offsets.push_back(off);
        off += p.rows();
    }
    return parts.front().tape().record(
        "concat_rows", std::move(out), parts, [ids, offsets, cols](Tape<T>& t, const Matrix<T>& up) {
            for (std::size_t k = 0; k < ids.size(); ++k) {
                if (!detail::wants(t, ids[k])) continue;
                Matrix<T>& g = t.adjoint(ids[k]);
                const T* src = up.data() + offsets[k] * cols;
                for (std::size_t i = 0; i < g.size(); ++i) g[i] += src[i];
            }
        });
}

/// Rows [start, start + count).
template <typename T>
Var<T> slice_rows(const Var<T>& x, std::size_t start, std::size_t count) {
    const Matrix<T>& xv = x.value();
    if (start + count > xv.rows()) {
        throw IndexError("slice_rows: range [" + std::to_string(start) + ", " + std::to_string(start + count) +
                         ") exceeds " + xv.shape());
    }
    Matrix<T> out(count, xv.cols());
    std::copy_n(xv.data() + start * xv.cols(), count * xv.cols(), out.data());
    const std::size_t ix = x.id();
    return x.tape().record("slice_rows", std::move(out), {x}, [ix, start](Tape<T>& t, const Matrix<T>& up) {
        Matrix<T>& g = t.adjoint(ix);
        T* dst = g.data() + start * g.cols();
        for (std::size_t i = 0; i < up.size(); ++i) dst[i] += up[i];
    });
}

/// Rows of x at `indices` (repeats allowed).
template <typename T>
Var<T> gather_rows(const Var<T>& x, std::vector<std::size_t> indices) {
    const Matrix<T>& xv = x.value();
    Matrix<T> out(indices.size(), xv.cols());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        if (indices[k] >= xv.rows()) {
            throw IndexError("gather_rows: index " + std::to_string(indices[k]) + " out of range for " + xv.shape());
        }
        std::copy_n(xv.row(indices[k]).data(), xv.cols(), out.row(k).data());
    }
    const std::size_t ix = x.id();
    return x.tape().record("gather_rows", std::move(out), {x},
                           [ix, idx = std::move(indices)](Tape<T>& t, const Matrix<T>& up) {
                               Matrix<T>& g = t.adjoint(ix);
                               for (std::size_t k = 0; k < idx.size(); ++k) {
                                   auto gr = g.row(idx[k]);
                                   auto ur = up.row(k);
                                   for (std::size_t c = 0; c < ur.size(); ++c) gr[c] += ur[c];
                               }
                           });
}

/// Each row divided by max(||row||_2, eps).
template <typename T>
Var<T> l2_normalize_rows(const Var<T>& x, T eps = T(1e-12)) {
    const Matrix<T>& xv = x.value();
    Matrix<T> out = xv;
    std::vector<T> norms(xv.rows());
    for (std::size_t r = 0; r < out.rows(); ++r) {
        auto row = out.row(r);
        T ss{0};
        for (T v : row) ss += v * v;
        const T n = std::sqrt(ss);
        norms[r] = n;
        const T d = std::max(n, eps);
        for (auto& v : row) v /= d;
    }
    Matrix<T> y = out;
    const std::size_t ix = x.id();
    return x.tape().record(
        "l2_normalize_rows", std::move(out), {x},
        [ix, eps, norms = std::move(norms), y = std::move(y)](Tape<T>& t, const Matrix<T>& up) {
            Matrix<T>& g = t.adjoint(ix);
            for (std::size_t r = 0; r < up.rows(); ++r) {
                auto yr = y.row(r);
                auto ur = up.row(r);
                auto gr = g.row(r);
                if (norms[r] > eps) {
                    T dot{0};
                    for (std::size_t c = 0; c < yr.size(); ++c) dot += yr[c] * ur[c];
                    for (std::size_t c = 0; c < yr.size(); ++c) gr[c] += (ur[c] - yr[c] * dot) / norms[r];
                } else {
                    for (std::size_t c = 0; c < yr.size(); ++c) gr[c] += ur[c] / eps;
                }
            }
        });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
    T acc{0};
    for (T v : x.value().values()) acc += v;
    const std::size_t ix = x.id();
    return x.tape().record("sum", Matrix<T>(1, 1, acc), {x}, [ix](Tape<T>& t, const Matrix<T>& up) {
        Matrix<T>& g = t.adjoint(ix);
        for (auto& v : g.values()) v += up[0];
    });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
    const std::size_t n = x.value().size();
    if (n == 0) throw ArgumentError("mean: empty input");
    return scale(sum(x), T{1} / static_cast<T>(n));
}

/// Mean over rows of -log softmax(logits[r])[targets[r]].
template <typename T>
Var<T> softmax_cross_entropy(const Var<T>& logits, std::vector<std::size_t> targets) {
    const Matrix<T>& lv = logits.value();
    if (targets.size() != lv.rows()) {
        throw DimensionError("softmax_cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                             lv.shape());
    }
    if (lv.rows() == 0) throw ArgumentError("softmax_cross_entropy: empty batch");
    Matrix<T> probs = lv;
    T total{0};
    for (std::size_t r = 0; r < lv.rows(); ++r) {
        if (targets[r] >= lv.cols()) throw IndexError("softmax_cross_entropy: target out of range");
        auto row = probs.row(r);
        const T mx = *std::max_element(row.begin(), row.end());
        T s{0};
        for (auto& v : row) {
            v = std::exp(v - mx);
            s += v;
        }
        for (auto& v : row) v /= s;
        const T lse = mx + std::log(s);
        total += lse - lv(r, targets[r]);
    }
    const T n = static_cast<T>(lv.rows());
    const std::size_t il = logits.id();
    return logits.tape().record(
        "softmax_cross_entropy", Matrix<T>(1, 1, total / n), {logits},
        [il, n, probs = std::move(probs), tg = std::move(targets)](Tape<T>& t, const Matrix<T>& up) {
            Matrix<T>& g = t.adjoint(il);
            const T f = up[0] / n;
            for (std::size_t r = 0; r < probs.rows(); ++r) {
                auto pr = probs.row(r);
                auto gr = g.row(r);
                for (std::size_t c = 0; c < pr.size(); ++c) gr[c] += f * pr[c];
                gr[tg[r]] -= f;
            }
        });
}

}  // namespace mhl
