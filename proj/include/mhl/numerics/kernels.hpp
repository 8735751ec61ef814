#pragma once

#include <cstddef>
#include <vector>

#include "mhl/numerics/matrix.hpp"

// Dense GEMM kernels. Every output element accumulates its k-terms in
// ascending k order, so results match a naive triple loop bit for bit
// (given the same floating-point contraction settings).

namespace mhl::kernels {

namespace detail {

template <typename T>
void gemm_nn_raw(const T* __restrict a, const T* __restrict b, T* __restrict c, std::size_t m,
                 std::size_t k, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= m; i += 4) {
        T* __restrict c0 = c + (i + 0) * n;
        T* __restrict c1 = c + (i + 1) * n;
        T* __restrict c2 = c + (i + 2) * n;
        T* __restrict c3 = c + (i + 3) * n;
        const T* a0 = a + (i + 0) * k;
        const T* a1 = a + (i + 1) * k;
        const T* a2 = a + (i + 2) * k;
        const T* a3 = a + (i + 3) * k;
        for (std::size_t p = 0; p < k; ++p) {
            const T* __restrict brow = b + p * n;
            const T x0 = a0[p], x1 = a1[p], x2 = a2[p], x3 = a3[p];
            for (std::size_t j = 0; j < n; ++j) {
                const T bv = brow[j];
                c0[j] += x0 * bv;
                c1[j] += x1 * bv;
                c2[j] += x2 * bv;
                c3[j] += x3 * bv;
            }
        }
    }
    for (; i < m; ++i) {
        T* __restrict crow = c + i * n;
        const T* arow = a + i * k;
        for (std::size_t p = 0; p < k; ++p) {
            const T* __restrict brow = b + p * n;
            const T x = arow[p];
            for (std::size_t j = 0; j < n; ++j) crow[j] += x * brow[j];
        }
    }
}

}  // namespace detail

/// c (+)= a * b
template <typename T>
void gemm_nn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c, bool accumulate = false) {
    if (!accumulate) c.fill(T{0});
    detail::gemm_nn_raw(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
}

/// c (+)= a * b^T, with a: m x k and b: n x k.
template <typename T>
void gemm_nt(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c, bool accumulate = false) {
    const Matrix<T> bt = transpose(b);
    gemm_nn(a, bt, c, accumulate);
}

/// c (+)= a^T * b, with a: k x m and b: k x n.
template <typename T>
void gemm_tn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c, bool accumulate = false) {
    const Matrix<T> at = transpose(a);
    gemm_nn(at, b, c, accumulate);
}

}  // namespace mhl::kernels
