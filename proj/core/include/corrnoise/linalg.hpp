#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "corrnoise/blas.hpp"
#include "corrnoise/errors.hpp"
#include "corrnoise/sym_matrix.hpp"
#include "corrnoise/tensor.hpp"

namespace corrnoise::linalg {

inline constexpr std::size_t kCholeskyBlock = 128;
inline constexpr std::size_t kMaxJacobiDim = 2048;
inline constexpr std::size_t kMaxJacobiSweeps = 64;

// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
// Right-looking blocked algorithm; panels are factored with scalar loops and
// the trailing matrix is updated with trsm/syrk. A pivot at or below
// 1e-12 * trace / dim is treated as a loss of positive definiteness and
// reported with the global pivot index.
template <typename T>
Tensor<T> cholesky(const SymMatrix<T>& m) {
    const std::size_t n = m.dim();
    Tensor<T> w = m.dense();
    T* a = w.data().data();

    const T tol = std::max(T(1e-12) * m.trace() / T(n), T(0));

    for (std::size_t j0 = 0; j0 < n; j0 += kCholeskyBlock) {
        const std::size_t jb = std::min(kCholeskyBlock, n - j0);

        for (std::size_t jj = 0; jj < jb; ++jj) {
            const std::size_t j = j0 + jj;
            T d = a[j * n + j];
            for (std::size_t k = j0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
            if (!(d > tol)) throw NotPositiveDefinite(j);
            const T lj = std::sqrt(d);
            a[j * n + j] = lj;
            for (std::size_t i = j + 1; i < j0 + jb; ++i) {
                T s = a[i * n + j];
                for (std::size_t k = j0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
                a[i * n + j] = s / lj;
            }
        }

        const std::size_t rest = n - j0 - jb;
        if (rest == 0) continue;
        blas::trsm_right_lowerT(rest, jb, a + j0 * n + j0, n, a + (j0 + jb) * n + j0, n);
        blas::syrk_lower_sub(rest, jb, a + (j0 + jb) * n + j0, n, a + (j0 + jb) * n + (j0 + jb), n);
    }

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) a[i * n + j] = T(0);
    return w;
}

template <typename T>
struct EigenResult {
    std::vector<T> values;  // ascending
    Tensor<T> vectors;      // column j pairs with values[j]
};

// Cyclic Jacobi eigendecomposition for symmetric matrices. Dense O(n^3)
// per sweep, intended for the moderate dimensions the repair path sees.
template <typename T>
EigenResult<T> sym_eigen(const SymMatrix<T>& m) {
    const std::size_t n = m.dim();
    if (n > kMaxJacobiDim) throw DimensionTooLarge(n, kMaxJacobiDim);

    Tensor<T> work = m.dense();
    Tensor<T> vecs = identity_matrix<T>(n);
    T* a = work.data().data();
    T* v = vecs.data().data();

    auto off_norm = [&] {
        T s = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += a[i * n + j] * a[i * n + j];
        return std::sqrt(T(2) * s);
    };

    T scale = 0;
    for (std::size_t i = 0; i < n * n; ++i) scale = std::max(scale, std::abs(a[i]));
    const T stop = (scale > 0 ? scale : T(1)) * T(n) * std::numeric_limits<T>::epsilon();

    bool converged = n < 2;
    for (std::size_t sweep = 0; sweep < kMaxJacobiSweeps && !converged; ++sweep) {
        if (off_norm() <= stop) {
            converged = true;
            break;
        }
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const T apq = a[p * n + q];
                if (std::abs(apq) <= stop / T(n)) continue;

                const T theta = (a[q * n + q] - a[p * n + p]) / (T(2) * apq);
                T t = T(1) / (std::abs(theta) + std::sqrt(theta * theta + T(1)));
                if (theta < 0) t = -t;
                const T c = T(1) / std::sqrt(t * t + T(1));
                const T s = t * c;
                const T tau = s / (T(1) + c);

                a[p * n + p] -= t * apq;
                a[q * n + q] += t * apq;
                a[p * n + q] = 0;
                a[q * n + p] = 0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    const T aip = a[i * n + p];
                    const T aiq = a[i * n + q];
                    a[i * n + p] = aip - s * (aiq + tau * aip);
                    a[p * n + i] = a[i * n + p];
                    a[i * n + q] = aiq + s * (aip - tau * aiq);
                    a[q * n + i] = a[i * n + q];
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const T vip = v[i * n + p];
                    const T viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }
    if (!converged && off_norm() > stop) throw ConvergenceFailure(n, kMaxJacobiSweeps);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a[i * n + i] < a[j * n + j]; });

    EigenResult<T> out{std::vector<T>(n), Tensor<T>({n, n})};
    T* ov = out.vectors.data().data();
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a[order[j] * n + order[j]];
        for (std::size_t i = 0; i < n; ++i) ov[i * n + j] = v[i * n + order[j]];
    }
    return out;
}

// Nearest unit-diagonal PSD repair: clip eigenvalues to the floor, rebuild,
// renormalize the diagonal back to one, and repeat until the smallest
// eigenvalue of the renormalized matrix itself clears the floor. A matrix
// that already clears the floor is returned untouched.
template <typename T>
SymMatrix<T> nearest_psd(const SymMatrix<T>& m, T floor = T(1e-6)) {
    const std::size_t n = m.dim();
    const T slack = T(1e-12);
    SymMatrix<T> cur = m;

    for (std::size_t iter = 0; iter < 64; ++iter) {
        EigenResult<T> eig = sym_eigen(cur);
        if (eig.values.front() >= floor - slack) return cur;

        std::vector<T> lam(n);
        for (std::size_t j = 0; j < n; ++j) lam[j] = std::max(eig.values[j], floor);

        // V * diag(lam) * V^T
        Tensor<T> vl = eig.vectors;
        T* p = vl.data().data();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) p[i * n + j] *= lam[j];
        Tensor<T> rebuilt({n, n});
        blas::gemm(false, true, n, n, n, T(1), vl.data().data(), n, eig.vectors.data().data(), n,
                   T(0), rebuilt.data().data(), n);

        std::vector<T> inv_sqrt(n);
        for (std::size_t i = 0; i < n; ++i) inv_sqrt[i] = T(1) / std::sqrt(rebuilt(i, i));
        Tensor<T> norm({n, n});
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j)
                norm(i, j) = rebuilt(i, j) * inv_sqrt[i] * inv_sqrt[j];
            norm(i, i) = T(1);
        }
        cur = SymMatrix<T>(norm);
    }
    return cur;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.extent(1) != b.extent(0))
        throw ShapeMismatch(shape_str({a.extent(0), b.extent(1)}), shape_str(b.shape()));
    Tensor<T> c({a.extent(0), b.extent(1)});
    blas::gemm(false, false, a.extent(0), b.extent(1), a.extent(1), T(1), a.data().data(),
               a.extent(1), b.data().data(), b.extent(1), T(0), c.data().data(), b.extent(1));
    return c;
}

template <typename T>
std::vector<T> matvec(const Tensor<T>& a, const std::vector<T>& x) {
    if (a.rank() != 2 || a.extent(1) != x.size())
        throw ShapeMismatch(shape_str({a.extent(1)}), shape_str({x.size()}));
    std::vector<T> y(a.extent(0));
    blas::gemv(a.extent(0), a.extent(1), a.data().data(), a.extent(1), x.data(), y.data());
    return y;
}

// Reverse-mode map from a cotangent on the Cholesky factor L to a cotangent
// on the symmetric input: Sbar = 0.5 * L^-T (Phi(L^T Lbar) + Phi(L^T Lbar)^T) L^-1
// where Phi keeps the lower triangle and halves the diagonal.
template <typename T>
SymMatrix<T> cholesky_pullback(const Tensor<T>& l, const Tensor<T>& lbar) {
    check_same_shape(l, lbar);
    const std::size_t n = l.extent(0);

    Tensor<T> p({n, n});
    blas::gemm(true, false, n, n, n, T(1), l.data().data(), n, lbar.data().data(), n, T(0),
               p.data().data(), n);

    // (Phi(P) + Phi(P)^T) / 2: symmetric, lower triangle and diagonal of P halved.
    Tensor<T> phi({n, n});
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            phi(i, j) = p(i, j) / T(2);
            phi(j, i) = phi(i, j);
        }
        phi(i, i) = p(i, i) / T(2);
    }

    blas::trsm_left_lowerT(n, n, l.data().data(), n, phi.data().data(), n);
    blas::trsm_right_lower(n, n, l.data().data(), n, phi.data().data(), n);

    Tensor<T> sym({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) sym(i, j) = (phi(i, j) + phi(j, i)) / T(2);
    return SymMatrix<T>(sym);
}

}  // namespace corrnoise::linalg
