#pragma once

#include <cstddef>

namespace corrnoise::blas {

/// Thin typed wrappers over cblas, row-major throughout. The BLAS thread pool
/// is pinned to one thread (see pin_single_thread) so results are bitwise
/// reproducible run-to-run.

void pin_single_thread();

// C = alpha * op(A) * op(B) + beta * C ; A is m x k after transposition,
// B is k x n, C is m x n. Leading dimensions are the row strides.
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, float alpha,
          const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
          std::size_t ldc);
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc);

// y = A * x (m x n times n), row-major.
void gemv(std::size_t m, std::size_t n, const float* a, std::size_t lda, const float* x, float* y);
void gemv(std::size_t m, std::size_t n, const double* a, std::size_t lda, const double* x,
          double* y);

// Solve X * L^T = B in place of B (right, lower, transposed, non-unit),
// B is m x n, L is n x n lower-triangular.
void trsm_right_lowerT(std::size_t m, std::size_t n, const float* l, std::size_t ldl, float* b,
                       std::size_t ldb);
void trsm_right_lowerT(std::size_t m, std::size_t n, const double* l, std::size_t ldl, double* b,
                       std::size_t ldb);

// Solve L^T * X = B in place of B (left, lower, transposed, non-unit).
void trsm_left_lowerT(std::size_t m, std::size_t n, const float* l, std::size_t ldl, float* b,
                      std::size_t ldb);
void trsm_left_lowerT(std::size_t m, std::size_t n, const double* l, std::size_t ldl, double* b,
                      std::size_t ldb);

// Solve X * L = B in place of B (right, lower, non-unit).
void trsm_right_lower(std::size_t m, std::size_t n, const float* l, std::size_t ldl, float* b,
                      std::size_t ldb);
void trsm_right_lower(std::size_t m, std::size_t n, const double* l, std::size_t ldl, double* b,
                      std::size_t ldb);

// C(lower) -= A * A^T ; C is n x n, A is n x k.
void syrk_lower_sub(std::size_t n, std::size_t k, const float* a, std::size_t lda, float* c,
                    std::size_t ldc);
void syrk_lower_sub(std::size_t n, std::size_t k, const double* a, std::size_t lda, double* c,
                    std::size_t ldc);

}  // namespace corrnoise::blas
