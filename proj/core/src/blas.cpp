#include "corrnoise/blas.hpp"

#include <cblas.h>

extern "C" void openblas_set_num_threads(int);

namespace corrnoise::blas {

void pin_single_thread() { openblas_set_num_threads(1); }

namespace {
CBLAS_TRANSPOSE t(bool yes) { return yes ? CblasTrans : CblasNoTrans; }
}  // namespace

void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, float alpha,
          const float* a, std::size_t lda, const float* b, std::size_t ldb, float beta, float* c,
          std::size_t ldc) {
    cblas_sgemm(CblasRowMajor, t(ta), t(tb), (int)m, (int)n, (int)k, alpha, a, (int)lda, b,
                (int)ldb, beta, c, (int)ldc);
}

void gemm(bool ta, bool tb, std::size_t m, std::size_t n, std::size_t k, double alpha,
          const double* a, std::size_t lda, const double* b, std::size_t ldb, double beta,
          double* c, std::size_t ldc) {
    cblas_dgemm(CblasRowMajor, t(ta), t(tb), (int)m, (int)n, (int)k, alpha, a, (int)lda, b,
                (int)ldb, beta, c, (int)ldc);
}

void gemv(std::size_t m, std::size_t n, const float* a, std::size_t lda, const float* x,
          float* y) {
    cblas_sgemv(CblasRowMajor, CblasNoTrans, (int)m, (int)n, 1.0f, a, (int)lda, x, 1, 0.0f, y, 1);
}

void gemv(std::size_t m, std::size_t n, const double* a, std::size_t lda, const double* x,
          double* y) {
    cblas_dgemv(CblasRowMajor, CblasNoTrans, (int)m, (int)n, 1.0, a, (int)lda, x, 1, 0.0, y, 1);
}

void trsm_right_lowerT(std::size_t m, std::size_t n, const float* l, std::size_t ldl, float* b,
                       std::size_t ldb) {
    cblas_strsm(CblasRowMajor, CblasRight, CblasLower, CblasTrans, CblasNonUnit, (int)m, (int)n,
                1.0f, l, (int)ldl, b, (int)ldb);
}

void trsm_right_lowerT(std::size_t m, std::size_t n, const double* l, std::size_t ldl, double* b,
                       std::size_t ldb) {
    cblas_dtrsm(CblasRowMajor, CblasRight, CblasLower, CblasTrans, CblasNonUnit, (int)m, (int)n,
                1.0, l, (int)ldl, b, (int)ldb);
}

void trsm_left_lowerT(std::size_t m, std::size_t n, const float* l, std::size_t ldl, float* b,
                      std::size_t ldb) {
    cblas_strsm(CblasRowMajor, CblasLeft, CblasLower, CblasTrans, CblasNonUnit, (int)m, (int)n,
                1.0f, l, (int)ldl, b, (int)ldb);
}

void trsm_left_lowerT(std::size_t m, std::size_t n, const double* l, std::size_t ldl, double* b,
                      std::size_t ldb) {
    cblas_dtrsm(CblasRowMajor, CblasLeft, CblasLower, CblasTrans, CblasNonUnit, (int)m, (int)n, 1.0,
                l, (int)ldl, b, (int)ldb);
}

void trsm_right_lower(std::size_t m, std::size_t n, const float* l, std::size_t ldl, float* b,
                      std::size_t ldb) {
    cblas_strsm(CblasRowMajor, CblasRight, CblasLower, CblasNoTrans, CblasNonUnit, (int)m, (int)n,
                1.0f, l, (int)ldl, b, (int)ldb);
}

void trsm_right_lower(std::size_t m, std::size_t n, const double* l, std::size_t ldl, double* b,
                      std::size_t ldb) {
    cblas_dtrsm(CblasRowMajor, CblasRight, CblasLower, CblasNoTrans, CblasNonUnit, (int)m, (int)n,
                1.0, l, (int)ldl, b, (int)ldb);
}

void syrk_lower_sub(std::size_t n, std::size_t k, const float* a, std::size_t lda, float* c,
                    std::size_t ldc) {
    cblas_ssyrk(CblasRowMajor, CblasLower, CblasNoTrans, (int)n, (int)k, -1.0f, a, (int)lda, 1.0f,
                c, (int)ldc);
}

void syrk_lower_sub(std::size_t n, std::size_t k, const double* a, std::size_t lda, double* c,
                    std::size_t ldc) {
    cblas_dsyrk(CblasRowMajor, CblasLower, CblasNoTrans, (int)n, (int)k, -1.0, a, (int)lda, 1.0, c,
                (int)ldc);
}

}  // namespace corrnoise::blas
