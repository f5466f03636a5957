#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "corrnoise/linalg.hpp"
#include "testutil.hpp"

using namespace corrnoise;

namespace {

template <typename T>
double rel_residual(const SymMatrix<T>& a, const Tensor<T>& l) {
    const std::size_t n = a.dim();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double rec = 0;
            for (std::size_t t = 0; t <= std::min(i, j); ++t)
                rec += static_cast<double>(l(i, t)) * static_cast<double>(l(j, t));
            const double aij = static_cast<double>(a.at(i, j));
            num += (rec - aij) * (rec - aij);
            den += aij * aij;
        }
    return std::sqrt(num / den);
}

double min_eigenvalue(const SymMatrix<double>& m) {
    return linalg::sym_eigen(m).values[0];
}

}  // namespace

TEST_CASE("cholesky of a 2x2 by hand") {
    SymMatrix<double> a(2);
    a.set(0, 0, 4);
    a.set(0, 1, 2);
    a.set(1, 1, 3);
    const Tensor<double> l = linalg::cholesky(a);
    CHECK(l(0, 0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(l(1, 0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(l(1, 1) == doctest::Approx(1.4142135623730951).epsilon(1e-15));
    CHECK(l(0, 1) == 0.0);
}

TEST_CASE("cholesky rejects an indefinite matrix with the failing pivot") {
    SymMatrix<double> a(2);
    a.set(0, 0, 1);
    a.set(0, 1, 2);
    a.set(1, 1, 1);
    try {
        linalg::cholesky(a);
        FAIL("expected NotPositiveDefinite");
    } catch (const NotPositiveDefinite& e) {
        CHECK(e.pivot == 1);
    }
}

TEST_CASE("cholesky reconstructs random SPD matrices, unblocked and blocked") {
    RandomStream stream(11);
    for (const std::size_t n : {5UL, 40UL, 200UL}) {
        const auto a = testutil::random_spd<double>(n, stream);
        const Tensor<double> l = linalg::cholesky(a);
        CHECK(rel_residual(a, l) < 1e-12);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) CHECK(l(i, j) == 0.0);
    }

    RandomStream fstream(12);
    const auto af = testutil::random_spd<float>(160, fstream);
    CHECK(rel_residual(af, linalg::cholesky(af)) < 1e-4);
}

TEST_CASE("eigendecomposition of a 2x2 by hand") {
    SymMatrix<double> a(2);
    a.set(0, 0, 1);
    a.set(0, 1, 2);
    a.set(1, 1, 1);
    const auto eig = linalg::sym_eigen(a);
    REQUIRE(eig.values.size() == 2);
    CHECK(eig.values[0] == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(eig.values[1] == doctest::Approx(3.0).epsilon(1e-12));
    const double s = 1.0 / std::sqrt(2.0);
    CHECK(std::abs(eig.vectors(0, 0)) == doctest::Approx(s));
    CHECK(std::abs(eig.vectors(1, 1)) == doctest::Approx(s));
}

TEST_CASE("eigendecomposition satisfies A V = V diag and orthonormality") {
    RandomStream stream(21);
    const std::size_t n = 30;
    const auto a = testutil::random_spd<double>(n, stream);
    const auto eig = linalg::sym_eigen(a);

    for (std::size_t j = 0; j + 1 < n; ++j) CHECK(eig.values[j] <= eig.values[j + 1]);

    double resid = 0, scale = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            double av = 0;
            for (std::size_t t = 0; t < n; ++t) av += a.at(i, t) * eig.vectors(t, j);
            const double vl = eig.vectors(i, j) * eig.values[j];
            resid += (av - vl) * (av - vl);
            scale += a.at(i, j) * a.at(i, j);
        }
    CHECK(std::sqrt(resid / scale) < 1e-12);

    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            double dot = 0;
            for (std::size_t t = 0; t < n; ++t) dot += eig.vectors(t, i) * eig.vectors(t, j);
            CHECK(dot == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-10).scale(1.0));
        }
}

TEST_CASE("nearest_psd returns PSD input untouched") {
    RandomStream stream(31);
    const auto a = testutil::random_spd<double>(8, stream);
    SymMatrix<double> corr(8);
    for (std::size_t i = 0; i < 8; ++i) {
        corr.set(i, i, 1.0);
        for (std::size_t j = 0; j < i; ++j)
            corr.set(i, j, a.at(i, j) / std::sqrt(a.at(i, i) * a.at(j, j)));
    }
    const auto repaired = linalg::nearest_psd(corr, 1e-6);
    CHECK(repaired == corr);
}

TEST_CASE("nearest_psd repairs an indefinite correlation matrix") {
    SymMatrix<double> a(2);
    a.set(0, 0, 1);
    a.set(0, 1, 2);
    a.set(1, 1, 1);
    const auto repaired = linalg::nearest_psd(a, 1e-6);
    CHECK(repaired.at(0, 0) == 1.0);
    CHECK(repaired.at(1, 1) == 1.0);
    // clipping pulls the off-diagonal just under 1; the iterated repair lands
    // at 1 - 2*floor/(lambda_max + floor)
    CHECK(repaired.at(0, 1) == doctest::Approx(0.9999990000001667).epsilon(1e-9));
    CHECK(min_eigenvalue(repaired) >= 1e-6 - 1e-12);
    CHECK_NOTHROW(linalg::cholesky(repaired));
}

TEST_CASE("nearest_psd keeps the unit diagonal exactly") {
    RandomStream stream(41);
    SymMatrix<double> m(6);
    for (std::size_t i = 0; i < 6; ++i) {
        m.set(i, i, 1.0);
        for (std::size_t j = 0; j < i; ++j) m.set(i, j, 1.6 * (stream.uniform01() - 0.5));
    }
    const auto repaired = linalg::nearest_psd(m, 1e-6);
    for (std::size_t i = 0; i < 6; ++i) CHECK(repaired.at(i, i) == 1.0);
    CHECK(min_eigenvalue(repaired) >= 1e-6 - 1e-12);
}

TEST_CASE("matmul and matvec compute products and enforce shapes") {
    Tensor<double> a({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor<double> b({3, 2}, {7, 8, 9, 10, 11, 12});
    const Tensor<double> c = linalg::matmul(a, b);
    CHECK(c(0, 0) == 58);
    CHECK(c(1, 1) == 154);

    const std::vector<double> y = linalg::matvec(a, {1, 1, 1});
    CHECK(y[0] == 6);
    CHECK(y[1] == 15);

    Tensor<double> bad({2, 2});
    CHECK_THROWS_AS(linalg::matmul(a, bad), ShapeMismatch);
    CHECK_THROWS_AS(linalg::matvec(a, {1, 1}), ShapeMismatch);
}

TEST_CASE("cholesky pullback matches symmetric finite differences") {
    RandomStream stream(51);
    const std::size_t n = 5;
    const auto sigma = testutil::random_spd<double>(n, stream);

    // df = sum_ij w_ij L_ij with random lower-triangular weights
    Tensor<double> w({n, n});
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) w(i, j) = stream.normal();

    const auto f = [&](const SymMatrix<double>& s) {
        const Tensor<double> l = linalg::cholesky(s);
        double acc = 0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) acc += w(i, j) * l(i, j);
        return acc;
    };

    const Tensor<double> l = linalg::cholesky(sigma);
    const SymMatrix<double> sigma_bar = linalg::cholesky_pullback(l, w);

    const double h = 1e-6;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            SymMatrix<double> plus = sigma;
            SymMatrix<double> minus = sigma;
            plus.set(i, j, sigma.at(i, j) + h);
            minus.set(i, j, sigma.at(i, j) - h);
            const double fd = (f(plus) - f(minus)) / (2 * h);
            // a symmetric off-diagonal perturbation moves both (i,j) and (j,i)
            const double analytic = (i == j) ? sigma_bar.at(i, i) : 2.0 * sigma_bar.at(i, j);
            CHECK(analytic == doctest::Approx(fd).epsilon(1e-6));
        }
}
