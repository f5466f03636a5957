#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "corrnoise/sym_matrix.hpp"
#include "corrnoise/tensor.hpp"

using namespace corrnoise;

TEST_CASE("shape helpers") {
    CHECK(shape_str({2, 3, 4}) == "(2,3,4)");
    CHECK(shape_str({}) == "()");
    CHECK(shape_numel({2, 3, 4}) == 24);
    CHECK(shape_numel({}) == 1);
}

TEST_CASE("construction and indexing") {
    Tensor<double> t({2, 3}, 1.5);
    CHECK(t.rank() == 2);
    CHECK(t.size() == 6);
    CHECK(t(1, 2) == 1.5);

    t(0, 1) = 7.0;
    CHECK(t[1] == 7.0);
    CHECK(t.flat_index({1, 2}) == 5);

    Tensor<int> u({2, 2}, {1, 2, 3, 4});
    CHECK(u(1, 0) == 3);
    CHECK_THROWS_AS(Tensor<int>({2, 2}, {1, 2, 3}), ShapeMismatch);
}

TEST_CASE("slice0 views rows contiguously") {
    Tensor<int> t({3, 4});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<int>(i);
    auto row = t.slice0(2);
    CHECK(row.size() == 4);
    CHECK(row[0] == 8);
    row[3] = -1;
    CHECK(t(2, 3) == -1);
}

TEST_CASE("reshape preserves data and checks element count") {
    Tensor<int> t({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor<int> r = t.reshaped({3, 2});
    CHECK(r(2, 1) == 6);
    CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeMismatch);
}

TEST_CASE("cast converts element type") {
    Tensor<float> t({2}, {1.5f, -2.25f});
    Tensor<double> d = t.cast<double>();
    CHECK(d[0] == 1.5);
    CHECK(d[1] == -2.25);
    CHECK(d.cast<int>()[1] == -2);
}

TEST_CASE("elementwise helpers enforce shapes") {
    Tensor<double> a({2}, {1, 2});
    Tensor<double> b({2}, {10, 20});
    CHECK(add(a, b)[1] == 22);
    CHECK(mul(a, b)[1] == 40);
    CHECK(scale(a, 3.0)[0] == 3);
    Tensor<double> c({3});
    CHECK_THROWS_AS(add(a, c), ShapeMismatch);
}

TEST_CASE("identity matrix") {
    auto eye = identity_matrix<double>(3);
    CHECK(eye(1, 1) == 1.0);
    CHECK(eye(1, 2) == 0.0);
}

TEST_CASE("sym matrix symmetrizes on construction") {
    Tensor<double> m({2, 2}, {1.0, 0.4, 0.2, 1.0});
    SymMatrix<double> s(m);
    CHECK(s.at(0, 1) == doctest::Approx(0.3));
    CHECK(s.at(0, 1) == s.at(1, 0));

    Tensor<double> rect({2, 3});
    CHECK_THROWS_AS((void)SymMatrix<double>(rect), ShapeMismatch);
}

TEST_CASE("sym matrix set keeps both triangles in sync") {
    SymMatrix<double> s(3);
    s.set(0, 2, 0.9);
    CHECK(s.at(2, 0) == 0.9);
    CHECK(SymMatrix<double>::identity(3).trace() == 3.0);
    CHECK(s.max_abs() == 0.9);
}

TEST_CASE("error types carry their context") {
    try {
        throw NotPositiveDefinite(5);
    } catch (const NotPositiveDefinite& e) {
        CHECK(e.pivot == 5);
        CHECK(std::string(e.what()).find("5") != std::string::npos);
    }
    try {
        throw TruncatedFile("x.bin", 100, 60);
    } catch (const TruncatedFile& e) {
        CHECK(std::string(e.what()).find("x.bin") != std::string::npos);
    }
    try {
        throw CapExceeded(3.0, 0.999);
    } catch (const CapExceeded& e) {
        CHECK(e.lambda == 3.0);
        CHECK(e.u == 0.999);
    }
    CHECK_THROWS_AS(throw DimensionTooLarge(9000, 8192), Error);
}
