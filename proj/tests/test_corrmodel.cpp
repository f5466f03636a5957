#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "corrnoise/corrmodel.hpp"
#include "corrnoise/linalg.hpp"
#include "testutil.hpp"

using namespace corrnoise;
using namespace corrnoise::corrmodel;

TEST_CASE("spatial distance is scaled euclidean") {
    CHECK(spatial_distance({0, 0}, {0, 0}, 1.0) == 0.0);
    CHECK(spatial_distance({0, 0}, {3, 4}, 1.0) == 5.0);
    CHECK(spatial_distance({0, 0}, {3, 4}, 2.0) == 10.0);
    CHECK(spatial_distance({3, 4}, {0, 0}, 1.0) == 5.0);
}

TEST_CASE("tuning similarity is normalized correlation of kernel weights") {
    const std::vector<double> a = {1, 0, 0};
    const std::vector<double> b = {0, 1, 0};
    const std::vector<double> a2 = {2, 0, 0};
    const std::vector<double> na = {-3, 0, 0};
    CHECK(tuning_similarity<double>(a, a) == doctest::Approx(1.0));
    CHECK(tuning_similarity<double>(a, a2) == doctest::Approx(1.0));
    CHECK(tuning_similarity<double>(a, na) == doctest::Approx(-1.0));
    CHECK(tuning_similarity<double>(a, b) == doctest::Approx(0.0));

    const std::vector<double> zero = {0, 0, 0};
    try {
        tuning_similarity<double>(a, zero);
        FAIL("expected ZeroNormKernel");
    } catch (const ZeroNormKernel& e) {
        CHECK(e.index == 1);
    }
    CHECK_THROWS_AS(tuning_similarity<double>(a, std::vector<double>{1, 2}), ShapeMismatch);
}

TEST_CASE("pairwise correlation hand values") {
    const CorrelationParams p;
    CHECK(pairwise_correlation(0.0, 1.0, p) == doctest::Approx(0.315).epsilon(1e-12));
    CHECK(pairwise_correlation(1.0, 1.0, p) == doctest::Approx(0.3107).epsilon(1e-12));
    CHECK(pairwise_correlation(0.0, -1.0, p) == doctest::Approx(0.1672140693295009).epsilon(1e-9));
    // hinge closes at d = a/b
    CHECK(pairwise_correlation(52.33, 1.0, p) == doctest::Approx(0.09).epsilon(1e-12));
    CHECK(pairwise_correlation(1000.0, -0.5, p) == doctest::Approx(0.09).epsilon(1e-12));
}

TEST_CASE("parameter and geometry validation") {
    CorrelationParams p;
    p.a = 0.95;
    p.c = 0.09;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.tau = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.b = -1.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.distance_scale = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);

    LayerGeometry g{0, 4, 2};
    CHECK_THROWS_AS(g.validate(), ConfigError);
}

TEST_CASE("dense matrix entries follow the entrywise formula in canonical order") {
    const LayerGeometry geom{3, 2, 2};
    const CorrelationParams params;
    RandomStream stream(17);
    const Tensor<double> kernels = testutil::random_unit_kernels<double>(2, 5, stream);
    const auto cm = build_correlation_matrix(geom, kernels, params);

    REQUIRE(!cm.structured);
    REQUIRE(cm.dim() == 12);
    const std::size_t wh = 6;

    for (std::size_t n = 0; n < cm.dim(); ++n) CHECK(cm.sigma.at(n, n) == 1.0);

    const double t01 = tuning_similarity<double>(kernels.slice0(0), kernels.slice0(1));
    // neuron n = f*wh + y*w + x
    // same map, (0,0) vs (1,0): distance 1
    CHECK(cm.sigma.at(0, 1) == doctest::Approx(pairwise_correlation(1.0, 1.0, params)));
    // same map, (0,0) vs (0,1): also distance 1 via the y step
    CHECK(cm.sigma.at(0, 3) == doctest::Approx(pairwise_correlation(1.0, 1.0, params)));
    // same map, (0,0) vs (2,1): distance sqrt(5)
    CHECK(cm.sigma.at(0, 5) ==
          doctest::Approx(pairwise_correlation(std::sqrt(5.0), 1.0, params)));
    // across maps at the same position: distance 0, tuning t01
    CHECK(cm.sigma.at(0, wh) == doctest::Approx(pairwise_correlation(0.0, t01, params)));
    // across maps, (1,0) vs (0,0): distance 1, tuning t01
    CHECK(cm.sigma.at(1, wh) == doctest::Approx(pairwise_correlation(1.0, t01, params)));
}

TEST_CASE("dense matrix is positive definite with default parameters") {
    const LayerGeometry geom{4, 4, 3};
    RandomStream stream(18);
    const Tensor<double> kernels = testutil::random_unit_kernels<double>(3, 9, stream);
    const auto cm = build_correlation_matrix(geom, kernels, CorrelationParams{});
    CHECK(!cm.repaired);
    CHECK(cm.factor.extent(0) == 48);
    const auto eig = linalg::sym_eigen(cm.sigma);
    CHECK(eig.values.front() > 0.0);
}

TEST_CASE("identical kernels give unit tuning everywhere") {
    const LayerGeometry geom{2, 2, 3};
    Tensor<double> kernels({3, 4});
    for (std::size_t f = 0; f < 3; ++f)
        for (std::size_t t = 0; t < 4; ++t) kernels(f, t) = (t == 0) ? 2.0 : 1.0;
    const auto tuning = compute_tuning_factor(kernels, CorrelationParams{});
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(tuning(i, j) == doctest::Approx(1.0));

    const auto cm = build_correlation_matrix(geom, kernels, CorrelationParams{});
    // with tuning == 1 the cross-map block at equal positions matches the
    // same-map diagonal band
    CHECK(cm.sigma.at(0, 4) == doctest::Approx(0.315));
}

TEST_CASE("kernel shape and dimension guards") {
    const LayerGeometry geom{8, 8, 4};
    RandomStream stream(19);
    const Tensor<double> kernels = testutil::random_unit_kernels<double>(4, 9, stream);

    BuildOptions opts;
    opts.max_dense_dim = 100;
    try {
        build_correlation_matrix(geom, kernels, CorrelationParams{}, opts);
        FAIL("expected DimensionTooLarge");
    } catch (const DimensionTooLarge& e) {
        CHECK(e.dim == 256);
        CHECK(e.limit == 100);
    }

    const Tensor<double> wrong = testutil::random_unit_kernels<double>(3, 9, stream);
    CHECK_THROWS_AS(build_correlation_matrix(geom, wrong, CorrelationParams{}), ShapeMismatch);
}

TEST_CASE("structured mode requires c = 0 and stores factors") {
    const LayerGeometry geom{2, 2, 2};
    RandomStream stream(20);
    const Tensor<double> kernels = testutil::random_unit_kernels<double>(2, 5, stream);

    BuildOptions opts;
    opts.structured = true;
    CHECK_THROWS_AS(build_correlation_matrix(geom, kernels, CorrelationParams{}, opts),
                    ConfigError);

    CorrelationParams params;
    params.c = 0.0;
    const auto cm = build_correlation_matrix(geom, kernels, params, opts);
    CHECK(cm.structured);
    CHECK(cm.diag_boost == doctest::Approx(1.0 - params.a));
    CHECK(cm.tuning_chol.shape() == Shape{2, 2});
    CHECK(cm.spatial_chol.shape() == Shape{4, 4});
    CHECK(cm.sigma.dim() == 0);
}

TEST_CASE("structured sampling realizes the dense covariance") {
    const LayerGeometry geom{2, 2, 2};
    RandomStream kstream(22);
    const Tensor<double> kernels = testutil::random_unit_kernels<double>(2, 5, kstream);
    CorrelationParams params;
    params.c = 0.0;

    BuildOptions sopts;
    sopts.structured = true;
    const auto structured = build_correlation_matrix(geom, kernels, params, sopts);
    const auto dense = build_correlation_matrix(geom, kernels, params);
    REQUIRE(!dense.repaired);

    const std::size_t d = geom.dim();
    const std::size_t n = 200000;
    RandomStream stream(23);
    std::vector<double> z(d);
    std::vector<double> mean(d, 0.0);
    Tensor<double> second({d, d});
    for (std::size_t it = 0; it < n; ++it) {
        sample_structured(structured, stream, std::span<double>(z));
        for (std::size_t i = 0; i < d; ++i) {
            mean[i] += z[i];
            for (std::size_t j = 0; j <= i; ++j) second(i, j) += z[i] * z[j];
        }
    }
    for (std::size_t i = 0; i < d; ++i) mean[i] /= static_cast<double>(n);
    for (std::size_t i = 0; i < d; ++i) {
        CHECK(std::abs(mean[i]) < 0.01);
        for (std::size_t j = 0; j <= i; ++j) {
            const double cov = second(i, j) / static_cast<double>(n) - mean[i] * mean[j];
            CHECK(std::abs(cov - dense.sigma.at(i, j)) < 0.03);
        }
    }

    RandomStream a(24), b(24);
    std::vector<double> za(d), zb(d);
    sample_structured(structured, a, std::span<double>(za));
    sample_structured(structured, b, std::span<double>(zb));
    CHECK(za == zb);

    CHECK_THROWS_AS(sample_structured(dense, stream, std::span<double>(z)), Error);
}

TEST_CASE("weight pullback matches finite differences of the assembled matrix") {
    const LayerGeometry geom{2, 2, 3};
    const CorrelationParams params;
    RandomStream stream(25);
    Tensor<double> kernels = testutil::random_unit_kernels<double>(3, 4, stream);

    const std::size_t d = geom.dim();
    SymMatrix<double> v(d);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j <= i; ++j) v.set(i, j, stream.normal());

    const auto f = [&](const Tensor<double>& w) {
        const auto cm = build_correlation_matrix(geom, w, params);
        double acc = 0;
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) acc += v.at(i, j) * cm.sigma.at(i, j);
        return acc;
    };

    const auto cm = build_correlation_matrix(geom, kernels, params);
    REQUIRE(!cm.repaired);
    const Tensor<double> grad = correlation_weight_pullback(v, cm, kernels, params);
    REQUIRE(grad.shape() == kernels.shape());

    const double h = 1e-6;
    for (std::size_t fidx = 0; fidx < 3; ++fidx)
        for (std::size_t t = 0; t < 4; ++t) {
            Tensor<double> wp = kernels;
            Tensor<double> wm = kernels;
            wp(fidx, t) += h;
            wm(fidx, t) -= h;
            const double fd = (f(wp) - f(wm)) / (2 * h);
            CHECK(grad(fidx, t) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
        }
}
