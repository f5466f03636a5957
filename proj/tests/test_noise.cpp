#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "corrnoise/noise.hpp"
#include "testutil.hpp"

using namespace corrnoise;
using namespace corrnoise::noise;

namespace {

corrmodel::CorrelationMatrix<double> toy_matrix(bool structured = false) {
    const corrmodel::LayerGeometry geom{2, 2, 2};
    RandomStream stream(31);
    const Tensor<double> kernels = testutil::random_unit_kernels<double>(2, 5, stream);
    corrmodel::CorrelationParams params;
    if (structured) params.c = 0.0;
    corrmodel::BuildOptions opts;
    opts.structured = structured;
    return corrmodel::build_correlation_matrix(geom, kernels, params, opts);
}

}  // namespace

TEST_CASE("noise kind names round-trip") {
    for (const NoiseKind k : {NoiseKind::None, NoiseKind::IG_A, NoiseKind::IG_B, NoiseKind::CG,
                              NoiseKind::IP, NoiseKind::CP})
        CHECK(kind_from_string(to_string(k)) == k);
    CHECK(to_string(NoiseKind::IG_A) == "ig_a");
    CHECK_THROWS_AS(kind_from_string("gaussian"), ConfigError);

    CHECK(is_correlated(NoiseKind::CG));
    CHECK(is_correlated(NoiseKind::CP));
    CHECK(!is_correlated(NoiseKind::IG_A));
    CHECK(!is_correlated(NoiseKind::None));
}

TEST_CASE("noise spec validation") {
    NoiseModelSpec spec;
    spec.kind = NoiseKind::IG_A;
    spec.sigma = 0.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);

    spec = {};
    spec.kind = NoiseKind::IG_B;
    spec.epsilon = -1.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);

    spec = {};
    spec.kind = NoiseKind::CG;
    spec.corr_refresh_steps = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);

    spec = {};
    spec.kind = NoiseKind::CP;
    spec.corr_params.tau = 0.0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);

    spec = {};
    spec.kind = NoiseKind::CG;
    CHECK_NOTHROW(spec.validate());
}

TEST_CASE("ig_a adds sigma-scaled normals from the stream") {
    std::vector<double> a = {1.0, -2.0, 0.5, 3.0};
    const std::vector<double> orig = a;
    RandomStream s(40);
    ig_a_forward(std::span<double>(a), 0.7, s);

    RandomStream r(40);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == orig[i] + 0.7 * r.normal());
}

TEST_CASE("ig_b scales noise by the square root of the rate") {
    const double eps = 1e-4;
    std::vector<double> a = {0.0, 0.25, 1.0, 4.0};
    const std::vector<double> orig = a;
    std::vector<double> saved_a, saved_x;
    RandomStream s(41);
    ig_b_forward(std::span<double>(a), eps, s, saved_a, saved_x);

    CHECK(saved_a == orig);
    RandomStream r(41);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = r.normal();
        CHECK(saved_x[i] == x);
        CHECK(a[i] == orig[i] + std::sqrt(orig[i] + eps) * x);
    }

    std::vector<double> neg = {-0.5};
    RandomStream t(42);
    CHECK_THROWS_AS(ig_b_forward(std::span<double>(neg), eps, t, saved_a, saved_x), NegativeRate);
}

TEST_CASE("ig_b backward is the reparameterized derivative") {
    const double eps = 1e-4;
    const std::vector<double> saved_a = {0.0, 0.25, 1.0, 4.0};
    const std::vector<double> saved_x = {0.3, -1.2, 0.8, 2.0};
    std::vector<double> g = {1.0, 1.0, 1.0, 1.0};
    ig_b_backward(std::span<double>(g), std::span<const double>(saved_a), std::span<const double>(saved_x), eps);

    const double h = 1e-7;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto fwd = [&](double av) { return av + std::sqrt(av + eps) * saved_x[i]; };
        const double fd = (fwd(saved_a[i] + h) - fwd(saved_a[i] - h)) / (2 * h);
        CHECK(g[i] == doctest::Approx(fd).epsilon(1e-4));
    }

    std::vector<double> wrong = {1.0};
    CHECK_THROWS_AS(ig_b_backward(std::span<double>(wrong), std::span<const double>(saved_a), std::span<const double>(saved_x), eps),
                    ShapeMismatch);
}

TEST_CASE("cg adds a factor-correlated draw and can save the raw normals") {
    const auto cm = toy_matrix();
    const std::size_t d = cm.dim();
    std::vector<double> a(d, 1.0);
    std::vector<double> saved_x;
    RandomStream s(43);
    cg_forward(std::span<double>(a), cm, s, &saved_x);

    RandomStream r(43);
    const std::vector<double> x = sampler::sample_std_normal<double>(r, d);
    CHECK(saved_x == x);
    std::vector<double> z(d);
    blas::gemv(d, d, cm.factor.data().data(), d, x.data(), z.data());
    for (std::size_t i = 0; i < d; ++i) CHECK(a[i] == 1.0 + z[i]);

    std::vector<double> wrong(d + 1, 0.0);
    CHECK_THROWS_AS(cg_forward(std::span<double>(wrong), cm, s), ShapeMismatch);
}

TEST_CASE("structured cg refuses the weight path but samples fine without it") {
    const auto cm = toy_matrix(true);
    const std::size_t d = cm.dim();
    std::vector<double> a(d, 0.0);
    std::vector<double> saved_x;
    RandomStream s(44);
    CHECK_THROWS_AS(cg_forward(std::span<double>(a), cm, s, &saved_x), Error);

    std::vector<double> b1(d, 0.0), b2(d, 0.0);
    RandomStream s1(45), s2(45);
    cg_forward(std::span<double>(b1), cm, s1);
    cg_forward(std::span<double>(b2), cm, s2);
    CHECK(b1 == b2);
}

TEST_CASE("cg weight gradient matches finite differences through sampling") {
    const corrmodel::LayerGeometry geom{2, 1, 2};
    RandomStream kstream(46);
    Tensor<double> kernels = testutil::random_unit_kernels<double>(2, 3, kstream);
    const corrmodel::CorrelationParams params;

    const auto build = [&](const Tensor<double>& w) {
        return corrmodel::build_correlation_matrix(geom, w, params);
    };

    // f(W) = sum_i g_i * (a + L(W) x)_i with frozen x and upstream weights g
    RandomStream gstream(47);
    const std::size_t d = geom.dim();
    std::vector<double> g(d), x(d);
    for (auto& v : g) v = gstream.normal();
    for (auto& v : x) v = gstream.normal();

    const auto f = [&](const Tensor<double>& w) {
        const auto cm = build(w);
        std::vector<double> z(d);
        blas::gemv(d, d, cm.factor.data().data(), d, x.data(), z.data());
        double acc = 0;
        for (std::size_t i = 0; i < d; ++i) acc += g[i] * z[i];
        return acc;
    };

    const auto cm = build(kernels);
    REQUIRE(!cm.repaired);
    const Tensor<double> grad =
        cg_weight_gradient(std::span<const double>(g), std::span<const double>(x), cm, kernels);

    const double h = 1e-6;
    for (std::size_t fi = 0; fi < kernels.extent(0); ++fi)
        for (std::size_t t = 0; t < kernels.extent(1); ++t) {
            Tensor<double> wp = kernels;
            Tensor<double> wm = kernels;
            wp(fi, t) += h;
            wm(fi, t) -= h;
            const double fd = (f(wp) - f(wm)) / (2 * h);
            CHECK(grad(fi, t) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
        }
}

TEST_CASE("ip draws poisson variates elementwise") {
    std::vector<double> a = {0.0, 2.0, 5.0, 0.5};
    RandomStream s(48);
    ip_forward(std::span<double>(a), s);
    CHECK(a[0] == 0.0);
    for (const double v : a) {
        CHECK(v >= 0.0);
        CHECK(v == std::floor(v));
    }

    RandomStream r(48);
    std::vector<double> b = {0.0, 2.0, 5.0, 0.5};
    sampler::PoissonQuantileCache cache;
    for (auto& v : b) {
        if (v == 0.0) continue;
        v = static_cast<double>(cache.quantile(r.uniform01(), v));
    }
    CHECK(a == b);

    std::vector<double> neg = {-1.0};
    CHECK_THROWS_AS(ip_forward(std::span<double>(neg), s), NegativeRate);
}

TEST_CASE("cp draws copula-correlated poisson variates") {
    const auto cm = toy_matrix();
    const std::size_t d = cm.dim();
    std::vector<double> a(d, 6.0);
    a[0] = 0.0;
    RandomStream s(49);
    cp_forward(std::span<double>(a), cm, s);
    CHECK(a[0] == 0.0);
    for (const double v : a) CHECK(v == std::floor(v));

    RandomStream r(49);
    const std::vector<double> x = sampler::sample_std_normal<double>(r, d);
    std::vector<double> gauss(d);
    blas::gemv(d, d, cm.factor.data().data(), d, x.data(), gauss.data());
    sampler::PoissonQuantileCache cache;
    for (std::size_t i = 1; i < d; ++i) {
        const double u = sampler::std_normal_cdf(gauss[i]);
        CHECK(a[i] == static_cast<double>(cache.quantile(u, 6.0)));
    }

    std::vector<double> neg(d, 1.0);
    neg[2] = -0.1;
    CHECK_THROWS_AS(cp_forward(std::span<double>(neg), cm, s), NegativeRate);
}

TEST_CASE("straight-through and eval paths leave buffers untouched") {
    std::vector<double> g = {0.1, -0.2, 0.33, 4.0};
    const std::vector<double> orig = g;
    straight_through_backward(std::span<double>(g));
    CHECK(g == orig);

    NoiseModelSpec spec;
    spec.kind = NoiseKind::CG;
    eval_forward(std::span<double>(g), spec);
    CHECK(g == orig);
}

TEST_CASE("layer state refreshes on the configured cadence") {
    NoiseModelSpec spec;
    spec.kind = NoiseKind::CG;
    spec.corr_refresh_steps = 100;

    NoiseLayerState<double> state;
    state.geometry = {2, 2, 2};
    CHECK(state.needs_refresh(0, spec));

    RandomStream stream(50);
    const Tensor<double> kernels = testutil::random_unit_kernels<double>(2, 5, stream);
    state.refresh(kernels, spec, 0);
    CHECK(state.has_corr);
    CHECK(state.corr.source_step == 0);
    CHECK(!state.needs_refresh(50, spec));
    CHECK(!state.needs_refresh(99, spec));
    CHECK(state.needs_refresh(100, spec));

    state.refresh(kernels, spec, 100);
    CHECK(state.corr.source_step == 100);
    CHECK(!state.needs_refresh(150, spec));
}
