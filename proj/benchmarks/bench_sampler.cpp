#include <benchmark/benchmark.h>

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "corrnoise/corrmodel.hpp"
#include "corrnoise/random.hpp"
#include "corrnoise/sampler.hpp"
#include "corrnoise/tensor.hpp"

using namespace corrnoise;

namespace {

Tensor<double> unit_kernels(std::size_t maps, std::size_t len, std::uint64_t seed) {
    RandomStream stream(seed);
    Tensor<double> k({maps, len});
    for (std::size_t f = 0; f < maps; ++f) {
        double norm2 = 0;
        for (std::size_t i = 0; i < len; ++i) {
            k(f, i) = stream.normal();
            norm2 += k(f, i) * k(f, i);
        }
        const double inv = 1.0 / std::sqrt(norm2);
        for (std::size_t i = 0; i < len; ++i) k(f, i) *= inv;
    }
    return k;
}

}  // namespace

static void BM_PhiloxNormal(benchmark::State& state) {
    RandomStream stream(1);
    double acc = 0;
    for (auto _ : state) {
        for (int i = 0; i < 1024; ++i) acc += stream.normal();
        benchmark::DoNotOptimize(acc);
    }
    state.SetItemsProcessed(state.iterations() * 1024);
}
BENCHMARK(BM_PhiloxNormal);

// Dense draw through the cached Cholesky factor, batch of 16.
static void BM_GaussianDense(benchmark::State& state) {
    const auto side = static_cast<std::size_t>(state.range(0));
    const corrmodel::LayerGeometry geom{side, side, 8};
    const auto cm = corrmodel::build_correlation_matrix(geom, unit_kernels(8, 27, 3), {});
    sampler::GaussianSampleSpec<double> spec;
    spec.mu.assign(geom.dim(), 0.0);
    spec.sigma.assign(geom.dim(), 1.0);
    spec.factor = &cm.factor;
    RandomStream stream(2);
    for (auto _ : state)
        benchmark::DoNotOptimize(sampler::sample_correlated_gaussian_batch(spec, stream, 16));
    state.SetLabel("dim " + std::to_string(geom.dim()));
}
BENCHMARK(BM_GaussianDense)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

// Kronecker-factor draw at the same sizes, plus one dense mode cannot reach.
static void BM_GaussianStructured(benchmark::State& state) {
    const auto side = static_cast<std::size_t>(state.range(0));
    const corrmodel::LayerGeometry geom{side, side, 8};
    corrmodel::CorrelationParams params;
    params.c = 0.0;
    corrmodel::BuildOptions opts;
    opts.structured = true;
    const auto cm =
        corrmodel::build_correlation_matrix(geom, unit_kernels(8, 27, 3), params, opts);
    std::vector<double> out(geom.dim());
    RandomStream stream(2);
    for (auto _ : state) {
        for (int r = 0; r < 16; ++r) corrmodel::sample_structured(cm, stream, std::span(out));
        benchmark::DoNotOptimize(out.data());
    }
    state.SetLabel("dim " + std::to_string(geom.dim()));
}
BENCHMARK(BM_GaussianStructured)->Arg(4)->Arg(8)->Arg(32)->Unit(benchmark::kMicrosecond);

static void BM_PoissonDraw(benchmark::State& state) {
    const auto side = static_cast<std::size_t>(state.range(0));
    const corrmodel::LayerGeometry geom{side, side, 8};
    const auto cm = corrmodel::build_correlation_matrix(geom, unit_kernels(8, 27, 3), {});
    const std::vector<double> lambda(geom.dim(), 4.0);
    RandomStream stream(5);
    sampler::PoissonQuantileCache cache;
    for (auto _ : state)
        benchmark::DoNotOptimize(
            sampler::sample_correlated_poisson(lambda, &cm.factor, stream, cache));
    state.SetLabel("dim " + std::to_string(geom.dim()));
}
BENCHMARK(BM_PoissonDraw)->Arg(4)->Arg(8)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
