#include <benchmark/benchmark.h>

#include <cmath>
#include <cstddef>

#include "corrnoise/corrmodel.hpp"
#include "corrnoise/random.hpp"
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

static void BM_PairwiseCorrelation(benchmark::State& state) {
    const corrmodel::CorrelationParams p;
    double acc = 0;
    for (auto _ : state) {
        for (int d = 0; d < 61; ++d)
            for (int k = 0; k <= 20; ++k)
                acc += corrmodel::pairwise_correlation(d, -1.0 + 0.1 * k, p);
        benchmark::DoNotOptimize(acc);
    }
}
BENCHMARK(BM_PairwiseCorrelation);

static void BM_BuildDense(benchmark::State& state) {
    const auto side = static_cast<std::size_t>(state.range(0));
    const corrmodel::LayerGeometry geom{side, side, 8};
    const Tensor<double> kernels = unit_kernels(8, 27, 11);
    for (auto _ : state)
        benchmark::DoNotOptimize(corrmodel::build_correlation_matrix(geom, kernels, {}));
    state.SetLabel("dim " + std::to_string(geom.dim()));
}
BENCHMARK(BM_BuildDense)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

static void BM_BuildStructured(benchmark::State& state) {
    const auto side = static_cast<std::size_t>(state.range(0));
    const corrmodel::LayerGeometry geom{side, side, 8};
    const Tensor<double> kernels = unit_kernels(8, 27, 11);
    corrmodel::CorrelationParams params;
    params.c = 0.0;
    corrmodel::BuildOptions opts;
    opts.structured = true;
    for (auto _ : state)
        benchmark::DoNotOptimize(corrmodel::build_correlation_matrix(geom, kernels, params, opts));
    state.SetLabel("dim " + std::to_string(geom.dim()));
}
BENCHMARK(BM_BuildStructured)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
