#include <benchmark/benchmark.h>

#include <cstddef>

#include "corrnoise/linalg.hpp"
#include "corrnoise/random.hpp"
#include "corrnoise/sym_matrix.hpp"
#include "corrnoise/tensor.hpp"

using namespace corrnoise;

namespace {

// Diagonally dominant, so always well inside the PD cone.
SymMatrix<double> random_spd(std::size_t n, std::uint64_t seed) {
    RandomStream stream(seed);
    SymMatrix<double> m(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j)
            m.set(i, j, 0.5 * stream.uniform01() / static_cast<double>(n));
        m.set(i, i, 1.0);
    }
    return m;
}

}  // namespace

static void BM_Cholesky(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const SymMatrix<double> m = random_spd(n, 42);
    for (auto _ : state) benchmark::DoNotOptimize(linalg::cholesky(m));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Cholesky)->Arg(64)->Arg(256)->Arg(1024)->Complexity(benchmark::oNCubed);

static void BM_NearestPsd(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    // Indefinite input: strong off-diagonal mass forces eigenvalue clipping.
    RandomStream stream(7);
    SymMatrix<double> m(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < i; ++j) m.set(i, j, 2.0 * stream.uniform01() - 1.0);
        m.set(i, i, 1.0);
    }
    for (auto _ : state) benchmark::DoNotOptimize(linalg::nearest_psd(m));
}
BENCHMARK(BM_NearestPsd)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_CholeskyPullback(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const SymMatrix<double> m = random_spd(n, 43);
    const Tensor<double> l = linalg::cholesky(m);
    RandomStream stream(44);
    Tensor<double> lbar({n, n});
    for (double& v : lbar.data()) v = stream.normal();
    for (auto _ : state) benchmark::DoNotOptimize(linalg::cholesky_pullback(l, lbar));
}
BENCHMARK(BM_CholeskyPullback)->Arg(64)->Arg(256);

BENCHMARK_MAIN();
