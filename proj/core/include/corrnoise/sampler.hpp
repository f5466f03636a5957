#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <vector>

#include "corrnoise/blas.hpp"
#include "corrnoise/errors.hpp"
#include "corrnoise/random.hpp"
#include "corrnoise/tensor.hpp"

namespace corrnoise::sampler {

template <typename T>
std::vector<T> sample_std_normal(RandomStream& stream, std::size_t n) {
    std::vector<T> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<T>(stream.normal());
    return x;
}

// z = diag(sigma) * (mu + L * x). Null factor means identity correlation;
// empty mu/sigma mean zeros/ones.
template <typename T>
struct GaussianSampleSpec {
    std::vector<T> mu;
    std::vector<T> sigma;
    const Tensor<T>* factor = nullptr;

    std::size_t dim() const {
        if (factor != nullptr) return factor->extent(0);
        if (!sigma.empty()) return sigma.size();
        return mu.size();
    }

    void validate() const {
        const std::size_t n = dim();
        if (n == 0) throw Error("gaussian sample spec is empty");
        if (factor != nullptr && (factor->rank() != 2 || factor->extent(1) != n))
            throw ShapeMismatch(shape_str({n, n}), shape_str(factor->shape()));
        if (!mu.empty() && mu.size() != n)
            throw ShapeMismatch(shape_str({n}), shape_str({mu.size()}));
        if (!sigma.empty() && sigma.size() != n)
            throw ShapeMismatch(shape_str({n}), shape_str({sigma.size()}));
        for (const T s : sigma)
            if (s < T(0)) throw Error("gaussian sample spec has negative sigma");
    }
};

template <typename T>
std::vector<T> sample_correlated_gaussian(const GaussianSampleSpec<T>& spec,
                                          RandomStream& stream) {
    spec.validate();
    const std::size_t n = spec.dim();
    std::vector<T> x = sample_std_normal<T>(stream, n);
    std::vector<T> z(n);
    if (spec.factor != nullptr) {
        blas::gemv(n, n, spec.factor->data().data(), n, x.data(), z.data());
    } else {
        z = x;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const T mu = spec.mu.empty() ? T(0) : spec.mu[i];
        const T sg = spec.sigma.empty() ? T(1) : spec.sigma[i];
        z[i] = sg * (mu + z[i]);
    }
    return z;
}

// Batched draw as one GEMM: rows of X are i.i.d. standard normal, Z = X L^T,
// then the same diag(sigma)(mu + .) map per row.
template <typename T>
Tensor<T> sample_correlated_gaussian_batch(const GaussianSampleSpec<T>& spec,
                                           RandomStream& stream, std::size_t batch) {
    spec.validate();
    const std::size_t n = spec.dim();
    Tensor<T> x({batch, n});
    T* xp = x.data().data();
    for (std::size_t i = 0; i < batch * n; ++i) xp[i] = static_cast<T>(stream.normal());

    Tensor<T> z({batch, n});
    if (spec.factor != nullptr) {
        blas::gemm(false, true, batch, n, n, T(1), xp, n, spec.factor->data().data(), n, T(0),
                   z.data().data(), n);
    } else {
        z = x;
    }
    T* zp = z.data().data();
    for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t i = 0; i < n; ++i) {
            const T mu = spec.mu.empty() ? T(0) : spec.mu[i];
            const T sg = spec.sigma.empty() ? T(1) : spec.sigma[i];
            zp[b * n + i] = sg * (mu + zp[b * n + i]);
        }
    }
    return z;
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Per-lambda CDF prefixes, extended on demand and reused across quantile
// calls within the cache's lifetime. Terms come from the multiplicative
// recurrence; above lambda 50 the recurrence runs in log space.
class PoissonQuantileCache {
public:
    std::int64_t quantile(double u, double lambda) {
        if (lambda < 0.0) throw NegativeRate(lambda);
        if (lambda == 0.0) return 0;

        Series& s = series_.try_emplace(lambda, Series(lambda)).first->second;
        const double cap = lambda + 20.0 * std::sqrt(lambda) + 20.0;
        while (s.cdf.back() < u) {
            if (static_cast<double>(s.cdf.size()) > cap) throw CapExceeded(lambda, u);
            s.extend();
        }
        std::size_t k = 0;
        while (s.cdf[k] < u) ++k;
        return static_cast<std::int64_t>(k);
    }

private:
    struct Series {
        explicit Series(double l) : lambda(l), log_space(l > 50.0) {
            if (log_space) {
                log_term = -lambda;
                cdf.push_back(std::exp(log_term));
            } else {
                term = std::exp(-lambda);
                cdf.push_back(term);
            }
        }

        void extend() {
            const double k = static_cast<double>(cdf.size());
            if (log_space) {
                log_term += std::log(lambda) - std::log(k);
                cdf.push_back(cdf.back() + std::exp(log_term));
            } else {
                term *= lambda / k;
                cdf.push_back(cdf.back() + term);
            }
        }

        double lambda;
        bool log_space;
        double term = 0.0;
        double log_term = 0.0;
        std::vector<double> cdf;
    };

    std::map<double, Series> series_;
};

inline std::int64_t poisson_quantile(double u, double lambda) {
    PoissonQuantileCache cache;
    return cache.quantile(u, lambda);
}

// Gaussian-copula Poisson draw: x = L * standard normals, y = Phi(x),
// z_i = PoissonQuantile(y_i; lambda_i). Realized correlations land below the
// Gaussian target; the copula mean is fixed at zero.
template <typename T>
std::vector<std::int64_t> sample_correlated_poisson(const std::vector<T>& lambda,
                                                    const Tensor<T>* factor, RandomStream& stream,
                                                    PoissonQuantileCache& cache) {
    const std::size_t n = lambda.size();
    for (const T l : lambda)
        if (l < T(0)) throw NegativeRate(static_cast<double>(l));
    if (factor != nullptr && (factor->rank() != 2 || factor->extent(0) != n ||
                              factor->extent(1) != n))
        throw ShapeMismatch(shape_str({n, n}), shape_str(factor->shape()));

    std::vector<T> x = sample_std_normal<T>(stream, n);
    std::vector<T> g(n);
    if (factor != nullptr) {
        blas::gemv(n, n, factor->data().data(), n, x.data(), g.data());
    } else {
        g = x;
    }
    std::vector<std::int64_t> z(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (lambda[i] == T(0)) {
            z[i] = 0;
            continue;
        }
        z[i] = cache.quantile(std_normal_cdf(static_cast<double>(g[i])),
                              static_cast<double>(lambda[i]));
    }
    return z;
}

template <typename T>
std::vector<std::int64_t> sample_correlated_poisson(const std::vector<T>& lambda,
                                                    const Tensor<T>* factor,
                                                    RandomStream& stream) {
    PoissonQuantileCache cache;
    return sample_correlated_poisson(lambda, factor, stream, cache);
}

}  // namespace corrnoise::sampler
