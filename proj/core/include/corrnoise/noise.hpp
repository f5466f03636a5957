#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "corrnoise/corrmodel.hpp"
#include "corrnoise/errors.hpp"
#include "corrnoise/random.hpp"
#include "corrnoise/sampler.hpp"
#include "corrnoise/tensor.hpp"

namespace corrnoise::noise {

enum class NoiseKind { None, IG_A, IG_B, CG, IP, CP };

inline std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::None: return "none";
        case NoiseKind::IG_A: return "ig_a";
        case NoiseKind::IG_B: return "ig_b";
        case NoiseKind::CG: return "cg";
        case NoiseKind::IP: return "ip";
        case NoiseKind::CP: return "cp";
    }
    return "none";
}

inline NoiseKind kind_from_string(const std::string& s) {
    if (s == "none") return NoiseKind::None;
    if (s == "ig_a") return NoiseKind::IG_A;
    if (s == "ig_b") return NoiseKind::IG_B;
    if (s == "cg") return NoiseKind::CG;
    if (s == "ip") return NoiseKind::IP;
    if (s == "cp") return NoiseKind::CP;
    throw ConfigError("unknown noise kind '" + s + "'");
}

inline bool is_correlated(NoiseKind k) { return k == NoiseKind::CG || k == NoiseKind::CP; }

struct NoiseModelSpec {
    NoiseKind kind = NoiseKind::None;
    double sigma = 1.0;     // IG_A
    double epsilon = 1e-4;  // IG_B
    corrmodel::CorrelationParams corr_params;
    std::int64_t corr_refresh_steps = 100;
    bool backprop_through_sigma = false;  // CG
    bool structured = false;              // CG/CP factor mode, needs c = 0
    std::size_t max_dense_dim = 8192;
    double psd_floor = 1e-6;

    void validate() const {
        if (kind == NoiseKind::IG_A && !(sigma > 0))
            throw ConfigError("ig_a noise requires sigma > 0");
        if (kind == NoiseKind::IG_B && !(epsilon > 0))
            throw ConfigError("ig_b noise requires epsilon > 0");
        if (is_correlated(kind)) {
            corr_params.validate();
            if (corr_refresh_steps < 1)
                throw ConfigError("corrRefreshSteps must be a positive integer");
        }
    }
};

// Mutable per-layer state: geometry plus the current correlation matrix for
// the correlated kinds, refreshed from live kernels on a fixed step cadence.
template <typename T>
struct NoiseLayerState {
    corrmodel::LayerGeometry geometry;
    corrmodel::CorrelationMatrix<T> corr;
    bool has_corr = false;
    bool training = true;

    bool needs_refresh(std::int64_t step, const NoiseModelSpec& spec) const {
        if (!has_corr) return true;
        return step - corr.source_step >= spec.corr_refresh_steps;
    }

    void refresh(const Tensor<T>& kernels, const NoiseModelSpec& spec, std::int64_t step) {
        corrmodel::BuildOptions opts;
        opts.structured = spec.structured;
        opts.max_dense_dim = spec.max_dense_dim;
        opts.psd_floor = spec.psd_floor;
        corr = corrmodel::build_correlation_matrix(geometry, kernels, spec.corr_params, opts);
        corr.source_step = step;
        has_corr = true;
    }
};

// h = a + sigma * x. The additive node's backward is the identity, so there
// is nothing to save.
template <typename T>
void ig_a_forward(std::span<T> a, double sigma, RandomStream& stream) {
    for (T& v : a) v += static_cast<T>(sigma * stream.normal());
}

// h = a + sqrt(a + eps) * x, saving x and a for the reparameterized backward.
template <typename T>
void ig_b_forward(std::span<T> a, double epsilon, RandomStream& stream, std::vector<T>& saved_a,
                  std::vector<T>& saved_x) {
    saved_a.assign(a.begin(), a.end());
    saved_x.resize(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < T(0)) throw NegativeRate(static_cast<double>(a[i]));
        const double x = stream.normal();
        saved_x[i] = static_cast<T>(x);
        a[i] += static_cast<T>(std::sqrt(static_cast<double>(a[i]) + epsilon) * x);
    }
}

template <typename T>
void ig_b_backward(std::span<T> g, std::span<const T> saved_a, std::span<const T> saved_x,
                   double epsilon) {
    if (g.size() != saved_a.size() || g.size() != saved_x.size())
        throw ShapeMismatch(shape_str({g.size()}), shape_str({saved_a.size()}));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double root = std::sqrt(static_cast<double>(saved_a[i]) + epsilon);
        g[i] *= static_cast<T>(1.0 + static_cast<double>(saved_x[i]) / (2.0 * root));
    }
}

// h = a + z with z ~ N(0, sigma_corr); saves the raw normal draw when the
// optional weight path needs it.
template <typename T>
void cg_forward(std::span<T> a, const corrmodel::CorrelationMatrix<T>& cm, RandomStream& stream,
                std::vector<T>* saved_x = nullptr) {
    const std::size_t d = cm.dim();
    if (a.size() != d) throw ShapeMismatch(shape_str({d}), shape_str({a.size()}));

    if (cm.structured) {
        if (saved_x != nullptr)
            throw Error("weight-path gradient is not defined in structured mode");
        std::vector<T> z(d);
        corrmodel::sample_structured(cm, stream, std::span<T>(z));
        for (std::size_t i = 0; i < d; ++i) a[i] += z[i];
        return;
    }

    std::vector<T> x = sampler::sample_std_normal<T>(stream, d);
    std::vector<T> z(d);
    blas::gemv(d, d, cm.factor.data().data(), d, x.data(), z.data());
    for (std::size_t i = 0; i < d; ++i) a[i] += z[i];
    if (saved_x != nullptr) *saved_x = std::move(x);
}

// Activation gradient of the additive node is the identity; this is the
// optional kernel-path term: Lbar = g x^T, pulled back through the Cholesky
// factorization and the correlation assembly to the kernels.
template <typename T>
Tensor<T> cg_weight_gradient(std::span<const T> g, std::span<const T> saved_x,
                             const corrmodel::CorrelationMatrix<T>& cm, const Tensor<T>& kernels) {
    const std::size_t d = cm.dim();
    if (g.size() != d || saved_x.size() != d)
        throw ShapeMismatch(shape_str({d}), shape_str({g.size()}));
    if (d > linalg::kMaxJacobiDim) throw DimensionTooLarge(d, linalg::kMaxJacobiDim);

    Tensor<T> lbar({d, d});
    T* lp = lbar.data().data();
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < d; ++j) lp[i * d + j] = g[i] * saved_x[j];

    const SymMatrix<T> sigma_bar = linalg::cholesky_pullback(cm.factor, lbar);
    return corrmodel::correlation_weight_pullback(sigma_bar, cm, kernels, cm.params);
}

// h_i ~ Poisson(a_i), independent; inverse-CDF draw per element.
template <typename T>
void ip_forward(std::span<T> a, RandomStream& stream) {
    sampler::PoissonQuantileCache cache;
    for (T& v : a) {
        if (v < T(0)) throw NegativeRate(static_cast<double>(v));
        if (v == T(0)) continue;
        v = static_cast<T>(cache.quantile(stream.uniform01(), static_cast<double>(v)));
    }
}

// h ~ Poisson(a, sigma_corr) through the Gaussian copula.
template <typename T>
void cp_forward(std::span<T> a, const corrmodel::CorrelationMatrix<T>& cm, RandomStream& stream) {
    const std::size_t d = cm.dim();
    if (a.size() != d) throw ShapeMismatch(shape_str({d}), shape_str({a.size()}));
    for (const T v : a)
        if (v < T(0)) throw NegativeRate(static_cast<double>(v));

    std::vector<T> gauss(d);
    if (cm.structured) {
        corrmodel::sample_structured(cm, stream, std::span<T>(gauss));
    } else {
        const std::vector<T> x = sampler::sample_std_normal<T>(stream, d);
        blas::gemv(d, d, cm.factor.data().data(), d, x.data(), gauss.data());
    }

    sampler::PoissonQuantileCache cache;
    for (std::size_t i = 0; i < d; ++i) {
        if (a[i] == T(0)) continue;
        const double u = sampler::std_normal_cdf(static_cast<double>(gauss[i]));
        a[i] = static_cast<T>(cache.quantile(u, static_cast<double>(a[i])));
    }
}

// Straight-through backward for the Poisson kinds: the estimator asserts the
// mean path, so the upstream gradient passes through untouched.
template <typename T>
void straight_through_backward(std::span<T>) {}

// Evaluation mode: every kind is the identity, the mean of its train-time
// distribution, so no scaling is needed.
template <typename T>
void eval_forward(std::span<T>, const NoiseModelSpec&) {}

}  // namespace corrnoise::noise
