#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "corrnoise/errors.hpp"
#include "corrnoise/linalg.hpp"
#include "corrnoise/random.hpp"
#include "corrnoise/sym_matrix.hpp"
#include "corrnoise/tensor.hpp"

namespace corrnoise::corrmodel {

// Canonical neuron ordering: n = f * (w*h) + y * w + x. The correlation
// matrix, the flattening of activation tensors, and the Kronecker assembly
// below all rely on this one ordering.
struct LayerGeometry {
    std::size_t width = 1;
    std::size_t height = 1;
    std::size_t feature_maps = 1;

    std::size_t spatial() const { return width * height; }
    std::size_t dim() const { return width * height * feature_maps; }

    void validate() const {
        if (width == 0 || height == 0 || feature_maps == 0)
            throw ConfigError("layer geometry extents must be positive");
    }

    friend bool operator==(const LayerGeometry&, const LayerGeometry&) = default;
};

struct CorrelationParams {
    double a = 0.225;
    double b = 0.0043;
    double c = 0.09;
    double tau = 1.87;
    double distance_scale = 1.0;

    void validate() const {
        if (a < 0 || b < 0 || c < 0) throw ConfigError("correlation params a, b, c must be nonnegative");
        if (!(tau > 0)) throw ConfigError("correlation param tau must be positive");
        if (!(distance_scale > 0)) throw ConfigError("correlation distance scale must be positive");
        if (a + c > 1.0) throw ConfigError("correlation params require a + c <= 1");
    }

    friend bool operator==(const CorrelationParams&, const CorrelationParams&) = default;
};

struct Coord {
    std::size_t x = 0;
    std::size_t y = 0;
};

inline double spatial_distance(Coord p, Coord q, double scale) {
    const double dx = static_cast<double>(p.x) - static_cast<double>(q.x);
    const double dy = static_cast<double>(p.y) - static_cast<double>(q.y);
    return scale * std::sqrt(dx * dx + dy * dy);
}

// Cosine similarity of two flattened kernels. A kernel with norm below 1e-12
// is a degenerate state worth surfacing, not a value to paper over.
template <typename T>
double tuning_similarity(std::span<const T> wi, std::span<const T> wj) {
    if (wi.size() != wj.size())
        throw ShapeMismatch(shape_str({wi.size()}), shape_str({wj.size()}));
    double dot = 0, ni = 0, nj = 0;
    for (std::size_t t = 0; t < wi.size(); ++t) {
        const double x = static_cast<double>(wi[t]);
        const double y = static_cast<double>(wj[t]);
        dot += x * y;
        ni += x * x;
        nj += y * y;
    }
    ni = std::sqrt(ni);
    nj = std::sqrt(nj);
    if (ni < 1e-12) throw ZeroNormKernel(0);
    if (nj < 1e-12) throw ZeroNormKernel(1);
    const double cosv = dot / (ni * nj);
    return std::min(1.0, std::max(-1.0, cosv));
}

inline double pairwise_correlation(double dist, double tuning, const CorrelationParams& p) {
    const double hinge = std::max(p.a - p.b * dist, 0.0);
    return hinge * std::exp((tuning - 1.0) / p.tau) + p.c;
}

// Spatial factor S, (w*h) x (w*h): S_pq = [a - b * d(p,q)]+ with p = y*w + x.
// Geometry is fixed for a layer, so this is built once and reused.
template <typename T>
Tensor<T> precompute_spatial_factor(const LayerGeometry& geom, const CorrelationParams& params) {
    geom.validate();
    params.validate();
    const std::size_t wh = geom.spatial();
    Tensor<T> s({wh, wh});
    for (std::size_t p = 0; p < wh; ++p) {
        const Coord cp{p % geom.width, p / geom.width};
        for (std::size_t q = p; q < wh; ++q) {
            const Coord cq{q % geom.width, q / geom.width};
            const double d = spatial_distance(cp, cq, params.distance_scale);
            const T v = static_cast<T>(std::max(params.a - params.b * d, 0.0));
            s(p, q) = v;
            s(q, p) = v;
        }
    }
    return s;
}

// Tuning factor T, k x k: T_ij = exp((cos(w_i, w_j) - 1) / tau). Kernels come
// in as rank-2 (k, m), one flattened kernel per row.
template <typename T>
Tensor<T> compute_tuning_factor(const Tensor<T>& kernels, const CorrelationParams& params) {
    params.validate();
    if (kernels.rank() != 2) throw ShapeMismatch("(k, m)", shape_str(kernels.shape()));
    const std::size_t k = kernels.extent(0);
    Tensor<T> t({k, k});
    for (std::size_t i = 0; i < k; ++i) {
        t(i, i) = T(1);
        for (std::size_t j = i + 1; j < k; ++j) {
            double cosv;
            try {
                cosv = tuning_similarity(kernels.slice0(i), kernels.slice0(j));
            } catch (const ZeroNormKernel& e) {
                throw ZeroNormKernel(e.index == 0 ? i : j);
            }
            const T v = static_cast<T>(std::exp((cosv - 1.0) / params.tau));
            t(i, j) = v;
            t(j, i) = v;
        }
    }
    return t;
}

template <typename T>
struct CorrelationMatrix {
    SymMatrix<T> sigma;  // dense mode; empty when structured
    Tensor<T> factor;    // dense mode: lower-triangular L with L L^T = sigma
    bool repaired = false;

    bool structured = false;
    Tensor<T> tuning_chol;   // structured: chol(T), k x k
    Tensor<T> spatial_chol;  // structured: chol(S), wh x wh
    double diag_boost = 0;   // structured: 1 - a, the diagonal completion

    LayerGeometry geometry;
    CorrelationParams params;
    std::int64_t source_step = 0;

    std::size_t dim() const { return geometry.dim(); }
};

struct BuildOptions {
    bool structured = false;
    std::size_t max_dense_dim = 8192;
    double psd_floor = 1e-6;
};

// Assemble sigma as T (x) S + c J with the diagonal overridden to exactly 1,
// which the canonical feature-major ordering makes identical to the
// entrywise definition. Dense mode caches a Cholesky factor, repairing a
// non-PSD matrix first; structured mode (requires c = 0) keeps the factors
// separate so sampling costs O(k^3 + (wh)^3) instead of O((whk)^3).
template <typename T>
CorrelationMatrix<T> build_correlation_matrix(const LayerGeometry& geom, const Tensor<T>& kernels,
                                              const CorrelationParams& params,
                                              const BuildOptions& opts = {},
                                              const Tensor<T>* spatial = nullptr) {
    geom.validate();
    params.validate();
    if (kernels.rank() != 2 || kernels.extent(0) != geom.feature_maps)
        throw ShapeMismatch(shape_str({geom.feature_maps, kernels.rank() == 2 ? kernels.extent(1) : 0}),
                            shape_str(kernels.shape()));

    CorrelationMatrix<T> out;
    out.geometry = geom;
    out.params = params;

    Tensor<T> s_local;
    if (spatial == nullptr) {
        s_local = precompute_spatial_factor<T>(geom, params);
        spatial = &s_local;
    }
    const Tensor<T> tuning = compute_tuning_factor(kernels, params);

    const std::size_t wh = geom.spatial();
    const std::size_t k = geom.feature_maps;
    const std::size_t d = geom.dim();

    if (opts.structured) {
        if (params.c != 0.0) throw ConfigError("structured correlation mode requires c = 0");
        out.structured = true;
        out.tuning_chol = linalg::cholesky(SymMatrix<T>(tuning));
        out.spatial_chol = linalg::cholesky(SymMatrix<T>(*spatial));
        out.diag_boost = 1.0 - params.a;
        return out;
    }

    if (d > opts.max_dense_dim) throw DimensionTooLarge(d, opts.max_dense_dim);

    Tensor<T> dense({d, d});
    const T c = static_cast<T>(params.c);
    for (std::size_t f = 0; f < k; ++f) {
        for (std::size_t g = 0; g < k; ++g) {
            const T tfg = tuning(f, g);
            for (std::size_t p = 0; p < wh; ++p) {
                T* row = dense.data().data() + (f * wh + p) * d + g * wh;
                const T* srow = spatial->data().data() + p * wh;
                for (std::size_t q = 0; q < wh; ++q) row[q] = tfg * srow[q] + c;
            }
        }
    }
    for (std::size_t n = 0; n < d; ++n) dense(n, n) = T(1);

    out.sigma = SymMatrix<T>(dense);
    try {
        out.factor = linalg::cholesky(out.sigma);
    } catch (const NotPositiveDefinite&) {
        out.sigma = linalg::nearest_psd(out.sigma, static_cast<T>(opts.psd_floor));
        out.factor = linalg::cholesky(out.sigma);
        out.repaired = true;
    }
    return out;
}

// Structured draw: z = vec(L_T X L_S^T) + sqrt(1 - a) e with X and e i.i.d.
// standard normal; row-major vec is exactly the canonical neuron ordering.
template <typename T>
void sample_structured(const CorrelationMatrix<T>& cm, RandomStream& stream, std::span<T> out) {
    if (!cm.structured) throw Error("sample_structured called on a dense correlation matrix");
    const std::size_t k = cm.geometry.feature_maps;
    const std::size_t wh = cm.geometry.spatial();
    if (out.size() != k * wh) throw ShapeMismatch(shape_str({k * wh}), shape_str({out.size()}));

    Tensor<T> x({k, wh});
    T* xp = x.data().data();
    for (std::size_t i = 0; i < k * wh; ++i) xp[i] = static_cast<T>(stream.normal());

    Tensor<T> tx({k, wh});
    blas::gemm(false, false, k, wh, k, T(1), cm.tuning_chol.data().data(), k, xp, wh, T(0),
               tx.data().data(), wh);
    blas::gemm(false, true, k, wh, wh, T(1), tx.data().data(), wh, cm.spatial_chol.data().data(),
               wh, T(0), out.data(), wh);

    const T boost = static_cast<T>(std::sqrt(cm.diag_boost));
    for (std::size_t i = 0; i < k * wh; ++i) out[i] += boost * static_cast<T>(stream.normal());
}

// Weight-path gradient: maps a cotangent on sigma back to the kernels through
// the Kronecker assembly, the exponential tilt, and the cosine similarity.
// Entries forced to 1 on the diagonal carry no gradient, and the self-tuning
// terms are constant in the weights.
template <typename T>
Tensor<T> correlation_weight_pullback(const SymMatrix<T>& sigma_bar,
                                      const CorrelationMatrix<T>& cm, const Tensor<T>& kernels,
                                      const CorrelationParams& params) {
    if (cm.structured) throw Error("weight-path gradient is not defined in structured mode");
    if (cm.repaired) throw Error("weight-path gradient is not defined through a repaired matrix");
    const std::size_t k = cm.geometry.feature_maps;
    const std::size_t wh = cm.geometry.spatial();
    if (sigma_bar.dim() != cm.dim())
        throw ShapeMismatch(shape_str({cm.dim(), cm.dim()}),
                            shape_str({sigma_bar.dim(), sigma_bar.dim()}));
    if (kernels.rank() != 2 || kernels.extent(0) != k)
        throw ShapeMismatch("(k, m)", shape_str(kernels.shape()));

    const Tensor<T> spatial = precompute_spatial_factor<T>(cm.geometry, params);
    const Tensor<T> tuning = compute_tuning_factor(kernels, params);
    const std::size_t m = kernels.extent(1);
    Tensor<T> grad({k, m}, T(0));

    for (std::size_t f = 0; f < k; ++f) {
        for (std::size_t g = 0; g < k; ++g) {
            if (f == g) continue;
            double tbar = 0;
            for (std::size_t p = 0; p < wh; ++p)
                for (std::size_t q = 0; q < wh; ++q)
                    tbar += static_cast<double>(sigma_bar.at(f * wh + p, g * wh + q)) *
                            static_cast<double>(spatial(p, q));

            // sigma_bar is symmetric, so block (g, f) contributes the same
            // amount to w_f as block (f, g); fold both in here.
            const double cos_bar = 2.0 * tbar * static_cast<double>(tuning(f, g)) / params.tau;

            std::span<const T> wf = kernels.slice0(f);
            std::span<const T> wg = kernels.slice0(g);
            double dot = 0, nf2 = 0, ng2 = 0;
            for (std::size_t t = 0; t < m; ++t) {
                dot += static_cast<double>(wf[t]) * static_cast<double>(wg[t]);
                nf2 += static_cast<double>(wf[t]) * static_cast<double>(wf[t]);
                ng2 += static_cast<double>(wg[t]) * static_cast<double>(wg[t]);
            }
            const double nf = std::sqrt(nf2);
            const double ng = std::sqrt(ng2);
            const double cosv = dot / (nf * ng);

            T* gf = grad.data().data() + f * m;
            for (std::size_t t = 0; t < m; ++t) {
                const double d_cos = static_cast<double>(wg[t]) / (nf * ng) -
                                     cosv * static_cast<double>(wf[t]) / nf2;
                gf[t] += static_cast<T>(cos_bar * d_cos);
            }
        }
    }
    return grad;
}

}  // namespace corrnoise::corrmodel
