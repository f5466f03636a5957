#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "corrnoise/blas.hpp"
#include "corrnoise/corrmodel.hpp"
#include "corrnoise/errors.hpp"
#include "corrnoise/noise.hpp"
#include "corrnoise/random.hpp"
#include "corrnoise/sampler.hpp"
#include "corrnoise/tensor.hpp"

namespace corrnoise::nn {

enum class Padding { Same, Valid };
enum class LayerKind { Conv, Relu, Dropout, Noise, GlobalAvgPool, Softmax };

struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    std::size_t kernel_size = 0;   // conv
    std::size_t out_channels = 0;  // conv
    std::size_t stride = 1;        // conv
    Padding padding = Padding::Same;
    double dropout_rate = 0.0;   // dropout
    std::size_t pool_extent = 0;  // globalAvgPool: expected pre-pool spatial size, 0 = any

    static LayerSpec conv(std::size_t k, std::size_t out, std::size_t stride = 1,
                          Padding pad = Padding::Same) {
        return {LayerKind::Conv, k, out, stride, pad, 0.0, 0};
    }
    static LayerSpec relu() { return {LayerKind::Relu, 0, 0, 1, Padding::Same, 0.0, 0}; }
    static LayerSpec dropout(double rate) {
        return {LayerKind::Dropout, 0, 0, 1, Padding::Same, rate, 0};
    }
    static LayerSpec noise_site() { return {LayerKind::Noise, 0, 0, 1, Padding::Same, 0.0, 0}; }
    static LayerSpec global_avg_pool(std::size_t extent = 0) {
        return {LayerKind::GlobalAvgPool, 0, 0, 1, Padding::Same, 0.0, extent};
    }
    static LayerSpec softmax() { return {LayerKind::Softmax, 0, 0, 1, Padding::Same, 0.0, 0}; }
};

struct NetworkSpec {
    std::vector<LayerSpec> layers;
    std::ptrdiff_t noise_site = -1;
    noise::NoiseModelSpec noise_model;
    std::size_t in_channels = 3;
    std::size_t in_height = 32;
    std::size_t in_width = 32;
    std::size_t num_classes = 10;

    void validate() const {
        if (layers.empty()) throw ConfigError("network has no layers");
        std::size_t softmax_count = 0;
        std::ptrdiff_t noise_found = -1;
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const LayerSpec& l = layers[i];
            switch (l.kind) {
                case LayerKind::Conv:
                    if (l.kernel_size < 1 || l.out_channels < 1 || l.stride < 1)
                        throw ConfigError("conv layer needs kernelSize, outChannels, stride >= 1");
                    break;
                case LayerKind::Dropout:
                    if (l.dropout_rate < 0.0 || l.dropout_rate >= 1.0)
                        throw ConfigError("dropout rate must lie in [0, 1)");
                    break;
                case LayerKind::Noise:
                    if (noise_found >= 0) throw ConfigError("network has more than one noise site");
                    noise_found = static_cast<std::ptrdiff_t>(i);
                    break;
                case LayerKind::Softmax:
                    ++softmax_count;
                    break;
                default:
                    break;
            }
        }
        if (softmax_count != 1 || layers.back().kind != LayerKind::Softmax)
            throw ConfigError("network needs exactly one softmax head, as the final layer");
        if (noise_found != noise_site)
            throw ConfigError("noiseSiteIndex does not match the noise layer position");
        if (noise_found >= 0 && noise_model.kind == noise::NoiseKind::None)
            throw ConfigError("noise site present but noise model is 'none'");
        noise_model.validate();
    }
};

struct LayerShape {
    std::size_t c = 0, h = 0, w = 0;
    std::size_t numel() const { return c * h * w; }
    friend bool operator==(const LayerShape&, const LayerShape&) = default;
};

inline std::size_t conv_out_extent(std::size_t in, std::size_t k, std::size_t stride,
                                   Padding pad) {
    if (pad == Padding::Same) return (in + stride - 1) / stride;
    if (in < k) throw ShapeMismatch("input extent >= kernel", std::to_string(in));
    return (in - k) / stride + 1;
}

inline std::size_t conv_pad_begin(std::size_t in, std::size_t out, std::size_t k,
                                  std::size_t stride, Padding pad) {
    if (pad == Padding::Valid) return 0;
    const std::size_t needed = (out - 1) * stride + k;
    return needed > in ? (needed - in) / 2 : 0;
}

// Per-layer-boundary shapes: entry i is the input of layer i, the last entry
// is the network output. Global average pooling collapses h and w to 1.
inline std::vector<LayerShape> trace_shapes(const NetworkSpec& spec) {
    spec.validate();
    std::vector<LayerShape> shapes;
    LayerShape cur{spec.in_channels, spec.in_height, spec.in_width};
    shapes.push_back(cur);
    for (const LayerSpec& l : spec.layers) {
        switch (l.kind) {
            case LayerKind::Conv:
                cur.h = conv_out_extent(cur.h, l.kernel_size, l.stride, l.padding);
                cur.w = conv_out_extent(cur.w, l.kernel_size, l.stride, l.padding);
                cur.c = l.out_channels;
                break;
            case LayerKind::GlobalAvgPool:
                if (l.pool_extent != 0 && (cur.h != l.pool_extent || cur.w != l.pool_extent))
                    throw ConfigError("pre-pool spatial extent is " + std::to_string(cur.h) + "x" +
                                      std::to_string(cur.w) + ", expected " +
                                      std::to_string(l.pool_extent));
                cur.h = 1;
                cur.w = 1;
                break;
            default:
                break;
        }
        shapes.push_back(cur);
    }
    if (shapes.back().c != spec.num_classes || shapes.back().h != 1 || shapes.back().w != 1)
        throw ConfigError("network output is not one score per class");
    return shapes;
}

namespace detail {

template <typename T>
void im2col(const T* in, std::size_t c, std::size_t h, std::size_t w, std::size_t k,
            std::size_t stride, std::size_t pad_h, std::size_t pad_w, std::size_t oh,
            std::size_t ow, T* col) {
    const std::size_t ohw = oh * ow;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t ki = 0; ki < k; ++ki) {
            for (std::size_t kj = 0; kj < k; ++kj) {
                T* dst = col + ((ch * k + ki) * k + kj) * ohw;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ki) -
                                              static_cast<std::ptrdiff_t>(pad_h);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
                        std::fill(dst + oy * ow, dst + (oy + 1) * ow, T(0));
                        continue;
                    }
                    const T* src = in + (ch * h + static_cast<std::size_t>(iy)) * w;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kj) -
                                                  static_cast<std::ptrdiff_t>(pad_w);
                        dst[oy * ow + ox] = (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w))
                                                ? T(0)
                                                : src[static_cast<std::size_t>(ix)];
                    }
                }
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, std::size_t c, std::size_t h, std::size_t w, std::size_t k,
                std::size_t stride, std::size_t pad_h, std::size_t pad_w, std::size_t oh,
                std::size_t ow, T* in) {
    const std::size_t ohw = oh * ow;
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t ki = 0; ki < k; ++ki) {
            for (std::size_t kj = 0; kj < k; ++kj) {
                const T* src = col + ((ch * k + ki) * k + kj) * ohw;
                for (std::size_t oy = 0; oy < oh; ++oy) {
                    const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ki) -
                                              static_cast<std::ptrdiff_t>(pad_h);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) continue;
                    T* dst = in + (ch * h + static_cast<std::size_t>(iy)) * w;
                    for (std::size_t ox = 0; ox < ow; ++ox) {
                        const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kj) -
                                                  static_cast<std::ptrdiff_t>(pad_w);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) continue;
                        dst[static_cast<std::size_t>(ix)] += src[oy * ow + ox];
                    }
                }
            }
        }
    }
}

}  // namespace detail

// Batched cross-correlation, (B,C,H,W) x (K,C,k,k) -> (B,K,oH,oW), one
// im2col + GEMM per image.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& kernels,
                         const Tensor<T>& bias, std::size_t stride, Padding padding) {
    if (input.rank() != 4 || kernels.rank() != 4 || bias.rank() != 1)
        throw ShapeMismatch("(B,C,H,W), (K,C,k,k), (K)", shape_str(input.shape()));
    const std::size_t b = input.extent(0), c = input.extent(1), h = input.extent(2),
                      w = input.extent(3);
    const std::size_t kout = kernels.extent(0), k = kernels.extent(2);
    if (kernels.extent(1) != c || kernels.extent(3) != k || bias.extent(0) != kout)
        throw ShapeMismatch(shape_str({kout, c, k, k}), shape_str(kernels.shape()));

    const std::size_t oh = conv_out_extent(h, k, stride, padding);
    const std::size_t ow = conv_out_extent(w, k, stride, padding);
    const std::size_t pad_h = conv_pad_begin(h, oh, k, stride, padding);
    const std::size_t pad_w = conv_pad_begin(w, ow, k, stride, padding);
    const std::size_t ckk = c * k * k, ohw = oh * ow;

    Tensor<T> out({b, kout, oh, ow});
    std::vector<T> col(ckk * ohw);
    for (std::size_t i = 0; i < b; ++i) {
        detail::im2col(input.slice0(i).data(), c, h, w, k, stride, pad_h, pad_w, oh, ow,
                       col.data());
        T* o = out.slice0(i).data();
        blas::gemm(false, false, kout, ohw, ckk, T(1), kernels.data().data(), ckk, col.data(), ohw,
                   T(0), o, ohw);
        for (std::size_t kc = 0; kc < kout; ++kc) {
            const T bv = bias[kc];
            for (std::size_t j = 0; j < ohw; ++j) o[kc * ohw + j] += bv;
        }
    }
    return out;
}

// Exact gradients of conv2d_forward. Gradients are accumulated into g_kernels
// and g_bias so a batch sums naturally; g_input is overwritten.
template <typename T>
void conv2d_backward(const Tensor<T>& g_out, const Tensor<T>& input, const Tensor<T>& kernels,
                     std::size_t stride, Padding padding, Tensor<T>& g_input, Tensor<T>& g_kernels,
                     Tensor<T>& g_bias) {
    const std::size_t b = input.extent(0), c = input.extent(1), h = input.extent(2),
                      w = input.extent(3);
    const std::size_t kout = kernels.extent(0), k = kernels.extent(2);
    const std::size_t oh = g_out.extent(2), ow = g_out.extent(3);
    if (g_out.extent(0) != b || g_out.extent(1) != kout)
        throw ShapeMismatch(shape_str({b, kout, oh, ow}), shape_str(g_out.shape()));
    check_same_shape(g_input, input);
    check_same_shape(g_kernels, kernels);
    check_same_shape(g_bias, Tensor<T>({kout}));

    const std::size_t pad_h = conv_pad_begin(h, oh, k, stride, padding);
    const std::size_t pad_w = conv_pad_begin(w, ow, k, stride, padding);
    const std::size_t ckk = c * k * k, ohw = oh * ow;

    std::fill(g_input.data().begin(), g_input.data().end(), T(0));
    std::vector<T> col(ckk * ohw);
    std::vector<T> col_grad(ckk * ohw);
    for (std::size_t i = 0; i < b; ++i) {
        const T* go = g_out.slice0(i).data();
        detail::im2col(input.slice0(i).data(), c, h, w, k, stride, pad_h, pad_w, oh, ow,
                       col.data());
        blas::gemm(false, true, kout, ckk, ohw, T(1), go, ohw, col.data(), ohw, T(1),
                   g_kernels.data().data(), ckk);
        for (std::size_t kc = 0; kc < kout; ++kc) {
            T s = 0;
            for (std::size_t j = 0; j < ohw; ++j) s += go[kc * ohw + j];
            g_bias[kc] += s;
        }
        blas::gemm(true, false, ckk, ohw, kout, T(1), kernels.data().data(), ckk, go, ohw, T(0),
                   col_grad.data(), ohw);
        detail::col2im_add(col_grad.data(), c, h, w, k, stride, pad_h, pad_w, oh, ow,
                           g_input.slice0(i).data());
    }
}

template <typename T>
void relu_forward(Tensor<T>& a) {
    for (T& v : a.data()) v = std::max(v, T(0));
}

template <typename T>
void relu_backward(Tensor<T>& g, const Tensor<T>& out) {
    check_same_shape(g, out);
    const T* o = out.data().data();
    T* gp = g.data().data();
    for (std::size_t i = 0; i < g.size(); ++i)
        if (o[i] <= T(0)) gp[i] = T(0);
}

// Inverted dropout: drop with probability rate, scale survivors by
// 1/(1-rate); evaluation is the identity. The mask holds the applied factor.
template <typename T>
void dropout_forward(Tensor<T>& a, double rate, RandomStream& stream, bool training,
                     Tensor<T>& mask) {
    if (!training || rate == 0.0) {
        mask = Tensor<T>();
        return;
    }
    mask = Tensor<T>(a.shape());
    const T keep_scale = static_cast<T>(1.0 / (1.0 - rate));
    T* mp = mask.data().data();
    T* ap = a.data().data();
    for (std::size_t i = 0; i < a.size(); ++i) {
        mp[i] = stream.uniform01() < rate ? T(0) : keep_scale;
        ap[i] *= mp[i];
    }
}

template <typename T>
void dropout_backward(Tensor<T>& g, const Tensor<T>& mask) {
    if (mask.empty()) return;
    check_same_shape(g, mask);
    const T* mp = mask.data().data();
    T* gp = g.data().data();
    for (std::size_t i = 0; i < g.size(); ++i) gp[i] *= mp[i];
}

template <typename T>
Tensor<T> global_avg_pool_forward(const Tensor<T>& in) {
    const std::size_t b = in.extent(0), c = in.extent(1), hw = in.extent(2) * in.extent(3);
    Tensor<T> out({b, c});
    for (std::size_t i = 0; i < b; ++i) {
        const T* src = in.slice0(i).data();
        for (std::size_t ch = 0; ch < c; ++ch) {
            T s = 0;
            for (std::size_t j = 0; j < hw; ++j) s += src[ch * hw + j];
            out(i, ch) = s / static_cast<T>(hw);
        }
    }
    return out;
}

template <typename T>
Tensor<T> global_avg_pool_backward(const Tensor<T>& g, std::size_t h, std::size_t w) {
    const std::size_t b = g.extent(0), c = g.extent(1), hw = h * w;
    Tensor<T> out({b, c, h, w});
    for (std::size_t i = 0; i < b; ++i)
        for (std::size_t ch = 0; ch < c; ++ch) {
            const T v = g(i, ch) / static_cast<T>(hw);
            T* dst = out.slice0(i).data() + ch * hw;
            std::fill(dst, dst + hw, v);
        }
    return out;
}

// Mean negative log-likelihood over the batch; probs (row-stochastic) are
// written for the backward pass.
template <typename T>
double softmax_cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels,
                             Tensor<T>& probs) {
    const std::size_t b = logits.extent(0), c = logits.extent(1);
    if (labels.size() != b) throw ShapeMismatch(shape_str({b}), shape_str({labels.size()}));
    probs = Tensor<T>({b, c});
    double loss = 0;
    for (std::size_t i = 0; i < b; ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= c)
            throw DataError("label " + std::to_string(labels[i]) + " out of range for " +
                            std::to_string(c) + " classes");
        const T* x = logits.slice0(i).data();
        T m = x[0];
        for (std::size_t j = 1; j < c; ++j) m = std::max(m, x[j]);
        double z = 0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(static_cast<double>(x[j] - m));
        for (std::size_t j = 0; j < c; ++j)
            probs(i, j) = static_cast<T>(std::exp(static_cast<double>(x[j] - m)) / z);
        loss -= std::log(static_cast<double>(probs(i, static_cast<std::size_t>(labels[i]))));
    }
    return loss / static_cast<double>(b);
}

template <typename T>
Tensor<T> softmax_cross_entropy_backward(const Tensor<T>& probs, const std::vector<int>& labels) {
    const std::size_t b = probs.extent(0), c = probs.extent(1);
    Tensor<T> g = probs;
    const T inv_b = T(1) / static_cast<T>(b);
    for (std::size_t i = 0; i < b; ++i) {
        g(i, static_cast<std::size_t>(labels[i])) -= T(1);
        for (std::size_t j = 0; j < c; ++j) g(i, j) *= inv_b;
    }
    return g;
}

template <typename T>
struct ConvParams {
    Tensor<T> w;  // (K, C, k, k)
    Tensor<T> b;  // (K)
};

template <typename T>
struct ParamSet {
    std::vector<ConvParams<T>> convs;

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& cp : convs) n += cp.w.size() + cp.b.size();
        return n;
    }
};

template <typename T>
struct Tape {
    std::vector<Tensor<T>> acts;           // acts[i] = input of layer i; back() = logits
    std::vector<Tensor<T>> dropout_masks;  // indexed by layer
    Tensor<T> noise_saved_a;               // IG_B: pre-noise activations (B, d)
    Tensor<T> noise_saved_x;               // IG_B / CG weight path: raw normals (B, d)
    Tensor<T> probs;
    std::vector<int> labels;
};

struct OptimizerSpec {
    double learning_rate = 0.01;
    std::vector<std::size_t> decay_epochs = {50, 75};
    double decay_factor = 0.1;
    double momentum = 0.9;
    double weight_decay = 1e-3;
    std::size_t batch_size = 128;
    std::size_t epochs = 100;

    void validate() const {
        if (!(learning_rate > 0)) throw ConfigError("learning rate must be positive");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("batch size must be >= 1");
        if (momentum < 0 || momentum >= 1) throw ConfigError("momentum must lie in [0, 1)");
        if (weight_decay < 0) throw ConfigError("weight decay must be nonnegative");
        if (!(decay_factor > 0)) throw ConfigError("decay factor must be positive");
    }

    double lr_at_epoch(std::size_t epoch) const {
        double lr = learning_rate;
        for (const std::size_t m : decay_epochs)
            if (epoch >= m) lr *= decay_factor;
        return lr;
    }
};

// Momentum SGD with weight decay on the kernels (biases are not decayed):
// v = momentum * v - lr * (g + wd * w); w += v.
template <typename T>
void sgd_step(ParamSet<T>& params, const ParamSet<T>& grads, ParamSet<T>& velocity, double lr,
              double momentum, double weight_decay) {
    if (grads.convs.size() != params.convs.size() || velocity.convs.size() != params.convs.size())
        throw ShapeMismatch(shape_str({params.convs.size()}), shape_str({grads.convs.size()}));
    for (std::size_t i = 0; i < params.convs.size(); ++i) {
        auto& p = params.convs[i];
        const auto& g = grads.convs[i];
        auto& v = velocity.convs[i];
        T* wp = p.w.data().data();
        const T* gw = g.w.data().data();
        T* vw = v.w.data().data();
        for (std::size_t j = 0; j < p.w.size(); ++j) {
            vw[j] = static_cast<T>(momentum) * vw[j] -
                    static_cast<T>(lr) * (gw[j] + static_cast<T>(weight_decay) * wp[j]);
            wp[j] += vw[j];
        }
        T* bp = p.b.data().data();
        const T* gb = g.b.data().data();
        T* vb = v.b.data().data();
        for (std::size_t j = 0; j < p.b.size(); ++j) {
            vb[j] = static_cast<T>(momentum) * vb[j] - static_cast<T>(lr) * gb[j];
            bp[j] += vb[j];
        }
    }
}

// The modified all-convolutional architecture: nine conv layers (the first
// one narrow), stride-2 downsampling at layers 3 and 6, a valid-padding
// seventh layer so global averaging sees 6x6 maps, optional dropout at the
// input (0.2) and after layers 3 and 6 (0.5), and a noise site after the
// first layer's ReLU.
inline NetworkSpec build_allconvnet(std::size_t first_layer_filters,
                                    const noise::NoiseModelSpec& noise_model,
                                    bool dropout = true) {
    if (first_layer_filters < 1) throw ConfigError("firstLayerFilters must be >= 1");
    NetworkSpec spec;
    spec.noise_model = noise_model;
    auto& ls = spec.layers;
    if (dropout) ls.push_back(LayerSpec::dropout(0.2));
    ls.push_back(LayerSpec::conv(3, first_layer_filters));
    ls.push_back(LayerSpec::relu());
    if (noise_model.kind != noise::NoiseKind::None) {
        spec.noise_site = static_cast<std::ptrdiff_t>(ls.size());
        ls.push_back(LayerSpec::noise_site());
    }
    ls.push_back(LayerSpec::conv(3, 96));
    ls.push_back(LayerSpec::relu());
    ls.push_back(LayerSpec::conv(3, 96, 2));
    ls.push_back(LayerSpec::relu());
    if (dropout) ls.push_back(LayerSpec::dropout(0.5));
    ls.push_back(LayerSpec::conv(3, 192));
    ls.push_back(LayerSpec::relu());
    ls.push_back(LayerSpec::conv(3, 192));
    ls.push_back(LayerSpec::relu());
    ls.push_back(LayerSpec::conv(3, 192, 2));
    ls.push_back(LayerSpec::relu());
    if (dropout) ls.push_back(LayerSpec::dropout(0.5));
    ls.push_back(LayerSpec::conv(3, 192, 1, Padding::Valid));
    ls.push_back(LayerSpec::relu());
    ls.push_back(LayerSpec::conv(1, 192));
    ls.push_back(LayerSpec::relu());
    ls.push_back(LayerSpec::conv(1, 10));
    ls.push_back(LayerSpec::relu());
    ls.push_back(LayerSpec::global_avg_pool(6));
    ls.push_back(LayerSpec::softmax());
    return spec;
}

template <typename T>
class Network {
public:
    explicit Network(NetworkSpec spec) : spec_(std::move(spec)), shapes_(trace_shapes(spec_)) {
        for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
            const LayerSpec& l = spec_.layers[i];
            if (l.kind == LayerKind::Conv) {
                conv_layer_to_param_.push_back(i);
                const LayerShape in = shapes_[i];
                params_.convs.push_back(
                    {Tensor<T>({l.out_channels, in.c, l.kernel_size, l.kernel_size}),
                     Tensor<T>({l.out_channels})});
            }
        }
        if (spec_.noise_site >= 0) {
            const std::size_t site = static_cast<std::size_t>(spec_.noise_site);
            std::ptrdiff_t conv_idx = -1;
            for (std::size_t c = 0; c < conv_layer_to_param_.size(); ++c)
                if (conv_layer_to_param_[c] < site) conv_idx = static_cast<std::ptrdiff_t>(c);
            if (conv_idx < 0) throw ConfigError("noise site has no preceding conv layer");
            noise_conv_ = static_cast<std::size_t>(conv_idx);
            const LayerShape s = shapes_[site];
            noise_state_.geometry = {s.w, s.h, s.c};
        }
    }

    const NetworkSpec& spec() const { return spec_; }
    const std::vector<LayerShape>& shapes() const { return shapes_; }
    ParamSet<T>& params() { return params_; }
    const ParamSet<T>& params() const { return params_; }
    noise::NoiseLayerState<T>& noise_state() { return noise_state_; }
    std::size_t parameter_count() const { return params_.count(); }

    // Fan-in-scaled uniform init: w ~ U(-sqrt(6/fan_in), sqrt(6/fan_in)),
    // biases zero. Draw order is fixed: conv layers in order, kernels first.
    void init_params(RandomStream& stream) {
        for (auto& cp : params_.convs) {
            const std::size_t fan_in = cp.w.extent(1) * cp.w.extent(2) * cp.w.extent(3);
            const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
            for (T& v : cp.w.data())
                v = static_cast<T>((2.0 * stream.uniform01() - 1.0) * limit);
            std::fill(cp.b.data().begin(), cp.b.data().end(), T(0));
        }
    }

    ParamSet<T> make_gradients() const { return zeros_like(); }
    ParamSet<T> make_velocity() const { return zeros_like(); }

    // Forward pass to logits. Training mode consumes the stream (dropout and
    // noise) and records into the tape; evaluation mode is deterministic and
    // needs neither.
    Tensor<T> forward(const Tensor<T>& input, bool training, RandomStream* stream, Tape<T>* tape,
                      std::int64_t step = 0) {
        if (input.rank() != 4 || input.extent(1) != spec_.in_channels ||
            input.extent(2) != spec_.in_height || input.extent(3) != spec_.in_width)
            throw ShapeMismatch(shape_str({input.extent(0), spec_.in_channels, spec_.in_height,
                                           spec_.in_width}),
                                shape_str(input.shape()));
        if (training && (stream == nullptr || tape == nullptr))
            throw Error("training forward needs a stream and a tape");

        if (training && spec_.noise_site >= 0 && noise::is_correlated(spec_.noise_model.kind) &&
            noise_state_.needs_refresh(step, spec_.noise_model))
            noise_state_.refresh(noise_kernels_2d(), spec_.noise_model, step);

        if (tape != nullptr) {
            tape->acts.clear();
            tape->dropout_masks.assign(spec_.layers.size(), Tensor<T>());
            tape->noise_saved_a = Tensor<T>();
            tape->noise_saved_x = Tensor<T>();
        }

        Tensor<T> cur = input;
        std::size_t conv_i = 0;
        for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
            const LayerSpec& l = spec_.layers[i];
            if (tape != nullptr) tape->acts.push_back(cur);
            switch (l.kind) {
                case LayerKind::Conv: {
                    const auto& cp = params_.convs[conv_i++];
                    cur = conv2d_forward(cur, cp.w, cp.b, l.stride, l.padding);
                    break;
                }
                case LayerKind::Relu:
                    relu_forward(cur);
                    break;
                case LayerKind::Dropout: {
                    Tensor<T> mask;
                    dropout_forward(cur, l.dropout_rate, training ? *stream : dummy_stream(),
                                    training, mask);
                    if (tape != nullptr) tape->dropout_masks[i] = std::move(mask);
                    break;
                }
                case LayerKind::Noise:
                    if (training) apply_noise(cur, *stream, tape);
                    break;
                case LayerKind::GlobalAvgPool:
                    cur = global_avg_pool_forward(cur).reshaped(
                        {cur.extent(0), cur.extent(1), 1, 1});
                    break;
                case LayerKind::Softmax:
                    cur = cur.reshaped({cur.extent(0), cur.extent(1)});
                    break;
            }
        }
        if (tape != nullptr) tape->acts.push_back(cur);
        return cur;
    }

    double loss(const Tensor<T>& logits, const std::vector<int>& labels, Tape<T>* tape) {
        Tensor<T> probs;
        const double l = softmax_cross_entropy(logits, labels, probs);
        if (tape != nullptr) {
            tape->probs = std::move(probs);
            tape->labels = labels;
        }
        return l;
    }

    // Gradients of the mean cross-entropy w.r.t. every parameter. The tape
    // must come from a training-mode forward of this network.
    void backward(const Tape<T>& tape, ParamSet<T>& grads) {
        zero_params(grads);
        Tensor<T> g = softmax_cross_entropy_backward(tape.probs, tape.labels);
        std::size_t conv_i = params_.convs.size();
        for (std::size_t ri = spec_.layers.size(); ri-- > 0;) {
            const LayerSpec& l = spec_.layers[ri];
            const Tensor<T>& in = tape.acts[ri];
            const Tensor<T>& out = tape.acts[ri + 1];
            switch (l.kind) {
                case LayerKind::Conv: {
                    --conv_i;
                    const auto& cp = params_.convs[conv_i];
                    Tensor<T> g_in(in.shape());
                    conv2d_backward(g, in, cp.w, l.stride, l.padding, g_in,
                                    grads.convs[conv_i].w, grads.convs[conv_i].b);
                    g = std::move(g_in);
                    break;
                }
                case LayerKind::Relu:
                    relu_backward(g, out);
                    break;
                case LayerKind::Dropout:
                    dropout_backward(g, tape.dropout_masks[ri]);
                    break;
                case LayerKind::Noise:
                    noise_backward(g, tape, grads);
                    break;
                case LayerKind::GlobalAvgPool:
                    g = global_avg_pool_backward(g.reshaped({g.extent(0), g.extent(1)}),
                                                 in.extent(2), in.extent(3));
                    break;
                case LayerKind::Softmax:
                    g = g.reshaped(in.shape());
                    break;
            }
        }
    }

    Tensor<T> noise_kernels_2d() const {
        const auto& w = params_.convs[noise_conv_].w;
        return w.reshaped({w.extent(0), w.extent(1) * w.extent(2) * w.extent(3)});
    }

private:
    ParamSet<T> zeros_like() const {
        ParamSet<T> out;
        for (const auto& cp : params_.convs)
            out.convs.push_back({Tensor<T>(cp.w.shape()), Tensor<T>(cp.b.shape())});
        return out;
    }

    static void zero_params(ParamSet<T>& p) {
        for (auto& cp : p.convs) {
            std::fill(cp.w.data().begin(), cp.w.data().end(), T(0));
            std::fill(cp.b.data().begin(), cp.b.data().end(), T(0));
        }
    }

    static RandomStream& dummy_stream() {
        static RandomStream s(0);
        return s;
    }

    // Training-mode noise at the site. The correlated kinds draw the whole
    // batch's normals as one (B,d) matrix and apply the factor with a single
    // GEMM; the independent kinds stream elementwise.
    void apply_noise(Tensor<T>& act, RandomStream& stream, Tape<T>* tape) {
        const auto& model = spec_.noise_model;
        const std::size_t b = act.extent(0);
        const std::size_t d = noise_state_.geometry.dim();
        T* ap = act.data().data();

        switch (model.kind) {
            case noise::NoiseKind::None:
                return;
            case noise::NoiseKind::IG_A:
                for (std::size_t i = 0; i < b * d; ++i)
                    ap[i] += static_cast<T>(model.sigma * stream.normal());
                return;
            case noise::NoiseKind::IG_B: {
                Tensor<T> saved_a({b, d});
                Tensor<T> saved_x({b, d});
                std::copy(ap, ap + b * d, saved_a.data().data());
                T* xp = saved_x.data().data();
                for (std::size_t i = 0; i < b * d; ++i) {
                    if (ap[i] < T(0)) throw NegativeRate(static_cast<double>(ap[i]));
                    const double x = stream.normal();
                    xp[i] = static_cast<T>(x);
                    ap[i] += static_cast<T>(
                        std::sqrt(static_cast<double>(ap[i]) + model.epsilon) * x);
                }
                if (tape != nullptr) {
                    tape->noise_saved_a = std::move(saved_a);
                    tape->noise_saved_x = std::move(saved_x);
                }
                return;
            }
            case noise::NoiseKind::CG: {
                const auto& cm = noise_state_.corr;
                if (cm.structured) {
                    for (std::size_t i = 0; i < b; ++i) {
                        std::vector<T> z(d);
                        corrmodel::sample_structured(cm, stream, std::span<T>(z));
                        T* row = ap + i * d;
                        for (std::size_t j = 0; j < d; ++j) row[j] += z[j];
                    }
                    return;
                }
                Tensor<T> x({b, d});
                T* xp = x.data().data();
                for (std::size_t i = 0; i < b * d; ++i) xp[i] = static_cast<T>(stream.normal());
                Tensor<T> z({b, d});
                blas::gemm(false, true, b, d, d, T(1), xp, d, cm.factor.data().data(), d, T(0),
                           z.data().data(), d);
                const T* zp = z.data().data();
                for (std::size_t i = 0; i < b * d; ++i) ap[i] += zp[i];
                if (model.backprop_through_sigma && tape != nullptr)
                    tape->noise_saved_x = std::move(x);
                return;
            }
            case noise::NoiseKind::IP: {
                sampler::PoissonQuantileCache cache;
                for (std::size_t i = 0; i < b * d; ++i) {
                    if (ap[i] < T(0)) throw NegativeRate(static_cast<double>(ap[i]));
                    if (ap[i] == T(0)) continue;
                    ap[i] = static_cast<T>(
                        cache.quantile(stream.uniform01(), static_cast<double>(ap[i])));
                }
                return;
            }
            case noise::NoiseKind::CP: {
                const auto& cm = noise_state_.corr;
                Tensor<T> gauss({b, d});
                if (cm.structured) {
                    for (std::size_t i = 0; i < b; ++i)
                        corrmodel::sample_structured(cm, stream, gauss.slice0(i));
                } else {
                    Tensor<T> x({b, d});
                    T* xp = x.data().data();
                    for (std::size_t i = 0; i < b * d; ++i)
                        xp[i] = static_cast<T>(stream.normal());
                    blas::gemm(false, true, b, d, d, T(1), xp, d, cm.factor.data().data(), d,
                               T(0), gauss.data().data(), d);
                }
                const T* gp = gauss.data().data();
                sampler::PoissonQuantileCache cache;
                for (std::size_t i = 0; i < b * d; ++i) {
                    if (ap[i] < T(0)) throw NegativeRate(static_cast<double>(ap[i]));
                    if (ap[i] == T(0)) continue;
                    const double u = sampler::std_normal_cdf(static_cast<double>(gp[i]));
                    ap[i] = static_cast<T>(cache.quantile(u, static_cast<double>(ap[i])));
                }
                return;
            }
        }
    }

    // Backward through the noise site. Additive and straight-through kinds
    // pass the activation gradient unchanged; IG_B applies the
    // reparameterized factor; CG optionally adds the kernel-path term.
    void noise_backward(Tensor<T>& g, const Tape<T>& tape, ParamSet<T>& grads) {
        const auto& model = spec_.noise_model;
        if (model.kind == noise::NoiseKind::IG_B) {
            noise::ig_b_backward(std::span<T>(g.data()),
                                 std::span<const T>(tape.noise_saved_a.data()),
                                 std::span<const T>(tape.noise_saved_x.data()), model.epsilon);
            return;
        }
        if (model.kind == noise::NoiseKind::CG && model.backprop_through_sigma &&
            !tape.noise_saved_x.empty()) {
            const std::size_t b = g.extent(0);
            const Tensor<T> kernels = noise_kernels_2d();
            auto& gw = grads.convs[noise_conv_].w;
            for (std::size_t i = 0; i < b; ++i) {
                const Tensor<T> kg = noise::cg_weight_gradient(
                    std::span<const T>(g.slice0(i)),
                    std::span<const T>(tape.noise_saved_x.slice0(i)), noise_state_.corr, kernels);
                const T* kp = kg.data().data();
                T* wp = gw.data().data();
                for (std::size_t j = 0; j < gw.size(); ++j) wp[j] += kp[j];
            }
        }
    }

    NetworkSpec spec_;
    std::vector<LayerShape> shapes_;
    ParamSet<T> params_;
    std::vector<std::size_t> conv_layer_to_param_;
    std::size_t noise_conv_ = 0;
    noise::NoiseLayerState<T> noise_state_;
};

}  // namespace corrnoise::nn
