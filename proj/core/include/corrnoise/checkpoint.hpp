#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "corrnoise/cifar.hpp"
#include "corrnoise/errors.hpp"
#include "corrnoise/nn.hpp"
#include "corrnoise/random.hpp"
#include "corrnoise/tensor.hpp"

namespace corrnoise::checkpoint {

// Versioned binary container (little-endian): magic, format version, run
// metadata, the canonical config text with its digest, normalization stats,
// RNG state, and all parameter/velocity tensors. Tensors are held as doubles
// in memory; float values round-trip bitwise through the double container.
struct Checkpoint {
    int precision = 32;
    std::uint64_t seed = 0;
    std::uint64_t run_seed = 0;
    std::uint64_t epoch = 0;  // completed epochs
    std::uint64_t step = 0;   // completed optimizer steps
    double best_val_loss = 0;
    std::uint64_t best_epoch = 0;
    std::string config_digest;
    std::string config_json;
    std::string model_name;
    data::ChannelStats stats;
    std::array<std::uint32_t, RandomStream::kStateWords> rng_state{};
    std::vector<Tensor<double>> params;
    std::vector<Tensor<double>> velocity;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);

// Verifies magic, version, and that the stored digest matches the stored
// config text.
Checkpoint load_checkpoint(const std::string& path);

template <typename T>
std::vector<Tensor<double>> pack_params(const nn::ParamSet<T>& ps) {
    std::vector<Tensor<double>> out;
    for (const auto& cp : ps.convs) {
        out.push_back(cp.w.template cast<double>());
        out.push_back(cp.b.template cast<double>());
    }
    return out;
}

template <typename T>
void unpack_params(const std::vector<Tensor<double>>& src, nn::ParamSet<T>& dst) {
    if (src.size() != dst.convs.size() * 2)
        throw ShapeMismatch(shape_str({dst.convs.size() * 2}), shape_str({src.size()}));
    for (std::size_t i = 0; i < dst.convs.size(); ++i) {
        Tensor<T> w = src[2 * i].cast<T>();
        Tensor<T> b = src[2 * i + 1].cast<T>();
        check_same_shape(w, dst.convs[i].w);
        check_same_shape(b, dst.convs[i].b);
        dst.convs[i].w = std::move(w);
        dst.convs[i].b = std::move(b);
    }
}

}  // namespace corrnoise::checkpoint
