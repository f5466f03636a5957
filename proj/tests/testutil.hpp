#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "corrnoise/cifar.hpp"
#include "corrnoise/random.hpp"
#include "corrnoise/sym_matrix.hpp"
#include "corrnoise/tensor.hpp"

namespace testutil {

// Self-cleaning unique directory under the system temp path.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<unsigned> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        for (int attempt = 0; attempt < 1000; ++attempt) {
            auto cand = base / ("corrnoise_test_" + std::to_string(counter.fetch_add(1)) + "_" +
                                std::to_string(attempt));
            std::error_code ec;
            if (std::filesystem::create_directories(cand, ec)) {
                path = std::move(cand);
                return;
            }
        }
        throw std::runtime_error("cannot create a temp directory");
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    std::string str() const { return path.string(); }
};

template <typename T>
corrnoise::Tensor<T> random_unit_kernels(std::size_t k, std::size_t m,
                                         corrnoise::RandomStream& stream) {
    corrnoise::Tensor<T> out({k, m});
    for (std::size_t i = 0; i < k; ++i) {
        auto row = out.slice0(i);
        double norm2 = 0;
        for (T& v : row) {
            const double x = stream.normal();
            v = static_cast<T>(x);
            norm2 += x * x;
        }
        const T inv = static_cast<T>(1.0 / std::sqrt(norm2));
        for (T& v : row) v *= inv;
    }
    return out;
}

template <typename T>
corrnoise::SymMatrix<T> random_spd(std::size_t n, corrnoise::RandomStream& stream) {
    corrnoise::Tensor<T> b({n, n});
    for (T& v : b.data()) v = static_cast<T>(stream.normal());
    corrnoise::SymMatrix<T> out(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j) {
            T acc{};
            for (std::size_t t = 0; t < n; ++t) acc += b(i, t) * b(j, t);
            out.set(i, j, acc + (i == j ? static_cast<T>(n) : T(0)));
        }
    return out;
}

// Linearly separable stand-in for CIFAR-10: each class gets a distinct base
// color, plus per-pixel noise. Labels are interleaved so any prefix is
// class-balanced.
inline std::vector<corrnoise::data::ImageRecord> synthetic_records(std::size_t n,
                                                                   std::uint64_t seed) {
    static constexpr std::uint8_t palette[10][3] = {
        {220, 40, 40},  {40, 220, 40},  {40, 40, 220},  {220, 220, 40}, {220, 40, 220},
        {40, 220, 220}, {200, 130, 40}, {130, 40, 200}, {40, 130, 130}, {170, 170, 170}};
    corrnoise::RandomStream stream(seed);
    std::vector<corrnoise::data::ImageRecord> recs(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& rec = recs[i];
        rec.label = static_cast<std::uint8_t>(i % 10);
        for (std::size_t ch = 0; ch < 3; ++ch) {
            const double base = palette[rec.label][ch];
            std::uint8_t* plane = rec.pixels.data() + ch * corrnoise::data::kImagePixels;
            for (std::size_t p = 0; p < corrnoise::data::kImagePixels; ++p) {
                const double v = base + 96.0 * (stream.uniform01() - 0.5);
                plane[p] = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
            }
        }
    }
    return recs;
}

// Writes a full six-file CIFAR-10 layout (5 x 10000 train + 10000 test).
inline void write_synthetic_cifar10(const std::string& dir, std::uint64_t seed) {
    namespace data = corrnoise::data;
    std::filesystem::create_directories(dir);
    for (int b = 1; b <= 5; ++b)
        data::save_batch_file(dir + "/data_batch_" + std::to_string(b) + ".bin",
                              synthetic_records(data::kBatchRecords,
                                                seed + static_cast<std::uint64_t>(b)));
    data::save_batch_file(dir + "/test_batch.bin",
                          synthetic_records(data::kBatchRecords, seed + 99));
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testutil
