#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "corrnoise/random.hpp"
#include "corrnoise/tensor.hpp"

namespace corrnoise::data {

inline constexpr std::size_t kImageSide = 32;
inline constexpr std::size_t kImagePixels = kImageSide * kImageSide;
inline constexpr std::size_t kImageBytes = 3 * kImagePixels;
inline constexpr std::size_t kRecordBytes = 1 + kImageBytes;
inline constexpr std::size_t kBatchRecords = 10000;
inline constexpr std::size_t kNumClasses = 10;

extern const std::array<const char*, kNumClasses> kClassNames;

// One CIFAR-10 record: label byte, then R, G, B planes, each 32x32 row-major.
struct ImageRecord {
    std::uint8_t label = 0;
    std::array<std::uint8_t, kImageBytes> pixels{};

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

std::vector<ImageRecord> load_batch_file(const std::string& path, std::size_t expected_records);
void save_batch_file(const std::string& path, const std::vector<ImageRecord>& records);

// data_batch_1..5.bin plus test_batch.bin -> (50000 train, 10000 test).
std::pair<std::vector<ImageRecord>, std::vector<ImageRecord>>
load_cifar10(const std::string& directory);

// Deterministic shuffled split: fraction of the records becomes the
// validation set, the rest stays training; disjoint, counts preserved.
std::pair<std::vector<ImageRecord>, std::vector<ImageRecord>>
split_validation(const std::vector<ImageRecord>& records, double fraction, std::uint64_t seed);

std::vector<std::size_t> shuffled_indices(std::size_t n, RandomStream& stream);

// Per-channel mean/std over raw byte values of a record set.
struct ChannelStats {
    std::array<double, 3> mean{};
    std::array<double, 3> stddev{};

    friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

ChannelStats compute_channel_stats(const std::vector<ImageRecord>& records);

// Standardized batch tensor (B, 3, 32, 32) for the given record indices.
template <typename T>
Tensor<T> to_tensor(const std::vector<ImageRecord>& records,
                    std::span<const std::size_t> indices, const ChannelStats& stats) {
    Tensor<T> out({indices.size(), 3, kImageSide, kImageSide});
    T* p = out.data().data();
    for (std::size_t i = 0; i < indices.size(); ++i) {
        const ImageRecord& rec = records[indices[i]];
        for (std::size_t ch = 0; ch < 3; ++ch) {
            const double mu = stats.mean[ch];
            const double sd = stats.stddev[ch];
            const std::uint8_t* src = rec.pixels.data() + ch * kImagePixels;
            T* dst = p + (i * 3 + ch) * kImagePixels;
            for (std::size_t j = 0; j < kImagePixels; ++j)
                dst[j] = static_cast<T>((static_cast<double>(src[j]) - mu) / sd);
        }
    }
    return out;
}

std::vector<int> to_labels(const std::vector<ImageRecord>& records,
                           std::span<const std::size_t> indices);

}  // namespace corrnoise::data
