#include "corrnoise/cifar.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "corrnoise/errors.hpp"

namespace corrnoise::data {

const std::array<const char*, kNumClasses> kClassNames = {
    "airplane", "automobile", "bird", "cat", "deer",
    "dog",      "frog",       "horse", "ship", "truck"};

std::vector<ImageRecord> load_batch_file(const std::string& path,
                                         std::size_t expected_records) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec) throw MissingFile(path);
    const std::size_t expected_bytes = expected_records * kRecordBytes;
    if (size != expected_bytes)
        throw TruncatedFile(path, expected_bytes, static_cast<std::size_t>(size));

    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) throw MissingFile(path);
    std::vector<ImageRecord> records(expected_records);
    for (std::size_t i = 0; i < expected_records; ++i) {
        std::uint8_t label = 0;
        if (std::fread(&label, 1, 1, f) != 1 ||
            std::fread(records[i].pixels.data(), 1, kImageBytes, f) != kImageBytes) {
            std::fclose(f);
            throw TruncatedFile(path, expected_bytes, i * kRecordBytes);
        }
        if (label >= kNumClasses) {
            std::fclose(f);
            throw CorruptRecord("record " + std::to_string(i) + " in " + path + " has label " +
                                std::to_string(label));
        }
        records[i].label = label;
    }
    std::fclose(f);
    return records;
}

void save_batch_file(const std::string& path, const std::vector<ImageRecord>& records) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw DataError("cannot open " + path + " for writing");
    for (const ImageRecord& rec : records) {
        if (std::fwrite(&rec.label, 1, 1, f) != 1 ||
            std::fwrite(rec.pixels.data(), 1, kImageBytes, f) != kImageBytes) {
            std::fclose(f);
            throw DataError("short write to " + path);
        }
    }
    std::fclose(f);
}

std::pair<std::vector<ImageRecord>, std::vector<ImageRecord>>
load_cifar10(const std::string& directory) {
    std::vector<ImageRecord> train;
    train.reserve(5 * kBatchRecords);
    for (int i = 1; i <= 5; ++i) {
        const std::string path = directory + "/data_batch_" + std::to_string(i) + ".bin";
        std::vector<ImageRecord> batch = load_batch_file(path, kBatchRecords);
        train.insert(train.end(), batch.begin(), batch.end());
    }
    std::vector<ImageRecord> test = load_batch_file(directory + "/test_batch.bin", kBatchRecords);
    return {std::move(train), std::move(test)};
}

std::vector<std::size_t> shuffled_indices(std::size_t n, RandomStream& stream) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(stream.next_u64() % (n - i));
        std::swap(idx[i], idx[j]);
    }
    return idx;
}

std::pair<std::vector<ImageRecord>, std::vector<ImageRecord>>
split_validation(const std::vector<ImageRecord>& records, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ConfigError("validation fraction must lie in (0, 1)");
    RandomStream stream(seed);
    const std::vector<std::size_t> idx = shuffled_indices(records.size(), stream);
    const std::size_t val_count =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(records.size())));

    std::vector<ImageRecord> val;
    std::vector<ImageRecord> train;
    val.reserve(val_count);
    train.reserve(records.size() - val_count);
    for (std::size_t i = 0; i < idx.size(); ++i)
        (i < val_count ? val : train).push_back(records[idx[i]]);
    return {std::move(train), std::move(val)};
}

ChannelStats compute_channel_stats(const std::vector<ImageRecord>& records) {
    ChannelStats stats;
    if (records.empty()) throw DataError("cannot compute channel stats of an empty record set");
    const double n = static_cast<double>(records.size() * kImagePixels);
    for (std::size_t ch = 0; ch < 3; ++ch) {
        double sum = 0;
        for (const ImageRecord& rec : records) {
            const std::uint8_t* src = rec.pixels.data() + ch * kImagePixels;
            for (std::size_t j = 0; j < kImagePixels; ++j) sum += src[j];
        }
        const double mu = sum / n;
        double var = 0;
        for (const ImageRecord& rec : records) {
            const std::uint8_t* src = rec.pixels.data() + ch * kImagePixels;
            for (std::size_t j = 0; j < kImagePixels; ++j) {
                const double d = static_cast<double>(src[j]) - mu;
                var += d * d;
            }
        }
        stats.mean[ch] = mu;
        stats.stddev[ch] = std::sqrt(var / n);
        if (stats.stddev[ch] < 1e-12) stats.stddev[ch] = 1.0;
    }
    return stats;
}

std::vector<int> to_labels(const std::vector<ImageRecord>& records,
                           std::span<const std::size_t> indices) {
    std::vector<int> labels(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i)
        labels[i] = static_cast<int>(records[indices[i]].label);
    return labels;
}

}  // namespace corrnoise::data
