#include "corrnoise/checkpoint.hpp"

#include <cstdio>
#include <cstring>

#include "corrnoise/digest.hpp"

namespace corrnoise::checkpoint {

namespace {

constexpr char kMagic[8] = {'C', 'R', 'N', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint32_t kFormatVersion = 1;

struct Writer {
    std::FILE* f;
    const std::string& path;

    void bytes(const void* p, std::size_t n) {
        if (std::fwrite(p, 1, n, f) != n) throw DataError("short write to " + path);
    }
    void u32(std::uint32_t v) { bytes(&v, sizeof v); }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) { bytes(&v, sizeof v); }
    void str(const std::string& s) {
        u64(s.size());
        bytes(s.data(), s.size());
    }
    void tensor(const Tensor<double>& t) {
        u64(t.rank());
        for (std::size_t i = 0; i < t.rank(); ++i) u64(t.extent(i));
        bytes(t.data().data(), t.size() * sizeof(double));
    }
};

struct Reader {
    std::FILE* f;
    const std::string& path;

    void bytes(void* p, std::size_t n) {
        if (std::fread(p, 1, n, f) != n)
            throw DataError("unexpected end of checkpoint " + path);
    }
    std::uint32_t u32() {
        std::uint32_t v;
        bytes(&v, sizeof v);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, sizeof v);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, sizeof v);
        return v;
    }
    std::string str() {
        const std::uint64_t n = u64();
        if (n > (1ull << 30)) throw DataError("implausible string length in " + path);
        std::string s(n, '\0');
        bytes(s.data(), n);
        return s;
    }
    Tensor<double> tensor() {
        const std::uint64_t rank = u64();
        if (rank > 8) throw DataError("implausible tensor rank in " + path);
        Shape shape(rank);
        for (std::uint64_t i = 0; i < rank; ++i) shape[i] = u64();
        Tensor<double> t(shape);
        bytes(t.data().data(), t.size() * sizeof(double));
        return t;
    }
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (f == nullptr) throw DataError("cannot open " + path + " for writing");
    Writer w{f, path};
    try {
        w.bytes(kMagic, sizeof kMagic);
        w.u32(kFormatVersion);
        w.u32(static_cast<std::uint32_t>(ckpt.precision));
        w.u64(ckpt.seed);
        w.u64(ckpt.run_seed);
        w.u64(ckpt.epoch);
        w.u64(ckpt.step);
        w.f64(ckpt.best_val_loss);
        w.u64(ckpt.best_epoch);
        w.str(ckpt.config_digest);
        w.str(ckpt.config_json);
        w.str(ckpt.model_name);
        for (int ch = 0; ch < 3; ++ch) w.f64(ckpt.stats.mean[ch]);
        for (int ch = 0; ch < 3; ++ch) w.f64(ckpt.stats.stddev[ch]);
        for (const std::uint32_t word : ckpt.rng_state) w.u32(word);
        w.u64(ckpt.params.size());
        for (const auto& t : ckpt.params) w.tensor(t);
        w.u64(ckpt.velocity.size());
        for (const auto& t : ckpt.velocity) w.tensor(t);
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) throw MissingFile(path);
    Reader r{f, path};
    Checkpoint ckpt;
    try {
        char magic[8];
        r.bytes(magic, sizeof magic);
        if (std::memcmp(magic, kMagic, sizeof kMagic) != 0)
            throw DataError(path + " is not a checkpoint file");
        const std::uint32_t version = r.u32();
        if (version != kFormatVersion)
            throw DataError(path + " has unsupported checkpoint version " +
                            std::to_string(version));
        ckpt.precision = static_cast<int>(r.u32());
        ckpt.seed = r.u64();
        ckpt.run_seed = r.u64();
        ckpt.epoch = r.u64();
        ckpt.step = r.u64();
        ckpt.best_val_loss = r.f64();
        ckpt.best_epoch = r.u64();
        ckpt.config_digest = r.str();
        ckpt.config_json = r.str();
        ckpt.model_name = r.str();
        for (int ch = 0; ch < 3; ++ch) ckpt.stats.mean[ch] = r.f64();
        for (int ch = 0; ch < 3; ++ch) ckpt.stats.stddev[ch] = r.f64();
        for (std::uint32_t& word : ckpt.rng_state) word = r.u32();
        const std::uint64_t np = r.u64();
        if (np > 4096) throw DataError("implausible tensor count in " + path);
        for (std::uint64_t i = 0; i < np; ++i) ckpt.params.push_back(r.tensor());
        const std::uint64_t nv = r.u64();
        if (nv > 4096) throw DataError("implausible tensor count in " + path);
        for (std::uint64_t i = 0; i < nv; ++i) ckpt.velocity.push_back(r.tensor());
    } catch (...) {
        std::fclose(f);
        throw;
    }
    std::fclose(f);

    if (digest::sha256_hex(ckpt.config_json) != ckpt.config_digest)
        throw DataError("checkpoint " + path + " config digest mismatch");
    return ckpt;
}

}  // namespace corrnoise::checkpoint
