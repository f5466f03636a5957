#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace corrnoise {

// Philox4x32-10 counter-based generator. A stream is (key, 128-bit counter);
// equal seeds give bitwise-equal sequences on any platform, and split(i)
// derives an independent child stream from the key alone, so children do not
// depend on how much the parent has already drawn.
class RandomStream {
public:
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit RandomStream(std::uint64_t seed)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    static Block philox(const Key& key, Block ctr) {
        Key k = key;
        ctr = round_once(ctr, k);
        for (int r = 1; r < 10; ++r) {
            k = {k[0] + 0x9E3779B9u, k[1] + 0xBB67AE85u};
            ctr = round_once(ctr, k);
        }
        return ctr;
    }

    RandomStream split(std::uint64_t index) const {
        const Block out = philox(key_, {static_cast<std::uint32_t>(index),
                                        static_cast<std::uint32_t>(index >> 32), 0x5EEDBA5Eu,
                                        0xC0FFEE42u});
        RandomStream child(0);
        child.key_ = {out[0], out[1]};
        return child;
    }

    std::uint32_t next_u32() {
        if (buf_pos_ == 4) {
            buf_ = philox(key_, ctr_);
            advance_counter();
            buf_pos_ = 0;
        }
        return buf_[buf_pos_++];
    }

    std::uint64_t next_u64() {
        const std::uint64_t lo = next_u32();
        const std::uint64_t hi = next_u32();
        return lo | (hi << 32);
    }

    // Uniform on the open interval (0,1): 53 mantissa bits centered off zero.
    double uniform01() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; pairs are drawn together and the second
    // member is handed out on the next call.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    static constexpr std::size_t kStateWords = 16;

    std::array<std::uint32_t, kStateWords> save_state() const {
        std::array<std::uint32_t, kStateWords> w{};
        w[0] = key_[0];
        w[1] = key_[1];
        for (int i = 0; i < 4; ++i) w[2 + i] = ctr_[i];
        for (int i = 0; i < 4; ++i) w[6 + i] = buf_[i];
        w[10] = static_cast<std::uint32_t>(buf_pos_);
        w[11] = have_spare_ ? 1u : 0u;
        const auto bits = std::bit_cast<std::uint64_t>(spare_);
        w[12] = static_cast<std::uint32_t>(bits);
        w[13] = static_cast<std::uint32_t>(bits >> 32);
        return w;
    }

    static RandomStream restore_state(const std::array<std::uint32_t, kStateWords>& w) {
        RandomStream s(0);
        s.key_ = {w[0], w[1]};
        for (int i = 0; i < 4; ++i) s.ctr_[i] = w[2 + i];
        for (int i = 0; i < 4; ++i) s.buf_[i] = w[6 + i];
        s.buf_pos_ = static_cast<int>(w[10]);
        s.have_spare_ = w[11] != 0;
        s.spare_ = std::bit_cast<double>(static_cast<std::uint64_t>(w[12]) |
                                         (static_cast<std::uint64_t>(w[13]) << 32));
        return s;
    }

    friend bool operator==(const RandomStream& a, const RandomStream& b) {
        return a.save_state() == b.save_state();
    }

private:
    static Block round_once(const Block& ctr, const Key& key) {
        const std::uint64_t p0 = 0xD2511F53ull * ctr[0];
        const std::uint64_t p1 = 0xCD9E8D57ull * ctr[2];
        return {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                static_cast<std::uint32_t>(p0)};
    }

    void advance_counter() {
        for (int i = 0; i < 4; ++i)
            if (++ctr_[i] != 0) break;
    }

    Key key_;
    Block ctr_{0, 0, 0, 0};
    Block buf_{0, 0, 0, 0};
    int buf_pos_ = 4;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// Stable 64-bit seed derivation for named sub-purposes (shuffling, init, ...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    const auto out = RandomStream::philox(
        {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        {static_cast<std::uint32_t>(tag), static_cast<std::uint32_t>(tag >> 32), 0x7A67D00Du,
         0x0DDBA11u});
    return static_cast<std::uint64_t>(out[0]) | (static_cast<std::uint64_t>(out[1]) << 32);
}

}  // namespace corrnoise
