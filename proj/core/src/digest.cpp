#include "corrnoise/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <vector>

#include "corrnoise/errors.hpp"

namespace corrnoise::digest {

namespace {
std::string to_hex(std::span<const unsigned char> raw) {
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(raw.size() * 2);
    for (const unsigned char b : raw) {
        out.push_back(hex[b >> 4]);
        out.push_back(hex[b & 0xF]);
    }
    return out;
}
}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> raw{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), raw.data(), &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 computation failed");
    return to_hex(std::span<const unsigned char>(raw.data(), len));
}

std::string sha256_hex(const std::string& text) {
    return sha256_hex(std::span<const std::uint8_t>(
        reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string sha256_file_hex(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (f == nullptr) throw MissingFile(path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::vector<unsigned char> buf(1 << 16);
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), f)) > 0)
        EVP_DigestUpdate(ctx, buf.data(), n);
    std::fclose(f);
    std::array<unsigned char, EVP_MAX_MD_SIZE> raw{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, raw.data(), &len);
    EVP_MD_CTX_free(ctx);
    return to_hex(std::span<const unsigned char>(raw.data(), len));
}

}  // namespace corrnoise::digest
