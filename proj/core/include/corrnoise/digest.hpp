#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>

namespace corrnoise::digest {

// SHA-256, lowercase hex.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string& text);
std::string sha256_file_hex(const std::string& path);

}  // namespace corrnoise::digest
