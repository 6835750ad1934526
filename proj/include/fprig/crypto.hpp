#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fprig {

using Bytes = std::vector<std::uint8_t>;

/// SHA-256 of `data`, rendered as 64 lowercase hex characters.
std::string sha256_hex(std::span<const std::uint8_t> data);
std::string sha256_hex(std::string_view data);

/// Bytes from the OS cryptographic generator.
Bytes random_bytes(std::size_t n);

std::string to_hex(std::span<const std::uint8_t> data);
Bytes from_hex(std::string_view hex);  // throws Error(parse) on bad input

bool is_lower_hex64(std::string_view s);

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);  // throws Error(parse)

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

}  // namespace fprig
