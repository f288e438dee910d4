#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mmarc {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string& text);

// First 8 bytes of SHA-256(bytes), big-endian. Used to derive task-scoped
// RNG seeds that are stable across platforms.
std::uint64_t sha256_prefix64(const std::string& text);

}  // namespace mmarc
