#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace interop {

// FNV-1a, 64 bit.
constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (const char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// 16 lowercase hex digits.
std::string hex64(std::uint64_t value);

inline std::string stable_hash(std::string_view data) { return hex64(fnv1a64(data)); }

}  // namespace interop
