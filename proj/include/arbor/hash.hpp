#pragma once

#include <cstdint>
#include <string>

namespace arbor {

// FNV-1a 64-bit over length-prefixed fields: stable across platforms and
// standard-library implementations.
struct Fnv1a64 {
  std::uint64_t state = 0xcbf29ce484222325ull;

  void feed_bytes(const void* data, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      state ^= p[i];
      state *= 0x00000100000001b3ull;
    }
  }

  void feed(const std::string& s) {
    std::uint64_t len = s.size();
    unsigned char lenb[8];
    for (int i = 0; i < 8; ++i) lenb[i] = static_cast<unsigned char>(len >> (8 * i));
    feed_bytes(lenb, 8);
    feed_bytes(s.data(), s.size());
  }
};

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xf];
    v >>= 4;
  }
  return out;
}

}  // namespace arbor
