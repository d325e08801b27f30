#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>

namespace tgm {

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// First `digits` hex digits of the FNV-1a hash.
inline std::string short_hash(std::string_view data, int digits = 12) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(data)));
  return std::string(buf, static_cast<std::size_t>(digits));
}

}  // namespace tgm
