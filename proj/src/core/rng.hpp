#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace af {

// All randomness in the toolkit flows from one master seed through named
// substreams, so adding a consumer never shifts the draws of another.
inline uint64_t substream_seed(uint64_t master, std::string_view name,
                               uint64_t index = 0) {
  uint64_t h = 1469598103934665603ull;  // FNV-1a
  auto mix = [&h](uint64_t x) {
    for (int i = 0; i < 8; ++i) {
      h ^= (x >> (8 * i)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  mix(master);
  mix(index);
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ull;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ull;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebull;
  return h ^ (h >> 31);
}

inline std::mt19937_64 substream_rng(uint64_t master, std::string_view name,
                                     uint64_t index = 0) {
  return std::mt19937_64(substream_seed(master, name, index));
}

}  // namespace af
