#pragma once

#include <cstdint>
#include <random>

namespace saa {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Independent engine for stream `stream` of a run seeded with `seed`.
/// Streams are derived by hashing (seed, counter), so stream i does not
/// depend on how many other streams exist or how much they were used.
inline Engine make_stream(std::uint64_t seed, std::uint64_t stream) {
  return Engine(splitmix64(splitmix64(seed) ^ splitmix64(stream + 1)));
}

}  // namespace saa
