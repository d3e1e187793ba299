#pragma once

#include <cstdint>
#include <random>

namespace nct::rng {

/// SplitMix64 step. Used to derive independent substreams from a master
/// seed: resampling iteration k always sees the same engine regardless of
/// evaluation order, which keeps bootstrap/permutation loops deterministic
/// and safely parallelizable.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix(std::uint64_t seed) { return splitmix64(seed); }

template <typename... Rest>
constexpr std::uint64_t mix(std::uint64_t seed, std::uint64_t id, Rest... rest) {
  return mix(splitmix64(seed ^ splitmix64(id)), rest...);
}

/// Engine for substream (id0, id1, ...) of a master seed.
template <typename... Ids>
inline std::mt19937_64 stream(std::uint64_t master, Ids... ids) {
  return std::mt19937_64(mix(master, static_cast<std::uint64_t>(ids)...));
}

}  // namespace nct::rng
