#pragma once

#include <cstdint>
#include <random>

namespace eqz {

// splitmix64 finalizer. Used for all seed derivation so that the stream a
// block sees depends only on (master seed, block index), never on worker
// scheduling.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index * 0xD6E8FEB86659FD93ULL + 0x2545F4914F6CDD1DULL));
}

inline std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace eqz
