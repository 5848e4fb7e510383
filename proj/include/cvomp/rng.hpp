#pragma once

#include <cstdint>
#include <random>

namespace cvomp {

// Counter-based seed derivation: every (master, stream) pair maps to an
// independent 64-bit seed through the splitmix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return splitmix64(splitmix64(master) ^ (stream * 0xD1B54A32D192ED03ULL + 0x2545F4914F6CDD1DULL));
}

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t master, std::uint64_t stream) {
  return Engine{derive_seed(master, stream)};
}

}  // namespace cvomp
