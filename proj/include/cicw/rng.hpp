#pragma once

#include <cstdint>
#include <random>

namespace cicw {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Independent seed for (stream, index) under a base seed, so e.g. the
// shuffle stream never shares state with the mixing stream.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream,
                                 std::uint64_t index = 0) {
  return splitmix64(splitmix64(splitmix64(base) ^ stream) ^ index);
}

namespace streams {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kShuffle = 2;
inline constexpr std::uint64_t kMix = 3;
inline constexpr std::uint64_t kData = 4;
inline constexpr std::uint64_t kNoise = 5;
inline constexpr std::uint64_t kTest = 6;
inline constexpr std::uint64_t kTheorem = 7;
}  // namespace streams

}  // namespace cicw
