#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace overlapctl {

/// Derives an independent stream seed from a user seed and a salt
/// (fold id, feature index, ...) with the splitmix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Unbiased draw from [0, n) by rejection. std::uniform_int_distribution is
/// not pinned by the standard, so shuffles go through this instead.
inline std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t n) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t rem = (max % n + 1) % n;  // 2^64 mod n
  const std::uint64_t bound = max - rem;
  std::uint64_t x = gen();
  while (x > bound) x = gen();
  return x % n;
}

/// Fisher-Yates shuffle with a fixed draw sequence.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& gen) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(uniform_below(gen, i));
    std::swap(v[i - 1], v[j]);
  }
}

/// Uniform double in [0, 1) from the top 53 bits of one draw.
inline double uniform_unit(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace overlapctl
