#include "knockoff/rng.hpp"

#include <algorithm>

namespace knockoff {

std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 Rng::mix_seed(std::uint64_t seed) {
  std::uint64_t s = seed;
  const std::uint64_t w0 = splitmix64(s);
  const std::uint64_t w1 = splitmix64(s);
  const std::uint64_t w2 = splitmix64(s);
  const std::uint64_t w3 = splitmix64(s);
  std::seed_seq seq{static_cast<std::uint32_t>(w0), static_cast<std::uint32_t>(w0 >> 32),
                    static_cast<std::uint32_t>(w1), static_cast<std::uint32_t>(w1 >> 32),
                    static_cast<std::uint32_t>(w2), static_cast<std::uint32_t>(w2 >> 32),
                    static_cast<std::uint32_t>(w3), static_cast<std::uint32_t>(w3 >> 32)};
  return std::mt19937_64(seq);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64(s);
  s = h ^ (a + 0x243f6a8885a308d3ULL);
  h = splitmix64(s);
  s = h ^ (b + 0x13198a2e03707344ULL);
  h = splitmix64(s);
  s = h ^ (c + 0xa4093822299f31d0ULL);
  return splitmix64(s);
}

std::vector<Index> Rng::sample_without_replacement(Index n, Index k) {
  if (k > n) throw DimensionError("sample_without_replacement: k > n");
  std::vector<Index> idx = permutation(n);
  idx.resize(static_cast<std::size_t>(k));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace knockoff
