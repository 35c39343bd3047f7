#pragma once

#include <cstdint>
#include <random>

#include "knockoff/types.hpp"

namespace knockoff {

// Deterministic random stream. All transforms (uniform, normal, gumbel,
// bernoulli) are implemented here rather than via std::*_distribution so that
// identical seeds give identical draws on every platform and toolchain.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(mix_seed(seed)) {}

  // U[0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * kInv53; }

  // U(0,1), both endpoints excluded; safe under log().
  double uniform_open() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * kInv53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; the sine partner is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * kPi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Gumbel(0,1).
  double gumbel() { return -std::log(-std::log(uniform_open())); }

  bool bernoulli(double p) { return uniform() < p; }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // Rejection to avoid modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  Matrix normal_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = normal();
    return m;
  }

  Matrix uniform_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = uniform();
    return m;
  }

  Matrix gumbel_matrix(Index rows, Index cols) {
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
      for (Index i = 0; i < rows; ++i) m(i, j) = gumbel();
    return m;
  }

  // Fisher-Yates shuffle of 0..n-1.
  std::vector<Index> permutation(Index n) {
    std::vector<Index> idx(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
    for (Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Index>(below(static_cast<std::uint64_t>(i + 1)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    return idx;
  }

  // k distinct indices from 0..n-1, ascending.
  std::vector<Index> sample_without_replacement(Index n, Index k);

  std::uint64_t raw() { return gen_(); }

 private:
  static constexpr double kInv53 = 1.0 / 9007199254740992.0;  // 2^-53
  static constexpr double kPi = 3.14159265358979323846;

  static std::mt19937_64 mix_seed(std::uint64_t seed);

  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 step; used to derive independent substreams.
std::uint64_t splitmix64(std::uint64_t& state);

// Derive a substream key from a base seed and up to three stream indices.
// Streams with distinct (a, b, c) are statistically independent, so any
// experiment cell (rho index, replication index, purpose) can be re-run in
// isolation.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

inline Rng derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0) {
  return Rng(derive_seed(seed, a, b, c));
}

}  // namespace knockoff
