#pragma once

#include <cstdint>
#include <cstddef>
#include <random>

namespace qexam {

// splitmix64 finalizer; used to turn (root seed, counter) into a child seed.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
  std::uint64_t z = root + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Deterministic random source. Every stochastic choice in the toolkit draws
// from one of these; equal seeds give bit-identical runs. Child streams are
// derived from the seed by counter, so trial results do not depend on how
// many draws the parent made in between.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform double in [0, 1), 53 random bits.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  int next_bit() { return static_cast<int>(next_u64() & 1u); }

  int next_sign() { return next_bit() ? -1 : +1; }

  bool bernoulli(double p) { return next_double() < p; }

  // Uniform index in [0, n); rejection sampling keeps it unbiased.
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return static_cast<std::size_t>(v % n);
  }

  Rng derive(std::uint64_t index) const { return Rng(derive_seed(seed_, index)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace qexam
