#ifndef HLSA_RNG_HPP
#define HLSA_RNG_HPP

#include <cstdint>
#include <random>

#include "hlsa/tensor.hpp"

namespace hlsa {

// Seeded sample stream. One instance per attack run; not thread-safe.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  // Uniform integer in [lo, hi].
  std::size_t uniform_index(std::size_t lo, std::size_t hi);

  // Derives an independent per-item seed from a master seed (splitmix64).
  static std::uint64_t derive(std::uint64_t master, std::uint64_t item);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// i.i.d. standard-normal entries.
Tensor sample_gaussian_direction(Rng& rng, Shape shape);

// Exactly p entries set to 0, chosen uniformly without replacement; the
// rest are 1. Requires 1 <= p <= shape.size().
BinaryMask sample_zero_mask(Rng& rng, Shape shape, std::size_t p);

}  // namespace hlsa

#endif  // HLSA_RNG_HPP
