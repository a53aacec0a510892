#include "hlsa/rng.hpp"

#include <numeric>
#include <utility>

namespace hlsa {

std::size_t Rng::uniform_index(std::size_t lo, std::size_t hi) {
  std::uniform_int_distribution<std::size_t> dist(lo, hi);
  return dist(engine_);
}

std::uint64_t Rng::derive(std::uint64_t master, std::uint64_t item) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (item + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Tensor sample_gaussian_direction(Rng& rng, Shape shape) {
  Tensor out(shape);
  for (double& v : out.data()) v = rng.normal();
  return out;
}

BinaryMask sample_zero_mask(Rng& rng, Shape shape, std::size_t p) {
  const std::size_t m = shape.size();
  if (p < 1 || p > m) {
    throw ParameterError("zero count p=" + std::to_string(p) +
                         " outside [1, " + std::to_string(m) + "]");
  }
  // Partial Fisher-Yates: the first p slots end up as a uniform p-subset.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  BinaryMask mask(shape, 1);
  for (std::size_t k = 0; k < p; ++k) {
    std::size_t j = rng.uniform_index(k, m - 1);
    std::swap(order[k], order[j]);
    mask.set(order[k], false);
  }
  return mask;
}

}  // namespace hlsa
