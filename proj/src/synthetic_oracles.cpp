#include "hlsa/synthetic_oracles.hpp"

#include <algorithm>
#include <cmath>

namespace hlsa {

HyperplaneOracle::HyperplaneOracle(Tensor w, double b)
    : w_(std::move(w)), b_(b) {
  if (l2(w_) == 0.0) throw ParameterError("hyperplane normal must be nonzero");
}

Label HyperplaneOracle::decide(const Tensor& x) const {
  return dot(w_, x) + b_ > 0.0 ? 1 : 0;
}

std::optional<double> HyperplaneOracle::boundary_distance(
    const Tensor& x, const Tensor& u) const {
  double wu = dot(w_, u);
  if (wu == 0.0) return std::nullopt;
  double t = (-b_ - dot(w_, x)) / wu;
  if (!(t > 0.0)) return std::nullopt;
  return t;
}

double HyperplaneOracle::l2_distance(const Tensor& x) const {
  return std::abs(dot(w_, x) + b_) / l2(w_);
}

SphereOracle::SphereOracle(Tensor center, double radius)
    : center_(std::move(center)), radius_(radius) {
  if (!(radius > 0.0)) throw ParameterError("sphere radius must be positive");
}

Label SphereOracle::decide(const Tensor& x) const {
  return l2(subtract(x, center_)) < radius_ ? 1 : 0;
}

double SphereOracle::min_escape(const Tensor& x) const {
  return radius_ - l2(subtract(x, center_));
}

MaskLogicOracle::MaskLogicOracle(Shape shape, std::vector<std::size_t> required,
                                 std::optional<Tensor> reference)
    : required_(std::move(required)),
      reference_(reference ? std::move(*reference) : Tensor(shape)) {
  require_same_shape(reference_.shape(), shape, "mask logic oracle");
  if (required_.empty()) {
    throw ParameterError("mask logic oracle needs at least one dimension");
  }
  for (auto d : required_) {
    if (d >= shape.size()) {
      throw ParameterError("required dimension " + std::to_string(d) +
                           " out of range");
    }
  }
}

Label MaskLogicOracle::decide(const Tensor& x) const {
  bool all_kept = std::all_of(required_.begin(), required_.end(),
                              [&](std::size_t d) { return x[d] != reference_[d]; });
  return all_kept ? 1 : 0;
}

}  // namespace hlsa
