#ifndef HLSA_SYNTHETIC_ORACLES_HPP
#define HLSA_SYNTHETIC_ORACLES_HPP

#include <optional>
#include <vector>

#include "hlsa/oracle.hpp"

namespace hlsa {

// Two-class linear classifier: class 1 iff w·x + b > 0.
class HyperplaneOracle : public Oracle {
 public:
  HyperplaneOracle(Tensor w, double b);

  Label decide(const Tensor& x) const override;
  std::size_t num_classes() const override { return 2; }
  Shape input_shape() const override { return w_.shape(); }

  const Tensor& weights() const { return w_; }
  double bias() const { return b_; }

  // Distance t > 0 at which x + t·u reaches the hyperplane, if any.
  std::optional<double> boundary_distance(const Tensor& x,
                                          const Tensor& u) const;
  // Minimal L2 distance from x to the hyperplane.
  double l2_distance(const Tensor& x) const;

 private:
  Tensor w_;
  double b_;
};

// Two-class ball classifier: class 1 strictly inside the ball.
class SphereOracle : public Oracle {
 public:
  SphereOracle(Tensor center, double radius);

  Label decide(const Tensor& x) const override;
  std::size_t num_classes() const override { return 2; }
  Shape input_shape() const override { return center_.shape(); }

  const Tensor& center() const { return center_; }
  double radius() const { return radius_; }

  // Minimal L2 perturbation that moves an inside point x out of the ball.
  double min_escape(const Tensor& x) const;

 private:
  Tensor center_;
  double radius_;
};

// Class 1 iff every required dimension of x differs from the reference
// point. Evaluated on x0 + λθ∘keep with x0 = reference, this is "adversarial
// iff the keep-mask retains all required dimensions".
class MaskLogicOracle : public Oracle {
 public:
  MaskLogicOracle(Shape shape, std::vector<std::size_t> required,
                  std::optional<Tensor> reference = std::nullopt);

  Label decide(const Tensor& x) const override;
  std::size_t num_classes() const override { return 2; }
  Shape input_shape() const override { return reference_.shape(); }

  const std::vector<std::size_t>& required() const { return required_; }

 private:
  std::vector<std::size_t> required_;
  Tensor reference_;
};

}  // namespace hlsa

#endif  // HLSA_SYNTHETIC_ORACLES_HPP
