// Oracles that exist only to observe or pin down attack behavior.
#ifndef HLSA_TESTS_TEST_ORACLES_HPP
#define HLSA_TESTS_TEST_ORACLES_HPP

#include <atomic>
#include <cstddef>

#include "hlsa/oracle.hpp"

namespace testoracles {

// Same class for every input.
class ConstantOracle : public hlsa::Oracle {
 public:
  ConstantOracle(hlsa::Shape shape, hlsa::Label label) : shape_(shape), label_(label) {}
  hlsa::Label decide(const hlsa::Tensor&) const override { return label_; }
  std::size_t num_classes() const override { return 2; }
  hlsa::Shape input_shape() const override { return shape_; }

 private:
  hlsa::Shape shape_;
  hlsa::Label label_;
};

// Forwards to another oracle and counts every decide() independently of
// any ledger.
class SpyOracle : public hlsa::Oracle {
 public:
  explicit SpyOracle(const hlsa::Oracle& inner) : inner_(inner) {}
  hlsa::Label decide(const hlsa::Tensor& x) const override {
    ++calls_;
    return inner_.decide(x);
  }
  std::size_t num_classes() const override { return inner_.num_classes(); }
  hlsa::Shape input_shape() const override { return inner_.input_shape(); }
  std::size_t calls() const { return calls_; }
  void reset() { calls_ = 0; }

 private:
  const hlsa::Oracle& inner_;
  mutable std::atomic<std::size_t> calls_{0};
};

}  // namespace testoracles

#endif  // HLSA_TESTS_TEST_ORACLES_HPP
