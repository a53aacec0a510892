#ifndef HLSA_TENSOR_HPP
#define HLSA_TENSOR_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hlsa {

// Thrown when an argument violates an operation's documented range.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Shape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const { return channels * height * width; }
  bool operator==(const Shape&) const = default;
  std::string to_string() const;
};

enum class Norm { kL0, kL2, kLinf };

std::string to_string(Norm norm);
Norm parse_norm(const std::string& text);

class BinaryMask;

// Dense C×H×W real tensor, flattened row-major (channel, row, column).
// Holds images (values in [0,1]) as well as unconstrained directions.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  // Convenience for flat vectors: shape (1, 1, n).
  static Tensor vector(std::vector<double> data);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::span<const double> data() const { return data_; }
  std::span<double> data() { return data_; }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  bool in_unit_box() const;

  bool operator==(const Tensor&) const = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Entries are exactly 0 or 1.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(Shape shape, std::uint8_t fill = 1);
  BinaryMask(Shape shape, std::vector<std::uint8_t> bits);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return bits_.size(); }
  std::span<const std::uint8_t> bits() const { return bits_; }

  std::uint8_t operator[](std::size_t i) const { return bits_[i]; }
  void set(std::size_t i, bool on) { bits_[i] = on ? 1 : 0; }

  std::size_t count_ones() const;

  bool operator==(const BinaryMask&) const = default;

 private:
  Shape shape_;
  std::vector<std::uint8_t> bits_;
};

// Entries in {-1, 0, +1}.
class SignedMask {
 public:
  SignedMask() = default;
  SignedMask(const BinaryMask& support, int sign);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return values_.size(); }
  std::span<const std::int8_t> values() const { return values_; }
  std::int8_t operator[](std::size_t i) const { return values_[i]; }

  bool operator==(const SignedMask&) const = default;

 private:
  Shape shape_;
  std::vector<std::int8_t> values_;
};

double norm(const Tensor& t, Norm which);
inline double l0(const Tensor& t) { return norm(t, Norm::kL0); }
inline double l2(const Tensor& t) { return norm(t, Norm::kL2); }
inline double linf(const Tensor& t) { return norm(t, Norm::kLinf); }

double dot(const Tensor& a, const Tensor& b);

// 1 - m elementwise.
BinaryMask flip(const BinaryMask& m);

// t ∘ m.
Tensor apply_mask(const Tensor& t, const BinaryMask& m);

// t / norm(t, which). Throws ParameterError on a zero tensor.
Tensor normalized(const Tensor& t, Norm which);

// base + scale * dir, computed entrywise as base[i] + scale * dir[i].
Tensor along(const Tensor& base, double scale, const Tensor& dir);

// base + scale * (dir ∘ keep), entrywise base[i] + scale * (dir[i] * keep[i]).
// With an all-ones mask this is bit-identical to along().
Tensor along_masked(const Tensor& base, double scale, const Tensor& dir,
                    const BinaryMask& keep);

Tensor subtract(const Tensor& a, const Tensor& b);
Tensor clip_unit(const Tensor& t);

void require_same_shape(const Shape& a, const Shape& b, const char* what);

}  // namespace hlsa

#endif  // HLSA_TENSOR_HPP
