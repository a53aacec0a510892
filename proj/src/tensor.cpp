#include "hlsa/tensor.hpp"

#include <algorithm>
#include <cmath>

namespace hlsa {

std::string Shape::to_string() const {
  return "(" + std::to_string(channels) + "," + std::to_string(height) + "," +
         std::to_string(width) + ")";
}

std::string to_string(Norm norm) {
  switch (norm) {
    case Norm::kL0:
      return "l0";
    case Norm::kL2:
      return "l2";
    case Norm::kLinf:
      return "linf";
  }
  return "?";
}

Norm parse_norm(const std::string& text) {
  if (text == "l2" || text == "L2") return Norm::kL2;
  if (text == "linf" || text == "Linf" || text == "LINF") return Norm::kLinf;
  if (text == "l0" || text == "L0") return Norm::kL0;
  throw ParameterError("unknown norm '" + text + "'");
}

void require_same_shape(const Shape& a, const Shape& b, const char* what) {
  if (a != b) {
    throw ParameterError(std::string(what) + ": shape mismatch " +
                         a.to_string() + " vs " + b.to_string());
  }
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(shape), data_(shape.size(), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data)
    : shape_(shape), data_(std::move(data)) {
  if (data_.size() != shape_.size()) {
    throw ParameterError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_.to_string());
  }
}

Tensor Tensor::vector(std::vector<double> data) {
  Shape shape{1, 1, data.size()};
  return Tensor(shape, std::move(data));
}

bool Tensor::in_unit_box() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return v >= 0.0 && v <= 1.0; });
}

BinaryMask::BinaryMask(Shape shape, std::uint8_t fill)
    : shape_(shape), bits_(shape.size(), fill ? 1 : 0) {}

BinaryMask::BinaryMask(Shape shape, std::vector<std::uint8_t> bits)
    : shape_(shape), bits_(std::move(bits)) {
  if (bits_.size() != shape_.size()) {
    throw ParameterError("mask length does not match shape " +
                         shape_.to_string());
  }
  for (auto b : bits_) {
    if (b > 1) throw ParameterError("mask entries must be 0 or 1");
  }
}

std::size_t BinaryMask::count_ones() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

SignedMask::SignedMask(const BinaryMask& support, int sign)
    : shape_(support.shape()), values_(support.size(), 0) {
  if (sign != 1 && sign != -1) throw ParameterError("sign must be +1 or -1");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    values_[i] = static_cast<std::int8_t>(support[i] * sign);
  }
}

double norm(const Tensor& t, Norm which) {
  auto d = t.data();
  switch (which) {
    case Norm::kL0:
      return static_cast<double>(
          std::count_if(d.begin(), d.end(), [](double v) { return v != 0.0; }));
    case Norm::kL2: {
      double s = 0.0;
      for (double v : d) s += v * v;
      return std::sqrt(s);
    }
    case Norm::kLinf: {
      double m = 0.0;
      for (double v : d) m = std::max(m, std::abs(v));
      return m;
    }
  }
  return 0.0;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape(a.shape(), b.shape(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

BinaryMask flip(const BinaryMask& m) {
  std::vector<std::uint8_t> bits(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) bits[i] = 1 - m[i];
  return BinaryMask(m.shape(), std::move(bits));
}

Tensor apply_mask(const Tensor& t, const BinaryMask& m) {
  require_same_shape(t.shape(), m.shape(), "apply_mask");
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] * m[i];
  return out;
}

Tensor normalized(const Tensor& t, Norm which) {
  double n = norm(t, which);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw ParameterError("cannot normalize a zero or non-finite tensor");
  }
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = t[i] / n;
  return out;
}

Tensor along(const Tensor& base, double scale, const Tensor& dir) {
  require_same_shape(base.shape(), dir.shape(), "along");
  Tensor out(base.shape());
  for (std::size_t i = 0; i < base.size(); ++i) out[i] = base[i] + scale * dir[i];
  return out;
}

Tensor along_masked(const Tensor& base, double scale, const Tensor& dir,
                    const BinaryMask& keep) {
  require_same_shape(base.shape(), dir.shape(), "along_masked");
  require_same_shape(base.shape(), keep.shape(), "along_masked");
  Tensor out(base.shape());
  for (std::size_t i = 0; i < base.size(); ++i) {
    out[i] = base[i] + scale * (dir[i] * keep[i]);
  }
  return out;
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  require_same_shape(a.shape(), b.shape(), "subtract");
  Tensor out(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Tensor clip_unit(const Tensor& t) {
  Tensor out(t.shape());
  for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::clamp(t[i], 0.0, 1.0);
  return out;
}

}  // namespace hlsa
