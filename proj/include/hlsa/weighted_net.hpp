#ifndef HLSA_WEIGHTED_NET_HPP
#define HLSA_WEIGHTED_NET_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "hlsa/oracle.hpp"

namespace hlsa {

// Malformed binary input. offset is the byte position where parsing failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

namespace layers {

struct Dense {
  std::uint32_t in = 0;
  std::uint32_t out = 0;
  std::vector<float> weights;  // out × in, row-major
  std::vector<float> bias;     // out
};

// Cross-correlation with zero padding (no kernel flip).
struct Conv2d {
  std::uint32_t out_channels = 0;
  std::uint32_t in_channels = 0;
  std::uint32_t kernel_h = 0;
  std::uint32_t kernel_w = 0;
  std::uint32_t stride = 1;
  std::uint32_t padding = 0;
  std::vector<float> weights;  // (out, in, kh, kw)
  std::vector<float> bias;     // out
};

struct Relu {};
struct MaxPool2 {};  // 2×2 window, stride 2, floor
struct Flatten {};

}  // namespace layers

using Layer = std::variant<layers::Dense, layers::Conv2d, layers::Relu,
                           layers::MaxPool2, layers::Flatten>;

class WeightedNet {
 public:
  WeightedNet() = default;
  explicit WeightedNet(std::vector<Layer> layers) : layers_(std::move(layers)) {}

  const std::vector<Layer>& layers() const { return layers_; }

  // Shape produced for an input of the given shape; throws ParameterError
  // when consecutive layers do not compose.
  Shape output_shape(Shape input) const;

  std::vector<float> logits(const Tensor& x) const;
  // argmax of the final layer, ties toward the lowest index.
  Label forward(const Tensor& x) const;

 private:
  std::vector<Layer> layers_;
};

std::vector<std::uint8_t> encode_sawt(const WeightedNet& net);
WeightedNet decode_sawt(std::span<const std::uint8_t> bytes);

WeightedNet load_weighted_net(const std::filesystem::path& path);
void save_weighted_net(const WeightedNet& net, const std::filesystem::path& path);

// WeightedNet behind the Oracle interface for a fixed input shape.
class NetOracle : public Oracle {
 public:
  NetOracle(WeightedNet net, Shape input_shape);

  Label decide(const Tensor& x) const override { return net_.forward(x); }
  std::size_t num_classes() const override { return num_classes_; }
  Shape input_shape() const override { return input_shape_; }

  const WeightedNet& net() const { return net_; }

 private:
  WeightedNet net_;
  Shape input_shape_;
  std::size_t num_classes_;
};

}  // namespace hlsa

#endif  // HLSA_WEIGHTED_NET_HPP
