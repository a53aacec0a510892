#include "hlsa/weighted_net.hpp"

#include <algorithm>
#include <fstream>
#include <optional>

#include "byte_io.hpp"

namespace hlsa {

namespace {

constexpr std::uint8_t kTagDense = 0;
constexpr std::uint8_t kTagConv2d = 1;
constexpr std::uint8_t kTagRelu = 2;
constexpr std::uint8_t kTagMaxPool2 = 3;
constexpr std::uint8_t kTagFlatten = 4;
constexpr std::uint16_t kVersion = 1;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::size_t conv_extent(std::size_t in, std::uint32_t k, std::uint32_t stride,
                        std::uint32_t pad) {
  std::size_t padded = in + 2 * static_cast<std::size_t>(pad);
  if (padded < k) {
    throw ParameterError("conv2d kernel larger than padded input");
  }
  return (padded - k) / stride + 1;
}

Shape layer_output(const Layer& layer, Shape in) {
  return std::visit(
      Overloaded{
          [&](const layers::Dense& d) {
            if (in.size() != d.in) {
              throw ParameterError("dense expects " + std::to_string(d.in) +
                                   " inputs, got shape " + in.to_string());
            }
            return Shape{1, 1, d.out};
          },
          [&](const layers::Conv2d& c) {
            if (in.channels != c.in_channels) {
              throw ParameterError("conv2d expects " +
                                   std::to_string(c.in_channels) +
                                   " channels, got shape " + in.to_string());
            }
            return Shape{c.out_channels,
                         conv_extent(in.height, c.kernel_h, c.stride, c.padding),
                         conv_extent(in.width, c.kernel_w, c.stride, c.padding)};
          },
          [&](const layers::Relu&) { return in; },
          [&](const layers::MaxPool2&) {
            if (in.height < 2 || in.width < 2) {
              throw ParameterError("maxpool2 needs spatial extent >= 2, got " +
                                   in.to_string());
            }
            return Shape{in.channels, in.height / 2, in.width / 2};
          },
          [&](const layers::Flatten&) { return Shape{1, 1, in.size()}; },
      },
      layer);
}

struct Activation {
  Shape shape;
  std::vector<float> data;
};

Activation run_dense(const layers::Dense& d, const Activation& a) {
  Activation out{Shape{1, 1, d.out}, std::vector<float>(d.out)};
  for (std::uint32_t o = 0; o < d.out; ++o) {
    const float* row = d.weights.data() + static_cast<std::size_t>(o) * d.in;
    float s = d.bias[o];
    for (std::uint32_t i = 0; i < d.in; ++i) s += row[i] * a.data[i];
    out.data[o] = s;
  }
  return out;
}

Activation run_conv(const layers::Conv2d& c, const Activation& a) {
  const Shape out_shape = layer_output(c, a.shape);
  const std::size_t ih = a.shape.height, iw = a.shape.width;
  const std::size_t oh = out_shape.height, ow = out_shape.width;
  const long pad = static_cast<long>(c.padding);
  Activation out{out_shape, std::vector<float>(out_shape.size())};
  for (std::size_t oc = 0; oc < c.out_channels; ++oc) {
    float* plane = out.data.data() + oc * oh * ow;
    std::fill(plane, plane + oh * ow, c.bias[oc]);
    for (std::size_t ic = 0; ic < c.in_channels; ++ic) {
      const float* src = a.data.data() + ic * ih * iw;
      const float* kernel =
          c.weights.data() + (oc * c.in_channels + ic) * c.kernel_h * c.kernel_w;
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
          float s = 0.0f;
          for (std::size_t ky = 0; ky < c.kernel_h; ++ky) {
            long sy = static_cast<long>(y * c.stride + ky) - pad;
            if (sy < 0 || sy >= static_cast<long>(ih)) continue;
            for (std::size_t kx = 0; kx < c.kernel_w; ++kx) {
              long sx = static_cast<long>(x * c.stride + kx) - pad;
              if (sx < 0 || sx >= static_cast<long>(iw)) continue;
              s += kernel[ky * c.kernel_w + kx] * src[sy * iw + sx];
            }
          }
          plane[y * ow + x] += s;
        }
      }
    }
  }
  return out;
}

Activation run_maxpool(const Activation& a) {
  const Shape s = a.shape;
  const Shape os{s.channels, s.height / 2, s.width / 2};
  Activation out{os, std::vector<float>(os.size())};
  for (std::size_t ch = 0; ch < s.channels; ++ch) {
    const float* src = a.data.data() + ch * s.height * s.width;
    for (std::size_t y = 0; y < os.height; ++y) {
      for (std::size_t x = 0; x < os.width; ++x) {
        const float* p = src + 2 * y * s.width + 2 * x;
        out.data[(ch * os.height + y) * os.width + x] =
            std::max(std::max(p[0], p[1]), std::max(p[s.width], p[s.width + 1]));
      }
    }
  }
  return out;
}

void check_params(const Layer& layer, std::size_t offset) {
  std::visit(Overloaded{
                 [&](const layers::Dense& d) {
                   if (d.in == 0 || d.out == 0) {
                     throw FormatError("dense layer with zero dimension", offset);
                   }
                 },
                 [&](const layers::Conv2d& c) {
                   if (c.out_channels == 0 || c.in_channels == 0 ||
                       c.kernel_h == 0 || c.kernel_w == 0) {
                     throw FormatError("conv2d layer with zero dimension", offset);
                   }
                   if (c.stride == 0) {
                     throw FormatError("conv2d stride must be positive", offset);
                   }
                 },
                 [](const auto&) {},
             },
             layer);
}

}  // namespace

Shape WeightedNet::output_shape(Shape input) const {
  if (layers_.empty()) throw ParameterError("network has no layers");
  Shape s = input;
  for (const auto& layer : layers_) s = layer_output(layer, s);
  return s;
}

std::vector<float> WeightedNet::logits(const Tensor& x) const {
  Activation a{x.shape(), std::vector<float>(x.size())};
  for (std::size_t i = 0; i < x.size(); ++i) a.data[i] = static_cast<float>(x[i]);
  for (const auto& layer : layers_) {
    std::visit(Overloaded{
                   [&](const layers::Dense& d) {
                     layer_output(d, a.shape);
                     a = run_dense(d, a);
                   },
                   [&](const layers::Conv2d& c) { a = run_conv(c, a); },
                   [&](const layers::Relu&) {
                     for (float& v : a.data) v = std::max(v, 0.0f);
                   },
                   [&](const layers::MaxPool2& m) {
                     layer_output(m, a.shape);
                     a = run_maxpool(a);
                   },
                   [&](const layers::Flatten&) {
                     a.shape = Shape{1, 1, a.data.size()};
                   },
               },
               layer);
  }
  return std::move(a.data);
}

Label WeightedNet::forward(const Tensor& x) const {
  auto out = logits(x);
  if (out.empty()) throw ParameterError("network produced no outputs");
  // max_element returns the first maximum: ties go to the lowest index.
  return static_cast<Label>(std::max_element(out.begin(), out.end()) - out.begin());
}

std::vector<std::uint8_t> encode_sawt(const WeightedNet& net) {
  detail::ByteWriter w;
  w.raw(std::span<const std::uint8_t>(
      reinterpret_cast<const std::uint8_t*>("SAWT"), 4));
  w.u16_le(kVersion);
  if (net.layers().size() > 0xffff) throw ParameterError("too many layers");
  w.u16_le(static_cast<std::uint16_t>(net.layers().size()));
  for (const auto& layer : net.layers()) {
    std::visit(Overloaded{
                   [&](const layers::Dense& d) {
                     if (d.weights.size() != std::size_t{d.in} * d.out ||
                         d.bias.size() != d.out) {
                       throw ParameterError("dense parameter count mismatch");
                     }
                     w.u8(kTagDense);
                     w.u32_le(d.in);
                     w.u32_le(d.out);
                     for (float v : d.weights) w.f32_le(v);
                     for (float v : d.bias) w.f32_le(v);
                   },
                   [&](const layers::Conv2d& c) {
                     if (c.weights.size() != std::size_t{c.out_channels} *
                                                 c.in_channels * c.kernel_h *
                                                 c.kernel_w ||
                         c.bias.size() != c.out_channels) {
                       throw ParameterError("conv2d parameter count mismatch");
                     }
                     w.u8(kTagConv2d);
                     for (auto v : {c.out_channels, c.in_channels, c.kernel_h,
                                    c.kernel_w, c.stride, c.padding}) {
                       w.u32_le(v);
                     }
                     for (float v : c.weights) w.f32_le(v);
                     for (float v : c.bias) w.f32_le(v);
                   },
                   [&](const layers::Relu&) { w.u8(kTagRelu); },
                   [&](const layers::MaxPool2&) { w.u8(kTagMaxPool2); },
                   [&](const layers::Flatten&) { w.u8(kTagFlatten); },
               },
               layer);
  }
  return std::move(w.bytes());
}

WeightedNet decode_sawt(std::span<const std::uint8_t> bytes) {
  detail::ByteReader r(bytes);
  auto magic = r.take(4, "magic");
  if (!std::equal(magic.begin(), magic.end(), "SAWT")) {
    throw FormatError("bad magic, expected SAWT", 0);
  }
  std::size_t version_at = r.offset();
  if (r.u16_le("version") != kVersion) {
    throw FormatError("unsupported SAWT version", version_at);
  }
  const std::uint16_t count = r.u16_le("layer count");

  // Partial shape tracking: the input shape is not stored, so only
  // constraints implied by earlier layers are checked here.
  std::optional<std::size_t> channels;
  std::size_t flat = 0;  // 0: unknown

  std::vector<Layer> out;
  out.reserve(count);
  for (std::uint16_t li = 0; li < count; ++li) {
    const std::size_t layer_at = r.offset();
    const std::uint8_t tag = r.u8("layer tag");
    switch (tag) {
      case kTagDense: {
        layers::Dense d;
        d.in = r.u32_le("dense in");
        d.out = r.u32_le("dense out");
        check_params(d, layer_at);
        if (flat != 0 && flat != d.in) {
          throw FormatError("dense input " + std::to_string(d.in) +
                                " does not match previous output " +
                                std::to_string(flat),
                            layer_at);
        }
        d.weights = r.f32_array(std::size_t{d.in} * d.out, "dense weights");
        d.bias = r.f32_array(d.out, "dense bias");
        channels = 1;
        flat = d.out;
        out.emplace_back(std::move(d));
        break;
      }
      case kTagConv2d: {
        layers::Conv2d c;
        c.out_channels = r.u32_le("conv out_ch");
        c.in_channels = r.u32_le("conv in_ch");
        c.kernel_h = r.u32_le("conv kh");
        c.kernel_w = r.u32_le("conv kw");
        c.stride = r.u32_le("conv stride");
        c.padding = r.u32_le("conv pad");
        check_params(c, layer_at);
        if (channels && *channels != c.in_channels) {
          throw FormatError("conv2d input channels " +
                                std::to_string(c.in_channels) +
                                " do not match previous " +
                                std::to_string(*channels),
                            layer_at);
        }
        c.weights = r.f32_array(std::size_t{c.out_channels} * c.in_channels *
                                    c.kernel_h * c.kernel_w,
                                "conv weights");
        c.bias = r.f32_array(c.out_channels, "conv bias");
        channels = c.out_channels;
        flat = 0;
        out.emplace_back(std::move(c));
        break;
      }
      case kTagRelu:
        out.emplace_back(layers::Relu{});
        break;
      case kTagMaxPool2:
        flat = 0;
        out.emplace_back(layers::MaxPool2{});
        break;
      case kTagFlatten:
        channels = 1;
        out.emplace_back(layers::Flatten{});
        break;
      default:
        throw FormatError("unknown layer tag " + std::to_string(tag), layer_at);
    }
  }
  if (r.remaining() != 0) {
    throw FormatError("trailing bytes after last layer", r.offset());
  }
  if (out.empty()) throw FormatError("network has no layers", r.offset());
  return WeightedNet(std::move(out));
}

WeightedNet load_weighted_net(const std::filesystem::path& path) {
  auto bytes = detail::read_file_bytes(path);
  return decode_sawt(bytes);
}

void save_weighted_net(const WeightedNet& net, const std::filesystem::path& path) {
  auto bytes = encode_sawt(net);
  detail::write_file_bytes(path, bytes);
}

NetOracle::NetOracle(WeightedNet net, Shape input_shape)
    : net_(std::move(net)), input_shape_(input_shape) {
  num_classes_ = net_.output_shape(input_shape_).size();
}

}  // namespace hlsa
