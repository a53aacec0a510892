#include "hlsa/datasets.hpp"

#include <fstream>
#include <string>

#include "byte_io.hpp"

namespace hlsa {

namespace {

constexpr std::uint32_t kIdxImages = 0x00000803;
constexpr std::uint32_t kIdxLabels = 0x00000801;

}  // namespace

std::vector<Tensor> read_idx_images(const std::filesystem::path& path) {
  auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes);
  if (r.u32_be("idx magic") != kIdxImages) {
    throw FormatError("not an IDX image file: " + path.string(), 0);
  }
  const std::uint32_t count = r.u32_be("image count");
  const std::uint32_t rows = r.u32_be("rows");
  const std::uint32_t cols = r.u32_be("cols");
  const Shape shape{1, rows, cols};
  std::vector<Tensor> images;
  images.reserve(count);
  for (std::uint32_t n = 0; n < count; ++n) {
    auto px = r.take(shape.size(), "pixels");
    Tensor t(shape);
    for (std::size_t i = 0; i < px.size(); ++i) t[i] = px[i] / 255.0;
    images.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes", r.offset());
  return images;
}

std::vector<Label> read_idx_labels(const std::filesystem::path& path) {
  auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes);
  if (r.u32_be("idx magic") != kIdxLabels) {
    throw FormatError("not an IDX label file: " + path.string(), 0);
  }
  const std::uint32_t count = r.u32_be("label count");
  auto raw = r.take(count, "labels");
  if (r.remaining() != 0) throw FormatError("trailing bytes", r.offset());
  return std::vector<Label>(raw.begin(), raw.end());
}

void write_idx_images(const std::filesystem::path& path,
                      const std::vector<std::vector<std::uint8_t>>& pixels,
                      std::uint32_t rows, std::uint32_t cols) {
  detail::ByteWriter w;
  w.u32_be(kIdxImages);
  w.u32_be(static_cast<std::uint32_t>(pixels.size()));
  w.u32_be(rows);
  w.u32_be(cols);
  for (const auto& img : pixels) {
    if (img.size() != std::size_t{rows} * cols) {
      throw ParameterError("image size does not match rows*cols");
    }
    w.raw(img);
  }
  detail::write_file_bytes(path, w.bytes());
}

void write_idx_labels(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& labels) {
  detail::ByteWriter w;
  w.u32_be(kIdxLabels);
  w.u32_be(static_cast<std::uint32_t>(labels.size()));
  w.raw(labels);
  detail::write_file_bytes(path, w.bytes());
}

std::vector<Tensor> read_raw_tensors(const std::filesystem::path& path) {
  auto bytes = detail::read_file_bytes(path);
  detail::ByteReader r(bytes);
  Shape shape;
  shape.channels = r.u32_le("channels");
  shape.height = r.u32_le("height");
  shape.width = r.u32_le("width");
  const std::size_t m = shape.size();
  if (m == 0) throw FormatError("raw tensor shape has a zero extent", 0);
  if (r.remaining() % (4 * m) != 0) {
    throw FormatError("payload is not a whole number of samples", r.offset());
  }
  const std::size_t count = r.remaining() / (4 * m);
  std::vector<Tensor> out;
  out.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    auto values = r.f32_array(m, "sample");
    out.emplace_back(shape, std::vector<double>(values.begin(), values.end()));
  }
  return out;
}

void write_raw_tensors(const std::filesystem::path& path, Shape shape,
                       const std::vector<Tensor>& samples) {
  detail::ByteWriter w;
  w.u32_le(static_cast<std::uint32_t>(shape.channels));
  w.u32_le(static_cast<std::uint32_t>(shape.height));
  w.u32_le(static_cast<std::uint32_t>(shape.width));
  for (const auto& s : samples) {
    require_same_shape(s.shape(), shape, "write_raw_tensors");
    for (double v : s.data()) w.f32_le(static_cast<float>(v));
  }
  detail::write_file_bytes(path, w.bytes());
}

std::vector<Label> read_label_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<Label> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    try {
      labels.push_back(static_cast<Label>(std::stol(line)));
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) +
                               ": not an integer label");
    }
  }
  return labels;
}

LabeledImages load_dataset(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  LabeledImages out;
  if (fs::is_directory(path)) {
    auto pick = [&](const char* a, const char* b) {
      fs::path p = path / a;
      if (fs::exists(p)) return p;
      p = path / b;
      if (fs::exists(p)) return p;
      throw std::runtime_error("no " + std::string(a) + " in " + path.string());
    };
    out.images = read_idx_images(pick("t10k-images-idx3-ubyte", "images-idx3-ubyte"));
    out.labels = read_idx_labels(pick("t10k-labels-idx1-ubyte", "labels-idx1-ubyte"));
  } else {
    out.images = read_raw_tensors(path);
    out.labels = read_label_csv(path.string() + ".labels.csv");
  }
  if (out.images.size() != out.labels.size()) {
    throw std::runtime_error("image/label count mismatch in " + path.string());
  }
  return out;
}

}  // namespace hlsa
