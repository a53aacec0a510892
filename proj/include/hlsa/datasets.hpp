#ifndef HLSA_DATASETS_HPP
#define HLSA_DATASETS_HPP

#include <filesystem>
#include <vector>

#include "hlsa/oracle.hpp"
#include "hlsa/tensor.hpp"

namespace hlsa {

// MNIST IDX: images (magic 0x00000803) scaled to [0,1] by /255, shape
// (1, rows, cols); labels (magic 0x00000801).
std::vector<Tensor> read_idx_images(const std::filesystem::path& path);
std::vector<Label> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path,
                      const std::vector<std::vector<std::uint8_t>>& pixels,
                      std::uint32_t rows, std::uint32_t cols);
void write_idx_labels(const std::filesystem::path& path,
                      const std::vector<std::uint8_t>& labels);

// Raw tensor file: shape header of three u32 LE (channels, height, width),
// then any number of samples as 32-bit LE reals, row-major.
std::vector<Tensor> read_raw_tensors(const std::filesystem::path& path);
void write_raw_tensors(const std::filesystem::path& path, Shape shape,
                       const std::vector<Tensor>& samples);

// One integer label per line.
std::vector<Label> read_label_csv(const std::filesystem::path& path);

struct LabeledImages {
  std::vector<Tensor> images;
  std::vector<Label> labels;
};

// Resolves a dataset argument: either a directory holding MNIST test-split
// IDX files (t10k-images-idx3-ubyte / t10k-labels-idx1-ubyte, optionally
// without the t10k- prefix) or a raw tensor file with a sibling labels CSV
// (<file>.labels.csv).
LabeledImages load_dataset(const std::filesystem::path& path);

}  // namespace hlsa

#endif  // HLSA_DATASETS_HPP
