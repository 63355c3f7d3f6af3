#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace disnn {

// Grayscale image set with one label per image.
struct Dataset {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols, row-major
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return rows * cols; }
  const std::uint8_t* image(std::size_t i) const {
    return pixels.data() + i * dim();
  }
  // Copy of the first `count` images (or all, when smaller).
  Dataset head(std::size_t count) const;
};

// IDX readers. Throw DataError with the byte offset of the first problem.
std::vector<std::uint8_t> read_idx_images(const std::string& path,
                                          std::size_t& rows, std::size_t& cols);
std::vector<std::uint8_t> read_idx_labels(const std::string& path);

// Loads "train" or "t10k" from dir.
Dataset load_mnist(const std::string& dir, const std::string& split);

// Dataset root: the DISNN_DATA environment variable, else `fallback`.
std::string data_root(const std::string& fallback);

}  // namespace disnn
