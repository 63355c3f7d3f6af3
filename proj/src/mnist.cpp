#include "disnn/mnist.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "disnn/errors.hpp"

namespace disnn {

namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t be32(const std::vector<std::uint8_t>& buf, std::size_t off,
                   const std::string& path) {
  if (buf.size() < off + 4) {
    std::ostringstream os;
    os << path << ": truncated header at offset " << off << " (file has "
       << buf.size() << " bytes)";
    throw DataError(os.str());
  }
  return (std::uint32_t{buf[off]} << 24) | (std::uint32_t{buf[off + 1]} << 16) |
         (std::uint32_t{buf[off + 2]} << 8) | std::uint32_t{buf[off + 3]};
}

void check_magic(std::uint32_t got, std::uint32_t want, const std::string& path) {
  if (got != want) {
    std::ostringstream os;
    os << path << ": bad IDX magic 0x" << std::hex << got << " at offset 0 (expected 0x"
       << want << ")";
    throw DataError(os.str());
  }
}

void check_length(std::size_t have, std::size_t header, std::size_t payload,
                  const std::string& path) {
  if (have != header + payload) {
    std::ostringstream os;
    os << path << ": payload ends at offset " << have << ", expected "
       << header + payload << " bytes";
    throw DataError(os.str());
  }
}

}  // namespace

Dataset Dataset::head(std::size_t count) const {
  Dataset d;
  d.rows = rows;
  d.cols = cols;
  const std::size_t k = std::min(count, size());
  d.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(k));
  d.pixels.assign(pixels.begin(),
                  pixels.begin() + static_cast<std::ptrdiff_t>(k * dim()));
  return d;
}

std::vector<std::uint8_t> read_idx_images(const std::string& path,
                                          std::size_t& rows, std::size_t& cols) {
  const auto buf = read_file(path);
  check_magic(be32(buf, 0, path), 0x00000803, path);
  const std::size_t count = be32(buf, 4, path);
  rows = be32(buf, 8, path);
  cols = be32(buf, 12, path);
  check_length(buf.size(), 16, count * rows * cols, path);
  return std::vector<std::uint8_t>(buf.begin() + 16, buf.end());
}

std::vector<std::uint8_t> read_idx_labels(const std::string& path) {
  const auto buf = read_file(path);
  check_magic(be32(buf, 0, path), 0x00000801, path);
  const std::size_t count = be32(buf, 4, path);
  check_length(buf.size(), 8, count, path);
  std::vector<std::uint8_t> labels(buf.begin() + 8, buf.end());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] > 9) {
      std::ostringstream os;
      os << path << ": label " << int(labels[i]) << " out of range at offset "
         << 8 + i;
      throw DataError(os.str());
    }
  }
  return labels;
}

Dataset load_mnist(const std::string& dir, const std::string& split) {
  Dataset d;
  d.pixels = read_idx_images(dir + "/" + split + "-images-idx3-ubyte", d.rows, d.cols);
  d.labels = read_idx_labels(dir + "/" + split + "-labels-idx1-ubyte");
  if (d.pixels.size() != d.labels.size() * d.dim()) {
    throw DataError(split + ": image and label counts differ");
  }
  return d;
}

std::string data_root(const std::string& fallback) {
  const char* env = std::getenv("DISNN_DATA");
  return env != nullptr && *env != '\0' ? std::string(env) : fallback;
}

}  // namespace disnn
