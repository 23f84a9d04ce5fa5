#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "csvddnet/errors.hpp"
#include "csvddnet/image.hpp"

namespace csvddnet {

// IDX (MNIST-style) container. Big-endian header, ubyte payload.
//   magic 0x00000803 (2051): images, dims [count, rows, cols]
//   magic 0x00000801 (2049): labels, dims [count]

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

namespace detail {

inline std::uint32_t read_u32_be(std::istream& in, const std::string& what) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw TruncatedPayload("idx: truncated " + what);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

inline void write_u32_be(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                        static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::vector<unsigned char> read_payload(std::istream& in, std::size_t expected,
                                               const std::string& what) {
  std::vector<unsigned char> bytes(expected);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(expected));
  if (static_cast<std::size_t>(in.gcount()) != expected)
    throw TruncatedPayload("idx: payload shorter than header declares in " + what);
  // anything after the declared payload means the header counts are wrong
  char extra;
  if (in.read(&extra, 1))
    throw DimensionMismatch("idx: payload longer than header declares in " + what);
  return bytes;
}

}  // namespace detail

using IdxContent = std::variant<std::vector<GrayImage>, std::vector<int>>;

inline IdxContent read_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("idx: cannot open " + path);

  const std::uint32_t magic = detail::read_u32_be(in, "magic in " + path);
  if (magic == kIdxImageMagic) {
    const std::uint32_t n = detail::read_u32_be(in, "count in " + path);
    const std::uint32_t rows = detail::read_u32_be(in, "rows in " + path);
    const std::uint32_t cols = detail::read_u32_be(in, "cols in " + path);
    const std::size_t expected = std::size_t(n) * rows * cols;
    const auto bytes = detail::read_payload(in, expected, path);
    std::vector<GrayImage> images;
    images.reserve(n);
    std::size_t off = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
      GrayImage img(static_cast<int>(cols), static_cast<int>(rows));
      for (std::size_t p = 0; p < std::size_t(rows) * cols; ++p)
        img.values[p] = bytes[off + p] / 255.0;
      off += std::size_t(rows) * cols;
      images.push_back(std::move(img));
    }
    return images;
  }
  if (magic == kIdxLabelMagic) {
    const std::uint32_t n = detail::read_u32_be(in, "count in " + path);
    const auto bytes = detail::read_payload(in, n, path);
    return std::vector<int>(bytes.begin(), bytes.end());
  }
  throw BadMagic("idx: unrecognized magic " + std::to_string(magic) + " in " + path);
}

inline std::vector<GrayImage> read_idx_images(const std::string& path) {
  auto content = read_idx(path);
  if (auto* imgs = std::get_if<std::vector<GrayImage>>(&content)) return std::move(*imgs);
  throw BadMagic("idx: expected image file, got label file: " + path);
}

inline std::vector<int> read_idx_labels(const std::string& path) {
  auto content = read_idx(path);
  if (auto* labels = std::get_if<std::vector<int>>(&content)) return std::move(*labels);
  throw BadMagic("idx: expected label file, got image file: " + path);
}

inline LabeledSet read_idx_dataset(const std::string& images_path, const std::string& labels_path) {
  LabeledSet set;
  set.images = read_idx_images(images_path);
  set.labels = read_idx_labels(labels_path);
  if (set.images.size() != set.labels.size())
    throw DimensionMismatch("idx: " + std::to_string(set.images.size()) + " images vs " +
                            std::to_string(set.labels.size()) + " labels");
  return set;
}

// Writers (round-trip tooling; images quantized back to bytes).
inline void write_idx_images(const std::string& path, const std::vector<GrayImage>& images) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("idx: cannot write " + path);
  const int rows = images.empty() ? 0 : images.front().height;
  const int cols = images.empty() ? 0 : images.front().width;
  detail::write_u32_be(out, kIdxImageMagic);
  detail::write_u32_be(out, static_cast<std::uint32_t>(images.size()));
  detail::write_u32_be(out, static_cast<std::uint32_t>(rows));
  detail::write_u32_be(out, static_cast<std::uint32_t>(cols));
  for (const auto& img : images) {
    if (img.height != rows || img.width != cols)
      throw DimensionMismatch("idx: images must share one shape");
    for (double v : img.values) {
      const long q = std::lround(v * 255.0);
      const unsigned char b = static_cast<unsigned char>(q < 0 ? 0 : (q > 255 ? 255 : q));
      out.write(reinterpret_cast<const char*>(&b), 1);
    }
  }
}

inline void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("idx: cannot write " + path);
  detail::write_u32_be(out, kIdxLabelMagic);
  detail::write_u32_be(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) {
    const unsigned char b = static_cast<unsigned char>(l);
    out.write(reinterpret_cast<const char*>(&b), 1);
  }
}

}  // namespace csvddnet
