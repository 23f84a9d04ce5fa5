#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "csvddnet/errors.hpp"
#include "csvddnet/image.hpp"
#include "csvddnet/rng.hpp"

namespace csvddnet {

// n patches of an r x r receptive field, one per row, row-major pixels.
struct PatchBatch {
  Eigen::MatrixXd data;  // n x r*r
  int r = 0;

  int n() const { return static_cast<int>(data.rows()); }
  int dim() const { return static_cast<int>(data.cols()); }
};

namespace detail {

inline void copy_patch(const GrayImage& img, int row, int col, int r, Eigen::MatrixXd& out,
                       int out_row) {
  int p = 0;
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < r; ++j) out(out_row, p++) = img.at(row + i, col + j);
}

}  // namespace detail

// Random patches, uniform over all (image, position) pairs so larger
// images contribute proportionally more patches.
inline PatchBatch sample_patches(const std::vector<GrayImage>& images, int r, int n,
                                 std::uint64_t seed) {
  if (images.empty()) throw ImageTooSmall("sample_patches: no images");
  if (n < 1) throw Error("sample_patches: n must be >= 1");

  std::vector<std::uint64_t> cumulative;  // positions up to and including image i
  cumulative.reserve(images.size());
  std::uint64_t total = 0;
  for (const auto& img : images) {
    if (img.width < r || img.height < r)
      throw ImageTooSmall("sample_patches: image " + std::to_string(cumulative.size()) + " is " +
                          std::to_string(img.width) + "x" + std::to_string(img.height) +
                          ", receptive field " + std::to_string(r));
    total += std::uint64_t(img.width - r + 1) * (img.height - r + 1);
    cumulative.push_back(total);
  }

  PatchBatch batch;
  batch.r = r;
  batch.data.resize(n, r * r);
  Rng rng(seed);
  for (int k = 0; k < n; ++k) {
    const std::uint64_t t = rng.below(total);
    std::size_t img_idx = 0;
    while (cumulative[img_idx] <= t) ++img_idx;
    const GrayImage& img = images[img_idx];
    const std::uint64_t base = img_idx == 0 ? 0 : cumulative[img_idx - 1];
    const std::uint64_t local = t - base;
    const int cols = img.width - r + 1;
    const int row = static_cast<int>(local / cols);
    const int col = static_cast<int>(local % cols);
    detail::copy_patch(img, row, col, r, batch.data, k);
  }
  return batch;
}

// All patches at stride 1, row-major over positions:
// (S_h, S_w) = (height - r + 1, width - r + 1).
inline PatchBatch extract_dense_patches(const GrayImage& img, int r) {
  if (img.width < r || img.height < r)
    throw ImageTooSmall("extract_dense_patches: image is " + std::to_string(img.width) + "x" +
                        std::to_string(img.height) + ", receptive field " + std::to_string(r));
  const int sh = img.height - r + 1;
  const int sw = img.width - r + 1;
  PatchBatch batch;
  batch.r = r;
  batch.data.resize(std::int64_t(sh) * sw, r * r);
  int k = 0;
  for (int i = 0; i < sh; ++i)
    for (int j = 0; j < sw; ++j) detail::copy_patch(img, i, j, r, batch.data, k++);
  return batch;
}

}  // namespace csvddnet
