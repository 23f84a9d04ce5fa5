#pragma once

#include <cstddef>
#include <vector>

#include "csvddnet/errors.hpp"

namespace csvddnet {

// Row-major grayscale image with intensities in [0, 1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;  // height * width, row-major

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }
  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
};

struct LabeledSet {
  std::vector<GrayImage> images;
  std::vector<int> labels;  // class ids in [0, C)

  std::size_t size() const { return images.size(); }

  int num_classes() const {
    int c = 0;
    for (int l : labels)
      if (l + 1 > c) c = l + 1;
    return c;
  }
};

}  // namespace csvddnet
