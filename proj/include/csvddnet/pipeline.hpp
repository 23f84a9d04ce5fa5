#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "csvddnet/balls.hpp"
#include "csvddnet/dictionary.hpp"
#include "csvddnet/encoder.hpp"
#include "csvddnet/errors.hpp"
#include "csvddnet/image.hpp"
#include "csvddnet/patches.hpp"
#include "csvddnet/whitening.hpp"

namespace csvddnet {

// One network configuration: receptive field r, pooling block p, SIFT grid
// m, and the patch encoding.
struct View {
  int r = 5;
  int p = 4;
  int m = 3;
  EncodingKind encoding = EncodingKind::kCsvdd;
};

struct FeatureMaps {
  std::vector<Eigen::MatrixXd> maps;  // K maps, each S_h x S_w

  int K() const { return static_cast<int>(maps.size()); }
  int height() const { return maps.empty() ? 0 : static_cast<int>(maps[0].rows()); }
  int width() const { return maps.empty() ? 0 : static_cast<int>(maps[0].cols()); }
};

struct PooledMaps {
  std::vector<Eigen::MatrixXd> maps;  // K maps, each ceil(S_h/p) x ceil(S_w/p)

  int K() const { return static_cast<int>(maps.size()); }
  int height() const { return maps.empty() ? 0 : static_cast<int>(maps[0].rows()); }
  int width() const { return maps.empty() ? 0 : static_cast<int>(maps[0].cols()); }
};

// Dense per-position encoding: every r x r patch is normalized, whitened
// and encoded; coordinate k of the code at position (i, j) lands in map k
// at (i, j). Map size is (H - r + 1) x (W - r + 1).
inline FeatureMaps make_feature_maps(const GrayImage& image, const Dictionary& dict,
                                     const BallModel* balls, const WhiteningTransform& whitening,
                                     EncodingKind encoding,
                                     double eps_norm = kDefaultEpsNorm) {
  if (encoding == EncodingKind::kVlad)
    throw ConfigError("vlad encoding has no per-position feature-map form");
  if (whitening.dim() != dict.dim())
    throw DimensionMismatch("make_feature_maps: whitening dim " +
                            std::to_string(whitening.dim()) + " vs atom dim " +
                            std::to_string(dict.dim()));

  PatchBatch patches = extract_dense_patches(image, dict.r);
  patches.data = normalize_patches(patches.data, eps_norm);
  patches.data = apply_whitening(whitening, patches.data);
  const Eigen::MatrixXd codes = encode_batch(patches, dict, balls, encoding);

  const int sh = image.height - dict.r + 1;
  const int sw = image.width - dict.r + 1;
  FeatureMaps fm;
  fm.maps.assign(dict.K(), Eigen::MatrixXd(sh, sw));
  for (int i = 0; i < sh; ++i)
    for (int j = 0; j < sw; ++j) {
      const int row = i * sw + j;
      for (int k = 0; k < dict.K(); ++k) fm.maps[k](i, j) = codes(row, k);
    }
  return fm;
}

// Non-overlapping p x p block averages; ragged edge blocks average only
// the pixels present. Output is ceil(S/p) per axis.
inline PooledMaps average_pool(const FeatureMaps& fm, int p) {
  if (p < 1) throw ConfigError("average_pool: p must be >= 1");
  const int sh = fm.height();
  const int sw = fm.width();
  const int oh = (sh + p - 1) / p;
  const int ow = (sw + p - 1) / p;

  PooledMaps pm;
  pm.maps.reserve(fm.maps.size());
  for (const Eigen::MatrixXd& map : fm.maps) {
    Eigen::MatrixXd out(oh, ow);
    for (int bi = 0; bi < oh; ++bi) {
      const int r0 = bi * p;
      const int rows = std::min(p, sh - r0);
      for (int bj = 0; bj < ow; ++bj) {
        const int c0 = bj * p;
        const int cols = std::min(p, sw - c0);
        out(bi, bj) = map.block(r0, c0, rows, cols).mean();
      }
    }
    pm.maps.push_back(std::move(out));
  }
  return pm;
}

namespace detail {

// Central differences inside, one-sided at the borders.
inline void map_gradients(const Eigen::MatrixXd& map, Eigen::MatrixXd& gx, Eigen::MatrixXd& gy) {
  const int h = static_cast<int>(map.rows());
  const int w = static_cast<int>(map.cols());
  gx.resize(h, w);
  gy.resize(h, w);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < w; ++j) {
      if (j == 0)
        gx(i, j) = map(i, 1) - map(i, 0);
      else if (j == w - 1)
        gx(i, j) = map(i, w - 1) - map(i, w - 2);
      else
        gx(i, j) = 0.5 * (map(i, j + 1) - map(i, j - 1));
      if (i == 0)
        gy(i, j) = map(1, j) - map(0, j);
      else if (i == h - 1)
        gy(i, j) = map(h - 1, j) - map(h - 2, j);
      else
        gy(i, j) = 0.5 * (map(i + 1, j) - map(i - 1, j));
    }
}

inline void vote(Eigen::VectorXd& hist, double theta, double mag, bool interpolate) {
  constexpr double kBinWidth = std::numbers::pi / 4.0;
  if (!interpolate) {
    int bin = static_cast<int>(theta / kBinWidth);
    if (bin > 7) bin = 7;
    hist[bin] += mag;
    return;
  }
  const double u = theta / kBinWidth - 0.5;
  const double fl = std::floor(u);
  const double frac = u - fl;
  const int b0 = (static_cast<int>(fl) % 8 + 8) % 8;
  const int b1 = (b0 + 1) % 8;
  hist[b0] += mag * (1.0 - frac);
  hist[b1] += mag * frac;
}

}  // namespace detail

// SIFT-style block descriptor of one pooled map: orientations over
// [0, 2pi) in 8 equal bins with magnitude-weighted votes, m x m
// near-equal blocks (boundaries floor(b*size/m)), per-block L2
// normalization with clipping at 0.2 and renormalization. Zero-magnitude
// blocks stay zero.
inline Eigen::VectorXd block_gradient_histogram(const Eigen::MatrixXd& map, int m,
                                                bool interpolate = false) {
  const int h = static_cast<int>(map.rows());
  const int w = static_cast<int>(map.cols());
  if (h < 2 || w < 2)
    throw MapTooSmall("block_gradient_histogram: map " + std::to_string(h) + "x" +
                      std::to_string(w) + " is smaller than 2x2");
  if (m < 1) throw ConfigError("block_gradient_histogram: m must be >= 1");

  Eigen::MatrixXd gx, gy;
  detail::map_gradients(map, gx, gy);

  Eigen::VectorXd out = Eigen::VectorXd::Zero(m * m * 8);
  for (int bi = 0; bi < m; ++bi) {
    const int r0 = (bi * h) / m;
    const int r1 = ((bi + 1) * h) / m;
    for (int bj = 0; bj < m; ++bj) {
      const int c0 = (bj * w) / m;
      const int c1 = ((bj + 1) * w) / m;
      Eigen::VectorXd hist = Eigen::VectorXd::Zero(8);
      for (int i = r0; i < r1; ++i)
        for (int j = c0; j < c1; ++j) {
          const double mag = std::hypot(gx(i, j), gy(i, j));
          if (mag <= 0.0) continue;
          double theta = std::atan2(gy(i, j), gx(i, j));
          if (theta < 0.0) theta += 2.0 * std::numbers::pi;
          if (theta >= 2.0 * std::numbers::pi) theta = 0.0;
          detail::vote(hist, theta, mag, interpolate);
        }
      double norm = hist.norm();
      if (norm > 0.0) {
        hist /= norm;
        hist = hist.cwiseMin(0.2);
        norm = hist.norm();
        if (norm > 0.0) hist /= norm;
      }
      out.segment((bi * m + bj) * 8, 8) = hist;
    }
  }
  return out;
}

// Full per-image descriptor for one view: K pooled maps, each reduced to
// an m*m*8 histogram, concatenated in map order. Dimension K * m^2 * 8.
inline Eigen::VectorXd make_view_descriptor(const GrayImage& image, const Dictionary& dict,
                                            const BallModel* balls,
                                            const WhiteningTransform& whitening, const View& view,
                                            double eps_norm = kDefaultEpsNorm,
                                            bool interpolate = false) {
  if (view.r != dict.r)
    throw DimensionMismatch("make_view_descriptor: view r=" + std::to_string(view.r) +
                            " vs dictionary r=" + std::to_string(dict.r));
  const FeatureMaps fm = make_feature_maps(image, dict, balls, whitening, view.encoding, eps_norm);
  const PooledMaps pm = average_pool(fm, view.p);
  Eigen::VectorXd out(dict.K() * view.m * view.m * 8);
  const int per_map = view.m * view.m * 8;
  for (int k = 0; k < dict.K(); ++k)
    out.segment(k * per_map, per_map) = block_gradient_histogram(pm.maps[k], view.m, interpolate);
  return out;
}

// Batch form, one descriptor row per image, rows in input order no matter
// how the work is scheduled.
inline Eigen::MatrixXd make_view_descriptors(const std::vector<GrayImage>& images,
                                             const Dictionary& dict, const BallModel* balls,
                                             const WhiteningTransform& whitening, const View& view,
                                             int threads = 1,
                                             double eps_norm = kDefaultEpsNorm,
                                             bool interpolate = false) {
  const int n = static_cast<int>(images.size());
  Eigen::MatrixXd out(n, dict.K() * view.m * view.m * 8);
  if (n == 0) return out;

  threads = std::max(1, std::min(threads, n));
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto work = [&](int begin, int end) {
    try {
      for (int i = begin; i < end; ++i)
        out.row(i) =
            make_view_descriptor(images[i], dict, balls, whitening, view, eps_norm, interpolate)
                .transpose();
    } catch (...) {
      std::lock_guard<std::mutex> lock(failure_mutex);
      if (!failure) failure = std::current_exception();
    }
  };

  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int begin = t * chunk;
      const int end = std::min(n, begin + chunk);
      if (begin < end) pool.emplace_back(work, begin, end);
    }
    for (std::thread& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

// Plain pixel vector, row-major. Baseline representation.
inline Eigen::VectorXd flatten_image(const GrayImage& image) {
  return Eigen::Map<const Eigen::VectorXd>(image.values.data(),
                                           static_cast<Eigen::Index>(image.values.size()));
}

}  // namespace csvddnet
