#pragma once

// Deterministic synthetic datasets for end-to-end runs: jittered stroke
// digits for classification, translated noisy textures for retrieval.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "csvddnet/image.hpp"
#include "csvddnet/retrieval.hpp"
#include "csvddnet/rng.hpp"

namespace testsupport {

inline double gauss(csvddnet::Rng& rng) {
  const double u1 = std::max(rng.unit(), 1e-300);
  const double u2 = rng.unit();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

namespace detail {

struct Segment {
  double x0, y0, x1, y1;
};

// seven-segment layout on the unit square, y pointing down
inline const Segment kSegments[7] = {
    {0.22, 0.16, 0.78, 0.16},  // A top
    {0.78, 0.16, 0.78, 0.50},  // B upper right
    {0.78, 0.50, 0.78, 0.84},  // C lower right
    {0.22, 0.84, 0.78, 0.84},  // D bottom
    {0.22, 0.50, 0.22, 0.84},  // E lower left
    {0.22, 0.16, 0.22, 0.50},  // F upper left
    {0.22, 0.50, 0.78, 0.50},  // G middle
};

inline const int kDigitMask[10] = {
    0b0111111,  // 0: ABCDEF
    0b0000110,  // 1: BC
    0b1011011,  // 2: ABDEG
    0b1001111,  // 3: ABCDG
    0b1100110,  // 4: BCFG
    0b1101101,  // 5: ACDFG
    0b1111101,  // 6: ACDEFG
    0b0000111,  // 7: ABC
    0b1111111,  // 8: all
    0b1101111,  // 9: ABCDFG
};

inline double segment_distance(const Segment& s, double x, double y) {
  const double dx = s.x1 - s.x0;
  const double dy = s.y1 - s.y0;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((x - s.x0) * dx + (y - s.y0) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double px = s.x0 + t * dx;
  const double py = s.y0 + t * dy;
  return std::hypot(x - px, y - py);
}

}  // namespace detail

// One 28x28 digit with random rotation, scale, shear, translation,
// stroke width, amplitude and pixel noise.
inline csvddnet::GrayImage render_digit(int digit, csvddnet::Rng& rng) {
  const int side = 28;
  csvddnet::GrayImage img(side, side);

  const double theta = rng.uniform(-0.25, 0.25);
  const double sx = rng.uniform(0.80, 1.15);
  const double sy = rng.uniform(0.80, 1.15);
  const double shear = rng.uniform(-0.15, 0.15);
  const double tx = rng.uniform(-3.0, 3.0) / side;
  const double ty = rng.uniform(-3.0, 3.0) / side;
  const double sigma = rng.uniform(0.035, 0.055);
  const double amp = rng.uniform(0.75, 1.0);

  // forward map: p' = R * H * S * (p - c) + c + t; pixels pull through the inverse
  const double c = std::cos(theta), s = std::sin(theta);
  const double a00 = c * sx + (-s) * (shear * sx);
  const double a01 = -s * sy;
  const double a10 = s * sx + c * (shear * sx);
  const double a11 = c * sy;
  const double det = a00 * a11 - a01 * a10;
  const double i00 = a11 / det, i01 = -a01 / det, i10 = -a10 / det, i11 = a00 / det;

  const int mask = detail::kDigitMask[digit % 10];
  for (int row = 0; row < side; ++row)
    for (int col = 0; col < side; ++col) {
      const double qx = (col + 0.5) / side - 0.5 - tx;
      const double qy = (row + 0.5) / side - 0.5 - ty;
      const double ux = i00 * qx + i01 * qy + 0.5;
      const double uy = i10 * qx + i11 * qy + 0.5;
      double d = 1e9;
      for (int k = 0; k < 7; ++k)
        if (mask & (1 << k)) d = std::min(d, detail::segment_distance(detail::kSegments[k], ux, uy));
      double v = amp * std::exp(-(d * d) / (2.0 * sigma * sigma));
      v += 0.06 * gauss(rng);
      if (rng.unit() < 0.01) v = rng.uniform(0.0, 0.8);
      img.at(row, col) = std::clamp(v, 0.0, 1.0);
    }
  return img;
}

// n digits with labels cycling 0..9, deterministic in the seed.
inline csvddnet::LabeledSet make_digit_set(int n, uint64_t seed) {
  csvddnet::Rng rng(seed);
  csvddnet::LabeledSet set;
  set.images.reserve(n);
  set.labels.reserve(n);
  for (int i = 0; i < n; ++i) {
    const int digit = i % 10;
    set.images.push_back(render_digit(digit, rng));
    set.labels.push_back(digit);
  }
  return set;
}

// Random texture with structure at the patch scale: fine gratings (period
// 5-14 px), small sharp spots, and a couple of broad bumps.
inline csvddnet::GrayImage make_texture(csvddnet::Rng& rng, int side) {
  struct Bump {
    double cx, cy, w, a;
  };
  std::vector<Bump> bumps;
  for (int b = 0; b < 2; ++b)
    bumps.push_back({rng.uniform(0.0, side), rng.uniform(0.0, side),
                     rng.uniform(0.15 * side, 0.35 * side), rng.uniform(-0.6, 0.6)});
  for (int b = 0; b < 30; ++b)
    bumps.push_back({rng.uniform(0.0, side), rng.uniform(0.0, side),
                     rng.uniform(0.8, 2.0),
                     (rng.unit() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.4, 0.9)});
  struct Wave {
    double kx, ky, phase, a;
  };
  std::vector<Wave> waves;
  for (int w = 0; w < 4; ++w) {
    const double freq = 2.0 * M_PI / rng.uniform(5.0, 14.0);
    const double dir = rng.uniform(0.0, 2.0 * M_PI);
    waves.push_back({freq * std::cos(dir), freq * std::sin(dir),
                     rng.uniform(0.0, 2.0 * M_PI), rng.uniform(0.2, 0.4)});
  }

  csvddnet::GrayImage img(side, side);
  double lo = 1e9, hi = -1e9;
  for (int row = 0; row < side; ++row)
    for (int col = 0; col < side; ++col) {
      double v = 0.0;
      for (const Bump& b : bumps) {
        const double dx = col - b.cx, dy = row - b.cy;
        v += b.a * std::exp(-(dx * dx + dy * dy) / (2.0 * b.w * b.w));
      }
      for (const Wave& w : waves) v += w.a * std::sin(w.kx * col + w.ky * row + w.phase);
      img.at(row, col) = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double span = hi > lo ? hi - lo : 1.0;
  for (double& v : img.values) v = 0.1 + 0.8 * (v - lo) / span;
  return img;
}

struct RetrievalCorpus {
  std::vector<csvddnet::GrayImage> images;
  std::vector<std::string> ids;
  csvddnet::GroundTruth truth;  // base id -> ids of its transformed copies
};

// 'bases' master textures; each contributes one centered crop (the query)
// and 'copies' shifted noisy crops (its relevant set).
inline RetrievalCorpus make_retrieval_corpus(int bases, int copies, int side, uint64_t seed) {
  csvddnet::Rng rng(seed);
  RetrievalCorpus out;
  const int margin = 8;
  for (int b = 0; b < bases; ++b) {
    const csvddnet::GrayImage master = make_texture(rng, side + 2 * margin);
    char buf[32];
    std::snprintf(buf, sizeof(buf), "base%03d", b);
    const std::string base_id = buf;

    auto crop = [&](int r0, int c0, double noise, double gain) {
      csvddnet::GrayImage img(side, side);
      for (int r = 0; r < side; ++r)
        for (int c = 0; c < side; ++c) {
          double v = gain * master.at(r0 + r, c0 + c) + noise * gauss(rng);
          img.at(r, c) = std::clamp(v, 0.0, 1.0);
        }
      return img;
    };

    out.images.push_back(crop(margin, margin, 0.0, 1.0));
    out.ids.push_back(base_id);
    for (int t = 0; t < copies; ++t) {
      const int dr = margin + static_cast<int>(rng.uniform(-6.0, 6.0));
      const int dc = margin + static_cast<int>(rng.uniform(-6.0, 6.0));
      const csvddnet::GrayImage copy = crop(dr, dc, 0.05, rng.uniform(0.85, 1.1));
      const std::string copy_id = base_id + "_t" + std::to_string(t);
      out.images.push_back(copy);
      out.ids.push_back(copy_id);
      out.truth[base_id].insert(copy_id);
    }
  }
  return out;
}

}  // namespace testsupport
