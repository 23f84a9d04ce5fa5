#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "csvddnet/errors.hpp"
#include "csvddnet/patches.hpp"
#include "csvddnet/rng.hpp"

namespace csvddnet {

enum class DictInit { kKmeansPlusPlus, kRandom };

// K filter-bank atoms learned over whitened patch space.
struct Dictionary {
  Eigen::MatrixXd atoms;  // K x dim
  int r = 0;              // receptive-field side, dim == r*r
  DictInit init = DictInit::kKmeansPlusPlus;
  std::uint64_t seed = 0;

  int K() const { return static_cast<int>(atoms.rows()); }
  int dim() const { return static_cast<int>(atoms.cols()); }
};

struct Assignment {
  std::vector<int> index;    // nearest atom per point, ties to lowest index
  Eigen::VectorXd distance;  // Euclidean distance to that atom
};

// Nearest-atom assignment; distances computed per pair so the result
// matches a naive brute-force scan exactly, ties included.
inline Assignment assign(const PatchBatch& batch, const Dictionary& dict) {
  if (batch.dim() != dict.dim())
    throw DimensionMismatch("assign: patch dim " + std::to_string(batch.dim()) + " vs atom dim " +
                            std::to_string(dict.dim()));
  const int n = batch.n();
  const int K = dict.K();
  Assignment out;
  out.index.resize(n);
  out.distance.resize(n);
  for (int i = 0; i < n; ++i) {
    int best = 0;
    double best_d2 = (batch.data.row(i) - dict.atoms.row(0)).squaredNorm();
    for (int k = 1; k < K; ++k) {
      const double d2 = (batch.data.row(i) - dict.atoms.row(k)).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = k;
      }
    }
    out.index[i] = best;
    out.distance[i] = std::sqrt(best_d2);
  }
  return out;
}

namespace detail {

// k-means++ seeding. When the remaining D^2 mass is zero (duplicates,
// or K == n), falls back to the lowest-index unchosen point.
inline Eigen::MatrixXd kmeanspp_seed(const Eigen::MatrixXd& X, int K, Rng& rng) {
  const int n = static_cast<int>(X.rows());
  Eigen::MatrixXd centers(K, X.cols());
  std::vector<char> chosen(n, 0);

  int first = rng.index(n);
  centers.row(0) = X.row(first);
  chosen[first] = 1;

  Eigen::VectorXd d2(n);
  for (int i = 0; i < n; ++i) d2[i] = (X.row(i) - centers.row(0)).squaredNorm();

  for (int k = 1; k < K; ++k) {
    const double total = d2.sum();
    int pick = -1;
    if (total > 0.0) {
      double target = rng.unit() * total;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target) {
          pick = i;
          break;
        }
      }
      if (pick < 0) {  // rounding pushed the target past the last mass
        for (int i = n - 1; i >= 0; --i)
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
      }
    }
    if (pick < 0) {
      for (int i = 0; i < n; ++i)
        if (!chosen[i]) {
          pick = i;
          break;
        }
      if (pick < 0) pick = 0;
    }
    centers.row(k) = X.row(pick);
    chosen[pick] = 1;
    for (int i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], (X.row(i) - centers.row(k)).squaredNorm());
  }
  return centers;
}

}  // namespace detail

// Lloyd iterations from k-means++ seeding. Deterministic for a fixed
// seed; empty clusters are reseeded to the point currently farthest from
// its centroid, which never increases the distortion. Stops when the
// relative distortion change drops below rel_tol.
inline Dictionary kmeans_fit(const PatchBatch& batch, int K, int iters, std::uint64_t seed,
                             double rel_tol = 1e-6,
                             std::vector<double>* distortion_trace = nullptr) {
  const int n = batch.n();
  if (K < 1) throw Error("kmeans_fit: K must be >= 1");
  if (iters < 1) throw Error("kmeans_fit: iters must be >= 1");
  if (n < K)
    throw TooFewPoints("kmeans_fit: " + std::to_string(n) + " points for K = " + std::to_string(K));

  const Eigen::MatrixXd& X = batch.data;
  Rng rng(seed);
  Eigen::MatrixXd centers = detail::kmeanspp_seed(X, K, rng);

  std::vector<int> labels(n, 0);
  Eigen::VectorXd dist2(n);
  double prev_distortion = std::numeric_limits<double>::infinity();

  for (int it = 0; it < iters; ++it) {
    // assignment
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d2 = (X.row(i) - centers.row(0)).squaredNorm();
      for (int k = 1; k < K; ++k) {
        const double d2 = (X.row(i) - centers.row(k)).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best = k;
        }
      }
      labels[i] = best;
      dist2[i] = best_d2;
    }

    // update, in fixed cluster order
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(K, X.cols());
    std::vector<int> counts(K, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(labels[i]) += X.row(i);
      ++counts[labels[i]];
    }
    for (int k = 0; k < K; ++k) {
      if (counts[k] > 0) {
        centers.row(k) = sums.row(k) / counts[k];
      } else {
        // reseed to the globally worst-covered point
        int worst = 0;
        for (int i = 1; i < n; ++i)
          if (dist2[i] > dist2[worst]) worst = i;
        centers.row(k) = X.row(worst);
        dist2[worst] = 0.0;
      }
    }

    // distortion under the fresh centers
    double distortion = 0.0;
    for (int i = 0; i < n; ++i) {
      double best_d2 = (X.row(i) - centers.row(0)).squaredNorm();
      for (int k = 1; k < K; ++k)
        best_d2 = std::min(best_d2, (X.row(i) - centers.row(k)).squaredNorm());
      distortion += best_d2;
    }
    if (distortion_trace) distortion_trace->push_back(distortion);
    if (distortion == 0.0) break;
    if (std::isfinite(prev_distortion) &&
        prev_distortion - distortion < rel_tol * std::max(prev_distortion, 1e-300))
      break;
    prev_distortion = distortion;
  }

  Dictionary dict;
  dict.atoms = std::move(centers);
  dict.r = batch.r;
  dict.init = DictInit::kKmeansPlusPlus;
  dict.seed = seed;
  return dict;
}

// K distinct batch rows, sampled without replacement.
inline Dictionary random_dictionary(const PatchBatch& batch, int K, std::uint64_t seed) {
  const int n = batch.n();
  if (K < 1) throw Error("random_dictionary: K must be >= 1");
  if (n < K)
    throw TooFewPoints("random_dictionary: " + std::to_string(n) +
                       " points for K = " + std::to_string(K));
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  Rng rng(seed);
  rng.shuffle(idx);

  Dictionary dict;
  dict.atoms.resize(K, batch.dim());
  for (int k = 0; k < K; ++k) dict.atoms.row(k) = batch.data.row(idx[k]);
  dict.r = batch.r;
  dict.init = DictInit::kRandom;
  dict.seed = seed;
  return dict;
}

// Sum of squared distances to nearest atoms; the quantity Lloyd descends.
inline double distortion(const PatchBatch& batch, const Dictionary& dict) {
  double total = 0.0;
  for (int i = 0; i < batch.n(); ++i) {
    double best = (batch.data.row(i) - dict.atoms.row(0)).squaredNorm();
    for (int k = 1; k < dict.K(); ++k)
      best = std::min(best, (batch.data.row(i) - dict.atoms.row(k)).squaredNorm());
    total += best;
  }
  return total;
}

}  // namespace csvddnet
