#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "csvddnet/balls.hpp"
#include "csvddnet/dictionary.hpp"
#include "csvddnet/errors.hpp"
#include "csvddnet/patches.hpp"

namespace csvddnet {

enum class EncodingKind { kBow, kVlad, kTriangle, kCsvdd };

inline int encoding_output_dim(EncodingKind kind, int K, int dim) {
  return kind == EncodingKind::kVlad ? K * dim : K;
}

inline std::string encoding_name(EncodingKind kind) {
  switch (kind) {
    case EncodingKind::kBow: return "bow";
    case EncodingKind::kVlad: return "vlad";
    case EncodingKind::kTriangle: return "triangle";
    case EncodingKind::kCsvdd: return "csvdd";
  }
  return "?";
}

inline EncodingKind parse_encoding(const std::string& name) {
  if (name == "bow") return EncodingKind::kBow;
  if (name == "vlad") return EncodingKind::kVlad;
  if (name == "triangle") return EncodingKind::kTriangle;
  if (name == "csvdd") return EncodingKind::kCsvdd;
  throw ConfigError("unknown encoding '" + name + "'");
}

namespace detail {

inline void check_patch_dim(const Eigen::VectorXd& x, const Dictionary& dict, const char* who) {
  if (x.size() != dict.dim())
    throw DimensionMismatch(std::string(who) + ": patch dim " + std::to_string(x.size()) +
                            " vs atom dim " + std::to_string(dict.dim()));
}

inline void check_balls(const Dictionary& dict, const BallModel& balls) {
  if (balls.K() != dict.K() || balls.dim() != dict.dim())
    throw BallMismatch("ball model " + std::to_string(balls.K()) + "x" +
                       std::to_string(balls.dim()) + " does not align with dictionary " +
                       std::to_string(dict.K()) + "x" + std::to_string(dict.dim()));
}

}  // namespace detail

// Hard voting: 1 at the nearest atom (lowest index on ties), 0 elsewhere.
inline Eigen::VectorXd encode_bow(const Eigen::VectorXd& x, const Dictionary& dict) {
  detail::check_patch_dim(x, dict, "encode_bow");
  int best = 0;
  double best_d = (x - dict.atoms.row(0).transpose()).squaredNorm();
  for (int k = 1; k < dict.K(); ++k) {
    const double d = (x - dict.atoms.row(k).transpose()).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dict.K());
  out[best] = 1.0;
  return out;
}

// Residual x - c_k written into the nearest atom's block, zeros elsewhere.
inline Eigen::VectorXd encode_vlad(const Eigen::VectorXd& x, const Dictionary& dict) {
  detail::check_patch_dim(x, dict, "encode_vlad");
  int best = 0;
  double best_d = (x - dict.atoms.row(0).transpose()).squaredNorm();
  for (int k = 1; k < dict.K(); ++k) {
    const double d = (x - dict.atoms.row(k).transpose()).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dict.K() * dict.dim());
  out.segment(best * dict.dim(), dict.dim()) = x - dict.atoms.row(best).transpose();
  return out;
}

// f_k = max(0, mean(z) - z_k) with z_k the distance to atom k.
inline Eigen::VectorXd encode_triangle(const Eigen::VectorXd& x, const Dictionary& dict) {
  detail::check_patch_dim(x, dict, "encode_triangle");
  const int K = dict.K();
  Eigen::VectorXd z(K);
  for (int k = 0; k < K; ++k) z[k] = (x - dict.atoms.row(k).transpose()).norm();
  const double mu = z.mean();
  return (mu - z.array()).max(0.0).matrix();
}

// f_k = max(0, mean(h) - h_k) with h_k = ||x - center_k|| - R_k, the signed
// distance to the ball surface (negative inside the ball).
inline Eigen::VectorXd encode_csvdd(const Eigen::VectorXd& x, const Dictionary& dict,
                                    const BallModel& balls) {
  detail::check_patch_dim(x, dict, "encode_csvdd");
  detail::check_balls(dict, balls);
  const int K = balls.K();
  Eigen::VectorXd h(K);
  for (int k = 0; k < K; ++k)
    h[k] = (x - balls.centers.row(k).transpose()).norm() - balls.radii[k];
  const double g = h.mean();
  return (g - h.array()).max(0.0).matrix();
}

namespace detail {

// n x K distances to the given centers via the expansion of ||x - c||^2,
// clamped at 0 before the square root.
inline Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& X, const Eigen::MatrixXd& C) {
  const Eigen::VectorXd xn = X.rowwise().squaredNorm();
  const Eigen::VectorXd cn = C.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = -2.0 * (X * C.transpose());
  d2.colwise() += xn;
  d2.rowwise() += cn.transpose();
  return d2.array().max(0.0).sqrt().matrix();
}

}  // namespace detail

// Whole-batch encoding, one row per patch. BoW and VLAD match the
// single-patch functions exactly; triangle and csvdd use a blocked
// distance computation and agree within floating-point reassociation.
inline Eigen::MatrixXd encode_batch(const PatchBatch& batch, const Dictionary& dict,
                                    const BallModel* balls, EncodingKind kind) {
  if (batch.dim() != dict.dim())
    throw DimensionMismatch("encode_batch: patch dim " + std::to_string(batch.dim()) +
                            " vs atom dim " + std::to_string(dict.dim()));
  const int n = batch.n();
  const int K = dict.K();

  if (kind == EncodingKind::kBow || kind == EncodingKind::kVlad) {
    Eigen::MatrixXd out =
        Eigen::MatrixXd::Zero(n, encoding_output_dim(kind, K, dict.dim()));
    for (int i = 0; i < n; ++i) {
      if (kind == EncodingKind::kBow)
        out.row(i) = encode_bow(batch.data.row(i).transpose(), dict).transpose();
      else
        out.row(i) = encode_vlad(batch.data.row(i).transpose(), dict).transpose();
    }
    return out;
  }

  if (kind == EncodingKind::kCsvdd) {
    if (balls == nullptr) throw BallMismatch("encode_batch: csvdd encoding needs a ball model");
    detail::check_balls(dict, *balls);
  }

  const Eigen::MatrixXd& centers =
      (kind == EncodingKind::kCsvdd) ? balls->centers : dict.atoms;
  Eigen::MatrixXd h = detail::pairwise_distances(batch.data, centers);
  if (kind == EncodingKind::kCsvdd) h.rowwise() -= balls->radii.transpose();
  const Eigen::VectorXd g = h.rowwise().mean();
  h = (-h).colwise() + g;
  return h.array().max(0.0).matrix();
}

// Image-level VLAD: per-atom residual sums over all patches, concatenated
// and L2-normalized as one vector.
inline Eigen::VectorXd vlad_aggregate(const PatchBatch& batch, const Dictionary& dict) {
  if (batch.dim() != dict.dim())
    throw DimensionMismatch("vlad_aggregate: patch dim " + std::to_string(batch.dim()) +
                            " vs atom dim " + std::to_string(dict.dim()));
  const Assignment asg = assign(batch, dict);
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dict.K() * dict.dim());
  for (int i = 0; i < batch.n(); ++i) {
    const int k = asg.index[i];
    out.segment(k * dict.dim(), dict.dim()) +=
        batch.data.row(i).transpose() - dict.atoms.row(k).transpose();
  }
  const double norm = out.norm();
  if (norm > 0.0) out /= norm;
  return out;
}

}  // namespace csvddnet
