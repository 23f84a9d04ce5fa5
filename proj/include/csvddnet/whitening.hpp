#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "csvddnet/errors.hpp"
#include "csvddnet/patches.hpp"

namespace csvddnet {

// Default per-patch normalization regularizer for [0,1]-scaled pixels
// (10 on a 0..255 scale).
inline constexpr double kDefaultEpsNorm = 10.0 / (255.0 * 255.0);

// ZCA map W = V (L + eps I)^(-1/2) V^T fitted on training patches.
// W is symmetric; applying it to the training set drives the covariance
// to the identity as eps -> 0.
struct WhiteningTransform {
  Eigen::VectorXd mean;    // per-feature mean over the training batch
  Eigen::MatrixXd matrix;  // dim x dim, symmetric
  double epsilon = 0.0;

  int dim() const { return static_cast<int>(mean.size()); }
};

// Per-patch brightness/contrast normalization:
//   (p - mean(p)) / sqrt(var(p) + eps_norm)
// with the population (1/n) variance.
inline Eigen::VectorXd normalize_patch(const Eigen::VectorXd& p, double eps_norm = kDefaultEpsNorm) {
  const double mean = p.mean();
  const Eigen::VectorXd centered = p.array() - mean;
  const double var = centered.squaredNorm() / static_cast<double>(p.size());
  return centered / std::sqrt(var + eps_norm);
}

// Row-wise normalize_patch over a whole batch; bit-identical to the
// per-patch routine.
inline Eigen::MatrixXd normalize_patches(const Eigen::MatrixXd& batch,
                                         double eps_norm = kDefaultEpsNorm) {
  Eigen::MatrixXd out(batch.rows(), batch.cols());
  for (Eigen::Index i = 0; i < batch.rows(); ++i)
    out.row(i) = normalize_patch(batch.row(i).transpose(), eps_norm).transpose();
  return out;
}

// Covariance of the batch rows with 1/(n-1) normalization.
inline Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& batch) {
  const Eigen::RowVectorXd mean = batch.colwise().mean();
  const Eigen::MatrixXd centered = batch.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(batch.rows() - 1);
}

inline WhiteningTransform fit_zca(const Eigen::MatrixXd& batch, double epsilon) {
  if (batch.rows() < 2) throw DegenerateCovariance("fit_zca: need at least 2 patches");
  if (epsilon < 0.0) throw Error("fit_zca: epsilon must be >= 0");

  const Eigen::RowVectorXd mean = batch.colwise().mean();
  const Eigen::MatrixXd centered = batch.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(batch.rows() - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw DegenerateCovariance("fit_zca: eigensolver failed");

  // cov is PSD; tiny negative eigenvalues are rounding noise
  Eigen::VectorXd evals = eig.eigenvalues().cwiseMax(0.0);
  if ((evals.minCoeff() + epsilon) <= 0.0)
    throw DegenerateCovariance("fit_zca: singular covariance and epsilon = 0");

  const Eigen::VectorXd inv_sqrt = (evals.array() + epsilon).rsqrt();
  WhiteningTransform t;
  t.mean = mean.transpose();
  t.matrix = eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
  t.epsilon = epsilon;
  return t;
}

// eps = rel * mean(eigenvalues of cov); the default when no absolute
// epsilon is configured.
inline WhiteningTransform fit_zca_relative(const Eigen::MatrixXd& batch, double rel = 0.1) {
  const Eigen::MatrixXd cov = sample_covariance(batch);
  // mean of eigenvalues == trace / dim
  const double eps = rel * cov.trace() / static_cast<double>(cov.rows());
  return fit_zca(batch, eps);
}

inline Eigen::MatrixXd apply_whitening(const WhiteningTransform& t, const Eigen::MatrixXd& batch) {
  if (batch.cols() != t.mean.size())
    throw DimensionMismatch("apply_whitening: batch dim " + std::to_string(batch.cols()) +
                            " vs transform dim " + std::to_string(t.mean.size()));
  return (batch.rowwise() - t.mean.transpose()) * t.matrix.transpose();
}

inline Eigen::VectorXd apply_whitening(const WhiteningTransform& t, const Eigen::VectorXd& p) {
  if (p.size() != t.mean.size())
    throw DimensionMismatch("apply_whitening: patch dim " + std::to_string(p.size()) +
                            " vs transform dim " + std::to_string(t.mean.size()));
  return t.matrix * (p - t.mean);
}

}  // namespace csvddnet
