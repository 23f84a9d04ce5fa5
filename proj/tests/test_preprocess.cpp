#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "csvddnet/rng.hpp"
#include "csvddnet/whitening.hpp"

using namespace csvddnet;

namespace {

Eigen::MatrixXd random_batch(int n, int dim, uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(n, dim);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
  return X;
}

}  // namespace

TEST_CASE("patch normalization centers and scales by the biased variance") {
  Eigen::VectorXd p(2);
  p << 0.0, 2.0;
  const Eigen::VectorXd out = normalize_patch(p, 1e-15);
  CHECK_THAT(out[0], Catch::Matchers::WithinAbs(-1.0, 1e-6));
  CHECK_THAT(out[1], Catch::Matchers::WithinAbs(1.0, 1e-6));

  const Eigen::VectorXd flat = normalize_patch(Eigen::VectorXd::Constant(9, 0.37), 1e-4);
  CHECK(flat.cwiseAbs().maxCoeff() == 0.0);

  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd q(16);
    for (int j = 0; j < 16; ++j) q[j] = rng.unit();
    CHECK_THAT(normalize_patch(q).mean(), Catch::Matchers::WithinAbs(0.0, 1e-12));
  }
}

TEST_CASE("batch normalization matches the per-patch routine") {
  const Eigen::MatrixXd X = random_batch(20, 25, 3);
  const Eigen::MatrixXd N = normalize_patches(X, kDefaultEpsNorm);
  for (int i = 0; i < X.rows(); ++i) {
    const Eigen::VectorXd single = normalize_patch(X.row(i).transpose(), kDefaultEpsNorm);
    CHECK((N.row(i).transpose() - single).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("whitening of an identity-covariance batch is the identity") {
  const double a = std::sqrt(3.0) / 2.0;
  Eigen::MatrixXd X(4, 2);
  X << a, a, a, -a, -a, a, -a, -a;
  const WhiteningTransform t = fit_zca(X, 0.0);
  CHECK((t.matrix - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(t.mean.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("whitening of a diagonal covariance rescales each axis") {
  const double c = std::sqrt(3.0);
  const double d = std::sqrt(3.0) / 2.0;
  Eigen::MatrixXd X(4, 2);
  X << c, d, c, -d, -c, d, -c, -d;  // sample covariance diag(4, 1)
  const WhiteningTransform t = fit_zca(X, 0.0);
  Eigen::MatrixXd expect(2, 2);
  expect << 0.5, 0.0, 0.0, 1.0;
  CHECK((t.matrix - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("whitened training covariance approaches the identity") {
  const Eigen::MatrixXd X = random_batch(600, 16, 99);
  const WhiteningTransform t = fit_zca(X, 1e-8);
  const Eigen::MatrixXd W = apply_whitening(t, X);
  const Eigen::MatrixXd cov = sample_covariance(W);
  CHECK((cov - Eigen::MatrixXd::Identity(16, 16)).norm() <= 1e-3);
}

TEST_CASE("whitening matrix is symmetric") {
  const Eigen::MatrixXd X = random_batch(200, 9, 5);
  const WhiteningTransform t = fit_zca(X, 1e-6);
  CHECK((t.matrix - t.matrix.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("degenerate batches are rejected without regularization") {
  Eigen::MatrixXd X(5, 3);
  for (int i = 0; i < 5; ++i) X.row(i) << 0.1, 0.2, 0.3;
  CHECK_THROWS_AS(fit_zca(X, 0.0), DegenerateCovariance);
  CHECK_NOTHROW(fit_zca(X, 1e-4));
}

TEST_CASE("relative epsilon tracks the eigenvalue scale") {
  const Eigen::MatrixXd X = 10.0 * random_batch(300, 4, 7);
  const WhiteningTransform t = fit_zca_relative(X, 0.1);
  const Eigen::MatrixXd cov = sample_covariance(X);
  const double expect = 0.1 * cov.trace() / 4.0;
  CHECK_THAT(t.epsilon, Catch::Matchers::WithinRel(expect, 1e-12));
}

TEST_CASE("applying the identity transform is a no-op and the mean maps to zero") {
  WhiteningTransform t;
  t.mean = Eigen::VectorXd::Zero(3);
  t.matrix = Eigen::MatrixXd::Identity(3, 3);
  t.epsilon = 0.0;
  Eigen::VectorXd x(3);
  x << 0.3, -0.2, 0.9;
  CHECK((apply_whitening(t, x) - x).cwiseAbs().maxCoeff() == 0.0);

  const Eigen::MatrixXd X = random_batch(50, 6, 21);
  const WhiteningTransform f = fit_zca(X, 1e-4);
  CHECK(apply_whitening(f, Eigen::VectorXd(f.mean)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("whitening respects affine combinations") {
  const Eigen::MatrixXd X = random_batch(80, 8, 31);
  const WhiteningTransform t = fit_zca(X, 1e-5);
  Rng rng(77);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x(8), y(8);
    for (int j = 0; j < 8; ++j) {
      x[j] = rng.uniform(-2.0, 2.0);
      y[j] = rng.uniform(-2.0, 2.0);
    }
    const double a = rng.unit();
    const Eigen::VectorXd lhs = apply_whitening(t, Eigen::VectorXd(a * x + (1.0 - a) * y));
    const Eigen::VectorXd rhs = a * apply_whitening(t, x) + (1.0 - a) * apply_whitening(t, y);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("vector and batch whitening agree and dimensions are checked") {
  const Eigen::MatrixXd X = random_batch(40, 5, 13);
  const WhiteningTransform t = fit_zca(X, 1e-4);
  const Eigen::MatrixXd W = apply_whitening(t, X);
  for (int i = 0; i < 40; ++i) {
    const Eigen::VectorXd v = apply_whitening(t, Eigen::VectorXd(X.row(i).transpose()));
    CHECK((W.row(i).transpose() - v).cwiseAbs().maxCoeff() < 1e-14);
  }
  CHECK_THROWS_AS(apply_whitening(t, Eigen::VectorXd(Eigen::VectorXd::Zero(4))), DimensionMismatch);
}
