#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "csvddnet/dictionary.hpp"
#include "csvddnet/errors.hpp"
#include "csvddnet/patches.hpp"
#include "csvddnet/simplex.hpp"

namespace csvddnet {

enum class BallKind { kSvdd, kCsvdd };

// One ball per dictionary atom: center + radius. For C-SVDD the centers
// equal the atoms; for SVDD they are the solved ball centers.
struct BallModel {
  Eigen::MatrixXd centers;  // K x dim
  Eigen::VectorXd radii;    // K, non-negative
  double lambda = 1.0;
  BallKind kind = BallKind::kCsvdd;

  int K() const { return static_cast<int>(centers.rows()); }
  int dim() const { return static_cast<int>(centers.cols()); }
};

// Multipliers of the ball dual: sum alpha = 1, 0 <= alpha_i <= lambda.
// (When lambda < 1/N that set is empty; the centered solver then returns
// the degenerate alpha = lambda * ones with sum N*lambda < 1, matching
// the R = 0 primal optimum.)
struct DualSolution {
  Eigen::VectorXd alpha;
  double objective = 0.0;  // primal value R^2 + lambda * sum(slacks)
};

struct CsvddSolution {
  double radius = 0.0;
  Eigen::VectorXd center;
  DualSolution dual;
};

struct SvddSolution {
  Eigen::VectorXd center;
  double radius = 0.0;
  DualSolution dual;
  int iterations = 0;
};

namespace detail {

// Largest integer j with j * lambda <= 1, robust to 1/lambda rounding.
inline int cap_count(double lambda) {
  int j = static_cast<int>(std::floor(1.0 / lambda));
  while ((j + 1) * lambda <= 1.0) ++j;
  while (j > 0 && j * lambda > 1.0) --j;
  return j;
}

inline double primal_cost_at(const Eigen::VectorXd& d2, double lambda, double u) {
  double cost = u;
  for (Eigen::Index i = 0; i < d2.size(); ++i) cost += lambda * std::max(0.0, d2[i] - u);
  return cost;
}

}  // namespace detail

// Centered ball with a fixed center: minimize R^2 + lambda * sum(slacks)
// subject to ||x_i - center||^2 <= R^2 + slack_i. The dual is linear in
// alpha over the capped simplex, so the optimum is the greedy capped
// assignment to the largest distances: with k = floor(1/lambda), the k
// farthest points take alpha = lambda, the (k+1)-th takes the remainder
// 1 - k*lambda and sits on the boundary, R = d_(k+1). When k >= N the
// ball degenerates to R = 0. Flat-region ties resolve to the minimal
// optimal radius.
inline CsvddSolution csvdd_fit_at(const PatchBatch& cluster, const Eigen::VectorXd& center,
                                  double lambda) {
  const int n = cluster.n();
  if (n < 1) throw EmptyCluster("csvdd_fit: empty cluster");
  if (lambda <= 0.0) throw Error("csvdd_fit: lambda must be > 0");
  if (center.size() != cluster.dim())
    throw DimensionMismatch("csvdd_fit: center dim " + std::to_string(center.size()) +
                            " vs cluster dim " + std::to_string(cluster.dim()));

  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i)
    d[i] = (cluster.data.row(i).transpose() - center).norm();

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (d[a] != d[b]) return d[a] > d[b];
    return a < b;
  });

  const int k = detail::cap_count(lambda);
  CsvddSolution sol;
  sol.center = center;
  sol.dual.alpha = Eigen::VectorXd::Zero(n);
  if (k >= n) {
    sol.radius = 0.0;
    sol.dual.alpha.setConstant(lambda);
  } else {
    for (int j = 0; j < k; ++j) sol.dual.alpha[order[j]] = lambda;
    sol.dual.alpha[order[k]] = 1.0 - k * lambda;
    sol.radius = d[order[k]];
  }
  sol.dual.objective = detail::primal_cost_at(d.array().square(), lambda, sol.radius * sol.radius);
  return sol;
}

inline CsvddSolution csvdd_fit(const PatchBatch& cluster, double lambda) {
  if (cluster.n() < 1) throw EmptyCluster("csvdd_fit: empty cluster");
  const Eigen::VectorXd centroid = cluster.data.colwise().mean().transpose();
  return csvdd_fit_at(cluster, centroid, lambda);
}

// Independent check on csvdd_fit: evaluate the primal objective at every
// breakpoint u in {0} union {d_i^2} and return the minimizing radius
// (minimal u on ties). Deliberately brute force.
inline double csvdd_oracle_at(const PatchBatch& cluster, const Eigen::VectorXd& center,
                              double lambda) {
  const int n = cluster.n();
  if (n < 1) throw EmptyCluster("csvdd_oracle: empty cluster");
  if (lambda <= 0.0) throw Error("csvdd_oracle: lambda must be > 0");

  Eigen::VectorXd d2(n);
  for (int i = 0; i < n; ++i)
    d2[i] = (cluster.data.row(i).transpose() - center).squaredNorm();

  std::vector<double> candidates(d2.data(), d2.data() + n);
  candidates.push_back(0.0);
  std::sort(candidates.begin(), candidates.end());

  double best_u = candidates.front();
  double best_cost = detail::primal_cost_at(d2, lambda, best_u);
  for (std::size_t c = 1; c < candidates.size(); ++c) {
    const double cost = detail::primal_cost_at(d2, lambda, candidates[c]);
    // keep the smaller u across flat regions
    if (cost < best_cost - 1e-9 * (1.0 + std::abs(best_cost))) {
      best_cost = cost;
      best_u = candidates[c];
    }
  }
  return std::sqrt(best_u);
}

inline double csvdd_oracle(const PatchBatch& cluster, double lambda) {
  if (cluster.n() < 1) throw EmptyCluster("csvdd_oracle: empty cluster");
  const Eigen::VectorXd centroid = cluster.data.colwise().mean().transpose();
  return csvdd_oracle_at(cluster, centroid, lambda);
}

namespace detail {

// Worst KKT violation of max g(alpha) over the capped simplex, given the
// gradient. Interior coordinates pin the multiplier mu; coordinates at 0
// need grad <= mu, coordinates at the cap need grad >= mu.
inline double kkt_residual(const Eigen::VectorXd& alpha, const Eigen::VectorXd& grad, double cap,
                           double band) {
  double mu;
  int interior = 0;
  double interior_sum = 0.0;
  double max_at_zero = -std::numeric_limits<double>::infinity();
  double min_at_cap = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (alpha[i] <= band) {
      max_at_zero = std::max(max_at_zero, grad[i]);
    } else if (alpha[i] >= cap - band) {
      min_at_cap = std::min(min_at_cap, grad[i]);
    } else {
      ++interior;
      interior_sum += grad[i];
    }
  }
  if (interior > 0)
    mu = interior_sum / interior;
  else if (std::isfinite(max_at_zero) && std::isfinite(min_at_cap))
    mu = 0.5 * (max_at_zero + min_at_cap);
  else if (std::isfinite(max_at_zero))
    mu = max_at_zero;
  else
    mu = min_at_cap;

  double res = 0.0;
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (alpha[i] <= band)
      res = std::max(res, grad[i] - mu);
    else if (alpha[i] >= cap - band)
      res = std::max(res, mu - grad[i]);
    else
      res = std::max(res, std::abs(grad[i] - mu));
  }
  return res;
}

}  // namespace detail

// Free-center ball: maximize sum alpha_i <x_i,x_i> - alpha^T G alpha over
// the capped simplex by projected gradient ascent; center = sum alpha_i x_i,
// radius = mean distance of the boundary support vectors
// (tol < alpha_i < lambda - tol). Points are shifted to their centroid
// before forming the Gram matrix.
inline SvddSolution svdd_fit(const PatchBatch& cluster, double lambda, double tol = 1e-6,
                             int max_iters = 10000) {
  const int n = cluster.n();
  if (n < 1) throw EmptyCluster("svdd_fit: empty cluster");
  if (lambda * n <= 1.0)
    throw InfeasibleLambda("svdd_fit: need lambda > 1/N, got lambda = " + std::to_string(lambda) +
                           " with N = " + std::to_string(n));

  const Eigen::RowVectorXd centroid = cluster.data.colwise().mean();
  const Eigen::MatrixXd X = cluster.data.rowwise() - centroid;
  const Eigen::MatrixXd G = X * X.transpose();
  const Eigen::VectorXd diag = G.diagonal();

  // Lipschitz constant of the gradient is 2 * lambda_max(G)
  double eig_max = 0.0;
  {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
    for (int it = 0; it < 64; ++it) {
      Eigen::VectorXd w = G * v;
      const double norm = w.norm();
      if (norm <= 0.0) break;
      v = w / norm;
      eig_max = norm;
    }
  }
  const double step = 1.0 / std::max(2.0 * eig_max * 1.05, 1e-12);

  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(n, 1.0 / n);
  const double band = std::min(tol, 0.25 * lambda);

  SvddSolution sol;
  double residual = std::numeric_limits<double>::infinity();
  int it = 0;
  for (; it < max_iters; ++it) {
    const Eigen::VectorXd grad = diag - 2.0 * (G * alpha);
    residual = detail::kkt_residual(alpha, grad, lambda, band);
    if (residual <= tol) break;
    alpha = project_capped_simplex(alpha + step * grad, lambda, 1.0);
  }
  if (residual > tol)
    throw NotConverged("svdd_fit: KKT residual " + std::to_string(residual) + " after " +
                       std::to_string(max_iters) + " iterations");

  sol.iterations = it;
  sol.dual.alpha = alpha;
  sol.center = (centroid + alpha.transpose() * X).transpose();

  Eigen::VectorXd dist(n);
  for (int i = 0; i < n; ++i)
    dist[i] = (cluster.data.row(i).transpose() - sol.center).norm();

  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < n; ++i)
    if (alpha[i] > tol && alpha[i] < lambda - tol) {
      sum += dist[i];
      ++count;
    }
  if (count > 0) {
    sol.radius = sum / count;
  } else {
    // no boundary support vectors: cover everything not pushed out by the cap
    double r = 0.0;
    bool any = false;
    for (int i = 0; i < n; ++i)
      if (alpha[i] < lambda - tol) {
        r = std::max(r, dist[i]);
        any = true;
      }
    sol.radius = any ? r : dist.maxCoeff();
  }
  sol.dual.objective =
      detail::primal_cost_at(dist.array().square(), lambda, sol.radius * sol.radius);
  return sol;
}

// One ball per atom over the batch partition induced by nearest-atom
// assignment. C-SVDD balls are centered on the atoms themselves; SVDD
// balls use their solved centers. Empty clusters get radius 0 at the atom.
inline BallModel fit_all(const Dictionary& dict, const PatchBatch& batch, double lambda,
                         BallKind kind, double tol = 1e-6, int max_iters = 10000) {
  if (batch.dim() != dict.dim())
    throw DimensionMismatch("fit_all: batch dim " + std::to_string(batch.dim()) + " vs atom dim " +
                            std::to_string(dict.dim()));
  const int K = dict.K();
  const Assignment asg = assign(batch, dict);

  std::vector<std::vector<int>> members(K);
  for (int i = 0; i < batch.n(); ++i) members[asg.index[i]].push_back(i);

  BallModel model;
  model.lambda = lambda;
  model.kind = kind;
  model.centers.resize(K, dict.dim());
  model.radii.resize(K);

  for (int k = 0; k < K; ++k) {
    if (members[k].empty()) {
      model.centers.row(k) = dict.atoms.row(k);
      model.radii[k] = 0.0;
      continue;
    }
    PatchBatch cluster;
    cluster.r = batch.r;
    cluster.data.resize(static_cast<int>(members[k].size()), batch.dim());
    for (std::size_t i = 0; i < members[k].size(); ++i)
      cluster.data.row(static_cast<int>(i)) = batch.data.row(members[k][i]);

    try {
      if (kind == BallKind::kCsvdd) {
        const CsvddSolution sol = csvdd_fit_at(cluster, dict.atoms.row(k).transpose(), lambda);
        model.centers.row(k) = dict.atoms.row(k);
        model.radii[k] = sol.radius;
      } else {
        const SvddSolution sol = svdd_fit(cluster, lambda, tol, max_iters);
        model.centers.row(k) = sol.center.transpose();
        model.radii[k] = sol.radius;
      }
    } catch (const InfeasibleLambda& e) {
      throw InfeasibleLambda("cluster " + std::to_string(k) + ": " + e.what());
    } catch (const NotConverged& e) {
      throw NotConverged("cluster " + std::to_string(k) + ": " + e.what());
    }
  }
  return model;
}

}  // namespace csvddnet
