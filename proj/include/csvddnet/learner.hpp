#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "csvddnet/errors.hpp"
#include "csvddnet/rng.hpp"

namespace csvddnet {

// One-vs-rest linear model for a single view: theta column c scores class
// c, bias kept separate and unregularized.
struct LinearModel {
  Eigen::MatrixXd theta;  // D x C
  Eigen::VectorXd bias;   // C
  int view = 0;

  int D() const { return static_cast<int>(theta.rows()); }
  int C() const { return static_cast<int>(theta.cols()); }
};

enum class StackMode { kFull, kScalar };
enum class RegForm { kSquared, kNorm };

// Stacked combiner over per-view softmax outputs. Full mode learns a
// (T*C) x C weight matrix plus bias; scalar mode learns one weight per
// view shared across classes, no bias.
struct StackModel {
  Eigen::MatrixXd a;      // full: (T*C) x C; scalar: T x 1
  Eigen::VectorXd bias;   // full: C; scalar: empty
  int T = 0;
  int C = 0;
  StackMode mode = StackMode::kFull;
};

struct EnsembleModel {
  std::vector<LinearModel> views;
  StackModel stack;

  int T() const { return static_cast<int>(views.size()); }
  int C() const { return stack.C; }
};

struct PcaModel {
  Eigen::VectorXd mean;   // D
  Eigen::MatrixXd basis;  // D x D', orthonormal columns

  int D() const { return static_cast<int>(basis.rows()); }
  int out_dim() const { return static_cast<int>(basis.cols()); }
};

namespace detail {

inline void check_labels(const std::vector<int>& y, int C) {
  for (std::size_t i = 0; i < y.size(); ++i)
    if (y[i] < 0 || y[i] >= C)
      throw LabelOutOfRange("label " + std::to_string(y[i]) + " at sample " + std::to_string(i) +
                            " outside [0, " + std::to_string(C) + ")");
}

// Joint squared-hinge objective over all classes. The last weight row is
// the bias and stays out of the regularizer when skip_last_row is set.
inline double squared_hinge_objective(const Eigen::MatrixXd& Xa, const std::vector<int>& y,
                                      const Eigen::MatrixXd& W, double reg, bool skip_last_row,
                                      RegForm form) {
  const int n = static_cast<int>(Xa.rows());
  const int C = static_cast<int>(W.cols());
  const Eigen::MatrixXd scores = Xa * W;
  double loss = 0.0;
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < C; ++c) {
      const double s = (y[i] == c) ? 1.0 : -1.0;
      const double gap = 1.0 - s * scores(i, c);
      if (gap > 0.0) loss += gap * gap;
    }
  const int rows = skip_last_row ? static_cast<int>(W.rows()) - 1 : static_cast<int>(W.rows());
  for (int c = 0; c < C; ++c) {
    const double norm2 = W.col(c).head(rows).squaredNorm();
    loss += (form == RegForm::kSquared) ? reg * norm2 : reg * std::sqrt(norm2);
  }
  return loss;
}

struct HingeFit {
  Eigen::MatrixXd W;
  double objective = 0.0;
  std::vector<double> epoch_objectives;  // accepted value at each epoch boundary
};

// Epoch subgradient descent with step eta0 / (1 + eta0 * reg * t), t a
// global sample counter. Epochs that raise the objective are rolled back
// and the step scale halved, which keeps the epoch-boundary objective
// trace non-increasing. eta0 runs over a fixed grid and the best final
// objective wins.
inline HingeFit squared_hinge_fit(const Eigen::MatrixXd& Xa, const std::vector<int>& y, int C,
                                  double reg, int epochs, uint64_t seed, bool skip_last_row,
                                  RegForm form) {
  const int n = static_cast<int>(Xa.rows());
  const int D = static_cast<int>(Xa.cols());
  const int reg_rows = skip_last_row ? D - 1 : D;

  HingeFit best;
  best.objective = std::numeric_limits<double>::infinity();

  const double grid[] = {1.0, 0.1, 0.01};
  for (double eta0 : grid) {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(D, C);
    double accepted = squared_hinge_objective(Xa, y, W, reg, skip_last_row, form);
    std::vector<double> trace{accepted};
    double scale = 1.0;
    long t = 0;

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < epochs && scale > 1e-12; ++epoch) {
      const Eigen::MatrixXd snapshot = W;
      Rng rng(mix_seed(seed, static_cast<uint64_t>(epoch) + 1));
      rng.shuffle(order);

      for (int idx : order) {
        ++t;
        const double eta = scale * eta0 / (1.0 + eta0 * reg * static_cast<double>(t));
        const Eigen::VectorXd x = Xa.row(idx).transpose();
        const Eigen::RowVectorXd scores = Xa.row(idx) * W;
        for (int c = 0; c < C; ++c) {
          const double s = (y[idx] == c) ? 1.0 : -1.0;
          const double gap = 1.0 - s * scores[c];
          if (gap > 0.0) W.col(c).noalias() += eta * (2.0 * gap * s) * x;
          auto wreg = W.col(c).head(reg_rows);
          if (form == RegForm::kSquared) {
            wreg *= (1.0 - eta * 2.0 * reg / n);
          } else {
            const double norm = wreg.norm();
            if (norm > 0.0) wreg *= (1.0 - eta * reg / (norm * n));
          }
        }
      }

      const double J = squared_hinge_objective(Xa, y, W, reg, skip_last_row, form);
      if (J <= accepted + 1e-12 * (1.0 + std::abs(accepted))) {
        accepted = J;
      } else {
        W = snapshot;
        scale *= 0.5;
      }
      trace.push_back(accepted);
    }

    if (accepted < best.objective) {
      best.W = W;
      best.objective = accepted;
      best.epoch_objectives = trace;
    }
  }
  return best;
}

}  // namespace detail

// One-vs-rest squared-hinge linear SVMs, all classes trained jointly on a
// shared sample order. Deterministic for a fixed seed.
inline LinearModel svm_train(const Eigen::MatrixXd& X, const std::vector<int>& y, double reg,
                             int epochs, uint64_t seed, int num_classes = 0,
                             std::vector<double>* objective_trace = nullptr) {
  const int n = static_cast<int>(X.rows());
  if (n == 0 || static_cast<int>(y.size()) != n)
    throw DimensionMismatch("svm_train: " + std::to_string(n) + " rows vs " +
                            std::to_string(y.size()) + " labels");
  int C = num_classes;
  if (C <= 0) {
    C = 0;
    for (int label : y) C = std::max(C, label + 1);
  }
  if (C < 2) throw LabelOutOfRange("svm_train: need at least 2 classes");
  detail::check_labels(y, C);
  if (n < C) throw TooFewPoints("svm_train: " + std::to_string(n) + " samples for " +
                                std::to_string(C) + " classes");
  if (reg <= 0.0) throw ConfigError("svm_train: reg must be > 0");

  Eigen::MatrixXd Xa(n, X.cols() + 1);
  Xa << X, Eigen::VectorXd::Ones(n);
  const detail::HingeFit fit =
      detail::squared_hinge_fit(Xa, y, C, reg, epochs, seed, true, RegForm::kSquared);
  if (objective_trace != nullptr) *objective_trace = fit.epoch_objectives;

  LinearModel model;
  model.theta = fit.W.topRows(X.cols());
  model.bias = fit.W.bottomRows(1).transpose();
  return model;
}

inline Eigen::VectorXd svm_scores(const LinearModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.D())
    throw DimensionMismatch("svm_scores: input dim " + std::to_string(x.size()) + " vs model dim " +
                            std::to_string(model.D()));
  return model.theta.transpose() * x + model.bias;
}

inline int svm_predict(const LinearModel& model, const Eigen::VectorXd& x) {
  const Eigen::VectorXd s = svm_scores(model, x);
  int best = 0;
  for (int c = 1; c < model.C(); ++c)
    if (s[c] > s[best]) best = c;
  return best;
}

inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp();
  return e / e.sum();
}

inline Eigen::VectorXd softmax_outputs(const LinearModel& model, const Eigen::VectorXd& x) {
  return softmax(svm_scores(model, x));
}

// F holds one row per sample: the T per-view softmax C-vectors
// concatenated in view order.
inline StackModel stack_train(const Eigen::MatrixXd& F, const std::vector<int>& y, int T, int C,
                              double reg, int epochs, uint64_t seed,
                              StackMode mode = StackMode::kFull,
                              RegForm form = RegForm::kSquared) {
  const int n = static_cast<int>(F.rows());
  if (T < 1 || C < 2) throw ConfigError("stack_train: need T >= 1 and C >= 2");
  if (F.cols() != static_cast<Eigen::Index>(T) * C)
    throw DimensionMismatch("stack_train: " + std::to_string(F.cols()) + " columns vs T*C = " +
                            std::to_string(T * C));
  if (static_cast<int>(y.size()) != n)
    throw DimensionMismatch("stack_train: rows vs labels");
  detail::check_labels(y, C);

  StackModel model;
  model.T = T;
  model.C = C;
  model.mode = mode;

  if (mode == StackMode::kFull) {
    Eigen::MatrixXd Fa(n, F.cols() + 1);
    Fa << F, Eigen::VectorXd::Ones(n);
    const detail::HingeFit fit = detail::squared_hinge_fit(Fa, y, C, reg, epochs, seed, true, form);
    model.a = fit.W.topRows(F.cols());
    model.bias = fit.W.bottomRows(1).transpose();
    return model;
  }

  // scalar mode: score_c = sum_t a_t * f_tc, same epoch scheme on the T
  // shared weights
  Eigen::VectorXd a = Eigen::VectorXd::Ones(T);
  auto objective = [&](const Eigen::VectorXd& w) {
    double loss = 0.0;
    for (int i = 0; i < n; ++i)
      for (int c = 0; c < C; ++c) {
        double score = 0.0;
        for (int tv = 0; tv < T; ++tv) score += w[tv] * F(i, tv * C + c);
        const double s = (y[i] == c) ? 1.0 : -1.0;
        const double gap = 1.0 - s * score;
        if (gap > 0.0) loss += gap * gap;
      }
    return loss + ((form == RegForm::kSquared) ? reg * w.squaredNorm() : reg * w.norm());
  };

  double accepted = objective(a);
  double scale = 1.0;
  long t = 0;
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < epochs && scale > 1e-12; ++epoch) {
    const Eigen::VectorXd snapshot = a;
    Rng rng(mix_seed(seed, static_cast<uint64_t>(epoch) + 1));
    rng.shuffle(order);
    for (int idx : order) {
      ++t;
      const double eta = scale / (1.0 + reg * static_cast<double>(t));
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(T);
      for (int c = 0; c < C; ++c) {
        double score = 0.0;
        for (int tv = 0; tv < T; ++tv) score += a[tv] * F(idx, tv * C + c);
        const double s = (y[idx] == c) ? 1.0 : -1.0;
        const double gap = 1.0 - s * score;
        if (gap > 0.0)
          for (int tv = 0; tv < T; ++tv) grad[tv] -= 2.0 * gap * s * F(idx, tv * C + c);
      }
      if (form == RegForm::kSquared) {
        grad += (2.0 * reg / n) * a;
      } else if (a.norm() > 0.0) {
        grad += (reg / (a.norm() * n)) * a;
      }
      a -= eta * grad;
    }
    const double J = objective(a);
    if (J <= accepted + 1e-12 * (1.0 + std::abs(accepted))) {
      accepted = J;
    } else {
      a = snapshot;
      scale *= 0.5;
    }
  }
  model.a = a;
  return model;
}

inline Eigen::VectorXd stack_scores(const StackModel& model, const Eigen::VectorXd& f) {
  if (f.size() != static_cast<Eigen::Index>(model.T) * model.C)
    throw DimensionMismatch("stack_scores: input dim " + std::to_string(f.size()) + " vs T*C = " +
                            std::to_string(model.T * model.C));
  if (model.mode == StackMode::kFull) return model.a.transpose() * f + model.bias;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(model.C);
  for (int tv = 0; tv < model.T; ++tv)
    s += model.a(tv, 0) * f.segment(tv * model.C, model.C);
  return s;
}

// Stacked decision over all views of one sample: per-view softmax,
// concatenate, score, argmax (lowest index on ties).
inline int ensemble_predict(const EnsembleModel& model,
                            const std::vector<Eigen::VectorXd>& view_inputs) {
  if (static_cast<int>(view_inputs.size()) != model.T())
    throw MissingView("ensemble_predict: got " + std::to_string(view_inputs.size()) +
                      " views, model has " + std::to_string(model.T()));
  const int C = model.C();
  Eigen::VectorXd f(model.T() * C);
  for (int tv = 0; tv < model.T(); ++tv)
    f.segment(tv * C, C) = softmax_outputs(model.views[tv], view_inputs[tv]);
  const Eigen::VectorXd s = stack_scores(model.stack, f);
  int best = 0;
  for (int c = 1; c < C; ++c)
    if (s[c] > s[best]) best = c;
  return best;
}

// Top eigenvectors of the sample covariance; column signs fixed so the
// largest-magnitude entry is positive.
inline PcaModel pca_fit(const Eigen::MatrixXd& X, int out_dim) {
  const int n = static_cast<int>(X.rows());
  const int D = static_cast<int>(X.cols());
  if (n < 2) throw TooFewPoints("pca_fit: need at least 2 samples");
  if (out_dim < 1 || out_dim > std::min(n, D))
    throw RankDeficient("pca_fit: target dim " + std::to_string(out_dim) +
                        " outside [1, min(n, D) = " + std::to_string(std::min(n, D)) + "]");

  PcaModel model;
  model.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd centered = X.rowwise() - model.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / double(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw RankDeficient("pca_fit: eigensolver failed");

  const Eigen::VectorXd evals = solver.eigenvalues();  // ascending
  const double lead = std::max(evals[D - 1], 0.0);
  int rank = 0;
  for (int i = 0; i < D; ++i)
    if (evals[i] > 1e-10 * std::max(lead, 1e-300)) ++rank;
  if (out_dim > rank)
    throw RankDeficient("pca_fit: target dim " + std::to_string(out_dim) + " exceeds rank " +
                        std::to_string(rank));

  model.basis.resize(D, out_dim);
  for (int j = 0; j < out_dim; ++j) {
    Eigen::VectorXd v = solver.eigenvectors().col(D - 1 - j);
    int arg = 0;
    for (int i = 1; i < D; ++i)
      if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
    if (v[arg] < 0.0) v = -v;
    model.basis.col(j) = v;
  }
  return model;
}

inline Eigen::VectorXd pca_apply(const PcaModel& model, const Eigen::VectorXd& x) {
  if (x.size() != model.D())
    throw DimensionMismatch("pca_apply: input dim " + std::to_string(x.size()) + " vs model dim " +
                            std::to_string(model.D()));
  return model.basis.transpose() * (x - model.mean);
}

inline Eigen::MatrixXd pca_apply_batch(const PcaModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.D())
    throw DimensionMismatch("pca_apply: input dim " + std::to_string(X.cols()) + " vs model dim " +
                            std::to_string(model.D()));
  return (X.rowwise() - model.mean.transpose()) * model.basis;
}

}  // namespace csvddnet
