#pragma once

#include <string>

#include "csvddnet/balls.hpp"
#include "csvddnet/bundle.hpp"
#include "csvddnet/dictionary.hpp"
#include "csvddnet/learner.hpp"
#include "csvddnet/whitening.hpp"

namespace csvddnet {

// Bundle section layout for each model type. Prefixes name the model
// instance, e.g. "dict:r=5"; fields live under "<prefix>/<field>".

inline void put_whitening(Bundle& b, const std::string& prefix, const WhiteningTransform& w) {
  b.set(prefix + "/mean", pack_vector(w.mean));
  b.set(prefix + "/matrix", pack_matrix(w.matrix));
  b.set(prefix + "/epsilon", pack_f64(w.epsilon));
}

inline WhiteningTransform get_whitening(const Bundle& b, const std::string& prefix) {
  WhiteningTransform w;
  w.mean = unpack_vector(b.raw(prefix + "/mean"));
  w.matrix = unpack_matrix(b.raw(prefix + "/matrix"));
  w.epsilon = unpack_f64(b.raw(prefix + "/epsilon"));
  if (w.matrix.rows() != w.matrix.cols() || w.matrix.rows() != w.mean.size())
    throw BundleError("bundle: inconsistent whitening section " + prefix);
  return w;
}

inline void put_dictionary(Bundle& b, const std::string& prefix, const Dictionary& d) {
  b.set(prefix + "/atoms", pack_matrix(d.atoms));
  b.set(prefix + "/r", pack_i64(d.r));
  b.set(prefix + "/init", std::string(d.init == DictInit::kKmeansPlusPlus ? "kmeans" : "random"));
  b.set(prefix + "/seed", pack_i64(static_cast<int64_t>(d.seed)));
}

inline Dictionary get_dictionary(const Bundle& b, const std::string& prefix) {
  Dictionary d;
  d.atoms = unpack_matrix(b.raw(prefix + "/atoms"));
  d.r = static_cast<int>(unpack_i64(b.raw(prefix + "/r")));
  const std::string init = b.raw(prefix + "/init");
  if (init == "kmeans") d.init = DictInit::kKmeansPlusPlus;
  else if (init == "random") d.init = DictInit::kRandom;
  else throw BundleError("bundle: unknown dictionary init '" + init + "'");
  d.seed = static_cast<uint64_t>(unpack_i64(b.raw(prefix + "/seed")));
  if (d.r < 1 || d.atoms.cols() != static_cast<Eigen::Index>(d.r) * d.r)
    throw BundleError("bundle: inconsistent dictionary section " + prefix);
  return d;
}

inline void put_balls(Bundle& b, const std::string& prefix, const BallModel& m) {
  b.set(prefix + "/centers", pack_matrix(m.centers));
  b.set(prefix + "/radii", pack_vector(m.radii));
  b.set(prefix + "/lambda", pack_f64(m.lambda));
  b.set(prefix + "/kind", std::string(m.kind == BallKind::kCsvdd ? "csvdd" : "svdd"));
}

inline BallModel get_balls(const Bundle& b, const std::string& prefix) {
  BallModel m;
  m.centers = unpack_matrix(b.raw(prefix + "/centers"));
  m.radii = unpack_vector(b.raw(prefix + "/radii"));
  m.lambda = unpack_f64(b.raw(prefix + "/lambda"));
  const std::string kind = b.raw(prefix + "/kind");
  if (kind == "csvdd") m.kind = BallKind::kCsvdd;
  else if (kind == "svdd") m.kind = BallKind::kSvdd;
  else throw BundleError("bundle: unknown ball kind '" + kind + "'");
  if (m.centers.rows() != m.radii.size())
    throw BundleError("bundle: inconsistent ball section " + prefix);
  return m;
}

inline void put_linear_model(Bundle& b, const std::string& prefix, const LinearModel& m) {
  b.set(prefix + "/theta", pack_matrix(m.theta));
  b.set(prefix + "/bias", pack_vector(m.bias));
  b.set(prefix + "/view", pack_i64(m.view));
}

inline LinearModel get_linear_model(const Bundle& b, const std::string& prefix) {
  LinearModel m;
  m.theta = unpack_matrix(b.raw(prefix + "/theta"));
  m.bias = unpack_vector(b.raw(prefix + "/bias"));
  m.view = static_cast<int>(unpack_i64(b.raw(prefix + "/view")));
  if (m.theta.cols() != m.bias.size())
    throw BundleError("bundle: inconsistent classifier section " + prefix);
  return m;
}

inline void put_stack_model(Bundle& b, const std::string& prefix, const StackModel& m) {
  b.set(prefix + "/a", pack_matrix(m.a));
  b.set(prefix + "/bias", pack_vector(m.bias.size() ? m.bias : Eigen::VectorXd(0)));
  b.set(prefix + "/T", pack_i64(m.T));
  b.set(prefix + "/C", pack_i64(m.C));
  b.set(prefix + "/mode", std::string(m.mode == StackMode::kFull ? "full" : "scalar"));
}

inline StackModel get_stack_model(const Bundle& b, const std::string& prefix) {
  StackModel m;
  m.a = unpack_matrix(b.raw(prefix + "/a"));
  m.bias = unpack_vector(b.raw(prefix + "/bias"));
  m.T = static_cast<int>(unpack_i64(b.raw(prefix + "/T")));
  m.C = static_cast<int>(unpack_i64(b.raw(prefix + "/C")));
  const std::string mode = b.raw(prefix + "/mode");
  if (mode == "full") m.mode = StackMode::kFull;
  else if (mode == "scalar") m.mode = StackMode::kScalar;
  else throw BundleError("bundle: unknown stacking mode '" + mode + "'");
  return m;
}

}  // namespace csvddnet
