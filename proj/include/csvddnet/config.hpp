#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "csvddnet/dictionary.hpp"
#include "csvddnet/encoder.hpp"
#include "csvddnet/errors.hpp"
#include "csvddnet/learner.hpp"
#include "csvddnet/pipeline.hpp"
#include "csvddnet/whitening.hpp"

namespace csvddnet {

// All knobs of the pipeline plus dataset and artifact paths. Loaded from
// a flat `key = value` file; lists are comma-separated; unknown keys are
// rejected.
struct PipelineConfig {
  std::vector<int> receptive_fields{5};
  std::vector<int> pooling_sizes{4};
  int sift_blocks = 3;
  int K = 500;
  double lambda = 1.0;
  EncodingKind encoding = EncodingKind::kCsvdd;
  BallKind ball_solver = BallKind::kCsvdd;
  DictInit dict_init = DictInit::kKmeansPlusPlus;
  uint64_t seed = 42;
  int num_patches = 20000;
  int kmeans_iters = 50;
  double eps_norm = kDefaultEpsNorm;
  double zca_epsilon = -1.0;  // < 0 selects the relative default
  int epochs = 20;
  double reg = 1.0;
  double stack_reg = 1.0;
  bool sift_interpolation = false;
  StackMode stacking_mode = StackMode::kFull;
  RegForm stack_reg_form = RegForm::kSquared;
  bool normalize_views = true;
  std::vector<int> pca_dims{0};  // 0 = no compression
  double svdd_tol = 1e-6;
  int svdd_max_iters = 10000;

  std::string train_images;
  std::string train_labels;
  std::string test_images;
  std::string test_labels;
  std::string image_dir;
  std::string encode_split = "test";  // train | test | dir
  std::string bundle;
  std::string descriptors;
  std::string ids;
  std::string ground_truth;

  std::vector<View> views() const {
    std::vector<View> vs;
    vs.reserve(receptive_fields.size());
    for (std::size_t i = 0; i < receptive_fields.size(); ++i)
      vs.push_back(View{receptive_fields[i], pooling_sizes[i], sift_blocks, encoding});
    return vs;
  }

  std::vector<int> distinct_fields() const {
    std::vector<int> rs = receptive_fields;
    std::sort(rs.begin(), rs.end());
    rs.erase(std::unique(rs.begin(), rs.end()), rs.end());
    return rs;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline int to_int(const std::string& v, const std::string& key) {
  std::size_t used = 0;
  int out = 0;
  try {
    out = std::stoi(v, &used);
  } catch (...) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("key '" + key + "': expected an integer, got '" + v + "'");
  return out;
}

inline double to_double(const std::string& v, const std::string& key) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &used);
  } catch (...) {
    throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  }
  if (used != v.size()) throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
  return out;
}

inline uint64_t to_u64(const std::string& v, const std::string& key) {
  std::size_t used = 0;
  unsigned long long out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (...) {
    throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + v + "'");
  }
  if (used != v.size())
    throw ConfigError("key '" + key + "': expected an unsigned integer, got '" + v + "'");
  return out;
}

inline bool to_bool(const std::string& v, const std::string& key) {
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("key '" + key + "': expected 0/1/true/false, got '" + v + "'");
}

inline std::vector<int> to_int_list(const std::string& v, const std::string& key) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string token;
  while (std::getline(ss, token, ',')) {
    token = trim(token);
    if (!token.empty()) out.push_back(to_int(token, key));
  }
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

}  // namespace detail

inline PipelineConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
  PipelineConfig cfg;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = origin + ":" + std::to_string(lineno);
    const std::string stripped = detail::trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = detail::trim(stripped.substr(0, eq));
    const std::string value = detail::trim(stripped.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (!seen.insert(key).second) throw ConfigError(where + ": duplicate key '" + key + "'");

    if (key == "receptive_fields") cfg.receptive_fields = detail::to_int_list(value, key);
    else if (key == "pooling_sizes") cfg.pooling_sizes = detail::to_int_list(value, key);
    else if (key == "sift_blocks") cfg.sift_blocks = detail::to_int(value, key);
    else if (key == "K") cfg.K = detail::to_int(value, key);
    else if (key == "lambda") cfg.lambda = detail::to_double(value, key);
    else if (key == "encoding") cfg.encoding = parse_encoding(value);
    else if (key == "ball_solver") {
      if (value == "csvdd") cfg.ball_solver = BallKind::kCsvdd;
      else if (value == "svdd") cfg.ball_solver = BallKind::kSvdd;
      else throw ConfigError(where + ": ball_solver must be csvdd or svdd");
    } else if (key == "dict_init") {
      if (value == "kmeans") cfg.dict_init = DictInit::kKmeansPlusPlus;
      else if (value == "random") cfg.dict_init = DictInit::kRandom;
      else throw ConfigError(where + ": dict_init must be kmeans or random");
    } else if (key == "seed") cfg.seed = detail::to_u64(value, key);
    else if (key == "num_patches") cfg.num_patches = detail::to_int(value, key);
    else if (key == "kmeans_iters") cfg.kmeans_iters = detail::to_int(value, key);
    else if (key == "eps_norm") cfg.eps_norm = detail::to_double(value, key);
    else if (key == "zca_epsilon") {
      if (value == "auto") cfg.zca_epsilon = -1.0;
      else cfg.zca_epsilon = detail::to_double(value, key);
    } else if (key == "epochs") cfg.epochs = detail::to_int(value, key);
    else if (key == "reg") cfg.reg = detail::to_double(value, key);
    else if (key == "stack_reg") cfg.stack_reg = detail::to_double(value, key);
    else if (key == "sift_interpolation") {
      if (value == "hard") cfg.sift_interpolation = false;
      else if (value == "linear") cfg.sift_interpolation = true;
      else throw ConfigError(where + ": sift_interpolation must be hard or linear");
    } else if (key == "stacking_mode") {
      if (value == "full") cfg.stacking_mode = StackMode::kFull;
      else if (value == "scalar") cfg.stacking_mode = StackMode::kScalar;
      else throw ConfigError(where + ": stacking_mode must be full or scalar");
    } else if (key == "stack_reg_form") {
      if (value == "squared") cfg.stack_reg_form = RegForm::kSquared;
      else if (value == "norm") cfg.stack_reg_form = RegForm::kNorm;
      else throw ConfigError(where + ": stack_reg_form must be squared or norm");
    } else if (key == "normalize_views") cfg.normalize_views = detail::to_bool(value, key);
    else if (key == "pca_dims") cfg.pca_dims = detail::to_int_list(value, key);
    else if (key == "svdd_tol") cfg.svdd_tol = detail::to_double(value, key);
    else if (key == "svdd_max_iters") cfg.svdd_max_iters = detail::to_int(value, key);
    else if (key == "train_images") cfg.train_images = value;
    else if (key == "train_labels") cfg.train_labels = value;
    else if (key == "test_images") cfg.test_images = value;
    else if (key == "test_labels") cfg.test_labels = value;
    else if (key == "image_dir") cfg.image_dir = value;
    else if (key == "encode_split") {
      if (value != "train" && value != "test" && value != "dir")
        throw ConfigError(where + ": encode_split must be train, test or dir");
      cfg.encode_split = value;
    } else if (key == "bundle") cfg.bundle = value;
    else if (key == "descriptors") cfg.descriptors = value;
    else if (key == "ids") cfg.ids = value;
    else if (key == "ground_truth") cfg.ground_truth = value;
    else throw ConfigError(where + ": unknown key '" + key + "'");
  }

  if (cfg.receptive_fields.size() != cfg.pooling_sizes.size())
    throw ConfigError(origin + ": receptive_fields and pooling_sizes must have equal length");
  for (int r : cfg.receptive_fields)
    if (r < 1) throw ConfigError(origin + ": receptive field sizes must be >= 1");
  for (int p : cfg.pooling_sizes)
    if (p < 1) throw ConfigError(origin + ": pooling sizes must be >= 1");
  if (cfg.sift_blocks < 1) throw ConfigError(origin + ": sift_blocks must be >= 1");
  if (cfg.K < 1) throw ConfigError(origin + ": K must be >= 1");
  if (cfg.lambda <= 0.0) throw ConfigError(origin + ": lambda must be > 0");
  if (cfg.num_patches < 1) throw ConfigError(origin + ": num_patches must be >= 1");
  return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in, path);
}

}  // namespace csvddnet
