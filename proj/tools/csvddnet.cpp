// Command-line driver: train-dict, fit-balls, encode, train-clf, eval,
// retrieve. Every command takes --config and produces byte-identical
// outputs on rerun with the same inputs, seed and --threads 1.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "csvddnet/csvddnet.hpp"

namespace cn = csvddnet;

namespace {

struct CommonArgs {
  std::string config_path;
  int threads = 1;
  bool seed_set = false;
  uint64_t seed = 0;
  std::string out;
};

cn::PipelineConfig load(const CommonArgs& args) {
  cn::PipelineConfig cfg = cn::load_config(args.config_path);
  if (args.seed_set) cfg.seed = args.seed;
  return cfg;
}

void require_path(const std::string& value, const std::string& key) {
  if (value.empty()) throw cn::ConfigError("missing required config key '" + key + "'");
}

uint64_t patch_seed(uint64_t base, int r) { return cn::mix_seed(base, 10 + static_cast<uint64_t>(r)); }
uint64_t dict_seed(uint64_t base, int r) { return cn::mix_seed(base, 1000 + static_cast<uint64_t>(r)); }
uint64_t clf_seed(uint64_t base, int view) { return cn::mix_seed(base, 2000 + static_cast<uint64_t>(view)); }
uint64_t stack_seed(uint64_t base) { return cn::mix_seed(base, 3000); }

std::vector<std::string> list_pgm_dir(const std::string& dir, std::vector<std::string>* ids) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw cn::ConfigError("image_dir '" + dir + "' is not a directory");
  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm")
      paths.push_back(entry.path().string());
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw cn::ConfigError("image_dir '" + dir + "' has no .pgm files");
  if (ids != nullptr) {
    ids->clear();
    for (const std::string& p : paths) ids->push_back(fs::path(p).stem().string());
  }
  return paths;
}

std::vector<cn::GrayImage> load_pgm_dir(const std::string& dir, std::vector<std::string>* ids) {
  std::vector<cn::GrayImage> images;
  for (const std::string& p : list_pgm_dir(dir, ids)) images.push_back(cn::read_pgm(p));
  return images;
}

// Patch sources for dictionary and ball fitting: the labeled train split
// when present, the image directory otherwise.
std::vector<cn::GrayImage> load_unlabeled_images(const cn::PipelineConfig& cfg) {
  if (!cfg.train_images.empty()) return cn::read_idx_images(cfg.train_images);
  if (!cfg.image_dir.empty()) return load_pgm_dir(cfg.image_dir, nullptr);
  throw cn::ConfigError("need train_images or image_dir");
}

struct PipelineModels {
  int K = 0;
  int sift_blocks = 3;
  cn::EncodingKind encoding = cn::EncodingKind::kCsvdd;
  double eps_norm = cn::kDefaultEpsNorm;
  bool interpolation = false;
  uint64_t seed = 0;
  int num_patches = 0;
  std::vector<cn::View> views;
  std::map<int, cn::Dictionary> dicts;
  std::map<int, cn::WhiteningTransform> whitenings;
  std::map<int, cn::BallModel> balls;
};

void write_meta(cn::Bundle& b, const cn::PipelineConfig& cfg) {
  b.set("meta/K", cn::pack_i64(cfg.K));
  std::vector<int64_t> rs(cfg.receptive_fields.begin(), cfg.receptive_fields.end());
  std::vector<int64_t> ps(cfg.pooling_sizes.begin(), cfg.pooling_sizes.end());
  b.set("meta/receptive_fields", cn::pack_i64_list(rs));
  b.set("meta/pooling_sizes", cn::pack_i64_list(ps));
  b.set("meta/sift_blocks", cn::pack_i64(cfg.sift_blocks));
  b.set("meta/encoding", cn::encoding_name(cfg.encoding));
  b.set("meta/eps_norm", cn::pack_f64(cfg.eps_norm));
  b.set("meta/interpolation", cn::pack_i64(cfg.sift_interpolation ? 1 : 0));
  b.set("meta/seed", cn::pack_i64(static_cast<int64_t>(cfg.seed)));
  b.set("meta/num_patches", cn::pack_i64(cfg.num_patches));
}

PipelineModels read_models(const cn::Bundle& b, bool need_balls) {
  PipelineModels m;
  m.K = static_cast<int>(cn::unpack_i64(b.raw("meta/K")));
  m.sift_blocks = static_cast<int>(cn::unpack_i64(b.raw("meta/sift_blocks")));
  m.encoding = cn::parse_encoding(b.raw("meta/encoding"));
  m.eps_norm = cn::unpack_f64(b.raw("meta/eps_norm"));
  m.interpolation = cn::unpack_i64(b.raw("meta/interpolation")) != 0;
  m.seed = static_cast<uint64_t>(cn::unpack_i64(b.raw("meta/seed")));
  m.num_patches = static_cast<int>(cn::unpack_i64(b.raw("meta/num_patches")));

  const std::vector<int64_t> rs = cn::unpack_i64_list(b.raw("meta/receptive_fields"));
  const std::vector<int64_t> ps = cn::unpack_i64_list(b.raw("meta/pooling_sizes"));
  if (rs.size() != ps.size()) throw cn::BundleError("bundle: view lists of unequal length");
  for (std::size_t i = 0; i < rs.size(); ++i)
    m.views.push_back(cn::View{static_cast<int>(rs[i]), static_cast<int>(ps[i]), m.sift_blocks,
                               m.encoding});

  for (const cn::View& v : m.views) {
    if (m.dicts.count(v.r)) continue;
    const std::string tag = ":r=" + std::to_string(v.r);
    m.dicts[v.r] = cn::get_dictionary(b, "dict" + tag);
    m.whitenings[v.r] = cn::get_whitening(b, "whitening" + tag);
    if (need_balls && m.encoding == cn::EncodingKind::kCsvdd)
      m.balls[v.r] = cn::get_balls(b, "balls" + tag);
  }
  return m;
}

std::string out_or(const CommonArgs& args, const std::string& fallback, const std::string& key) {
  if (!args.out.empty()) return args.out;
  require_path(fallback, key);
  return fallback;
}

// per-image descriptors for one view, rows in input order
Eigen::MatrixXd view_descriptors(const PipelineModels& m, const cn::View& view,
                                 const std::vector<cn::GrayImage>& images, int threads) {
  const cn::Dictionary& dict = m.dicts.at(view.r);
  const cn::BallModel* balls = m.balls.count(view.r) ? &m.balls.at(view.r) : nullptr;
  return cn::make_view_descriptors(images, dict, balls, m.whitenings.at(view.r), view, threads,
                                   m.eps_norm, m.interpolation);
}

int cmd_train_dict(const CommonArgs& args) {
  const cn::PipelineConfig cfg = load(args);
  const std::string bundle_path = out_or(args, cfg.bundle, "bundle");
  const std::vector<cn::GrayImage> images = load_unlabeled_images(cfg);

  cn::Bundle bundle;
  write_meta(bundle, cfg);
  for (int r : cfg.distinct_fields()) {
    cn::PatchBatch patches =
        cn::sample_patches(images, r, cfg.num_patches, patch_seed(cfg.seed, r));
    patches.data = cn::normalize_patches(patches.data, cfg.eps_norm);
    const cn::WhiteningTransform whitening =
        cfg.zca_epsilon < 0.0 ? cn::fit_zca_relative(patches.data)
                              : cn::fit_zca(patches.data, cfg.zca_epsilon);
    patches.data = cn::apply_whitening(whitening, patches.data);

    cn::Dictionary dict;
    if (cfg.dict_init == cn::DictInit::kKmeansPlusPlus)
      dict = cn::kmeans_fit(patches, cfg.K, cfg.kmeans_iters, dict_seed(cfg.seed, r));
    else
      dict = cn::random_dictionary(patches, cfg.K, dict_seed(cfg.seed, r));

    const std::string tag = ":r=" + std::to_string(r);
    cn::put_whitening(bundle, "whitening" + tag, whitening);
    cn::put_dictionary(bundle, "dict" + tag, dict);
  }
  cn::write_bundle(bundle_path, bundle);
  std::cout << "wrote " << bundle_path << "\n";
  return 0;
}

int cmd_fit_balls(const CommonArgs& args) {
  const cn::PipelineConfig cfg = load(args);
  require_path(cfg.bundle, "bundle");
  cn::Bundle bundle = cn::read_bundle(cfg.bundle);
  const PipelineModels m = read_models(bundle, false);
  const std::vector<cn::GrayImage> images = load_unlabeled_images(cfg);

  for (const auto& [r, dict] : m.dicts) {
    cn::PatchBatch patches = cn::sample_patches(images, r, m.num_patches, patch_seed(m.seed, r));
    patches.data = cn::normalize_patches(patches.data, m.eps_norm);
    patches.data = cn::apply_whitening(m.whitenings.at(r), patches.data);
    const cn::BallModel balls = cn::fit_all(dict, patches, cfg.lambda, cfg.ball_solver,
                                            cfg.svdd_tol, cfg.svdd_max_iters);
    cn::put_balls(bundle, "balls:r=" + std::to_string(r), balls);
  }
  const std::string out = args.out.empty() ? cfg.bundle : args.out;
  cn::write_bundle(out, bundle);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_encode(const CommonArgs& args) {
  const cn::PipelineConfig cfg = load(args);
  require_path(cfg.bundle, "bundle");
  const cn::Bundle bundle = cn::read_bundle(cfg.bundle);
  const PipelineModels m = read_models(bundle, true);

  std::vector<cn::GrayImage> images;
  std::vector<std::string> ids;
  if (cfg.encode_split == "dir") {
    require_path(cfg.image_dir, "image_dir");
    images = load_pgm_dir(cfg.image_dir, &ids);
  } else {
    const std::string& path = cfg.encode_split == "train" ? cfg.train_images : cfg.test_images;
    require_path(path, cfg.encode_split == "train" ? "train_images" : "test_images");
    images = cn::read_idx_images(path);
    for (std::size_t i = 0; i < images.size(); ++i) ids.push_back(std::to_string(i));
  }

  Eigen::MatrixXd all;
  for (std::size_t t = 0; t < m.views.size(); ++t) {
    Eigen::MatrixXd D = view_descriptors(m, m.views[t], images, args.threads);
    if (cfg.normalize_views)
      for (Eigen::Index i = 0; i < D.rows(); ++i) {
        const double norm = D.row(i).norm();
        if (norm > 0.0) D.row(i) /= norm;
      }
    if (t == 0) {
      all = std::move(D);
    } else {
      Eigen::MatrixXd wider(all.rows(), all.cols() + D.cols());
      wider << all, D;
      all = std::move(wider);
    }
  }

  const std::string out = out_or(args, cfg.descriptors, "descriptors");
  cn::write_descriptor_matrix(out, all);
  cn::write_id_lines(out + ".ids", ids);
  std::cout << "wrote " << out << " (" << all.rows() << "x" << all.cols() << ")\n";
  return 0;
}

int cmd_train_clf(const CommonArgs& args) {
  const cn::PipelineConfig cfg = load(args);
  require_path(cfg.bundle, "bundle");
  require_path(cfg.train_images, "train_images");
  require_path(cfg.train_labels, "train_labels");
  cn::Bundle bundle = cn::read_bundle(cfg.bundle);
  const PipelineModels m = read_models(bundle, true);

  const cn::LabeledSet train = cn::read_idx_dataset(cfg.train_images, cfg.train_labels);
  const int C = train.num_classes();
  const int n = train.size();
  const int T = static_cast<int>(m.views.size());

  Eigen::MatrixXd F(n, T * C);
  for (int t = 0; t < T; ++t) {
    const Eigen::MatrixXd D = view_descriptors(m, m.views[t], train.images, args.threads);
    cn::LinearModel clf =
        cn::svm_train(D, train.labels, cfg.reg, cfg.epochs, clf_seed(cfg.seed, t), C);
    clf.view = t;
    cn::put_linear_model(bundle, "clf:view=" + std::to_string(t), clf);
    for (int i = 0; i < n; ++i)
      F.row(i).segment(t * C, C) =
          cn::softmax_outputs(clf, D.row(i).transpose()).transpose();
  }

  const cn::StackModel stack = cn::stack_train(F, train.labels, T, C, cfg.stack_reg, cfg.epochs,
                                               stack_seed(cfg.seed), cfg.stacking_mode,
                                               cfg.stack_reg_form);
  cn::put_stack_model(bundle, "stack", stack);

  const std::string out = args.out.empty() ? cfg.bundle : args.out;
  cn::write_bundle(out, bundle);
  std::cout << "wrote " << out << "\n";
  return 0;
}

int cmd_eval(const CommonArgs& args) {
  const cn::PipelineConfig cfg = load(args);
  require_path(cfg.bundle, "bundle");
  require_path(cfg.test_images, "test_images");
  require_path(cfg.test_labels, "test_labels");
  const cn::Bundle bundle = cn::read_bundle(cfg.bundle);
  const PipelineModels m = read_models(bundle, true);

  const cn::LabeledSet test = cn::read_idx_dataset(cfg.test_images, cfg.test_labels);
  const int n = test.size();
  const int T = static_cast<int>(m.views.size());
  const cn::StackModel stack = cn::get_stack_model(bundle, "stack");
  const int C = stack.C;

  std::ostringstream report;
  report.setf(std::ios::fixed);
  report.precision(4);

  Eigen::MatrixXd F(n, T * C);
  for (int t = 0; t < T; ++t) {
    const cn::LinearModel clf = cn::get_linear_model(bundle, "clf:view=" + std::to_string(t));
    const Eigen::MatrixXd D = view_descriptors(m, m.views[t], test.images, args.threads);
    int correct = 0;
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd p = cn::softmax_outputs(clf, D.row(i).transpose());
      F.row(i).segment(t * C, C) = p.transpose();
      int arg = 0;
      for (int c = 1; c < C; ++c)
        if (p[c] > p[arg]) arg = c;
      if (arg == test.labels[i]) ++correct;
    }
    report << "view r=" << m.views[t].r << " p=" << m.views[t].p
           << " acc=" << (static_cast<double>(correct) / n) << "\n";
  }

  int correct = 0;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd s = cn::stack_scores(stack, F.row(i).transpose());
    int arg = 0;
    for (int c = 1; c < C; ++c)
      if (s[c] > s[arg]) arg = c;
    if (arg == test.labels[i]) ++correct;
  }
  report << "ensemble acc=" << (static_cast<double>(correct) / n) << "\n";

  std::cout << report.str();
  if (!args.out.empty()) {
    std::ofstream f(args.out, std::ios::binary | std::ios::trunc);
    if (!f) throw cn::Error("cannot open " + args.out + " for writing");
    f << report.str();
  }
  return 0;
}

int cmd_retrieve(const CommonArgs& args) {
  const cn::PipelineConfig cfg = load(args);
  require_path(cfg.descriptors, "descriptors");
  require_path(cfg.ground_truth, "ground_truth");
  const Eigen::MatrixXd desc = cn::read_descriptor_matrix(cfg.descriptors);
  const std::string ids_path = cfg.ids.empty() ? cfg.descriptors + ".ids" : cfg.ids;
  const std::vector<std::string> ids = cn::read_id_lines(ids_path);
  const cn::GroundTruth truth = cn::read_ground_truth(cfg.ground_truth);

  std::ostringstream report;
  report.setf(std::ios::fixed);
  report.precision(6);
  for (int dprime : cfg.pca_dims) {
    Eigen::MatrixXd reduced;
    if (dprime <= 0) {
      reduced = desc;
    } else {
      const cn::PcaModel pca = cn::pca_fit(desc, dprime);
      reduced = cn::pca_apply_batch(pca, desc);
    }
    const cn::RetrievalIndex index = cn::build_index(std::move(reduced), ids);
    report << "dprime=" << dprime << " map=" << cn::evaluate_map(index, truth) << "\n";
  }

  std::cout << report.str();
  if (!args.out.empty()) {
    std::ofstream f(args.out, std::ios::binary | std::ios::trunc);
    if (!f) throw cn::Error("cannot open " + args.out + " for writing");
    f << report.str();
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ball-surface patch encoding pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  int (*command)(const CommonArgs&) = nullptr;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "configuration file")->required();
    sub->add_option("--threads", args.threads, "worker threads (1 = bit-reproducible)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--seed", args.seed, "override the config seed")
        ->each([&](const std::string&) { args.seed_set = true; });
    sub->add_option("--out", args.out, "output path override");
  };

  struct Entry {
    const char* name;
    const char* help;
    int (*fn)(const CommonArgs&);
  };
  const Entry entries[] = {
      {"train-dict", "sample patches, fit whitening, learn the dictionary", cmd_train_dict},
      {"fit-balls", "fit one ball per dictionary atom", cmd_fit_balls},
      {"encode", "write per-image descriptors for one split", cmd_encode},
      {"train-clf", "train per-view classifiers and the stacked combiner", cmd_train_clf},
      {"eval", "report per-view and ensemble accuracy on the test split", cmd_eval},
      {"retrieve", "report retrieval mAP at each configured dimension", cmd_retrieve},
  };
  for (const Entry& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_common(sub);
    sub->callback([&command, fn = e.fn] { command = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return command(args);
  } catch (const cn::ConfigError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const cn::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
