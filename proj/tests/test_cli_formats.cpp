#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <fstream>
#include <sstream>
#include <string>

#include "csvddnet/bundle.hpp"
#include "csvddnet/config.hpp"
#include "csvddnet/model_io.hpp"
#include "csvddnet/rng.hpp"
#include "support/scratch.hpp"

using namespace csvddnet;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

PipelineConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, "test");
}

}  // namespace

TEST_CASE("bundles round-trip byte for byte") {
  const auto dir = testsupport::scratch_dir("bundle");
  const std::string p1 = (dir / "a.model").string();
  const std::string p2 = (dir / "b.model").string();

  Bundle b;
  b.set("alpha", std::string("\x01\x02\x03", 3));
  b.set("beta", "");
  b.set("gamma/delta", std::string(1000, 'x'));
  write_bundle(p1, b);

  const Bundle back = read_bundle(p1);
  REQUIRE(back.sections.size() == 3);
  CHECK(back.sections[0].first == "alpha");
  CHECK(back.sections[1].first == "beta");
  CHECK(back.sections[2].first == "gamma/delta");
  CHECK(back.raw("alpha") == b.raw("alpha"));
  CHECK(back.raw("beta").empty());

  write_bundle(p2, back);
  CHECK(slurp(p1) == slurp(p2));
}

TEST_CASE("bundle set replaces in place") {
  Bundle b;
  b.set("one", "1");
  b.set("two", "2");
  b.set("one", "updated");
  REQUIRE(b.sections.size() == 2);
  CHECK(b.sections[0].first == "one");
  CHECK(b.sections[0].second == "updated");
  CHECK(b.has("two"));
  CHECK_FALSE(b.has("three"));
  CHECK_THROWS_AS(b.raw("three"), BundleError);
}

TEST_CASE("bundle reader rejects corrupt files") {
  const auto dir = testsupport::scratch_dir("bundle_bad");
  const std::string path = (dir / "x.model").string();
  Bundle b;
  b.set("s", "payload");
  write_bundle(path, b);
  const std::string good = slurp(path);

  std::string bad_magic = good;
  bad_magic[0] = 'X';
  spit(path, bad_magic);
  CHECK_THROWS_AS(read_bundle(path), BadMagic);

  std::string bad_version = good;
  bad_version[8] = 9;
  spit(path, bad_version);
  CHECK_THROWS_AS(read_bundle(path), BundleError);

  spit(path, good.substr(0, good.size() - 3));
  CHECK_THROWS_AS(read_bundle(path), TruncatedPayload);

  CHECK_THROWS_AS(read_bundle((dir / "missing.model").string()), BundleError);
}

TEST_CASE("matrix payloads round-trip exactly") {
  Rng rng(1);
  Eigen::MatrixXd M(3, 4);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) M(i, j) = rng.uniform(-1e9, 1e9);
  M(0, 0) = 0.1;  // not exactly representable, bits must survive
  const Eigen::MatrixXd back = unpack_matrix(pack_matrix(M));
  CHECK((M.array() == back.array()).all());

  const Eigen::MatrixXd empty = unpack_matrix(pack_matrix(Eigen::MatrixXd(0, 5)));
  CHECK(empty.rows() == 0);
  CHECK(empty.cols() == 5);

  CHECK_THROWS_AS(unpack_matrix(pack_matrix(M).substr(0, 20)), TruncatedPayload);
  CHECK_THROWS_AS(unpack_matrix(pack_matrix(M) + "x"), BundleError);
}

TEST_CASE("vector and scalar payloads round-trip") {
  Eigen::VectorXd v(3);
  v << 1.5, -2.25, 1e-300;
  CHECK((unpack_vector(pack_vector(v)).array() == v.array()).all());
  CHECK_THROWS_AS(unpack_vector(pack_matrix(Eigen::MatrixXd::Zero(2, 2))), BundleError);

  CHECK(unpack_f64(pack_f64(0.3)) == 0.3);
  CHECK(unpack_i64(pack_i64(-77)) == -77);
  const std::vector<int64_t> xs = {5, -1, 0, 1LL << 40};
  CHECK(unpack_i64_list(pack_i64_list(xs)) == xs);
  CHECK(unpack_i64_list(pack_i64_list({})).empty());
}

TEST_CASE("whitening models survive a bundle trip") {
  Rng rng(2);
  WhiteningTransform w;
  w.mean = Eigen::VectorXd::Random(9);
  w.matrix = Eigen::MatrixXd::Random(9, 9);
  w.epsilon = 0.05;

  Bundle b;
  put_whitening(b, "white", w);
  const WhiteningTransform back = get_whitening(b, "white");
  CHECK((back.mean.array() == w.mean.array()).all());
  CHECK((back.matrix.array() == w.matrix.array()).all());
  CHECK(back.epsilon == w.epsilon);

  b.set("white/mean", pack_vector(Eigen::VectorXd::Zero(4)));
  CHECK_THROWS_AS(get_whitening(b, "white"), BundleError);
}

TEST_CASE("dictionaries survive a bundle trip") {
  Dictionary d;
  d.r = 3;
  d.atoms = Eigen::MatrixXd::Random(5, 9);
  d.init = DictInit::kRandom;
  d.seed = 1234;

  Bundle b;
  put_dictionary(b, "dict", d);
  const Dictionary back = get_dictionary(b, "dict");
  CHECK(back.r == 3);
  CHECK(back.init == DictInit::kRandom);
  CHECK(back.seed == 1234);
  CHECK((back.atoms.array() == d.atoms.array()).all());

  b.set("dict/r", pack_i64(4));  // atoms no longer r*r wide
  CHECK_THROWS_AS(get_dictionary(b, "dict"), BundleError);
}

TEST_CASE("ball models survive a bundle trip") {
  BallModel m;
  m.centers = Eigen::MatrixXd::Random(4, 6);
  m.radii = Eigen::VectorXd::Random(4).cwiseAbs();
  m.lambda = 0.4;
  m.kind = BallKind::kSvdd;

  Bundle b;
  put_balls(b, "balls", m);
  const BallModel back = get_balls(b, "balls");
  CHECK((back.centers.array() == m.centers.array()).all());
  CHECK((back.radii.array() == m.radii.array()).all());
  CHECK(back.lambda == 0.4);
  CHECK(back.kind == BallKind::kSvdd);
}

TEST_CASE("linear and stack models survive a bundle trip") {
  LinearModel lm;
  lm.theta = Eigen::MatrixXd::Random(7, 3);
  lm.bias = Eigen::VectorXd::Random(3);
  lm.view = 2;

  Bundle b;
  put_linear_model(b, "clf/0", lm);
  const LinearModel lback = get_linear_model(b, "clf/0");
  CHECK((lback.theta.array() == lm.theta.array()).all());
  CHECK((lback.bias.array() == lm.bias.array()).all());
  CHECK(lback.view == 2);

  StackModel sm;
  sm.T = 2;
  sm.C = 3;
  sm.mode = StackMode::kFull;
  sm.a = Eigen::MatrixXd::Random(6, 3);
  sm.bias = Eigen::VectorXd::Random(3);
  put_stack_model(b, "stack", sm);
  const StackModel sback = get_stack_model(b, "stack");
  CHECK(sback.T == 2);
  CHECK(sback.C == 3);
  CHECK(sback.mode == StackMode::kFull);
  CHECK((sback.a.array() == sm.a.array()).all());
  CHECK((sback.bias.array() == sm.bias.array()).all());

  StackModel scalar;
  scalar.T = 3;
  scalar.C = 2;
  scalar.mode = StackMode::kScalar;
  scalar.a = Eigen::MatrixXd::Random(3, 1);
  put_stack_model(b, "stack2", scalar);
  const StackModel s2 = get_stack_model(b, "stack2");
  CHECK(s2.mode == StackMode::kScalar);
  CHECK((s2.a.array() == scalar.a.array()).all());
}

TEST_CASE("descriptor matrices round-trip through their flat file") {
  const auto dir = testsupport::scratch_dir("descfile");
  const std::string path = (dir / "d.mat").string();
  Rng rng(3);
  Eigen::MatrixXd M(5, 7);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 7; ++j) M(i, j) = rng.uniform(-10.0, 10.0);
  write_descriptor_matrix(path, M);

  const std::string bytes = slurp(path);
  CHECK(bytes.substr(0, 4) == "5 7\n");
  CHECK(bytes.size() == 4 + 5 * 7 * 8);

  const Eigen::MatrixXd back = read_descriptor_matrix(path);
  CHECK((back.array() == M.array()).all());

  spit(path, bytes.substr(0, bytes.size() - 1));
  CHECK_THROWS_AS(read_descriptor_matrix(path), TruncatedPayload);
  spit(path, bytes + "!");
  CHECK_THROWS_AS(read_descriptor_matrix(path), BundleError);
  spit(path, "nonsense\n");
  CHECK_THROWS_AS(read_descriptor_matrix(path), BundleError);
}

TEST_CASE("id files hold one id per line") {
  const auto dir = testsupport::scratch_dir("idfile");
  const std::string path = (dir / "x.ids").string();
  const std::vector<std::string> ids = {"img_001", "img_002", "query/17"};
  write_id_lines(path, ids);
  CHECK(read_id_lines(path) == ids);
  CHECK(slurp(path) == "img_001\nimg_002\nquery/17\n");
}

TEST_CASE("config defaults survive an empty file") {
  const PipelineConfig cfg = parse("");
  CHECK(cfg.K == 500);
  CHECK(cfg.lambda == 1.0);
  CHECK(cfg.receptive_fields == std::vector<int>{5});
  CHECK(cfg.pooling_sizes == std::vector<int>{4});
  CHECK(cfg.sift_blocks == 3);
  CHECK(cfg.encoding == EncodingKind::kCsvdd);
  CHECK(cfg.ball_solver == BallKind::kCsvdd);
  CHECK(cfg.seed == 42);
  CHECK(cfg.zca_epsilon < 0.0);
  CHECK(cfg.encode_split == "test");
  CHECK(cfg.normalize_views);
  CHECK_FALSE(cfg.sift_interpolation);
  CHECK(cfg.pca_dims == std::vector<int>{0});
}

TEST_CASE("config files set every exposed knob") {
  const PipelineConfig cfg = parse(
      "# pipeline shape\n"
      "receptive_fields = 5, 5, 7\n"
      "pooling_sizes = 1, 2, 2\n"
      "sift_blocks = 2\n"
      "K = 96\n"
      "lambda = 0.4\n"
      "encoding = triangle\n"
      "ball_solver = svdd\n"
      "dict_init = random\n"
      "seed = 9001\n"
      "num_patches = 1200\n"
      "kmeans_iters = 12\n"
      "eps_norm = 0.001\n"
      "zca_epsilon = 0.01\n"
      "epochs = 5\n"
      "reg = 0.25\n"
      "stack_reg = 0.5\n"
      "sift_interpolation = linear\n"
      "stacking_mode = scalar\n"
      "stack_reg_form = norm\n"
      "normalize_views = false\n"
      "pca_dims = 0, 32, 64\n"
      "svdd_tol = 1e-5\n"
      "svdd_max_iters = 500\n"
      "train_images = ti.idx\n"
      "train_labels = tl.idx\n"
      "test_images = si.idx\n"
      "test_labels = sl.idx\n"
      "image_dir = imgs\n"
      "encode_split = dir\n"
      "bundle = out.model\n"
      "descriptors = out.mat\n"
      "ids = out.ids\n"
      "ground_truth = gt.tsv\n");
  CHECK(cfg.receptive_fields == std::vector<int>({5, 5, 7}));
  CHECK(cfg.pooling_sizes == std::vector<int>({1, 2, 2}));
  CHECK(cfg.K == 96);
  CHECK(cfg.lambda == 0.4);
  CHECK(cfg.encoding == EncodingKind::kTriangle);
  CHECK(cfg.ball_solver == BallKind::kSvdd);
  CHECK(cfg.dict_init == DictInit::kRandom);
  CHECK(cfg.seed == 9001);
  CHECK(cfg.num_patches == 1200);
  CHECK(cfg.kmeans_iters == 12);
  CHECK(cfg.eps_norm == 0.001);
  CHECK(cfg.zca_epsilon == 0.01);
  CHECK(cfg.epochs == 5);
  CHECK(cfg.reg == 0.25);
  CHECK(cfg.stack_reg == 0.5);
  CHECK(cfg.sift_interpolation);
  CHECK(cfg.stacking_mode == StackMode::kScalar);
  CHECK(cfg.stack_reg_form == RegForm::kNorm);
  CHECK_FALSE(cfg.normalize_views);
  CHECK(cfg.pca_dims == std::vector<int>({0, 32, 64}));
  CHECK(cfg.svdd_tol == 1e-5);
  CHECK(cfg.svdd_max_iters == 500);
  CHECK(cfg.train_images == "ti.idx");
  CHECK(cfg.image_dir == "imgs");
  CHECK(cfg.encode_split == "dir");
  CHECK(cfg.ground_truth == "gt.tsv");

  const auto views = cfg.views();
  REQUIRE(views.size() == 3);
  CHECK(views[0].r == 5);
  CHECK(views[0].p == 1);
  CHECK(views[2].r == 7);
  CHECK(views[2].p == 2);
  CHECK(views[1].m == 2);
  CHECK(cfg.distinct_fields() == std::vector<int>({5, 7}));
}

TEST_CASE("config parsing rejects malformed input") {
  CHECK_THROWS_AS(parse("mystery = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("K = 10\nK = 20\n"), ConfigError);
  CHECK_THROWS_AS(parse("K = ten\n"), ConfigError);
  CHECK_THROWS_AS(parse("K 10\n"), ConfigError);
  CHECK_THROWS_AS(parse("= 10\n"), ConfigError);
  CHECK_THROWS_AS(parse("lambda = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("K = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse("encoding = fisher\n"), ConfigError);
  CHECK_THROWS_AS(parse("encode_split = all\n"), ConfigError);
  CHECK_THROWS_AS(parse("receptive_fields = 5, 7\npooling_sizes = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse("receptive_fields = 0\npooling_sizes = 4\n"), ConfigError);
  CHECK_THROWS_AS(parse("sift_interpolation = maybe\n"), ConfigError);
  CHECK_THROWS_AS(parse("normalize_views = 7\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/pipeline.cfg"), ConfigError);
}

TEST_CASE("config accepts auto epsilon and comments anywhere") {
  const PipelineConfig cfg = parse(
      "  # leading comment\n"
      "zca_epsilon = auto\n"
      "   K = 12   \n"
      "\n");
  CHECK(cfg.zca_epsilon == -1.0);
  CHECK(cfg.K == 12);
}
