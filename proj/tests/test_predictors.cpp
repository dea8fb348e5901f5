#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>

#include "json.hpp"
#include "lqlab/errors.hpp"
#include "lqlab/predictors.hpp"
#include "oracles.hpp"

using namespace lqlab;
using Catch::Approx;

namespace {

PredictorConfig make(PredictorKind kind, std::map<std::string, double> hp = {},
                     std::uint64_t seed = 1) {
  PredictorConfig c;
  c.kind = kind;
  c.hyperparameters = std::move(hp);
  c.seed = seed;
  return c;
}

// Fast settings so every kind trains in well under a second.
std::vector<PredictorConfig> quick_lineup() {
  return {make(PredictorKind::kMlp, {{"epochs", 30}}),
          make(PredictorKind::kRandomForest, {{"n_trees", 10}}),
          make(PredictorKind::kDecisionTree),
          make(PredictorKind::kGbdt, {{"rounds", 20}}),
          make(PredictorKind::kPriorBaseline)};
}

SplitResult easy_split(Scheme s) {
  const ChannelParams params;
  std::vector<EnvSpec> spec{{100, 300, 300}, {2200, 2500, 300}};
  const auto set = assemble(spec, s, 10, params, 3);
  Rng rng(4);
  return split(set, 0.7, rng);
}

}  // namespace

TEST_CASE("a classification tree learns a threshold", "[predictors][tree]") {
  Eigen::MatrixXd x(6, 2);
  x << 0, 5, 1, 5, 2, 5, 3, 5, 4, 5, 5, 5;
  const std::vector<int> y{0, 0, 0, 1, 1, 1};
  const std::vector<double> w(6, 1.0);
  Rng rng(1);
  const SortedColumns sorted(x);
  const Tree t = grow_classification_tree(x, sorted, y, 2, w, {}, rng);
  REQUIRE(t.leaf_count() == 2);
  CHECK(t.depth() == 1);
  CHECK(t.nodes[0].feature == 0);
  CHECK(t.nodes[0].threshold == 2.5);
  for (Eigen::Index r = 0; r < 6; ++r) {
    const auto& v = t.leaf(x.row(r));
    CHECK((v[1] > v[0]) == (y[static_cast<std::size_t>(r)] == 1));
  }
}

TEST_CASE("split ties go to the lowest feature", "[predictors][tree]") {
  Eigen::MatrixXd x(4, 3);
  x << 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1, 1;
  const std::vector<int> y{0, 0, 1, 1};
  const std::vector<double> w(4, 1.0);
  Rng rng(1);
  const Tree t = grow_classification_tree(x, SortedColumns(x), y, 2, w, {}, rng);
  CHECK(t.nodes[0].feature == 0);
}

TEST_CASE("pure nodes and zero-weight rows", "[predictors][tree]") {
  Eigen::MatrixXd x(4, 1);
  x << 0, 1, 2, 3;
  const std::vector<int> y{1, 1, 0, 1};
  std::vector<double> w{1, 1, 0, 1};  // the only class-0 row is out of the bag
  Rng rng(1);
  const Tree t = grow_classification_tree(x, SortedColumns(x), y, 2, w, {}, rng);
  CHECK(t.leaf_count() == 1);
  CHECK(t.nodes[0].value[1] == Approx(1.0));
}

TEST_CASE("trees are invariant to a positive affine rescale of a feature", "[predictors][tree][property]") {
  oracle::Gen gen(12);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = gen.integer(20, 200);
    Eigen::MatrixXd x(n, 4);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < 4; ++c) x(r, c) = 0.5 * gen.integer(-180, -40);
      y[static_cast<std::size_t>(r)] = (x(r, 1) + 0.5 * gen.integer(-20, 20) > -80) ? 1 : 0;
    }
    Eigen::MatrixXd z = x;
    z.col(1) = 2.0 * x.col(1).array() - 16.0;  // exact in binary
    z.col(3) = 4.0 * x.col(3).array() + 64.0;
    const std::vector<double> w(static_cast<std::size_t>(n), 1.0);
    Rng r1(5), r2(5);
    const Tree a = grow_classification_tree(x, SortedColumns(x), y, 2, w, {}, r1);
    const Tree b = grow_classification_tree(z, SortedColumns(z), y, 2, w, {}, r2);
    REQUIRE(a.nodes.size() == b.nodes.size());
    for (Eigen::Index r = 0; r < n; ++r) REQUIRE(a.leaf(x.row(r)) == b.leaf(z.row(r)));
  }
}

TEST_CASE("a depth-0 regression tree returns the Newton step", "[predictors][tree]") {
  Eigen::MatrixXd x(3, 1);
  x << 1, 2, 3;
  const std::vector<double> g{0.5, -1.0, 2.0};
  const std::vector<double> h{0.25, 0.25, 0.5};
  TreeGrowOptions opt;
  opt.max_depth = 0;
  opt.lambda = 1.0;
  Rng rng(1);
  const Tree t = grow_regression_tree(x, SortedColumns(x), g, h, opt, rng);
  REQUIRE(t.leaf_count() == 1);
  CHECK(t.nodes[0].value[0] == Approx(-1.5 / 2.0));
}

TEST_CASE("backprop matches an independent finite-difference gradient", "[predictors][mlp]") {
  oracle::Gen gen(31);
  for (int trial = 0; trial < 5; ++trial) {
    const int d = gen.integer(2, 8), h = gen.integer(2, 6), m = gen.integer(2, 4);
    Rng rng(static_cast<std::uint64_t>(trial));
    const MlpParams p = init_mlp(d, h, m, rng);
    const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(10, d, [&] { return gen.uniform(-1, 1); });
    std::vector<int> y(10);
    for (auto& v : y) v = gen.integer(0, m - 1);

    MlpParams grad;
    mlp_loss(p, x, y, &grad);
    const Eigen::VectorXd analytic = grad.flatten();
    Eigen::VectorXd flat = p.flatten();
    Eigen::VectorXd numeric(flat.size());
    for (Eigen::Index k = 0; k < flat.size(); ++k) {
      MlpParams q = p;
      const double e = 1e-6;
      flat(k) += e;
      q.unflatten(flat);
      const double up = mlp_loss(q, x, y);
      flat(k) -= 2 * e;
      q.unflatten(flat);
      const double dn = mlp_loss(q, x, y);
      flat(k) += e;
      numeric(k) = (up - dn) / (2 * e);
    }
    REQUIRE((analytic - numeric).norm() / (analytic.norm() + numeric.norm()) <= 1e-6);
    REQUIRE(mlp_gradient_check(p, x, y) <= 1e-4);
  }
}

TEST_CASE("MLP outputs are distributions and training lowers the loss", "[predictors][mlp]") {
  Rng rng(3);
  const MlpParams p0 = init_mlp(4, 5, 3, rng);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(60, 4);
  std::vector<int> y(60);
  for (int r = 0; r < 60; ++r) y[static_cast<std::size_t>(r)] = x(r, 0) > 0.3 ? 2 : (x(r, 1) > 0 ? 1 : 0);
  const Eigen::MatrixXd probs = mlp_forward(p0, x);
  CHECK(((probs.rowwise().sum().array() - 1.0).abs() < 1e-12).all());
  MlpParams p = p0;
  mlp_train(p, x, y, {300, 0.5, 16}, rng);
  CHECK(mlp_loss(p, x, y) < 0.7 * mlp_loss(p0, x, y));
}

TEST_CASE("every predictor kind learns the easy regime", "[predictors]") {
  const ChannelParams params;
  for (Scheme s : {Scheme::kTwoClass, Scheme::kFourClass}) {
    const auto parts = easy_split(s);
    for (const auto& c : quick_lineup()) {
      if (c.kind == PredictorKind::kPriorBaseline) continue;
      const TrainedModel m = train(c, parts.train);
      const auto rep = evaluate(m, parts.test, MislabelSource::kEmpirical, params);
      INFO(c.label() << " " << to_string(s));
      CHECK(rep.acc >= 0.9);
      CHECK(rep.acc <= rep.acc_max + 0.02);
    }
  }
}

TEST_CASE("training is reproducible and seed-sensitive", "[predictors]") {
  const auto parts = easy_split(Scheme::kFourClass);
  for (const auto& c : quick_lineup()) {
    const auto a = predict_scores(train(c, parts.train), parts.test.features);
    const auto b = predict_scores(train(c, parts.train), parts.test.features);
    REQUIRE(a == b);
  }
  auto c1 = make(PredictorKind::kRandomForest, {{"n_trees", 5}}, 1);
  auto c2 = make(PredictorKind::kRandomForest, {{"n_trees", 5}}, 2);
  const ChannelParams params;
  std::vector<EnvSpec> hard{{900, 1100, 400}};
  const auto noisy = assemble(hard, Scheme::kFourClass, 10, params, 5);
  CHECK(predict_scores(train(c1, noisy), noisy.features) !=
        predict_scores(train(c2, noisy), noisy.features));
}

TEST_CASE("saved models predict identically after loading", "[predictors][io]") {
  const std::filesystem::path dir = LQLAB_TEST_TMP;
  std::filesystem::create_directories(dir);
  const ChannelParams params;
  std::vector<EnvSpec> spec{{700, 1300, 400}};
  const auto set = assemble(spec, Scheme::kFourClass, 10, params, 8);
  std::vector<EnvSpec> probe_spec{{500, 1500, 1000}};
  const auto probe = assemble(probe_spec, Scheme::kFourClass, 10, params, 9);
  REQUIRE(probe.size() == 1000);
  for (const auto& c : quick_lineup()) {
    const TrainedModel m = train(c, set);
    const auto path = dir / (std::string(to_string(c.kind)) + ".json");
    save_model(m, path);
    const TrainedModel back = load_model(path);
    INFO(c.label());
    REQUIRE(back.config.kind == c.kind);
    REQUIRE(predict_scores(back, probe.features) == predict_scores(m, probe.features));
    REQUIRE(serialize_model(back) == serialize_model(m));
  }
  CHECK_THROWS_AS(deserialize_model("not json"), IoError);
  auto j = nlohmann::json::parse(serialize_model(train(make(PredictorKind::kPriorBaseline), set)));
  j["version"] = kModelFormatVersion + 1;
  CHECK_THROWS_AS(deserialize_model(j.dump()), IoError);
  CHECK_THROWS_AS(load_model(dir / "absent.json"), IoError);
}

TEST_CASE("single-class training data yields a constant model", "[predictors]") {
  const ChannelParams params;
  std::vector<EnvSpec> spec{{50, 60, 200}};
  const auto set = assemble(spec, Scheme::kTwoClass, 10, params, 1);
  REQUIRE(std::all_of(set.labels.begin(), set.labels.end(), [](int t) { return t == kReceived; }));
  for (const auto& c : quick_lineup()) {
    const TrainedModel m = train(c, set);
    CHECK(m.degenerate);
    CHECK(predict(m, set.features.row(0).transpose()) == kReceived);
  }
}

TEST_CASE("the prior baseline's output randomness is the label marginal entropy", "[predictors]") {
  const ChannelParams params;
  std::vector<EnvSpec> spec{{900, 1100, 1000}};
  const auto set = assemble(spec, Scheme::kFourClass, 10, params, 2);
  Rng rng(1);
  const auto parts = split(set, 0.7, rng);
  const auto m = train(make(PredictorKind::kPriorBaseline), parts.train);
  const auto rep = evaluate(m, parts.test, MislabelSource::kEmpirical, params);
  std::vector<long double> marg(4, 0.0L);
  for (int t : parts.test.labels) marg[static_cast<std::size_t>(t)] += 1.0L / parts.test.size();
  CHECK(rep.u_p == Approx(static_cast<double>(oracle::entropy(marg))).epsilon(1e-12));
  // One environment, empirical source: U of the set is the same quantity.
  CHECK(rep.u_p == Approx(rep.u_set).epsilon(1e-12));
}

TEST_CASE("compare_models orders rows by kind", "[predictors]") {
  const ChannelParams params;
  const auto parts = easy_split(Scheme::kTwoClass);
  std::vector<PredictorConfig> cfg{make(PredictorKind::kPriorBaseline),
                                   make(PredictorKind::kGbdt, {{"rounds", 5}}),
                                   make(PredictorKind::kDecisionTree)};
  const auto rows = compare_models(cfg, parts.train, parts.test, MislabelSource::kEmpirical, params);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].kind == PredictorKind::kDecisionTree);
  CHECK(rows[1].kind == PredictorKind::kGbdt);
  CHECK(rows[2].kind == PredictorKind::kPriorBaseline);
}

TEST_CASE("predictor configs are validated", "[predictors]") {
  CHECK_THROWS_AS(make(PredictorKind::kMlp, {{"n_trees", 3}}).validate(), ConfigError);
  CHECK_THROWS_AS(make(PredictorKind::kRandomForest, {{"n_trees", 2.5}}).validate(), ConfigError);
  CHECK_THROWS_AS(make(PredictorKind::kGbdt, {{"shrinkage", -1}}).validate(), ConfigError);
  CHECK_THROWS_AS(parse_predictor_kind("svm"), ConfigError);
  CHECK(make(PredictorKind::kRandomForest).get("n_trees") == 50);
  CHECK(make(PredictorKind::kMlp, {{"hidden", 4}}).get("hidden") == 4);

  const auto parts = easy_split(Scheme::kTwoClass);
  const auto m = train(make(PredictorKind::kDecisionTree), parts.train);
  CHECK_THROWS_AS(predict(m, Eigen::VectorXd::Zero(6)), std::invalid_argument);
  CHECK_THROWS_AS(evaluate(m, easy_split(Scheme::kFourClass).test, MislabelSource::kEmpirical, {}),
                  std::invalid_argument);
}
