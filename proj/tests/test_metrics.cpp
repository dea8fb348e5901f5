#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "lqlab/errors.hpp"
#include "lqlab/metrics.hpp"
#include "oracles.hpp"

using namespace lqlab;
using Catch::Approx;

TEST_CASE("label entropy agrees with the oracle", "[metrics]") {
  oracle::Gen gen(2);
  for (int trial = 0; trial < 500; ++trial) {
    const int m = gen.integer(2, 4);
    const auto p = gen.simplex(m);
    Eigen::VectorXd v(m);
    std::vector<long double> lp;
    for (int k = 0; k < m; ++k) {
      v(k) = p[static_cast<std::size_t>(k)];
      lp.push_back(p[static_cast<std::size_t>(k)]);
    }
    REQUIRE(label_entropy(v) == Approx(static_cast<double>(oracle::entropy(lp))).epsilon(1e-12));
  }
  CHECK(binary_entropy(0.5) == Approx(1.0).epsilon(1e-15));
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0f) == 0.0f);
  Eigen::Vector2d bad(1.5, -0.5);
  CHECK_THROWS_AS(label_entropy(bad), std::invalid_argument);
}

TEST_CASE("the Binomial(3, 1/2) entropy is the four-class maximum at r0", "[metrics]") {
  const double ref = static_cast<double>(oracle::entropy(oracle::four_class_row(0.5L)));
  CHECK(ref == Approx(1.811278124459133).epsilon(1e-12));
  const auto mm = mislabel_for_rate(0.5, Scheme::kFourClass);
  CHECK(label_entropy(mm.rows.row(2)) == Approx(ref).epsilon(1e-14));
}

TEST_CASE("mislabel matrices follow the binomial laws", "[metrics][property]") {
  oracle::Gen gen(4);
  for (int trial = 0; trial < 200; ++trial) {
    const double p = gen.uniform(0.0, 1.0);
    const auto two = mislabel_for_rate(p, Scheme::kTwoClass);
    const auto four = mislabel_for_rate(p, Scheme::kFourClass);
    REQUIRE_NOTHROW(two.validate());
    REQUIRE_NOTHROW(four.validate());
    const auto row = oracle::four_class_row(p);
    for (int t = 0; t < 2; ++t) {
      REQUIRE(two.rows(t, kLost) == Approx(1.0 - p));
      REQUIRE(two.rows(t, kReceived) == Approx(p));
    }
    for (int t = 0; t < 4; ++t)
      for (int u = 0; u < 4; ++u)
        REQUIRE(four.rows(t, u) == Approx(static_cast<double>(row[static_cast<std::size_t>(u)])).margin(1e-14));
  }
  CHECK_THROWS(mislabel_for_rate(1.2, Scheme::kTwoClass));
}

TEST_CASE("empirical mislabel rows repeat the label marginal", "[metrics]") {
  const std::vector<int> labels{0, 1, 1, 3, 3, 3, 2, 3};
  const auto mm = empirical_mislabel(labels, Scheme::kFourClass);
  for (int t = 0; t < 4; ++t) {
    CHECK(mm.rows(t, 0) == Approx(1.0 / 8));
    CHECK(mm.rows(t, 1) == Approx(2.0 / 8));
    CHECK(mm.rows(t, 2) == Approx(1.0 / 8));
    CHECK(mm.rows(t, 3) == Approx(4.0 / 8));
  }
  CHECK_THROWS_AS(empirical_mislabel(std::vector<int>{}, Scheme::kTwoClass), std::invalid_argument);
}

TEST_CASE("one environment at p = 0.9", "[metrics]") {
  Eigen::MatrixXd ratio(1, 2);
  ratio << 0.1, 0.9;
  const std::vector<MislabelMatrix> mm{mislabel_for_rate(0.9, Scheme::kTwoClass)};
  const auto r = randomness_from(ratio, mm);
  CHECK(r.a == Approx(0.82).epsilon(1e-12));
  CHECK(r.acc_max == Approx(0.9).epsilon(1e-12));
  CHECK(r.majority == Approx(0.9).epsilon(1e-12));
  CHECK(r.u == Approx(static_cast<double>(oracle::entropy({0.1L, 0.9L}))).epsilon(1e-12));
}

TEST_CASE("randomness report invariants", "[metrics][property]") {
  oracle::Gen gen(6);
  for (int trial = 0; trial < 300; ++trial) {
    const Scheme s = gen.integer(0, 1) ? Scheme::kFourClass : Scheme::kTwoClass;
    const int m = num_labels(s);
    const int envs = gen.integer(1, 8);
    const auto weights = gen.simplex(envs);
    Eigen::MatrixXd ratio(envs, m);
    std::vector<MislabelMatrix> mats;
    for (int i = 0; i < envs; ++i) {
      const auto row = gen.simplex(m);
      for (int t = 0; t < m; ++t) ratio(i, t) = weights[static_cast<std::size_t>(i)] * row[static_cast<std::size_t>(t)];
      mats.push_back(mislabel_for_rate(gen.uniform(0, 1), s));
    }
    const auto r = randomness_from(ratio, mats);
    REQUIRE(r.u >= -1e-12);
    REQUIRE(r.u <= std::log2(double(m)) + 1e-12);
    REQUIRE(r.acc_max >= r.a);
    REQUIRE(r.acc_max >= r.majority);
    REQUIRE(r.acc_max <= 1.0 + 1e-12);
    REQUIRE(r.per_env.size() == static_cast<std::size_t>(envs));
  }
}

TEST_CASE("set randomness, analytic and empirical sources agree on a large set", "[metrics]") {
  const ChannelParams params;
  for (double d : {300.0, 1000.0, 1600.0}) {
    std::vector<EnvSpec> spec{{d, d, 40000}};
    for (Scheme s : {Scheme::kTwoClass, Scheme::kFourClass}) {
      const auto set = assemble(spec, s, 3, params, 77);
      const auto emp = set_randomness(set, MislabelSource::kEmpirical, params);
      const auto ana = set_randomness(set, MislabelSource::kAnalytic, params);
      CHECK(emp.u == Approx(ana.u).margin(0.02));
      CHECK(ana.u == Approx(label_entropy(analytic_mislabel(d, params, s).rows.row(0))).margin(1e-12));
    }
  }
}

TEST_CASE("set randomness skips empty environments", "[metrics]") {
  const ChannelParams params;
  std::vector<EnvSpec> spec{{100, 200, 10}, {900, 1000, 10}};
  auto set = assemble(spec, Scheme::kTwoClass, 3, params, 1);
  std::vector<std::size_t> rows;
  for (std::size_t r = 10; r < 20; ++r) rows.push_back(r);
  const auto only_second = set.subset(rows);
  const auto rep = set_randomness(only_second, MislabelSource::kEmpirical, params);
  REQUIRE(rep.per_env.size() == 1);
  CHECK(rep.per_env[0].env_id == 1);
}

TEST_CASE("predictor randomness of special predictors", "[metrics]") {
  const std::vector<int> truth{0, 1, 2, 3, 3, 2, 1, 1, 0, 3};
  SECTION("a perfect predictor has zero output randomness") {
    const auto r = predictor_randomness(truth, truth, 4);
    CHECK(r.acc == 1.0);
    CHECK(r.u_p == 0.0);
    CHECK(r.confusion.trace() == 10);
  }
  SECTION("a constant predictor inherits the label marginal entropy") {
    const std::vector<int> pred(truth.size(), 1);
    const auto r = predictor_randomness(truth, pred, 4);
    CHECK(r.acc == Approx(0.3));
    CHECK(r.r_p(1) == 1.0);
    CHECK(r.u_p == Approx(static_cast<double>(oracle::entropy({0.2L, 0.3L, 0.2L, 0.3L}))).epsilon(1e-12));
  }
  SECTION("hand-computed conditional entropies") {
    // Output 0 covers truths {0, 0, 1}; output 1 covers {1}.
    const std::vector<int> t{0, 0, 1, 1};
    const std::vector<int> p{0, 0, 0, 1};
    const auto r = predictor_randomness(t, p, 2);
    const double expect = 0.75 * static_cast<double>(oracle::entropy({2.0L / 3, 1.0L / 3}));
    CHECK(r.u_p == Approx(expect).epsilon(1e-12));
    CHECK(r.acc == Approx(0.75));
  }
  CHECK_THROWS_AS(predictor_randomness(truth, std::vector<int>(3, 0), 4), std::invalid_argument);
  CHECK_THROWS_AS(parse_mislabel_source("guess"), ConfigError);
}
