#include "lqlab/predictors.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "lqlab/errors.hpp"
#include "lqlab/io.hpp"

namespace lqlab {

using nlohmann::json;

namespace {

constexpr std::string_view kFormatTag = "lqlab-model";

struct KindName {
  PredictorKind kind;
  std::string_view name;
};
constexpr KindName kKindNames[] = {
    {PredictorKind::kMlp, "mlp"},
    {PredictorKind::kRandomForest, "random-forest"},
    {PredictorKind::kDecisionTree, "decision-tree"},
    {PredictorKind::kGbdt, "gbdt"},
    {PredictorKind::kPriorBaseline, "prior-baseline"},
};

// Hyperparameters that must hold whole numbers, with their lower bounds.
const std::map<std::string, double>& integral_minimums() {
  static const std::map<std::string, double> m = {
      {"max_depth", 1},   {"min_samples_split", 2}, {"n_trees", 1},
      {"max_features", 0}, {"hidden", 1},           {"epochs", 0},
      {"batch_size", 1},  {"rounds", 0},
  };
  return m;
}

int argmax_lowest(const Eigen::Ref<const Eigen::RowVectorXd>& row) {
  int best = 0;
  for (Eigen::Index k = 1; k < row.size(); ++k)
    if (row(k) > row(best)) best = static_cast<int>(k);
  return best;
}

Eigen::MatrixXd softmax_rows(Eigen::MatrixXd z) {
  const Eigen::VectorXd m = z.rowwise().maxCoeff();
  z.colwise() -= m;
  z = z.array().exp().matrix();
  const Eigen::VectorXd s = z.rowwise().sum();
  return s.asDiagonal().inverse() * z;
}

TreeGrowOptions tree_options(const PredictorConfig& c) {
  TreeGrowOptions o;
  o.max_depth = static_cast<int>(c.get("max_depth"));
  o.min_samples_leaf = c.get("min_samples_leaf");
  if (c.kind != PredictorKind::kGbdt) o.min_samples_split = c.get("min_samples_split");
  if (c.kind == PredictorKind::kGbdt) o.lambda = c.get("lambda");
  return o;
}

Rng model_stream(const PredictorConfig& c, std::uint64_t tag = 0) {
  return make_stream(c.seed, {static_cast<std::uint64_t>(c.kind), tag});
}

void accumulate_leaves(const Tree& tree, const Eigen::MatrixXd& x, double scale,
                       Eigen::MatrixXd& scores) {
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const auto& v = tree.leaf(x.row(r));
    for (std::size_t k = 0; k < v.size(); ++k)
      scores(r, static_cast<Eigen::Index>(k)) += scale * v[k];
  }
}

struct ScoreVisitor {
  const Eigen::MatrixXd& x;
  int m;

  Eigen::MatrixXd operator()(const ConstantModel& c) const {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.rows(), m);
    s.col(c.label).setOnes();
    return s;
  }
  Eigen::MatrixXd operator()(const TreeModel& t) const {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.rows(), m);
    accumulate_leaves(t.tree, x, 1.0, s);
    return s;
  }
  Eigen::MatrixXd operator()(const ForestModel& f) const {
    Eigen::MatrixXd s = Eigen::MatrixXd::Zero(x.rows(), m);
    const double w = 1.0 / static_cast<double>(f.trees.size());
    for (const auto& t : f.trees) accumulate_leaves(t, x, w, s);
    return s;
  }
  Eigen::MatrixXd operator()(const MlpModel& p) const { return mlp_forward(p.params, x); }
  Eigen::MatrixXd operator()(const GbdtModel& g) const {
    Eigen::MatrixXd logits = g.base_score.transpose().replicate(x.rows(), 1);
    for (const auto& round : g.rounds) {
      for (std::size_t k = 0; k < round.size(); ++k) {
        for (Eigen::Index r = 0; r < x.rows(); ++r)
          logits(r, static_cast<Eigen::Index>(k)) += g.shrinkage * round[k].leaf(x.row(r))[0];
      }
    }
    return softmax_rows(std::move(logits));
  }
};

ForestModel train_forest(const PredictorConfig& c, const Eigen::MatrixXd& x,
                         std::span<const int> y, int m, int feature_dim) {
  TreeGrowOptions opt = tree_options(c);
  const int mf = static_cast<int>(c.get("max_features"));
  opt.max_features =
      mf > 0 ? mf
             : std::max(1, static_cast<int>(std::lround(std::sqrt(static_cast<double>(feature_dim)))));
  const SortedColumns sorted(x);
  const auto n = static_cast<std::size_t>(x.rows());
  ForestModel forest;
  const int n_trees = static_cast<int>(c.get("n_trees"));
  std::vector<double> weights(n);
  for (int t = 0; t < n_trees; ++t) {
    // Each tree owns a derived stream, so its fit does not depend on the
    // others.
    Rng rng = model_stream(c, static_cast<std::uint64_t>(t) + 1);
    std::fill(weights.begin(), weights.end(), 0.0);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    for (std::size_t k = 0; k < n; ++k) weights[pick(rng)] += 1.0;
    forest.trees.push_back(grow_classification_tree(x, sorted, y, m, weights, opt, rng));
  }
  return forest;
}

GbdtModel train_gbdt(const PredictorConfig& c, const Eigen::MatrixXd& x,
                     std::span<const int> y, int m) {
  const TreeGrowOptions opt = tree_options(c);
  const SortedColumns sorted(x);
  const Eigen::Index n = x.rows();
  GbdtModel model;
  model.shrinkage = c.get("shrinkage");
  Eigen::VectorXd prior = Eigen::VectorXd::Ones(m);
  for (int t : y) prior(t) += 1.0;
  prior /= prior.sum();
  model.base_score = prior.array().log().matrix();

  Eigen::MatrixXd logits = model.base_score.transpose().replicate(n, 1);
  std::vector<double> g(static_cast<std::size_t>(n)), h(static_cast<std::size_t>(n));
  Rng rng = model_stream(c);
  const int rounds = static_cast<int>(c.get("rounds"));
  for (int round = 0; round < rounds; ++round) {
    const Eigen::MatrixXd p = softmax_rows(logits);
    std::vector<Tree> trees;
    for (int k = 0; k < m; ++k) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double pk = p(r, k);
        g[static_cast<std::size_t>(r)] = pk - (y[static_cast<std::size_t>(r)] == k ? 1.0 : 0.0);
        h[static_cast<std::size_t>(r)] = std::max(pk * (1.0 - pk), 1e-16);
      }
      trees.push_back(grow_regression_tree(x, sorted, g, h, opt, rng));
    }
    for (int k = 0; k < m; ++k)
      for (Eigen::Index r = 0; r < n; ++r)
        logits(r, k) += model.shrinkage * trees[static_cast<std::size_t>(k)].leaf(x.row(r))[0];
    model.rounds.push_back(std::move(trees));
  }
  return model;
}

MlpModel train_mlp(const PredictorConfig& c, const Eigen::MatrixXd& x,
                   std::span<const int> y, int m) {
  Rng rng = model_stream(c);
  MlpModel model;
  model.params = init_mlp(x.cols(), static_cast<Eigen::Index>(c.get("hidden")), m, rng);
  const Eigen::Index probe = std::min<Eigen::Index>(10, x.rows());
  model.gradient_check_error =
      mlp_gradient_check(model.params, x.topRows(probe), y.first(static_cast<std::size_t>(probe)));
  if (!(model.gradient_check_error <= c.get("grad_check_tolerance")))
    throw ValidationError("MLP gradient check failed: relative error " +
                          format_double(model.gradient_check_error));
  MlpTrainOptions opt;
  opt.epochs = static_cast<int>(c.get("epochs"));
  opt.learning_rate = c.get("learning_rate");
  opt.batch_size = static_cast<int>(c.get("batch_size"));
  mlp_train(model.params, x, y, opt, rng);
  return model;
}

// ---- serialisation ----

json tree_to_json(const Tree& t) {
  json nodes = json::array();
  for (const auto& n : t.nodes)
    nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right, n.value}));
  return nodes;
}

Tree tree_from_json(const json& j) {
  Tree t;
  for (const auto& n : j) {
    TreeNode node;
    node.feature = n.at(0).get<int>();
    node.threshold = n.at(1).get<double>();
    node.left = n.at(2).get<int>();
    node.right = n.at(3).get<int>();
    node.value = n.at(4).get<std::vector<double>>();
    t.nodes.push_back(std::move(node));
  }
  const auto size = static_cast<int>(t.nodes.size());
  for (const auto& n : t.nodes) {
    if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= size || n.right >= size))
      throw IoError("model file: tree child index out of range");
  }
  return t;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  std::vector<double> v(m.data(), m.data() + m.size());
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", v}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto v = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != rows * cols)
    throw IoError("model file: matrix size mismatch");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

struct ParamsToJson {
  json operator()(const ConstantModel& c) const { return {{"label", c.label}}; }
  json operator()(const TreeModel& t) const { return {{"tree", tree_to_json(t.tree)}}; }
  json operator()(const ForestModel& f) const {
    json trees = json::array();
    for (const auto& t : f.trees) trees.push_back(tree_to_json(t));
    return {{"trees", trees}};
  }
  json operator()(const MlpModel& p) const {
    return {{"w1", matrix_to_json(p.params.w1)},
            {"b1", matrix_to_json(p.params.b1)},
            {"w2", matrix_to_json(p.params.w2)},
            {"b2", matrix_to_json(p.params.b2)},
            {"gradient_check_error", p.gradient_check_error}};
  }
  json operator()(const GbdtModel& g) const {
    json rounds = json::array();
    for (const auto& round : g.rounds) {
      json r = json::array();
      for (const auto& t : round) r.push_back(tree_to_json(t));
      rounds.push_back(r);
    }
    return {{"base_score", matrix_to_json(g.base_score)},
            {"shrinkage", g.shrinkage},
            {"rounds", rounds}};
  }
};

}  // namespace

std::string_view to_string(PredictorKind kind) {
  for (const auto& kn : kKindNames)
    if (kn.kind == kind) return kn.name;
  return "unknown";
}

PredictorKind parse_predictor_kind(std::string_view name) {
  for (const auto& kn : kKindNames)
    if (kn.name == name) return kn.kind;
  throw ConfigError("unknown predictor kind '" + std::string(name) + "'");
}

const std::map<std::string, double>& PredictorConfig::defaults(PredictorKind kind) {
  static const std::map<std::string, double> none;
  static const std::map<std::string, double> tree = {
      {"max_depth", 8}, {"min_samples_leaf", 1}, {"min_samples_split", 2}};
  static const std::map<std::string, double> forest = {
      {"n_trees", 50}, {"max_depth", 8}, {"min_samples_leaf", 1},
      {"min_samples_split", 2}, {"max_features", 0}};
  static const std::map<std::string, double> mlp = {
      {"hidden", 16}, {"epochs", 200}, {"learning_rate", 0.05},
      {"batch_size", 32}, {"grad_check_tolerance", 1e-4}};
  static const std::map<std::string, double> gbdt = {
      {"rounds", 100}, {"max_depth", 3}, {"shrinkage", 0.1},
      {"lambda", 1.0}, {"min_samples_leaf", 1}};
  switch (kind) {
    case PredictorKind::kDecisionTree: return tree;
    case PredictorKind::kRandomForest: return forest;
    case PredictorKind::kMlp: return mlp;
    case PredictorKind::kGbdt: return gbdt;
    case PredictorKind::kPriorBaseline: break;
  }
  return none;
}

double PredictorConfig::get(const std::string& key) const {
  if (auto it = hyperparameters.find(key); it != hyperparameters.end()) return it->second;
  const auto& d = defaults(kind);
  if (auto it = d.find(key); it != d.end()) return it->second;
  throw ConfigError("hyperparameter '" + key + "' does not apply to " +
                    std::string(to_string(kind)));
}

void PredictorConfig::validate() const {
  const auto& d = defaults(kind);
  for (const auto& [key, value] : hyperparameters) {
    if (!d.contains(key))
      throw ConfigError("unknown hyperparameter '" + key + "' for " +
                        std::string(to_string(kind)));
    if (!std::isfinite(value)) throw ConfigError("hyperparameter '" + key + "' is not finite");
    if (auto it = integral_minimums().find(key); it != integral_minimums().end()) {
      if (value != std::floor(value) || value < it->second)
        throw ConfigError("hyperparameter '" + key + "' must be an integer >= " +
                          format_double(it->second));
    } else if (!(value > 0.0)) {
      throw ConfigError("hyperparameter '" + key + "' must be > 0");
    }
  }
}

Eigen::MatrixXd FeatureScaler::apply(const Eigen::MatrixXd& raw) const {
  Eigen::MatrixXd x = raw;
  const double span = bounds.max_dbm - bounds.min_dbm;
  for (Eigen::Index c = 1; c < x.cols(); c += 2)
    x.col(c) = (x.col(c).array() - bounds.min_dbm) / span;
  return x;
}

TrainedModel train(const PredictorConfig& config, const SampleSet& train_set) {
  config.validate();
  train_set.validate();
  if (train_set.empty()) throw std::invalid_argument("cannot train on an empty set");

  TrainedModel model;
  model.config = config;
  model.scheme = train_set.scheme;
  model.window = train_set.window;
  model.scaler.bounds = received_rssi_bounds(train_set);
  const int m = model.num_labels();
  const std::span<const int> y(train_set.labels);

  Eigen::VectorXi counts = Eigen::VectorXi::Zero(m);
  for (int t : y) counts(t) += 1;
  const int majority = argmax_lowest(counts.cast<double>().transpose());

  if ((counts.array() > 0).count() == 1) {
    model.degenerate = true;
    model.params = ConstantModel{majority};
    return model;
  }

  const Eigen::MatrixXd x = model.scaler.apply(train_set.features);
  switch (config.kind) {
    case PredictorKind::kPriorBaseline:
      model.params = ConstantModel{majority};
      break;
    case PredictorKind::kDecisionTree: {
      const SortedColumns sorted(x);
      const std::vector<double> ones(train_set.size(), 1.0);
      Rng rng = model_stream(config);
      model.params = TreeModel{
          grow_classification_tree(x, sorted, y, m, ones, tree_options(config), rng)};
      break;
    }
    case PredictorKind::kRandomForest:
      model.params = train_forest(config, x, y, m, train_set.feature_dim());
      break;
    case PredictorKind::kMlp:
      model.params = train_mlp(config, x, y, m);
      break;
    case PredictorKind::kGbdt:
      model.params = train_gbdt(config, x, y, m);
      break;
  }
  return model;
}

Eigen::MatrixXd predict_scores(const TrainedModel& model, const Eigen::MatrixXd& features) {
  if (features.cols() != 2 * model.window)
    throw std::invalid_argument("feature width " + std::to_string(features.cols()) +
                                " does not match the model (2K = " +
                                std::to_string(2 * model.window) + ")");
  const Eigen::MatrixXd x = model.scaler.apply(features);
  return std::visit(ScoreVisitor{x, model.num_labels()}, model.params);
}

std::vector<int> predict_batch(const TrainedModel& model, const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd scores = predict_scores(model, features);
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index r = 0; r < scores.rows(); ++r)
    out[static_cast<std::size_t>(r)] = argmax_lowest(scores.row(r));
  return out;
}

int predict(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& features) {
  const Eigen::MatrixXd row = features.transpose();
  return predict_batch(model, row).front();
}

PredictionReport evaluate(const TrainedModel& model, const SampleSet& test_set,
                          MislabelSource source, const ChannelParams& params) {
  if (test_set.empty()) throw std::invalid_argument("cannot evaluate on an empty test set");
  if (test_set.scheme != model.scheme)
    throw std::invalid_argument("test set scheme does not match the model");
  const auto predicted = predict_batch(model, test_set.features);
  PredictionReport report = predictor_randomness(test_set.labels, predicted, model.num_labels());
  const RandomnessReport rr = set_randomness(test_set, source, params);
  report.acc_max = rr.acc_max;
  report.u_set = rr.u;
  return report;
}

std::vector<ModelRow> compare_models(std::span<const PredictorConfig> configs,
                                     const SampleSet& train_set,
                                     const SampleSet& test_set,
                                     MislabelSource source,
                                     const ChannelParams& params) {
  if (configs.empty()) throw std::invalid_argument("compare_models needs at least one config");
  std::vector<ModelRow> rows;
  for (const auto& c : configs) {
    const TrainedModel model = train(c, train_set);
    rows.push_back({c.label(), c.kind, evaluate(model, test_set, source, params)});
  }
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ModelRow& a, const ModelRow& b) { return a.kind < b.kind; });
  return rows;
}

std::string serialize_model(const TrainedModel& model) {
  json hp = json::object();
  for (const auto& [k, v] : PredictorConfig::defaults(model.config.kind)) hp[k] = model.config.get(k);
  json j = {
      {"format", kFormatTag},
      {"version", kModelFormatVersion},
      {"kind", to_string(model.config.kind)},
      {"name", model.config.label()},
      {"seed", model.config.seed},
      {"hyperparameters", hp},
      {"scheme", to_string(model.scheme)},
      {"window", model.window},
      {"normalization", {{"rssi_min_dbm", model.scaler.bounds.min_dbm},
                         {"rssi_max_dbm", model.scaler.bounds.max_dbm}}},
      {"degenerate", model.degenerate},
      {"params", std::visit(ParamsToJson{}, model.params)},
  };
  j["params"]["type"] = model.params.index();
  return j.dump(1) + "\n";
}

TrainedModel deserialize_model(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != kFormatTag)
      throw IoError("not an lqlab model file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
      throw IoError("model format version " + std::to_string(version) +
                    " is not supported (expected " + std::to_string(kModelFormatVersion) + ")");
    TrainedModel model;
    model.config.kind = parse_predictor_kind(j.at("kind").get<std::string>());
    model.config.name = j.at("name").get<std::string>();
    model.config.seed = j.at("seed").get<std::uint64_t>();
    model.config.hyperparameters = j.at("hyperparameters").get<std::map<std::string, double>>();
    model.config.validate();
    model.scheme = parse_scheme(j.at("scheme").get<std::string>());
    model.window = j.at("window").get<int>();
    model.scaler.bounds = {j.at("normalization").at("rssi_min_dbm").get<double>(),
                           j.at("normalization").at("rssi_max_dbm").get<double>()};
    model.degenerate = j.at("degenerate").get<bool>();
    const json& p = j.at("params");
    switch (p.at("type").get<int>()) {
      case 0:
        model.params = ConstantModel{p.at("label").get<int>()};
        break;
      case 1:
        model.params = TreeModel{tree_from_json(p.at("tree"))};
        break;
      case 2: {
        ForestModel f;
        for (const auto& t : p.at("trees")) f.trees.push_back(tree_from_json(t));
        model.params = std::move(f);
        break;
      }
      case 3: {
        MlpModel mm;
        mm.params.w1 = matrix_from_json(p.at("w1"));
        mm.params.b1 = matrix_from_json(p.at("b1"));
        mm.params.w2 = matrix_from_json(p.at("w2"));
        mm.params.b2 = matrix_from_json(p.at("b2"));
        mm.gradient_check_error = p.at("gradient_check_error").get<double>();
        model.params = std::move(mm);
        break;
      }
      case 4: {
        GbdtModel g;
        g.base_score = matrix_from_json(p.at("base_score"));
        g.shrinkage = p.at("shrinkage").get<double>();
        for (const auto& r : p.at("rounds")) {
          std::vector<Tree> round;
          for (const auto& t : r) round.push_back(tree_from_json(t));
          g.rounds.push_back(std::move(round));
        }
        model.params = std::move(g);
        break;
      }
      default:
        throw IoError("model file: unknown parameter block");
    }
    return model;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed model file: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("model file: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_model(model));
}

TrainedModel load_model(const std::filesystem::path& path) {
  return deserialize_model(read_file(path));
}

}  // namespace lqlab
