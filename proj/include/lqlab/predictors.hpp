#ifndef LQLAB_PREDICTORS_HPP
#define LQLAB_PREDICTORS_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "lqlab/dataset.hpp"
#include "lqlab/metrics.hpp"
#include "lqlab/mlp.hpp"
#include "lqlab/tree.hpp"

namespace lqlab {

// Declaration order is the row order of model comparison tables.
enum class PredictorKind { kMlp, kRandomForest, kDecisionTree, kGbdt, kPriorBaseline };

std::string_view to_string(PredictorKind kind);
PredictorKind parse_predictor_kind(std::string_view name);  // throws ConfigError

// Hyperparameters per kind (defaults in parentheses):
//   prior-baseline  none
//   decision-tree   max_depth (8), min_samples_leaf (1), min_samples_split (2)
//   random-forest   n_trees (50), max_depth (8), min_samples_leaf (1),
//                   min_samples_split (2), max_features (0 = round(sqrt(2K)))
//   mlp             hidden (16), epochs (200), learning_rate (0.05),
//                   batch_size (32), grad_check_tolerance (1e-4)
//   gbdt            rounds (100), max_depth (3), shrinkage (0.1),
//                   lambda (1), min_samples_leaf (1)
struct PredictorConfig {
  std::string name;  // row label; defaults to the kind name
  PredictorKind kind = PredictorKind::kPriorBaseline;
  std::map<std::string, double> hyperparameters;  // overrides only
  std::uint64_t seed = 0;

  static const std::map<std::string, double>& defaults(PredictorKind kind);
  // Throws ConfigError for unknown keys or out-of-range values.
  void validate() const;
  double get(const std::string& key) const;
  std::string label() const { return name.empty() ? std::string(to_string(kind)) : name; }
};

// Min-max scaling of the RSSI columns with train-set bounds; reception bits
// pass through. The sentinel lands below 0.
struct FeatureScaler {
  RssiBounds bounds;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& raw) const;
};

struct ConstantModel {
  int label = 0;
};
struct TreeModel {
  Tree tree;
};
struct ForestModel {
  std::vector<Tree> trees;
};
struct MlpModel {
  MlpParams params;
  double gradient_check_error = 0.0;
};
struct GbdtModel {
  Eigen::VectorXd base_score;  // initial logits
  double shrinkage = 0.1;
  std::vector<std::vector<Tree>> rounds;  // rounds x classes
};

struct TrainedModel {
  PredictorConfig config;
  Scheme scheme = Scheme::kTwoClass;
  int window = kDefaultWindow;
  FeatureScaler scaler;
  bool degenerate = false;  // single-class training data, constant output
  std::variant<ConstantModel, TreeModel, ForestModel, MlpModel, GbdtModel> params;

  int num_labels() const { return lqlab::num_labels(scheme); }
};

inline constexpr int kModelFormatVersion = 1;

// Reproducible bit-for-bit under a fixed config seed. The MLP refuses to
// train when its backprop gradient disagrees with central differences.
TrainedModel train(const PredictorConfig& config, const SampleSet& train_set);

// Raw (un-normalised) features of length 2K. Throws std::invalid_argument on
// a dimension mismatch.
int predict(const TrainedModel& model, const Eigen::Ref<const Eigen::VectorXd>& features);
std::vector<int> predict_batch(const TrainedModel& model, const Eigen::MatrixXd& features);
// Per-class scores (probabilities for all kinds but the constant model).
Eigen::MatrixXd predict_scores(const TrainedModel& model, const Eigen::MatrixXd& features);

// Accuracy, U_p and confusion from the predictions, Acc_max and U(T_e) from
// the test set itself.
PredictionReport evaluate(const TrainedModel& model, const SampleSet& test_set,
                          MislabelSource source, const ChannelParams& params);

struct ModelRow {
  std::string name;
  PredictorKind kind;
  PredictionReport report;
};

// Rows ordered by kind (stable within a kind).
std::vector<ModelRow> compare_models(std::span<const PredictorConfig> configs,
                                     const SampleSet& train_set,
                                     const SampleSet& test_set,
                                     MislabelSource source,
                                     const ChannelParams& params);

std::string serialize_model(const TrainedModel& model);
TrainedModel deserialize_model(std::string_view text);  // throws IoError
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace lqlab

#endif  // LQLAB_PREDICTORS_HPP
