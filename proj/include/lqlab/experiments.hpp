#ifndef LQLAB_EXPERIMENTS_HPP
#define LQLAB_EXPERIMENTS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lqlab/channel.hpp"
#include "lqlab/dataset.hpp"
#include "lqlab/filter.hpp"
#include "lqlab/metrics.hpp"
#include "lqlab/predictors.hpp"

namespace lqlab {

// Every distance below is in units of r0 unless the name says _m.
struct ExperimentConfig {
  ChannelParams channel;
  std::vector<Scheme> schemes{Scheme::kTwoClass, Scheme::kFourClass};
  int window = kDefaultWindow;
  int horizon = kDefaultHorizon;
  double sentinel_dbm = kDefaultRssiSentinelDbm;
  std::uint64_t seed = 1;
  double split_fraction = 0.7;
  MislabelSource mislabel_source = MislabelSource::kEmpirical;
  int pairs_per_env = 4;
  double env_bin_width = 0.05;
  std::string output_dir = "out";

  struct ChannelCurves {
    std::size_t grid_points = 250;
    double d_max = 2.5;
    std::size_t scatter_points = 2000;
    std::size_t time_cycles = 500;
  } channel_curves;

  struct Randomness {
    std::size_t grid_points = 50;
    double d_max = 2.5;
    std::size_t samples_per_point = 10000;
  } randomness;

  // Model-table data set: distances uniform in (d_min, d_max), one
  // environment per bin.
  struct Table {
    double d_min = 0.0;
    double d_max = 2.5;
    std::size_t samples_per_env = 200;
    std::vector<PredictorConfig> predictors;
  } table;

  struct StaticSweep {
    std::vector<double> d_grid;
    std::size_t samples_per_point = 5000;
    PredictorConfig two_class_model;
    PredictorConfig four_class_model;
  } static_sweep;

  struct DynamicSweep {
    std::size_t sets = 11;
    std::size_t samples_per_set = 6000;
    PredictorConfig two_class_model;
    PredictorConfig four_class_model;
  } dynamic_sweep;

  struct Filter {
    std::size_t grid_points = 100;
    double d_min = 0.02;
    double d_max = 2.5;
    std::size_t cycles_per_d = 10000;
    double u_threshold = 0.5;
    std::vector<double> timeline_d{0.8, 1.0, 1.2};
    std::size_t timeline_cycles = 200;
    PredictorConfig model;
    std::string model_path;  // empty: train in-run on the table data set
  } filter;

  ExperimentConfig();
  void validate() const;  // throws ConfigError
  double r0() const { return r_zero(channel); }
};

// JSON text. Unknown keys, wrong types and invalid values raise ConfigError.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
// Canonical JSON of the fully resolved config (what runs write as config.json).
std::string dump_config(const ExperimentConfig& config);

// Default five-row model line-up: mlp, random-forest, decision-tree, gbdt
// and a deeper, faster-learning gbdt configuration named "xgboost".
std::vector<PredictorConfig> default_table_predictors();

// Experiments return their results so tests can check them without parsing
// files; run_* wrappers write them under <output_dir>/<command>/.

struct ChannelCurvesResult {
  std::vector<double> d_m;
  std::vector<double> p_analytic;
  std::vector<double> scatter_d_m;
  std::vector<LinkDraw> scatter;
  std::vector<LinkDraw> time_trace;  // at d = r0
};
ChannelCurvesResult channel_curves(const ExperimentConfig& config);

struct RandomnessCurveRow {
  double d_m = 0.0;
  double u2_analytic = 0.0, u2_empirical = 0.0;
  double u4_analytic = 0.0, u4_empirical = 0.0;
};
std::vector<RandomnessCurveRow> randomness_curve(const ExperimentConfig& config);

struct TableResult {
  Scheme scheme;
  std::vector<ModelRow> rows;
  RandomnessReport test_randomness;
  SampleSet test_set;
};
// Per scheme in config.schemes; the data set seed derives from config.seed.
std::vector<TableResult> model_table(const ExperimentConfig& config);
SampleSet table_set(const ExperimentConfig& config, Scheme scheme);

struct SweepRow {
  double x = 0.0;  // d in meters (static) or core weight (dynamic)
  double acc = 0.0, acc_max = 0.0, u_p = 0.0, u = 0.0;
};
struct SweepResult {
  Scheme scheme;
  std::vector<SweepRow> rows;
};
std::vector<SweepResult> static_sweep(const ExperimentConfig& config);
std::vector<SweepResult> dynamic_sweep(const ExperimentConfig& config);

struct FilterDemoResult {
  RegionReport region;
  std::vector<GatedTrace> timelines;
  double peak_before_m = 0.0, peak_after_m = 0.0, peak_analytic_m = 0.0;
};
FilterDemoResult filter_demo(const ExperimentConfig& config);
FilterDemoResult filter_demo(const ExperimentConfig& config, const TrainedModel& gate);

// File-emitting commands. Each writes config.json and manifest.csv next to
// its CSVs and returns the artifact paths.
std::vector<std::filesystem::path> run_channel(const ExperimentConfig& config);
std::vector<std::filesystem::path> run_randomness(const ExperimentConfig& config);
std::vector<std::filesystem::path> run_table(const ExperimentConfig& config);
std::vector<std::filesystem::path> run_static_sweep(const ExperimentConfig& config);
std::vector<std::filesystem::path> run_dynamic_sweep(const ExperimentConfig& config);
std::vector<std::filesystem::path> run_filter_demo(const ExperimentConfig& config);
// Writes train.csv / test.csv (+ sidecars) for the first configured scheme or
// `scheme` when given.
std::vector<std::filesystem::path> run_dataset_build(const ExperimentConfig& config,
                                                     std::optional<Scheme> scheme);
std::string dataset_summary(const std::filesystem::path& csv_path, MislabelSource source);
std::vector<std::filesystem::path> run_model_train(const ExperimentConfig& config,
                                                   const std::filesystem::path& train_csv,
                                                   const PredictorConfig& predictor);
std::vector<std::filesystem::path> run_model_eval(const ExperimentConfig& config,
                                                  const std::filesystem::path& model_path,
                                                  const std::filesystem::path& test_csv);

}  // namespace lqlab

#endif  // LQLAB_EXPERIMENTS_HPP
