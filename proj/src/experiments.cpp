#include "lqlab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "json.hpp"
#include "lqlab/dataset_io.hpp"
#include "lqlab/errors.hpp"
#include "lqlab/io.hpp"

namespace lqlab {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---- config parsing ----

// Strict object reader: every key must be consumed, types must match.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be a JSON object");
  }

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(where_ + "." + key + " has the wrong type");
    }
  }

  const json* child(const char* key) {
    seen_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.contains(item.key()))
        throw ConfigError("unknown config key " + where_ + "." + item.key());
  }

  const std::string& where() const { return where_; }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

PredictorConfig predictor_from_json(const json& j, const std::string& where) {
  ObjectReader r(j, where);
  std::string kind;
  r.get("kind", kind);
  if (kind.empty()) throw ConfigError(where + ".kind is required");
  PredictorConfig c;
  c.kind = parse_predictor_kind(kind);
  r.get("name", c.name);
  if (const json* hp = r.child("hyperparameters")) {
    if (!hp->is_object()) throw ConfigError(where + ".hyperparameters must be an object");
    for (const auto& item : hp->items()) {
      if (!item.value().is_number())
        throw ConfigError(where + ".hyperparameters." + item.key() + " must be a number");
      c.hyperparameters[item.key()] = item.value().get<double>();
    }
  }
  r.finish();
  c.validate();
  return c;
}

json predictor_to_json(const PredictorConfig& c) {
  json hp = json::object();
  for (const auto& [k, v] : c.hyperparameters) hp[k] = v;
  return {{"kind", to_string(c.kind)}, {"name", c.label()}, {"hyperparameters", hp}};
}

PredictorConfig make_predictor(PredictorKind kind, std::string name = {},
                               std::map<std::string, double> hp = {}) {
  PredictorConfig c;
  c.kind = kind;
  c.name = std::move(name);
  c.hyperparameters = std::move(hp);
  return c;
}

std::uint64_t scheme_tag(Scheme s) { return s == Scheme::kTwoClass ? 2 : 4; }

// ---- output helpers ----

std::string params_comment(const ExperimentConfig& c) {
  std::ostringstream s;
  s << "lqlab alpha=" << format_double(c.channel.alpha)
    << " sigma=" << format_double(c.channel.sigma)
    << " pt_dbm=" << format_double(c.channel.pt_dbm)
    << " beta_th_db=" << format_double(c.channel.beta_th_db)
    << " r0_m=" << format_double(c.r0()) << " K=" << c.window
    << " seed=" << c.seed;
  return s.str();
}

class RunOutput {
 public:
  RunOutput(const ExperimentConfig& config, std::string command)
      : config_(config), command_(std::move(command)),
        dir_(fs::path(config.output_dir) / command_) {}

  fs::path write(const std::string& name, std::string_view content) {
    const fs::path p = dir_ / name;
    write_file_atomic(p, content);
    artifacts_.push_back(p);
    return p;
  }

  fs::path write(const std::string& name, CsvTable table) {
    table.comment(params_comment(config_));
    return write(name, table.str());
  }

  void add_artifact(const fs::path& p) { artifacts_.push_back(p); }

  std::vector<fs::path> finish() {
    write_file_atomic(dir_ / "config.json", dump_config(config_));
    CsvTable manifest({"artifact", "command", "seed"});
    for (const auto& a : artifacts_)
      manifest.add_row({a.filename().string(), command_, std::to_string(config_.seed)});
    manifest.add_row({"config.json", command_, std::to_string(config_.seed)});
    write_file_atomic(dir_ / "manifest.csv", manifest.str());
    auto out = artifacts_;
    out.push_back(dir_ / "config.json");
    out.push_back(dir_ / "manifest.csv");
    return out;
  }

  const fs::path& dir() const { return dir_; }

 private:
  const ExperimentConfig& config_;
  std::string command_;
  fs::path dir_;
  std::vector<fs::path> artifacts_;
};

std::string fmt(double v) { return format_double(v); }

std::string scheme_file(std::string_view stem, Scheme s) {
  std::string name(stem);
  name += '_';
  name += to_string(s);
  name += ".csv";
  return name;
}

SplitResult split_for(const ExperimentConfig& c, const SampleSet& set,
                      std::initializer_list<std::uint64_t> path) {
  Rng rng = make_stream(c.seed, path);
  return split(set, c.split_fraction, rng);
}

AssembleOptions assemble_options(const ExperimentConfig& c) {
  return {c.pairs_per_env, c.horizon, c.sentinel_dbm};
}

PredictorConfig seeded(PredictorConfig p, std::uint64_t seed) {
  p.seed = seed;
  return p;
}

SweepRow score_row(double x, const PredictionReport& rep) {
  return {x, rep.acc, rep.acc_max, rep.u_p, rep.u_set};
}

}  // namespace

std::vector<PredictorConfig> default_table_predictors() {
  return {
      make_predictor(PredictorKind::kMlp, "mlp"),
      make_predictor(PredictorKind::kRandomForest, "random-forest"),
      make_predictor(PredictorKind::kDecisionTree, "decision-tree"),
      make_predictor(PredictorKind::kGbdt, "gbdt"),
      make_predictor(PredictorKind::kGbdt, "xgboost",
                     {{"rounds", 60}, {"max_depth", 4}, {"shrinkage", 0.2}, {"lambda", 1.0}}),
  };
}

ExperimentConfig::ExperimentConfig() {
  table.predictors = default_table_predictors();
  for (int k = 1; k <= 25; ++k) static_sweep.d_grid.push_back(0.1 * k);
  static_sweep.two_class_model = make_predictor(PredictorKind::kMlp, "mlp");
  static_sweep.four_class_model = make_predictor(PredictorKind::kGbdt, "gbdt");
  dynamic_sweep.two_class_model = static_sweep.two_class_model;
  dynamic_sweep.four_class_model = static_sweep.four_class_model;
  filter.model = make_predictor(PredictorKind::kMlp, "mlp");
}

void ExperimentConfig::validate() const {
  channel.validate();
  if (schemes.empty()) throw ConfigError("schemes must not be empty");
  if (window < 1) throw ConfigError("K must be >= 1");
  if (horizon < 1 || horizon > 3) throw ConfigError("horizon must be in [1, 3]");
  if (!(sentinel_dbm < channel.min_received_rssi_dbm()))
    throw ConfigError("rssi_sentinel_dbm must lie below the weakest receivable RSSI (" +
                      format_double(channel.min_received_rssi_dbm()) + " dBm)");
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw ConfigError("split_fraction must lie in (0, 1)");
  if (pairs_per_env < 1) throw ConfigError("pairs_per_env must be >= 1");
  if (!(env_bin_width > 0.0)) throw ConfigError("env_bin_width must be > 0");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
  auto positive_count = [](std::size_t n, const char* what) {
    if (n < 1) throw ConfigError(std::string(what) + " must be >= 1");
  };
  positive_count(channel_curves.grid_points, "channel_curves.grid_points");
  positive_count(channel_curves.scatter_points, "channel_curves.scatter_points");
  positive_count(channel_curves.time_cycles, "channel_curves.time_cycles");
  positive_count(randomness.grid_points, "randomness.grid_points");
  positive_count(randomness.samples_per_point, "randomness.samples_per_point");
  positive_count(table.samples_per_env, "table.samples_per_env");
  positive_count(static_sweep.samples_per_point, "static_sweep.samples_per_point");
  positive_count(dynamic_sweep.samples_per_set, "dynamic_sweep.samples_per_set");
  positive_count(filter.grid_points, "filter.grid_points");
  positive_count(filter.cycles_per_d, "filter.cycles_per_d");
  positive_count(filter.timeline_cycles, "filter.timeline_cycles");
  if (dynamic_sweep.sets < 2) throw ConfigError("dynamic_sweep.sets must be >= 2");
  if (!(channel_curves.d_max > 0.0) || !(randomness.d_max > 0.0))
    throw ConfigError("d_max must be > 0");
  if (!(table.d_min >= 0.0 && table.d_max > table.d_min))
    throw ConfigError("table needs 0 <= d_min < d_max");
  if (table.predictors.empty()) throw ConfigError("table.predictors must not be empty");
  for (double d : static_sweep.d_grid)
    if (!(d > 0.0)) throw ConfigError("static_sweep.d_grid entries must be > 0");
  if (!(filter.d_min >= 0.0 && filter.d_max > filter.d_min && filter.d_max <= 2.5))
    throw ConfigError("filter grid must lie within (0, 2.5] r0");
  for (double d : filter.timeline_d)
    if (!(d > 0.0)) throw ConfigError("filter.timeline_d entries must be > 0");
  if (!(filter.u_threshold > 0.0 && filter.u_threshold <= 1.0))
    throw ConfigError("filter.u_threshold must lie in (0, 1]");
  for (const auto& p : table.predictors) p.validate();
  static_sweep.two_class_model.validate();
  static_sweep.four_class_model.validate();
  dynamic_sweep.two_class_model.validate();
  dynamic_sweep.four_class_model.validate();
  filter.model.validate();
}

ExperimentConfig parse_config(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c;
  ObjectReader r(j, "config");
  if (const json* ch = r.child("channel")) {
    ObjectReader cr(*ch, "channel");
    cr.get("alpha", c.channel.alpha);
    cr.get("sigma", c.channel.sigma);
    cr.get("pt_dbm", c.channel.pt_dbm);
    cr.get("beta_th_db", c.channel.beta_th_db);
    cr.finish();
  }
  std::vector<std::string> schemes;
  r.get("schemes", schemes);
  if (!schemes.empty()) {
    c.schemes.clear();
    for (const auto& s : schemes) c.schemes.push_back(parse_scheme(s));
  }
  r.get("K", c.window);
  r.get("horizon", c.horizon);
  r.get("rssi_sentinel_dbm", c.sentinel_dbm);
  r.get("seed", c.seed);
  r.get("split_fraction", c.split_fraction);
  std::string source;
  r.get("mislabel_source", source);
  if (!source.empty()) c.mislabel_source = parse_mislabel_source(source);
  r.get("pairs_per_env", c.pairs_per_env);
  r.get("env_bin_width", c.env_bin_width);
  r.get("output_dir", c.output_dir);

  if (const json* s = r.child("channel_curves")) {
    ObjectReader sr(*s, "channel_curves");
    sr.get("grid_points", c.channel_curves.grid_points);
    sr.get("d_max", c.channel_curves.d_max);
    sr.get("scatter_points", c.channel_curves.scatter_points);
    sr.get("time_cycles", c.channel_curves.time_cycles);
    sr.finish();
  }
  if (const json* s = r.child("randomness")) {
    ObjectReader sr(*s, "randomness");
    sr.get("grid_points", c.randomness.grid_points);
    sr.get("d_max", c.randomness.d_max);
    sr.get("samples_per_point", c.randomness.samples_per_point);
    sr.finish();
  }
  if (const json* s = r.child("table")) {
    ObjectReader sr(*s, "table");
    sr.get("d_min", c.table.d_min);
    sr.get("d_max", c.table.d_max);
    sr.get("samples_per_env", c.table.samples_per_env);
    if (const json* preds = sr.child("predictors")) {
      if (!preds->is_array()) throw ConfigError("table.predictors must be an array");
      c.table.predictors.clear();
      for (std::size_t i = 0; i < preds->size(); ++i)
        c.table.predictors.push_back(
            predictor_from_json(preds->at(i), "table.predictors[" + std::to_string(i) + "]"));
    }
    sr.finish();
  }
  auto read_models = [](ObjectReader& sr, PredictorConfig& two, PredictorConfig& four) {
    if (const json* m = sr.child("two_class_model"))
      two = predictor_from_json(*m, sr.where() + ".two_class_model");
    if (const json* m = sr.child("four_class_model"))
      four = predictor_from_json(*m, sr.where() + ".four_class_model");
  };
  if (const json* s = r.child("static_sweep")) {
    ObjectReader sr(*s, "static_sweep");
    sr.get("d_grid", c.static_sweep.d_grid);
    sr.get("samples_per_point", c.static_sweep.samples_per_point);
    read_models(sr, c.static_sweep.two_class_model, c.static_sweep.four_class_model);
    sr.finish();
  }
  if (const json* s = r.child("dynamic_sweep")) {
    ObjectReader sr(*s, "dynamic_sweep");
    sr.get("sets", c.dynamic_sweep.sets);
    sr.get("samples_per_set", c.dynamic_sweep.samples_per_set);
    read_models(sr, c.dynamic_sweep.two_class_model, c.dynamic_sweep.four_class_model);
    sr.finish();
  }
  if (const json* s = r.child("filter")) {
    ObjectReader sr(*s, "filter");
    sr.get("grid_points", c.filter.grid_points);
    sr.get("d_min", c.filter.d_min);
    sr.get("d_max", c.filter.d_max);
    sr.get("cycles_per_d", c.filter.cycles_per_d);
    sr.get("u_threshold", c.filter.u_threshold);
    sr.get("timeline_d", c.filter.timeline_d);
    sr.get("timeline_cycles", c.filter.timeline_cycles);
    sr.get("model_path", c.filter.model_path);
    if (const json* m = sr.child("model")) c.filter.model = predictor_from_json(*m, "filter.model");
    sr.finish();
  }
  r.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const fs::path& path) {
  return parse_config(read_file(path));
}

std::string dump_config(const ExperimentConfig& c) {
  json schemes = json::array();
  for (auto s : c.schemes) schemes.push_back(to_string(s));
  json table_preds = json::array();
  for (const auto& p : c.table.predictors) table_preds.push_back(predictor_to_json(p));
  const json j = {
      {"channel", {{"alpha", c.channel.alpha},
                   {"sigma", c.channel.sigma},
                   {"pt_dbm", c.channel.pt_dbm},
                   {"beta_th_db", c.channel.beta_th_db}}},
      {"schemes", schemes},
      {"K", c.window},
      {"horizon", c.horizon},
      {"rssi_sentinel_dbm", c.sentinel_dbm},
      {"seed", c.seed},
      {"split_fraction", c.split_fraction},
      {"mislabel_source", to_string(c.mislabel_source)},
      {"pairs_per_env", c.pairs_per_env},
      {"env_bin_width", c.env_bin_width},
      {"output_dir", c.output_dir},
      {"channel_curves", {{"grid_points", c.channel_curves.grid_points},
                          {"d_max", c.channel_curves.d_max},
                          {"scatter_points", c.channel_curves.scatter_points},
                          {"time_cycles", c.channel_curves.time_cycles}}},
      {"randomness", {{"grid_points", c.randomness.grid_points},
                      {"d_max", c.randomness.d_max},
                      {"samples_per_point", c.randomness.samples_per_point}}},
      {"table", {{"d_min", c.table.d_min},
                 {"d_max", c.table.d_max},
                 {"samples_per_env", c.table.samples_per_env},
                 {"predictors", table_preds}}},
      {"static_sweep", {{"d_grid", c.static_sweep.d_grid},
                        {"samples_per_point", c.static_sweep.samples_per_point},
                        {"two_class_model", predictor_to_json(c.static_sweep.two_class_model)},
                        {"four_class_model", predictor_to_json(c.static_sweep.four_class_model)}}},
      {"dynamic_sweep", {{"sets", c.dynamic_sweep.sets},
                         {"samples_per_set", c.dynamic_sweep.samples_per_set},
                         {"two_class_model", predictor_to_json(c.dynamic_sweep.two_class_model)},
                         {"four_class_model", predictor_to_json(c.dynamic_sweep.four_class_model)}}},
      {"filter", {{"grid_points", c.filter.grid_points},
                  {"d_min", c.filter.d_min},
                  {"d_max", c.filter.d_max},
                  {"cycles_per_d", c.filter.cycles_per_d},
                  {"u_threshold", c.filter.u_threshold},
                  {"timeline_d", c.filter.timeline_d},
                  {"timeline_cycles", c.filter.timeline_cycles},
                  {"model_path", c.filter.model_path},
                  {"model", predictor_to_json(c.filter.model)}}},
  };
  return j.dump(2) + "\n";
}

// ---- experiments ----

ChannelCurvesResult channel_curves(const ExperimentConfig& c) {
  const double r0 = c.r0();
  const auto& cc = c.channel_curves;
  ChannelCurvesResult out;
  out.d_m = half_open_grid(0.0, cc.d_max * r0, cc.grid_points);
  for (double d : out.d_m) out.p_analytic.push_back(delivery_rate(d, c.channel));

  Rng scatter_rng = make_stream(c.seed, {stream::kChannel, 0});
  out.scatter_d_m = half_open_grid(0.0, cc.d_max * r0, cc.scatter_points);
  for (double d : out.scatter_d_m) out.scatter.push_back(draw_link(d, c.channel, scatter_rng));

  Rng time_rng = make_stream(c.seed, {stream::kChannel, 1});
  for (std::size_t t = 0; t < cc.time_cycles; ++t)
    out.time_trace.push_back(draw_link(r0, c.channel, time_rng));
  return out;
}

std::vector<RandomnessCurveRow> randomness_curve(const ExperimentConfig& c) {
  const double r0 = c.r0();
  const auto grid = half_open_grid(0.0, c.randomness.d_max * r0, c.randomness.grid_points);
  std::vector<RandomnessCurveRow> rows;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    RandomnessCurveRow row;
    row.d_m = grid[j];
    const EnvSpec env{grid[j], grid[j], c.randomness.samples_per_point};
    // One node pair per sample: independent labels, so the empirical curve
    // converges at the plain Monte Carlo rate.
    AssembleOptions options = assemble_options(c);
    options.pairs_per_env = static_cast<int>(c.randomness.samples_per_point);
    for (Scheme s : {Scheme::kTwoClass, Scheme::kFourClass}) {
      const double analytic = label_entropy(analytic_mislabel(grid[j], c.channel, s).rows.row(0));
      const SampleSet set = assemble(std::span(&env, 1), s, c.window, c.channel,
                                     derive_seed(c.seed, {stream::kRandomness, scheme_tag(s), j}),
                                     options);
      const double empirical = set_randomness(set, MislabelSource::kEmpirical, c.channel).u;
      if (s == Scheme::kTwoClass) {
        row.u2_analytic = analytic;
        row.u2_empirical = empirical;
      } else {
        row.u4_analytic = analytic;
        row.u4_empirical = empirical;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

SampleSet table_set(const ExperimentConfig& c, Scheme scheme) {
  const double r0 = c.r0();
  const auto bins = uniform_bins(c.table.d_min * r0, c.table.d_max * r0, c.env_bin_width * r0,
                                 c.table.samples_per_env);
  return assemble(bins, scheme, c.window, c.channel,
                  derive_seed(c.seed, {stream::kDataset, scheme_tag(scheme)}),
                  assemble_options(c));
}

std::vector<TableResult> model_table(const ExperimentConfig& c) {
  std::vector<TableResult> out;
  for (Scheme s : c.schemes) {
    const SampleSet set = table_set(c, s);
    SplitResult parts = split_for(c, set, {stream::kSplit, scheme_tag(s)});
    std::vector<PredictorConfig> configs;
    for (std::size_t i = 0; i < c.table.predictors.size(); ++i)
      configs.push_back(seeded(c.table.predictors[i],
                               derive_seed(c.seed, {stream::kModel, scheme_tag(s), i})));
    TableResult t{s, compare_models(configs, parts.train, parts.test, c.mislabel_source, c.channel),
                  set_randomness(parts.test, c.mislabel_source, c.channel), std::move(parts.test)};
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<SweepResult> static_sweep(const ExperimentConfig& c) {
  const double r0 = c.r0();
  std::vector<SweepResult> out;
  for (Scheme s : c.schemes) {
    SweepResult result{s, {}};
    const PredictorConfig& model =
        s == Scheme::kTwoClass ? c.static_sweep.two_class_model : c.static_sweep.four_class_model;
    for (std::size_t j = 0; j < c.static_sweep.d_grid.size(); ++j) {
      const double d = c.static_sweep.d_grid[j] * r0;
      const EnvSpec env{d, d, c.static_sweep.samples_per_point};
      const std::uint64_t tag = 100 + scheme_tag(s);
      const SampleSet set = assemble(std::span(&env, 1), s, c.window, c.channel,
                                     derive_seed(c.seed, {stream::kDataset, tag, j}),
                                     assemble_options(c));
      const SplitResult parts = split_for(c, set, {stream::kSplit, tag, j});
      const TrainedModel m =
          train(seeded(model, derive_seed(c.seed, {stream::kModel, tag, j})), parts.train);
      result.rows.push_back(score_row(d, evaluate(m, parts.test, c.mislabel_source, c.channel)));
    }
    out.push_back(std::move(result));
  }
  return out;
}

std::vector<SweepResult> dynamic_sweep(const ExperimentConfig& c) {
  const double r0 = c.r0();
  const double w = 0.05 * r0;
  // Stable edge bins and the unstable core, all inside (0.5 r0, 1.5 r0).
  const std::vector<std::pair<double, double>> stable = {
      {0.5 * r0, 0.5 * r0 + w}, {0.5 * r0 + w, 0.6 * r0},
      {1.4 * r0, 1.4 * r0 + w}, {1.4 * r0 + w, 1.5 * r0}};
  const std::vector<std::pair<double, double>> core = {
      {0.9 * r0, 0.9 * r0 + w}, {0.9 * r0 + w, 1.0 * r0},
      {1.0 * r0, 1.0 * r0 + w}, {1.0 * r0 + w, 1.1 * r0}};

  std::vector<SweepResult> out;
  for (Scheme s : c.schemes) {
    SweepResult result{s, {}};
    const PredictorConfig& model =
        s == Scheme::kTwoClass ? c.dynamic_sweep.two_class_model : c.dynamic_sweep.four_class_model;
    const std::uint64_t tag = 200 + scheme_tag(s);
    for (std::size_t k = 0; k < c.dynamic_sweep.sets; ++k) {
      const double weight = static_cast<double>(k) / static_cast<double>(c.dynamic_sweep.sets - 1);
      const auto n = c.dynamic_sweep.samples_per_set;
      const auto n_core = static_cast<std::size_t>(std::llround(weight * static_cast<double>(n)));
      std::vector<EnvSpec> spec;
      auto add_group = [&](const std::vector<std::pair<double, double>>& bins, std::size_t total) {
        for (std::size_t b = 0; b < bins.size(); ++b) {
          const std::size_t count = total / bins.size() + (b < total % bins.size() ? 1 : 0);
          if (count > 0) spec.push_back({bins[b].first, bins[b].second, count});
        }
      };
      add_group(stable, n - n_core);
      add_group(core, n_core);
      const SampleSet set = assemble(spec, s, c.window, c.channel,
                                     derive_seed(c.seed, {stream::kDataset, tag, k}),
                                     assemble_options(c));
      const SplitResult parts = split_for(c, set, {stream::kSplit, tag, k});
      const TrainedModel m =
          train(seeded(model, derive_seed(c.seed, {stream::kModel, tag, k})), parts.train);
      result.rows.push_back(score_row(weight, evaluate(m, parts.test, c.mislabel_source, c.channel)));
    }
    out.push_back(std::move(result));
  }
  return out;
}

FilterDemoResult filter_demo(const ExperimentConfig& c, const TrainedModel& gate) {
  const double r0 = c.r0();
  FilterDemoResult out;
  const auto grid = half_open_grid(c.filter.d_min * r0, c.filter.d_max * r0, c.filter.grid_points);
  out.region = effective_rate_sweep(gate, grid, c.filter.cycles_per_d, c.channel,
                                    derive_seed(c.seed, {stream::kGate, 0}), c.filter.u_threshold,
                                    c.sentinel_dbm);
  out.peak_before_m = peak_randomness_location(out.region, Curve::kBefore);
  out.peak_after_m = peak_randomness_location(out.region, Curve::kAfter);
  out.peak_analytic_m = peak_randomness_location(out.region, Curve::kAnalytic);
  for (std::size_t j = 0; j < c.filter.timeline_d.size(); ++j) {
    Rng rng = make_stream(c.seed, {stream::kGate, 1, j});
    const BeaconTrace trace =
        generate_trace(c.filter.timeline_d[j] * r0,
                       c.filter.timeline_cycles + static_cast<std::size_t>(gate.window),
                       c.channel, rng, c.sentinel_dbm);
    out.timelines.push_back(gate_trace(trace, gate, gate.window));
  }
  return out;
}

FilterDemoResult filter_demo(const ExperimentConfig& c) {
  if (!c.filter.model_path.empty()) return filter_demo(c, load_model(c.filter.model_path));
  const SampleSet set = table_set(c, Scheme::kTwoClass);
  const SplitResult parts = split_for(c, set, {stream::kSplit, scheme_tag(Scheme::kTwoClass)});
  const TrainedModel gate =
      train(seeded(c.filter.model, derive_seed(c.seed, {stream::kModel, 300})), parts.train);
  return filter_demo(c, gate);
}

// ---- file-emitting commands ----

std::vector<fs::path> run_channel(const ExperimentConfig& c) {
  const auto res = channel_curves(c);
  const double r0 = c.r0();
  RunOutput out(c, "channel");

  CsvTable p({"d_m", "d_over_r0", "p_analytic"});
  for (std::size_t j = 0; j < res.d_m.size(); ++j)
    p.add_row({fmt(res.d_m[j]), fmt(res.d_m[j] / r0), fmt(res.p_analytic[j])});
  out.write("p_of_d.csv", std::move(p));

  CsvTable rssi({"d_m", "d_over_r0", "rssi_dbm", "beta_db", "received"});
  CsvTable rx({"d_m", "d_over_r0", "received"});
  for (std::size_t j = 0; j < res.scatter.size(); ++j) {
    const auto& s = res.scatter[j];
    const double d = res.scatter_d_m[j];
    rssi.add_row({fmt(d), fmt(d / r0), fmt(s.rssi_dbm), fmt(s.beta_db), s.received ? "1" : "0"});
    rx.add_row({fmt(d), fmt(d / r0), s.received ? "1" : "0"});
  }
  out.write("rssi_vs_distance.csv", std::move(rssi));
  out.write("reception_vs_distance.csv", std::move(rx));

  CsvTable time({"cycle", "rssi_dbm", "received"});
  for (std::size_t t = 0; t < res.time_trace.size(); ++t)
    time.add_row({std::to_string(t), fmt(res.time_trace[t].rssi_dbm),
                  res.time_trace[t].received ? "1" : "0"});
  out.write("rssi_vs_time.csv", std::move(time));
  return out.finish();
}

std::vector<fs::path> run_randomness(const ExperimentConfig& c) {
  const auto rows = randomness_curve(c);
  RunOutput out(c, "randomness");
  CsvTable t({"d_m", "d_over_r0", "U2_analytic", "U2_empirical", "U4_analytic", "U4_empirical"});
  for (const auto& r : rows)
    t.add_row({fmt(r.d_m), fmt(r.d_m / c.r0()), fmt(r.u2_analytic), fmt(r.u2_empirical),
               fmt(r.u4_analytic), fmt(r.u4_empirical)});
  out.write("randomness_curve.csv", std::move(t));
  return out.finish();
}

std::vector<fs::path> run_table(const ExperimentConfig& c) {
  const auto tables = model_table(c);
  RunOutput out(c, "table");
  for (const auto& t : tables) {
    const int m = num_labels(t.scheme);
    CsvTable rows({"model", "kind", "ACC", "Acc_max", "U_p", "U"});
    std::vector<std::string> conf_header{"model"};
    for (int a = 0; a < m; ++a)
      for (int b = 0; b < m; ++b) conf_header.push_back("c_" + std::to_string(a) + "_" + std::to_string(b));
    CsvTable conf(conf_header);
    for (const auto& r : t.rows) {
      rows.add_row({r.name, std::string(to_string(r.kind)), fmt(r.report.acc),
                    fmt(r.report.acc_max), fmt(r.report.u_p), fmt(r.report.u_set)});
      std::vector<std::string> cells{r.name};
      for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) cells.push_back(std::to_string(r.report.confusion(a, b)));
      conf.add_row(std::move(cells));
    }
    out.write(scheme_file("table", t.scheme), std::move(rows));
    out.write(scheme_file("confusion", t.scheme), std::move(conf));

    CsvTable envs({"env_id", "d", "U", "A", "acc_max"});
    for (const auto& e : t.test_randomness.per_env) {
      const double w = e.ratio.sum();
      const double u = e.u.dot(e.ratio) / w;
      const double a = e.hit.dot(e.ratio) / w;
      const double acc_max = std::max(a, e.ratio.maxCoeff() / w);
      envs.add_row({std::to_string(e.env_id),
                    fmt(t.test_set.envs[static_cast<std::size_t>(e.env_id)].center()), fmt(u),
                    fmt(a), fmt(acc_max)});
    }
    out.write(scheme_file("test_randomness", t.scheme), std::move(envs));
  }
  return out.finish();
}

namespace {

std::vector<fs::path> write_sweep(const ExperimentConfig& c, const std::string& command,
                                  const std::vector<SweepResult>& results,
                                  const std::string& x_name, bool distance) {
  RunOutput out(c, command);
  for (const auto& res : results) {
    std::vector<std::string> header{x_name};
    if (distance) header.push_back("d_over_r0");
    for (const char* h : {"ACC", "Acc_max", "U_p", "U"}) header.push_back(h);
    CsvTable t(header);
    for (const auto& r : res.rows) {
      std::vector<std::string> cells{fmt(r.x)};
      if (distance) cells.push_back(fmt(r.x / c.r0()));
      for (double v : {r.acc, r.acc_max, r.u_p, r.u}) cells.push_back(fmt(v));
      t.add_row(std::move(cells));
    }
    std::string stem = command;
    std::replace(stem.begin(), stem.end(), '-', '_');
    out.write(scheme_file(stem, res.scheme), std::move(t));
  }
  return out.finish();
}

}  // namespace

std::vector<fs::path> run_static_sweep(const ExperimentConfig& c) {
  return write_sweep(c, "static-sweep", static_sweep(c), "d_m", true);
}

std::vector<fs::path> run_dynamic_sweep(const ExperimentConfig& c) {
  return write_sweep(c, "dynamic-sweep", dynamic_sweep(c), "core_weight", false);
}

std::vector<fs::path> run_filter_demo(const ExperimentConfig& c) {
  const auto res = filter_demo(c);
  const auto& reg = res.region;
  RunOutput out(c, "filter-demo");

  CsvTable sweep({"d", "rate_before", "rate_after", "U_before", "U_after"});
  for (std::size_t j = 0; j < reg.d_grid.size(); ++j)
    sweep.add_row({fmt(reg.d_grid[j]), fmt(reg.rate_before[j]), fmt(reg.rate_after[j]),
                   fmt(reg.u_before[j]), fmt(reg.u_after[j])});
  out.write("filter_sweep.csv", std::move(sweep));

  CsvTable intervals({"curve", "lo_m", "hi_m", "width_m"});
  for (const auto& i : reg.unstable_before)
    intervals.add_row({"before", fmt(i.lo_m), fmt(i.hi_m), fmt(i.width())});
  for (const auto& i : reg.unstable_after)
    intervals.add_row({"after", fmt(i.lo_m), fmt(i.hi_m), fmt(i.width())});
  out.write("intervals.csv", std::move(intervals));

  CsvTable summary({"metric", "value"});
  summary.add_row({"u_threshold", fmt(reg.u_threshold)});
  summary.add_row({"unstable_width_before_m", fmt(total_width(reg.unstable_before))});
  summary.add_row({"unstable_width_after_m", fmt(total_width(reg.unstable_after))});
  summary.add_row({"peak_before_m", fmt(res.peak_before_m)});
  summary.add_row({"peak_after_m", fmt(res.peak_after_m)});
  summary.add_row({"peak_analytic_m", fmt(res.peak_analytic_m)});
  summary.add_row({"peak_after_over_r0", fmt(res.peak_after_m / c.r0())});
  out.write("filter_summary.csv", std::move(summary));

  for (std::size_t j = 0; j < res.timelines.size(); ++j) {
    const auto& g = res.timelines[j];
    CsvTable t({"cycle", "raw", "predicted", "effective"});
    for (std::size_t k = 0; k < g.raw.size(); ++k)
      t.add_row({std::to_string(g.first_cycle + k), g.raw[k] ? "1" : "0",
                 g.predicted[k] ? "1" : "0", g.effective[k] ? "1" : "0"});
    out.write("timeline_d" + fmt(c.filter.timeline_d[j]) + "r0.csv", std::move(t));
  }
  return out.finish();
}

std::vector<fs::path> run_dataset_build(const ExperimentConfig& c, std::optional<Scheme> scheme) {
  const Scheme s = scheme.value_or(c.schemes.front());
  const SampleSet set = table_set(c, s);
  const SplitResult parts = split_for(c, set, {stream::kSplit, scheme_tag(s)});
  RunOutput out(c, "dataset");
  for (const auto& [name, part] : {std::pair{"train.csv", &parts.train}, {"test.csv", &parts.test}}) {
    DatasetMeta meta{c.channel, c.horizon, c.seed, c.sentinel_dbm, received_rssi_bounds(*part)};
    const fs::path p = out.dir() / name;
    write_dataset(p, *part, meta);
    out.add_artifact(p);
    out.add_artifact(meta_path_for(p));
  }
  return out.finish();
}

std::string dataset_summary(const fs::path& csv_path, MislabelSource source) {
  const LoadedDataset d = read_dataset(csv_path);
  const SampleSet& set = d.set;
  std::ostringstream s;
  s << "file        " << csv_path.string() << "\n"
    << "scheme      " << to_string(set.scheme) << "\n"
    << "K           " << set.window << "\n"
    << "samples     " << set.size() << "\n"
    << "envs        " << set.num_envs() << "\n"
    << "r0_m        " << format_double(r_zero(d.meta.params)) << "\n";
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_labels(set.scheme)), 0);
  for (int t : set.labels) counts[static_cast<std::size_t>(t)] += 1;
  s << "labels     ";
  for (auto n : counts) s << " " << n;
  s << "\n";
  if (!set.empty()) {
    const auto rr = set_randomness(set, source, d.meta.params);
    s << "source      " << to_string(source) << "\n"
      << "U           " << format_double(rr.u) << "\n"
      << "A           " << format_double(rr.a) << "\n"
      << "Acc_max     " << format_double(rr.acc_max) << "\n";
  }
  return s.str();
}

std::vector<fs::path> run_model_train(const ExperimentConfig& c, const fs::path& train_csv,
                                      const PredictorConfig& predictor) {
  const LoadedDataset d = read_dataset(train_csv);
  const TrainedModel m =
      train(seeded(predictor, derive_seed(c.seed, {stream::kModel, 400})), d.set);
  RunOutput out(c, "model");
  out.write("model.json", serialize_model(m));
  return out.finish();
}

std::vector<fs::path> run_model_eval(const ExperimentConfig& c, const fs::path& model_path,
                                     const fs::path& test_csv) {
  const TrainedModel m = load_model(model_path);
  const LoadedDataset d = read_dataset(test_csv);
  const PredictionReport r = evaluate(m, d.set, c.mislabel_source, d.meta.params);
  RunOutput out(c, "model-eval");
  const int k = m.num_labels();
  CsvTable t({"model", "kind", "ACC", "Acc_max", "U_p", "U"});
  t.add_row({m.config.label(), std::string(to_string(m.config.kind)), fmt(r.acc),
             fmt(r.acc_max), fmt(r.u_p), fmt(r.u_set)});
  out.write("eval.csv", std::move(t));
  std::vector<std::string> header{"model"};
  std::vector<std::string> cells{m.config.label()};
  for (int a = 0; a < k; ++a)
    for (int b = 0; b < k; ++b) {
      header.push_back("c_" + std::to_string(a) + "_" + std::to_string(b));
      cells.push_back(std::to_string(r.confusion(a, b)));
    }
  CsvTable conf(header);
  conf.add_row(std::move(cells));
  out.write("confusion.csv", std::move(conf));
  return out.finish();
}

}  // namespace lqlab
