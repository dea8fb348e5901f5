// lqlab command-line runner.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error,
// 4 numeric or validation failure.

#include <cstdint>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "lqlab/errors.hpp"
#include "lqlab/experiments.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitValidation = 4;

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

lqlab::ExperimentConfig resolve_config(const GlobalOptions& g) {
  lqlab::ExperimentConfig c = g.config_path.empty() ? lqlab::ExperimentConfig{}
                                                    : lqlab::load_config(g.config_path);
  if (g.seed) c.seed = *g.seed;
  if (!g.out_dir.empty()) c.output_dir = g.out_dir;
  c.validate();
  return c;
}

void print_paths(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::cout << p.string() << "\n";
}

// key=value pairs from --set.
std::map<std::string, double> parse_overrides(const std::vector<std::string>& items) {
  std::map<std::string, double> out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw lqlab::ConfigError("--set expects key=value, got '" + item + "'");
    try {
      std::size_t used = 0;
      const std::string value = item.substr(eq + 1);
      out[item.substr(0, eq)] = std::stod(value, &used);
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::logic_error&) {
      throw lqlab::ConfigError("--set value is not a number in '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"lqlab: link-quality predictability experiments"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON experiment config");
  app.add_option("--seed", g.seed, "master seed (overrides the config)");
  app.add_option("--out", g.out_dir, "output directory (overrides the config)");

  auto* channel = app.add_subcommand("channel", "p(d), RSSI scatter and time trace");
  auto* randomness = app.add_subcommand("randomness", "U(d) for both label schemes");
  auto* table = app.add_subcommand("table", "model comparison table");
  auto* static_sweep = app.add_subcommand("static-sweep", "per-distance train/test sweep");
  auto* dynamic_sweep = app.add_subcommand("dynamic-sweep", "mixture sweep in (0.5 r0, 1.5 r0)");
  auto* filter = app.add_subcommand("filter-demo", "prediction-gated reception");

  auto* dataset = app.add_subcommand("dataset", "build or inspect data sets");
  dataset->require_subcommand(1);
  auto* ds_build = dataset->add_subcommand("build", "write train.csv and test.csv");
  std::string build_scheme;
  ds_build->add_option("--scheme", build_scheme, "two-class or four-class");
  auto* ds_inspect = dataset->add_subcommand("inspect", "summarise a data set CSV");
  std::string inspect_path;
  std::string inspect_source = "empirical";
  ds_inspect->add_option("csv", inspect_path, "data set CSV")->required();
  ds_inspect->add_option("--source", inspect_source, "mislabel source: empirical or analytic");

  auto* model = app.add_subcommand("model", "train or evaluate a predictor");
  model->require_subcommand(1);
  auto* m_train = model->add_subcommand("train", "train a predictor and save it as JSON");
  std::string train_csv;
  std::string kind = "mlp";
  std::string model_name;
  std::vector<std::string> overrides;
  m_train->add_option("--train", train_csv, "training CSV")->required();
  m_train->add_option("--predictor", kind, "predictor kind");
  m_train->add_option("--name", model_name, "model label");
  m_train->add_option("--set", overrides, "hyperparameter override key=value");
  auto* m_eval = model->add_subcommand("eval", "evaluate a saved model on a test CSV");
  std::string model_path;
  std::string test_csv;
  m_eval->add_option("--model", model_path, "model JSON")->required();
  m_eval->add_option("--test", test_csv, "test CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    const lqlab::ExperimentConfig c = resolve_config(g);
    if (*channel) {
      print_paths(lqlab::run_channel(c));
    } else if (*randomness) {
      print_paths(lqlab::run_randomness(c));
    } else if (*table) {
      print_paths(lqlab::run_table(c));
    } else if (*static_sweep) {
      print_paths(lqlab::run_static_sweep(c));
    } else if (*dynamic_sweep) {
      print_paths(lqlab::run_dynamic_sweep(c));
    } else if (*filter) {
      print_paths(lqlab::run_filter_demo(c));
    } else if (*ds_build) {
      std::optional<lqlab::Scheme> scheme;
      if (!build_scheme.empty()) {
        try {
          scheme = lqlab::parse_scheme(build_scheme);
        } catch (const std::invalid_argument& e) {
          throw lqlab::ConfigError(e.what());
        }
      }
      print_paths(lqlab::run_dataset_build(c, scheme));
    } else if (*ds_inspect) {
      std::cout << lqlab::dataset_summary(inspect_path,
                                          lqlab::parse_mislabel_source(inspect_source));
    } else if (*m_train) {
      lqlab::PredictorConfig p;
      p.kind = lqlab::parse_predictor_kind(kind);
      p.name = model_name;
      p.hyperparameters = parse_overrides(overrides);
      p.validate();
      print_paths(lqlab::run_model_train(c, train_csv, p));
    } else if (*m_eval) {
      print_paths(lqlab::run_model_eval(c, model_path, test_csv));
    }
  } catch (const lqlab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const lqlab::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const lqlab::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::domain_error& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return kExitValidation;
  }
  return 0;
}
