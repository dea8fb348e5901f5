// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "lqlab/channel.hpp"
#include "lqlab/dataset.hpp"
#include "lqlab/errors.hpp"
#include "lqlab/experiments.hpp"
#include "lqlab/filter.hpp"
#include "lqlab/io.hpp"
#include "lqlab/metrics.hpp"
#include "lqlab/mlp.hpp"
#include "lqlab/predictors.hpp"
#include "oracles.hpp"

using namespace lqlab;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void report(const char* id, bool ok, const std::string& what) {
  std::printf("%s %s %s\n", ok ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

void info(const std::string& what) {
  std::printf("     %s\n", what.c_str());
  std::fflush(stdout);
}

std::string f(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// 1. Analytic channel and Monte Carlo agreement.
void criterion_1() {
  Stopwatch clock;
  const ChannelParams params;
  const double r0 = r_zero(params);
  const double at_r0 = delivery_rate(r0, params);
  bool ok = std::fabs(at_r0 - 0.5) <= 1e-9;

  Rng rng = make_stream(1, {stream::kChannel, 99});
  const int n = 100000;
  int outside = 0;
  double worst = 0.0;
  for (int j = 1; j <= 20; ++j) {
    const double d = 0.125 * j * r0;  // 0.125 r0 .. 2.5 r0
    const double p = delivery_rate(d, params);
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += draw_link(d, params, rng).received;
    const double band = oracle::binomial_band(p, n);
    const double dev = std::fabs(hits / double(n) - p);
    if (dev > band) ++outside;
    if (band > 0) worst = std::max(worst, dev / band);
  }
  const double t = clock.seconds();
  ok = ok && outside == 0 && t < 10.0;
  report("1", ok, "analytic channel: |p(r0)-0.5|=" + format_double(std::fabs(at_r0 - 0.5)) +
                      " (tol 1e-9); MC N=1e5 at 20 distances, " + std::to_string(outside) +
                      " outside 3-sigma (worst " + f(worst, 2) + " sigma); " + f(t, 2) +
                      " s (limit 10 s)");
}

// 2. Shape of the randomness curve.
void criterion_2() {
  Stopwatch clock;
  ExperimentConfig c;  // 50 grid points on (0, 2.5 r0], 1e4 samples per point
  const double r0 = c.r0();
  const double h4 = static_cast<double>(oracle::entropy(oracle::four_class_row(0.5L)));

  // Analytic curves on a fine grid containing r0 exactly.
  const auto grid = half_open_grid(0.0, 2.5 * r0, 2500);
  double best2 = -1, best4 = -1, arg2 = 0, arg4 = 0;
  for (double d : grid) {
    const double u2 = label_entropy(analytic_mislabel(d, c.channel, Scheme::kTwoClass).rows.row(0));
    const double u4 = label_entropy(analytic_mislabel(d, c.channel, Scheme::kFourClass).rows.row(0));
    if (u2 > best2) best2 = u2, arg2 = d;
    if (u4 > best4) best4 = u4, arg4 = d;
  }
  const bool peak2 = std::fabs(arg2 - r0) < 1e-9 && std::fabs(best2 - 1.0) <= 1e-12;
  const bool peak4 = std::fabs(arg4 - r0) < 1e-9 && std::fabs(best4 - h4) <= 1e-6;

  const auto rows = randomness_curve(c);
  double dev2 = 0, dev4 = 0;
  for (const auto& r : rows) {
    dev2 = std::max(dev2, std::fabs(r.u2_empirical - r.u2_analytic));
    dev4 = std::max(dev4, std::fabs(r.u4_empirical - r.u4_analytic));
  }
  const bool close = dev2 <= 0.03 && dev4 <= 0.03;
  report("2", peak2 && peak4 && close,
         "randomness curve: two-class peak at d=" + f(arg2 / r0, 6) + " r0, U=" + f(best2, 12) +
             "; four-class peak at d=" + f(arg4 / r0, 6) + " r0, U=" + f(best4, 9) +
             " (oracle " + f(h4, 9) + ", tol 1e-6); max |empirical-analytic| " + f(dev2) +
             " / " + f(dev4) + " at 1e4 samples (tol 0.03); " + f(clock.seconds(), 1) + " s");
}

// 3. Empirical mislabel matrices converge to the binomial forms.
void criterion_3() {
  const ChannelParams params;
  double worst = 0;
  for (double p : {0.1, 0.5, 0.9}) {
    const double d = distance_for_rate(p, params);
    for (Scheme s : {Scheme::kTwoClass, Scheme::kFourClass}) {
      const EnvSpec env{d, d, 100000};
      const SampleSet set =
          assemble(std::span(&env, 1), s, kDefaultWindow, params, derive_seed(3, {static_cast<std::uint64_t>(p * 10)}));
      const auto emp = empirical_mislabel(set.labels, s);
      const auto ana = mislabel_for_rate(p, s);
      worst = std::max(worst, (emp.rows - ana.rows).cwiseAbs().maxCoeff());
    }
  }
  report("3", worst <= 0.02,
         "mislabel matrices at p in {0.1, 0.5, 0.9}, 1e5 samples: max entry error " + f(worst) +
             " (tol 0.02)");
}

// 4. Model table properties over 10 seeds.
void criterion_4() {
  Stopwatch clock;
  int rows_a_bad = 0, rows_b_bad = 0, rows = 0;
  double worst_a = -1e9, worst_b = -1e9;
  int dt_wins[2] = {0, 0};
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ExperimentConfig c;
    c.seed = seed;
    for (const auto& t : model_table(c)) {
      double dt_up = -1, other_best = -1;
      for (const auto& r : t.rows) {
        ++rows;
        const double a = r.report.acc - r.report.acc_max;
        const double b = r.report.u_set - r.report.u_p;
        worst_a = std::max(worst_a, a);
        worst_b = std::max(worst_b, b);
        if (a > 0.02) ++rows_a_bad;
        if (b > 0.02) ++rows_b_bad;
        if (r.kind == PredictorKind::kDecisionTree) dt_up = std::max(dt_up, r.report.u_p);
        else other_best = std::max(other_best, r.report.u_p);
      }
      if (dt_up > other_best) ++dt_wins[t.scheme == Scheme::kTwoClass ? 0 : 1];
    }
    info("table seed " + std::to_string(seed) + " done at " + f(clock.seconds(), 1) + " s");
  }
  const double t = clock.seconds();
  report("4a", rows_a_bad == 0,
         "ACC <= Acc_max + 0.02 in every row: " + std::to_string(rows - rows_a_bad) + "/" +
             std::to_string(rows) + " rows, max ACC-Acc_max " + f(worst_a));
  report("4b", rows_b_bad == 0,
         "U_p >= U - 0.02 in every row: " + std::to_string(rows - rows_b_bad) + "/" +
             std::to_string(rows) + " rows, max U-U_p " + f(worst_b));
  report("4c", dt_wins[0] >= 8 && dt_wins[1] >= 8,
         "decision tree has the highest U_p: two-class " + std::to_string(dt_wins[0]) +
             "/10, four-class " + std::to_string(dt_wins[1]) + "/10 seeds (need 8)");
  report("4t", t < 300.0, "table runtime over 10 seeds x 2 schemes: " + f(t, 1) + " s (limit 300 s)");
}

// 5. Static sweep regimes.
void criterion_5() {
  ExperimentConfig c;
  c.static_sweep.d_grid = {0.1, 0.2, 1.0, 2.0, 2.5};
  bool ok_far = true, ok_mid = true;
  for (const auto& res : static_sweep(c)) {
    for (const auto& r : res.rows) {
      const double k = r.x / c.r0();
      const bool edge = k <= 0.2 + 1e-9 || k >= 2.0 - 1e-9;
      if (edge) {
        bool row_ok = r.acc >= r.acc_max - 0.03;
        if (res.scheme == Scheme::kTwoClass) row_ok = row_ok && r.acc >= 0.97;
        ok_far = ok_far && row_ok;
      }
      if (std::fabs(k - 1.0) < 1e-9 && res.scheme == Scheme::kTwoClass)
        ok_mid = r.acc >= 0.45 && r.acc <= 0.55;
      info(std::string(to_string(res.scheme)) + " d=" + f(k, 1) + " r0: ACC " + f(r.acc) +
           " Acc_max " + f(r.acc_max) + " U_p " + f(r.u_p) + " U " + f(r.u));
    }
  }
  const double p2 = delivery_rate(2.0 * c.r0(), c.channel);
  info("four-class ceiling at 2 r0 is (1-p)^3 = " + f(std::pow(1 - p2, 3)) +
       ", so ACC >= 0.97 is checked on two-class only");
  report("5a", ok_far, "d <= 0.2 r0 and d >= 2 r0: ACC >= 0.97 (two-class), ACC >= Acc_max - 0.03 (both)");
  report("5b", ok_mid, "d = r0 two-class: ACC in [0.45, 0.55]");
}

// 6. Filter application over 10 seeds.
void criterion_6() {
  Stopwatch clock;
  int shrink = 0, left_peak = 0;
  bool subset = true;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ExperimentConfig c;
    c.seed = seed;
    const SampleSet set = table_set(c, Scheme::kTwoClass);
    Rng split_rng = make_stream(seed, {stream::kSplit, 2});
    const auto parts = split(set, c.split_fraction, split_rng);
    PredictorConfig pc = c.filter.model;
    pc.seed = derive_seed(seed, {stream::kModel, 300});
    const TrainedModel gate = train(pc, parts.train);
    const auto res = filter_demo(c, gate);

    // Exact domination on every gated cycle.
    for (std::size_t j = 0; j < res.region.d_grid.size(); j += 5) {
      Rng rng = make_stream(seed, {stream::kGate, 77, j});
      const auto trace = generate_trace(res.region.d_grid[j], 2000, c.channel, rng);
      const auto g = gate_trace(trace, gate, gate.window);
      for (std::size_t k = 0; k < g.raw.size(); ++k)
        if (g.effective[k] && !g.raw[k]) subset = false;
    }
    for (std::size_t j = 0; j < res.region.d_grid.size(); ++j)
      if (res.region.rate_after[j] > res.region.rate_before[j]) subset = false;
    for (const auto& tl : res.timelines)
      for (std::size_t k = 0; k < tl.raw.size(); ++k)
        if (tl.effective[k] && !tl.raw[k]) subset = false;

    const double wb = total_width(res.region.unstable_before);
    const double wa = total_width(res.region.unstable_after);
    if (wa < wb) ++shrink;
    if (res.peak_after_m < c.r0()) ++left_peak;
    info("filter seed " + std::to_string(seed) + ": unstable width " + f(wb / c.r0(), 3) + " -> " +
         f(wa / c.r0(), 3) + " r0, after-peak at " + f(res.peak_after_m / c.r0(), 3) + " r0");
  }
  report("6a", subset, "effective receptions are a subset of raw receptions (exact)");
  report("6b", shrink >= 8, "unstable width at U_th=0.5 shrinks: " + std::to_string(shrink) + "/10 seeds (need 8)");
  report("6c", left_peak >= 8, "after-gating peak below r0: " + std::to_string(left_peak) + "/10 seeds (need 8)");
  info("filter runtime " + f(clock.seconds(), 1) + " s");
}

// 7. Gradient check gates MLP training.
void criterion_7() {
  ExperimentConfig c;
  const SampleSet set = table_set(c, Scheme::kFourClass);
  std::vector<std::size_t> probe_rows;
  for (std::size_t r = 0; r < 10; ++r) probe_rows.push_back(r * (set.size() / 10));
  const SampleSet probe = set.subset(probe_rows);
  const FeatureScaler scaler{received_rssi_bounds(set)};
  Rng rng(7);
  const MlpParams params = init_mlp(probe.feature_dim(), 16, 4, rng);
  const double err = mlp_gradient_check(params, scaler.apply(probe.features), probe.labels);

  PredictorConfig pc;
  pc.kind = PredictorKind::kMlp;
  pc.hyperparameters = {{"epochs", 2}};
  const TrainedModel m = train(pc, set);
  const double stored = std::get<MlpModel>(m.params).gradient_check_error;

  bool refused = false;
  pc.hyperparameters["grad_check_tolerance"] = 1e-300;
  try {
    train(pc, set);
  } catch (const ValidationError&) {
    refused = true;
  }
  report("7", err <= 1e-4 && stored <= 1e-4 && refused,
         "MLP gradient check on a 10-sample probe: relative error " + format_double(err) +
             ", at training " + format_double(stored) + " (tol 1e-4); training refused when the check fails: " +
             (refused ? "yes" : "no"));
}

// 8. Byte-identical reruns of every command.
void criterion_8() {
  const fs::path root = LQLAB_TEST_TMP;
  fs::remove_all(root);
  ExperimentConfig c;
  c.randomness.samples_per_point = 2000;
  c.table.samples_per_env = 60;
  c.static_sweep.samples_per_point = 1500;
  c.dynamic_sweep.samples_per_set = 1500;
  c.filter.cycles_per_d = 2000;
  c.seed = 11;
  auto run_all = [&](const fs::path& dir) {
    ExperimentConfig cc = c;
    cc.output_dir = dir.string();
    run_channel(cc);
    run_randomness(cc);
    run_table(cc);
    run_static_sweep(cc);
    run_dynamic_sweep(cc);
    run_filter_demo(cc);
    run_dataset_build(cc, Scheme::kFourClass);
    PredictorConfig pc;
    pc.kind = PredictorKind::kGbdt;
    run_model_train(cc, dir / "dataset" / "train.csv", pc);
    run_model_eval(cc, dir / "model" / "model.json", dir / "dataset" / "test.csv");
  };
  auto snapshot = [&] {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = read_file(e.path());
    return files;
  };
  run_all(root);
  const auto first = snapshot();
  run_all(root);
  const auto second = snapshot();
  std::size_t compared = 0, differing = 0;
  for (const auto& [name, text] : first) {
    ++compared;
    const auto it = second.find(name);
    if (it == second.end() || it->second != text) {
      ++differing;
      info("differs: " + name);
    }
  }
  if (second.size() != first.size()) ++differing;
  report("8", differing == 0 && compared > 20,
         "rerun of every command with identical config and seed: " + std::to_string(compared - differing) + "/" +
             std::to_string(compared) + " files byte-identical");
}

}  // namespace

int main() {
  Stopwatch total;
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  std::printf("%s acceptance: %d failing criteria, %.1f s\n", g_failures ? "FAIL" : "PASS",
              g_failures, total.seconds());
  return g_failures ? 1 : 0;
}
