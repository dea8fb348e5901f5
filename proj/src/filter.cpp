#include "lqlab/filter.hpp"

#include <numeric>
#include <stdexcept>

#include "lqlab/metrics.hpp"

namespace lqlab {

namespace {

double mean_of(const std::vector<char>& v) {
  if (v.empty()) return 0.0;
  return static_cast<double>(std::accumulate(v.begin(), v.end(), std::size_t{0})) /
         static_cast<double>(v.size());
}

GatedTrace gate_from(const BeaconTrace& trace, std::size_t first,
                     std::span<const int> labels) {
  GatedTrace g;
  g.distance_m = trace.distance_m;
  g.first_cycle = first;
  const std::size_t n = trace.cycles.size() - first;
  g.raw.resize(n);
  g.predicted.resize(n);
  g.effective.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    g.raw[k] = trace.cycles[first + k].received ? 1 : 0;
    g.predicted[k] = labels[k] == kReceived ? 1 : 0;
    g.effective[k] = g.raw[k] && g.predicted[k];
  }
  return g;
}

RegionReport finish(RegionReport report, const ChannelParams& params) {
  for (double d : report.d_grid) report.rate_analytic.push_back(delivery_rate(d, params));
  for (std::size_t j = 0; j < report.d_grid.size(); ++j) {
    report.u_before.push_back(binary_entropy(report.rate_before[j]));
    report.u_after.push_back(binary_entropy(report.rate_after[j]));
  }
  report.unstable_before =
      threshold_intervals(report.d_grid, report.u_before, report.u_threshold);
  report.unstable_after =
      threshold_intervals(report.d_grid, report.u_after, report.u_threshold);
  return report;
}

void check_grid(std::span<const double> d_grid) {
  for (double d : d_grid)
    if (!(d > 0.0)) throw std::domain_error("distance grid must be positive");
}

}  // namespace

double GatedTrace::raw_rate() const { return mean_of(raw); }
double GatedTrace::effective_rate() const { return mean_of(effective); }

GatedTrace gate_trace(const BeaconTrace& trace, std::size_t first_cycle,
                      const CyclePredictor& predictor) {
  if (trace.cycles.size() <= first_cycle)
    throw std::invalid_argument("trace has no cycles after the warm-up window");
  std::vector<int> labels;
  labels.reserve(trace.cycles.size() - first_cycle);
  for (std::size_t j = first_cycle; j < trace.cycles.size(); ++j)
    labels.push_back(predictor(trace, j));
  return gate_from(trace, first_cycle, labels);
}

GatedTrace gate_trace(const BeaconTrace& trace, const TrainedModel& model, int window) {
  if (model.scheme != Scheme::kTwoClass)
    throw std::invalid_argument("gating is defined for two-class models only");
  if (model.window != window)
    throw std::invalid_argument("gate window does not match the model's K");
  const auto k = static_cast<std::size_t>(window);
  if (trace.cycles.size() <= k)
    throw std::invalid_argument("trace must be longer than K cycles");
  Eigen::MatrixXd windows(static_cast<Eigen::Index>(trace.cycles.size() - k), 2 * window);
  Eigen::VectorXd row(2 * window);
  for (std::size_t j = k; j < trace.cycles.size(); ++j) {
    fill_window_features(trace, j, window, row);
    windows.row(static_cast<Eigen::Index>(j - k)) = row.transpose();
  }
  const auto labels = predict_batch(model, windows);
  return gate_from(trace, k, labels);
}

std::vector<Interval> threshold_intervals(std::span<const double> d_grid,
                                          std::span<const double> curve,
                                          double threshold) {
  if (d_grid.size() != curve.size())
    throw std::invalid_argument("grid and curve differ in length");
  std::vector<Interval> out;
  const std::size_t n = d_grid.size();
  auto crossing = [&](std::size_t a, std::size_t b) {
    const double t = (threshold - curve[a]) / (curve[b] - curve[a]);
    return d_grid[a] + t * (d_grid[b] - d_grid[a]);
  };
  bool inside = false;
  double start = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const bool above = curve[j] >= threshold;
    if (above && !inside) {
      start = j == 0 ? d_grid[0] : crossing(j - 1, j);
      inside = true;
    } else if (!above && inside) {
      out.push_back({start, crossing(j - 1, j)});
      inside = false;
    }
  }
  if (inside) out.push_back({start, d_grid[n - 1]});
  return out;
}

double total_width(std::span<const Interval> intervals) {
  double w = 0.0;
  for (const auto& i : intervals) w += i.width();
  return w;
}

RegionReport effective_rate_sweep(const TrainedModel& model,
                                  std::span<const double> d_grid,
                                  std::size_t cycles_per_d,
                                  const ChannelParams& params, std::uint64_t seed,
                                  double u_threshold, double sentinel_dbm) {
  check_grid(d_grid);
  if (model.scheme != Scheme::kTwoClass)
    throw std::invalid_argument("gating is defined for two-class models only");
  RegionReport report;
  report.u_threshold = u_threshold;
  report.d_grid.assign(d_grid.begin(), d_grid.end());
  const auto k = static_cast<std::size_t>(model.window);
  for (std::size_t j = 0; j < d_grid.size(); ++j) {
    Rng rng = make_stream(seed, {static_cast<std::uint64_t>(j)});
    const BeaconTrace trace =
        generate_trace(d_grid[j], cycles_per_d + k, params, rng, sentinel_dbm);
    const GatedTrace g = gate_trace(trace, model, model.window);
    report.rate_before.push_back(g.raw_rate());
    report.rate_after.push_back(g.effective_rate());
  }
  return finish(std::move(report), params);
}

RegionReport effective_rate_sweep(const CyclePredictor& predictor, int window,
                                  std::span<const double> d_grid,
                                  std::size_t cycles_per_d,
                                  const ChannelParams& params, std::uint64_t seed,
                                  double u_threshold, double sentinel_dbm) {
  check_grid(d_grid);
  RegionReport report;
  report.u_threshold = u_threshold;
  report.d_grid.assign(d_grid.begin(), d_grid.end());
  const auto k = static_cast<std::size_t>(window);
  for (std::size_t j = 0; j < d_grid.size(); ++j) {
    Rng rng = make_stream(seed, {static_cast<std::uint64_t>(j)});
    const BeaconTrace trace =
        generate_trace(d_grid[j], cycles_per_d + k, params, rng, sentinel_dbm);
    const GatedTrace g = gate_trace(trace, k, predictor);
    report.rate_before.push_back(g.raw_rate());
    report.rate_after.push_back(g.effective_rate());
  }
  return finish(std::move(report), params);
}

double peak_randomness_location(const RegionReport& report, Curve which) {
  if (report.d_grid.empty()) throw std::invalid_argument("empty distance grid");
  std::vector<double> analytic;
  const std::vector<double>* curve = &report.u_before;
  if (which == Curve::kAfter) curve = &report.u_after;
  if (which == Curve::kAnalytic) {
    for (double p : report.rate_analytic) analytic.push_back(binary_entropy(p));
    curve = &analytic;
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < curve->size(); ++j)
    if ((*curve)[j] > (*curve)[best]) best = j;
  return report.d_grid[best];
}

std::vector<double> half_open_grid(double lo, double hi, std::size_t n) {
  if (n == 0 || !(hi > lo)) throw std::invalid_argument("grid needs n >= 1 and hi > lo");
  std::vector<double> g;
  g.reserve(n);
  for (std::size_t j = 1; j <= n; ++j)
    g.push_back(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n));
  return g;
}

}  // namespace lqlab
