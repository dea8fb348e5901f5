#ifndef LQLAB_FILTER_HPP
#define LQLAB_FILTER_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lqlab/channel.hpp"
#include "lqlab/dataset.hpp"
#include "lqlab/predictors.hpp"

namespace lqlab {

// Gated reception over cycles [first_cycle, n): a packet is processed only
// when the predictor forecast Received for its cycle.
struct GatedTrace {
  double distance_m = 0.0;
  std::size_t first_cycle = 0;
  std::vector<char> raw;
  std::vector<char> predicted;  // 1 = forecast Received
  std::vector<char> effective;

  double raw_rate() const;
  double effective_rate() const;
};

// Predicts the label of cycle j of a trace. Model-backed predictors only read
// cycles before j.
using CyclePredictor = std::function<int(const BeaconTrace&, std::size_t)>;

// effective[j] = raw[j] && predicted[j] == Received.
GatedTrace gate_trace(const BeaconTrace& trace, std::size_t first_cycle,
                      const CyclePredictor& predictor);
// Window predictor over the preceding K cycles. Throws std::invalid_argument
// for four-class models, a K mismatch, or traces of K cycles or fewer.
GatedTrace gate_trace(const BeaconTrace& trace, const TrainedModel& model, int window);

struct Interval {
  double lo_m = 0.0;
  double hi_m = 0.0;
  double width() const { return hi_m - lo_m; }
};

struct RegionReport {
  std::vector<double> d_grid;
  std::vector<double> rate_before;   // empirical raw reception rate
  std::vector<double> rate_after;    // empirical gated rate, same cycles
  std::vector<double> rate_analytic; // p(d)
  std::vector<double> u_before;
  std::vector<double> u_after;
  double u_threshold = 0.5;
  std::vector<Interval> unstable_before;
  std::vector<Interval> unstable_after;
};

// Distance ranges where the curve is >= threshold; crossings are placed by
// linear interpolation between grid points.
std::vector<Interval> threshold_intervals(std::span<const double> d_grid,
                                          std::span<const double> curve,
                                          double threshold);
double total_width(std::span<const Interval> intervals);

// Grid point j draws a fresh trace of cycles_per_d + K cycles from the
// stream derive_seed(seed, {j}).
RegionReport effective_rate_sweep(const TrainedModel& model,
                                  std::span<const double> d_grid,
                                  std::size_t cycles_per_d,
                                  const ChannelParams& params, std::uint64_t seed,
                                  double u_threshold = 0.5,
                                  double sentinel_dbm = kDefaultRssiSentinelDbm);
RegionReport effective_rate_sweep(const CyclePredictor& predictor, int window,
                                  std::span<const double> d_grid,
                                  std::size_t cycles_per_d,
                                  const ChannelParams& params, std::uint64_t seed,
                                  double u_threshold = 0.5,
                                  double sentinel_dbm = kDefaultRssiSentinelDbm);

enum class Curve { kBefore, kAfter, kAnalytic };

// Grid argmax of the chosen randomness curve; ties go to the smaller d.
double peak_randomness_location(const RegionReport& report, Curve which);

// n evenly spaced points over (lo, hi], the first at lo + (hi - lo) / n.
std::vector<double> half_open_grid(double lo, double hi, std::size_t n);

}  // namespace lqlab

#endif  // LQLAB_FILTER_HPP
