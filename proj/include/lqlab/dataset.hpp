#ifndef LQLAB_DATASET_HPP
#define LQLAB_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lqlab/channel.hpp"
#include "lqlab/random.hpp"

namespace lqlab {

// Two-class: Lost = 0, Received = 1 for the next cycle.
// Four-class: G = 0, MG = 1, MB = 2, B = 3 for 3/2/1/0 receptions over the
// next `horizon` cycles.
enum class Scheme { kTwoClass, kFourClass };

inline constexpr int kLost = 0;
inline constexpr int kReceived = 1;

int num_labels(Scheme scheme);
std::string_view to_string(Scheme scheme);
Scheme parse_scheme(std::string_view name);  // throws ConfigError

inline constexpr double kDefaultRssiSentinelDbm = -110.0;
inline constexpr int kDefaultWindow = 10;
inline constexpr int kDefaultHorizon = 3;

struct Cycle {
  bool received = false;
  double rssi_dbm = kDefaultRssiSentinelDbm;  // sentinel iff !received
};

struct BeaconTrace {
  double distance_m = 0.0;
  std::vector<Cycle> cycles;
};

// One labelled window. features = [bit_0, rssi_0, bit_1, rssi_1, ...] over the
// K cycles preceding the label, oldest first; RSSI in dBm (normalisation is
// owned by the trained model).
struct Sample {
  Eigen::VectorXd features;
  int label = 0;
  int env_id = 0;
  double distance_m = 0.0;
};

// Environment = distance bin [d_lo, d_hi]; d_lo == d_hi is a fixed distance.
struct EnvDescriptor {
  double d_lo_m = 0.0;
  double d_hi_m = 0.0;
  double center() const { return 0.5 * (d_lo_m + d_hi_m); }
};

struct RssiBounds {
  double min_dbm = 0.0;
  double max_dbm = 0.0;
};

// Column-oriented sample set; row r is one sample.
struct SampleSet {
  Scheme scheme = Scheme::kTwoClass;
  int window = kDefaultWindow;
  Eigen::MatrixXd features;  // size() x 2K
  std::vector<int> labels;
  std::vector<int> env_ids;
  std::vector<double> distances_m;
  std::vector<EnvDescriptor> envs;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  int feature_dim() const { return 2 * window; }
  int num_envs() const { return static_cast<int>(envs.size()); }

  Sample sample(std::size_t row) const;
  // Rows of each environment, in ascending row order.
  std::vector<std::vector<std::size_t>> rows_by_env() const;
  SampleSet subset(std::span<const std::size_t> rows) const;

  // Throws std::invalid_argument on shape mismatch, labels outside the
  // scheme, non-binary reception bits, or dangling env ids.
  void validate() const;

  static SampleSet from_samples(std::span<const Sample> samples, Scheme scheme,
                                int window, std::vector<EnvDescriptor> envs);
};

// Bounds of the received (non-sentinel) RSSI values in the set. Falls back to
// a unit interval around the sentinel when nothing was received.
RssiBounds received_rssi_bounds(const SampleSet& set);

BeaconTrace generate_trace(double d_m, std::size_t n_cycles,
                           const ChannelParams& params, Rng& rng,
                           double sentinel_dbm = kDefaultRssiSentinelDbm);

std::vector<Sample> window_two_class(const BeaconTrace& trace, int window);
std::vector<Sample> window_four_class(const BeaconTrace& trace, int window,
                                      int horizon = kDefaultHorizon);
std::vector<Sample> window_trace(const BeaconTrace& trace, Scheme scheme,
                                 int window, int horizon = kDefaultHorizon);

// Cycles one trace needs to yield `samples` windows.
std::size_t cycles_needed(std::size_t samples, Scheme scheme, int window,
                          int horizon = kDefaultHorizon);

// Window features for the K cycles before `label_cycle`.
void fill_window_features(const BeaconTrace& trace, std::size_t label_cycle,
                          int window, Eigen::Ref<Eigen::VectorXd> out);

struct EnvSpec {
  double d_lo_m = 0.0;
  double d_hi_m = 0.0;
  std::size_t count = 0;
};

// Adjacent bins of `width` covering (lo, hi), each with `count` samples.
std::vector<EnvSpec> uniform_bins(double lo_m, double hi_m, double width_m,
                                  std::size_t count);

struct AssembleOptions {
  int pairs_per_env = 4;
  int horizon = kDefaultHorizon;
  double sentinel_dbm = kDefaultRssiSentinelDbm;
};

// One environment per spec entry. Environment i draws from the stream
// derive_seed(seed, {i}); node pair j of it sits at a distance uniform in the
// bin and contributes one contiguous trace.
SampleSet assemble(std::span<const EnvSpec> spec, Scheme scheme, int window,
                   const ChannelParams& params, std::uint64_t seed,
                   const AssembleOptions& options = {});

struct SplitResult {
  SampleSet train;
  SampleSet test;
  std::vector<std::string> warnings;
};

// Stratified by environment: round(fraction * |S_i|) rows of each env go to
// train. Environments with fewer than two samples go to train whole.
SplitResult split(const SampleSet& set, double train_fraction, Rng& rng);

}  // namespace lqlab

#endif  // LQLAB_DATASET_HPP
