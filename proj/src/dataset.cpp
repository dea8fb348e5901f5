#include "lqlab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lqlab/errors.hpp"

namespace lqlab {

int num_labels(Scheme scheme) {
  return scheme == Scheme::kTwoClass ? 2 : 4;
}

std::string_view to_string(Scheme scheme) {
  return scheme == Scheme::kTwoClass ? "two-class" : "four-class";
}

Scheme parse_scheme(std::string_view name) {
  if (name == "two-class") return Scheme::kTwoClass;
  if (name == "four-class") return Scheme::kFourClass;
  throw ConfigError("unknown label scheme '" + std::string(name) +
                    "' (expected two-class or four-class)");
}

Sample SampleSet::sample(std::size_t row) const {
  return Sample{features.row(static_cast<Eigen::Index>(row)).transpose(),
                labels[row], env_ids[row], distances_m[row]};
}

std::vector<std::vector<std::size_t>> SampleSet::rows_by_env() const {
  std::vector<std::vector<std::size_t>> rows(envs.size());
  for (std::size_t r = 0; r < size(); ++r)
    rows[static_cast<std::size_t>(env_ids[r])].push_back(r);
  return rows;
}

SampleSet SampleSet::subset(std::span<const std::size_t> rows) const {
  SampleSet out;
  out.scheme = scheme;
  out.window = window;
  out.envs = envs;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), features.cols());
  out.labels.reserve(rows.size());
  out.env_ids.reserve(rows.size());
  out.distances_m.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    out.features.row(static_cast<Eigen::Index>(i)) =
        features.row(static_cast<Eigen::Index>(r));
    out.labels.push_back(labels[r]);
    out.env_ids.push_back(env_ids[r]);
    out.distances_m.push_back(distances_m[r]);
  }
  return out;
}

void SampleSet::validate() const {
  const auto n = size();
  if (env_ids.size() != n || distances_m.size() != n ||
      static_cast<std::size_t>(features.rows()) != n)
    throw std::invalid_argument("sample set columns have different lengths");
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (features.cols() != feature_dim())
    throw std::invalid_argument("feature width is not 2K");
  const int m = num_labels(scheme);
  for (std::size_t r = 0; r < n; ++r) {
    if (labels[r] < 0 || labels[r] >= m)
      throw std::invalid_argument("label outside the scheme's label set");
    if (env_ids[r] < 0 || env_ids[r] >= num_envs())
      throw std::invalid_argument("sample references an unknown environment");
    for (int k = 0; k < window; ++k) {
      const double bit = features(static_cast<Eigen::Index>(r), 2 * k);
      if (bit != 0.0 && bit != 1.0)
        throw std::invalid_argument("reception bit is not 0/1");
    }
  }
}

SampleSet SampleSet::from_samples(std::span<const Sample> samples,
                                  Scheme scheme, int window,
                                  std::vector<EnvDescriptor> envs) {
  SampleSet set;
  set.scheme = scheme;
  set.window = window;
  set.envs = std::move(envs);
  set.features.resize(static_cast<Eigen::Index>(samples.size()), 2 * window);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].features.size() != 2 * window)
      throw std::invalid_argument("sample feature length is not 2K");
    set.features.row(static_cast<Eigen::Index>(i)) =
        samples[i].features.transpose();
    set.labels.push_back(samples[i].label);
    set.env_ids.push_back(samples[i].env_id);
    set.distances_m.push_back(samples[i].distance_m);
  }
  set.validate();
  return set;
}

RssiBounds received_rssi_bounds(const SampleSet& set) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (Eigen::Index r = 0; r < set.features.rows(); ++r) {
    for (int k = 0; k < set.window; ++k) {
      if (set.features(r, 2 * k) == 1.0) {
        const double v = set.features(r, 2 * k + 1);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!(lo <= hi)) return {kDefaultRssiSentinelDbm, kDefaultRssiSentinelDbm + 1.0};
  if (hi == lo) hi = lo + 1.0;
  return {lo, hi};
}

BeaconTrace generate_trace(double d_m, std::size_t n_cycles,
                           const ChannelParams& params, Rng& rng,
                           double sentinel_dbm) {
  if (n_cycles < 1) throw std::invalid_argument("n_cycles must be >= 1");
  if (!(d_m > 0.0)) throw std::domain_error("distance must be positive");
  BeaconTrace trace;
  trace.distance_m = d_m;
  trace.cycles.reserve(n_cycles);
  for (std::size_t j = 0; j < n_cycles; ++j) {
    const LinkDraw draw = draw_link(d_m, params, rng);
    trace.cycles.push_back(
        Cycle{draw.received, draw.received ? draw.rssi_dbm : sentinel_dbm});
  }
  return trace;
}

void fill_window_features(const BeaconTrace& trace, std::size_t label_cycle,
                          int window, Eigen::Ref<Eigen::VectorXd> out) {
  const std::size_t first = label_cycle - static_cast<std::size_t>(window);
  for (int k = 0; k < window; ++k) {
    const Cycle& c = trace.cycles[first + static_cast<std::size_t>(k)];
    out(2 * k) = c.received ? 1.0 : 0.0;
    out(2 * k + 1) = c.rssi_dbm;
  }
}

namespace {

template <class LabelFn>
std::vector<Sample> window_with(const BeaconTrace& trace, int window,
                                int lookahead, LabelFn label_of) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  const std::size_t need = static_cast<std::size_t>(window + lookahead);
  if (trace.cycles.size() < need)
    throw std::invalid_argument("trace too short for the requested window");
  std::vector<Sample> out;
  out.reserve(trace.cycles.size() - need + 1);
  for (std::size_t j = static_cast<std::size_t>(window);
       j + static_cast<std::size_t>(lookahead) <= trace.cycles.size(); ++j) {
    Sample s;
    s.features.resize(2 * window);
    fill_window_features(trace, j, window, s.features);
    s.label = label_of(j);
    s.distance_m = trace.distance_m;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<Sample> window_two_class(const BeaconTrace& trace, int window) {
  return window_with(trace, window, 1, [&](std::size_t j) {
    return trace.cycles[j].received ? kReceived : kLost;
  });
}

std::vector<Sample> window_four_class(const BeaconTrace& trace, int window,
                                      int horizon) {
  if (horizon < 1 || horizon > 3)
    throw std::invalid_argument("four-class horizon must be in [1, 3]");
  return window_with(trace, window, horizon, [&](std::size_t j) {
    int received = 0;
    for (int h = 0; h < horizon; ++h)
      received += trace.cycles[j + static_cast<std::size_t>(h)].received;
    return horizon - received;
  });
}

std::vector<Sample> window_trace(const BeaconTrace& trace, Scheme scheme,
                                 int window, int horizon) {
  return scheme == Scheme::kTwoClass
             ? window_two_class(trace, window)
             : window_four_class(trace, window, horizon);
}

std::size_t cycles_needed(std::size_t samples, Scheme scheme, int window,
                          int horizon) {
  const int lookahead = scheme == Scheme::kTwoClass ? 1 : horizon;
  return samples + static_cast<std::size_t>(window + lookahead - 1);
}

std::vector<EnvSpec> uniform_bins(double lo_m, double hi_m, double width_m,
                                  std::size_t count) {
  if (!(width_m > 0.0) || !(hi_m > lo_m))
    throw std::invalid_argument("bins need hi > lo and width > 0");
  const auto n = static_cast<std::size_t>(std::llround((hi_m - lo_m) / width_m));
  if (n == 0) throw std::invalid_argument("bin width exceeds the range");
  std::vector<EnvSpec> bins;
  bins.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = lo_m + static_cast<double>(i) * width_m;
    const double b = i + 1 == n ? hi_m : lo_m + static_cast<double>(i + 1) * width_m;
    bins.push_back({a, b, count});
  }
  return bins;
}

SampleSet assemble(std::span<const EnvSpec> spec, Scheme scheme, int window,
                   const ChannelParams& params, std::uint64_t seed,
                   const AssembleOptions& options) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  if (options.pairs_per_env < 1)
    throw std::invalid_argument("pairs_per_env must be >= 1");
  std::size_t total = 0;
  for (const auto& e : spec) {
    if (e.count < 1) throw std::invalid_argument("environment sample count must be >= 1");
    if (e.d_lo_m < 0.0 || e.d_hi_m < e.d_lo_m || !(e.d_hi_m > 0.0))
      throw std::invalid_argument("environment distance range is invalid");
    total += e.count;
  }

  SampleSet set;
  set.scheme = scheme;
  set.window = window;
  set.features.resize(static_cast<Eigen::Index>(total), 2 * window);
  set.labels.reserve(total);
  set.env_ids.reserve(total);
  set.distances_m.reserve(total);

  Eigen::Index row = 0;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const EnvSpec& e = spec[i];
    set.envs.push_back({e.d_lo_m, e.d_hi_m});
    Rng rng = make_stream(seed, {static_cast<std::uint64_t>(i)});
    std::uniform_real_distribution<double> where(e.d_lo_m, e.d_hi_m);
    const std::size_t pairs =
        std::min<std::size_t>(static_cast<std::size_t>(options.pairs_per_env), e.count);
    for (std::size_t p = 0; p < pairs; ++p) {
      const std::size_t share = e.count / pairs + (p < e.count % pairs ? 1 : 0);
      double d = e.d_lo_m;
      if (e.d_hi_m > e.d_lo_m) {
        do {
          d = where(rng);
        } while (!(d > 0.0));
      }
      const BeaconTrace trace =
          generate_trace(d, cycles_needed(share, scheme, window, options.horizon),
                         params, rng, options.sentinel_dbm);
      auto samples = window_trace(trace, scheme, window, options.horizon);
      for (std::size_t k = 0; k < share; ++k) {
        set.features.row(row++) = samples[k].features.transpose();
        set.labels.push_back(samples[k].label);
        set.env_ids.push_back(static_cast<int>(i));
        set.distances_m.push_back(d);
      }
    }
  }
  return set;
}

SplitResult split(const SampleSet& set, double train_fraction, Rng& rng) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  SplitResult result;
  std::vector<char> to_train(set.size(), 0);
  const auto by_env = set.rows_by_env();
  for (std::size_t i = 0; i < by_env.size(); ++i) {
    auto rows = by_env[i];
    if (rows.empty()) continue;
    if (rows.size() < 2) {
      result.warnings.push_back("environment " + std::to_string(i) +
                                " has fewer than 2 samples; assigned to train");
      for (auto r : rows) to_train[r] = 1;
      continue;
    }
    const auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(rows.size())));
    std::shuffle(rows.begin(), rows.end(), rng);
    for (std::size_t k = 0; k < n_train && k < rows.size(); ++k)
      to_train[rows[k]] = 1;
  }
  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t r = 0; r < set.size(); ++r)
    (to_train[r] ? train_rows : test_rows).push_back(r);
  result.train = set.subset(train_rows);
  result.test = set.subset(test_rows);
  return result;
}

}  // namespace lqlab
