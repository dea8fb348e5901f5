#ifndef LQLAB_DATASET_IO_HPP
#define LQLAB_DATASET_IO_HPP

#include <cstdint>
#include <filesystem>

#include "lqlab/channel.hpp"
#include "lqlab/dataset.hpp"

namespace lqlab {

// Sidecar metadata stored next to a dataset CSV as <stem>.meta.json.
struct DatasetMeta {
  ChannelParams params;
  int horizon = kDefaultHorizon;
  std::uint64_t seed = 0;
  double sentinel_dbm = kDefaultRssiSentinelDbm;
  RssiBounds bounds;  // received-RSSI range of the set
};

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path);

// CSV header: env_id,distance_m,label,f_0,...,f_{2K-1}. Scheme, K and the
// environment table live in the sidecar.
void write_dataset(const std::filesystem::path& csv_path, const SampleSet& set,
                   const DatasetMeta& meta);

struct LoadedDataset {
  SampleSet set;
  DatasetMeta meta;
};

// Throws IoError on missing files, malformed rows, or a header that does not
// match the sidecar's K.
LoadedDataset read_dataset(const std::filesystem::path& csv_path);

}  // namespace lqlab

#endif  // LQLAB_DATASET_IO_HPP
