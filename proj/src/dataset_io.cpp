#include "lqlab/dataset_io.hpp"

#include <sstream>
#include <string>

#include "json.hpp"
#include "lqlab/errors.hpp"
#include "lqlab/io.hpp"

namespace lqlab {

using nlohmann::json;

std::filesystem::path meta_path_for(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

void write_dataset(const std::filesystem::path& csv_path, const SampleSet& set,
                   const DatasetMeta& meta) {
  set.validate();
  std::string out = "env_id,distance_m,label";
  for (int f = 0; f < set.feature_dim(); ++f) out += ",f_" + std::to_string(f);
  out += '\n';
  for (std::size_t r = 0; r < set.size(); ++r) {
    out += std::to_string(set.env_ids[r]);
    out += ',' + format_double(set.distances_m[r]);
    out += ',' + std::to_string(set.labels[r]);
    for (int f = 0; f < set.feature_dim(); ++f)
      out += ',' + format_double(set.features(static_cast<Eigen::Index>(r), f));
    out += '\n';
  }

  json envs = json::array();
  for (const auto& e : set.envs) envs.push_back({{"d_lo_m", e.d_lo_m}, {"d_hi_m", e.d_hi_m}});
  const json sidecar = {
      {"format", "lqlab-dataset"},
      {"version", 1},
      {"scheme", to_string(set.scheme)},
      {"K", set.window},
      {"horizon", meta.horizon},
      {"seed", meta.seed},
      {"rssi_sentinel_dbm", meta.sentinel_dbm},
      {"normalization", {{"rssi_min_dbm", meta.bounds.min_dbm},
                         {"rssi_max_dbm", meta.bounds.max_dbm}}},
      {"channel", {{"alpha", meta.params.alpha},
                   {"sigma", meta.params.sigma},
                   {"pt_dbm", meta.params.pt_dbm},
                   {"beta_th_db", meta.params.beta_th_db},
                   {"r0_m", r_zero(meta.params)}}},
      {"samples", set.size()},
      {"environments", envs},
  };
  write_file_atomic(csv_path, out);
  write_file_atomic(meta_path_for(csv_path), sidecar.dump(1) + "\n");
}

LoadedDataset read_dataset(const std::filesystem::path& csv_path) {
  LoadedDataset loaded;
  SampleSet& set = loaded.set;
  try {
    const json j = json::parse(read_file(meta_path_for(csv_path)));
    if (j.at("format").get<std::string>() != "lqlab-dataset" || j.at("version").get<int>() != 1)
      throw IoError("unsupported dataset sidecar in " + meta_path_for(csv_path).string());
    set.scheme = parse_scheme(j.at("scheme").get<std::string>());
    set.window = j.at("K").get<int>();
    loaded.meta.horizon = j.at("horizon").get<int>();
    loaded.meta.seed = j.at("seed").get<std::uint64_t>();
    loaded.meta.sentinel_dbm = j.at("rssi_sentinel_dbm").get<double>();
    loaded.meta.bounds = {j.at("normalization").at("rssi_min_dbm").get<double>(),
                          j.at("normalization").at("rssi_max_dbm").get<double>()};
    const json& c = j.at("channel");
    loaded.meta.params = {c.at("alpha").get<double>(), c.at("sigma").get<double>(),
                          c.at("pt_dbm").get<double>(), c.at("beta_th_db").get<double>()};
    for (const auto& e : j.at("environments"))
      set.envs.push_back({e.at("d_lo_m").get<double>(), e.at("d_hi_m").get<double>()});
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed dataset sidecar: ") + e.what());
  } catch (const ConfigError& e) {
    throw IoError(std::string("dataset sidecar: ") + e.what());
  }

  std::istringstream in(read_file(csv_path));
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty dataset file " + csv_path.string());
  const auto header = split_csv_line(line);
  const std::size_t width = 3 + static_cast<std::size_t>(set.feature_dim());
  if (header.size() != width || header[0] != "env_id" || header[1] != "distance_m" ||
      header[2] != "label" || header[3] != "f_0")
    throw IoError("dataset header does not match K from the sidecar");

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != width) throw IoError("dataset row has the wrong number of fields");
    set.env_ids.push_back(static_cast<int>(parse_double(cells[0])));
    set.distances_m.push_back(parse_double(cells[1]));
    set.labels.push_back(static_cast<int>(parse_double(cells[2])));
    std::vector<double> f;
    f.reserve(width - 3);
    for (std::size_t k = 3; k < width; ++k) f.push_back(parse_double(cells[k]));
    rows.push_back(std::move(f));
  }
  set.features.resize(static_cast<Eigen::Index>(rows.size()), set.feature_dim());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int k = 0; k < set.feature_dim(); ++k)
      set.features(static_cast<Eigen::Index>(r), k) = rows[r][static_cast<std::size_t>(k)];
  try {
    set.validate();
  } catch (const std::invalid_argument& e) {
    throw IoError(std::string("invalid dataset: ") + e.what());
  }
  return loaded;
}

}  // namespace lqlab
