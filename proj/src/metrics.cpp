#include "lqlab/metrics.hpp"

#include <algorithm>
#include <string>

#include "lqlab/errors.hpp"

namespace lqlab {

void MislabelMatrix::validate() const {
  const int m = num_labels(scheme);
  if (rows.rows() != m || rows.cols() != m)
    throw std::invalid_argument("mislabel matrix is not M x M");
  if ((rows.array() < 0.0).any() || (rows.array() > 1.0).any())
    throw std::invalid_argument("mislabel entry outside [0, 1]");
  const Eigen::VectorXd sums = rows.rowwise().sum();
  if (((sums.array() - 1.0).abs() > 1e-9).any())
    throw std::invalid_argument("mislabel row does not sum to 1");
}

MislabelMatrix mislabel_for_rate(double p, Scheme scheme) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::domain_error("rate outside [0, 1]");
  const double q = 1.0 - p;
  Eigen::RowVectorXd law;
  if (scheme == Scheme::kTwoClass) {
    law.resize(2);
    law << q, p;
  } else {
    law.resize(4);
    law << p * p * p, 3.0 * q * p * p, 3.0 * q * q * p, q * q * q;
  }
  const int m = num_labels(scheme);
  return MislabelMatrix{scheme, law.replicate(m, 1)};
}

MislabelMatrix analytic_mislabel(double d_m, const ChannelParams& params,
                                 Scheme scheme) {
  return mislabel_for_rate(delivery_rate(d_m, params), scheme);
}

MislabelMatrix empirical_mislabel(std::span<const int> labels, Scheme scheme) {
  if (labels.empty())
    throw std::invalid_argument("empirical mislabel matrix of an empty environment");
  const int m = num_labels(scheme);
  Eigen::RowVectorXd law = Eigen::RowVectorXd::Zero(m);
  for (int t : labels) {
    if (t < 0 || t >= m) throw std::invalid_argument("label outside the scheme");
    law(t) += 1.0;
  }
  law /= static_cast<double>(labels.size());
  return MislabelMatrix{scheme, law.replicate(m, 1)};
}

std::string_view to_string(MislabelSource source) {
  return source == MislabelSource::kAnalytic ? "analytic" : "empirical";
}

MislabelSource parse_mislabel_source(std::string_view name) {
  if (name == "analytic") return MislabelSource::kAnalytic;
  if (name == "empirical") return MislabelSource::kEmpirical;
  throw ConfigError("unknown mislabel source '" + std::string(name) + "'");
}

RandomnessReport randomness_from(const Eigen::MatrixXd& ratios,
                                 std::span<const MislabelMatrix> matrices) {
  if (static_cast<std::size_t>(ratios.rows()) != matrices.size())
    throw std::invalid_argument("one mislabel matrix per environment required");
  RandomnessReport report;
  for (Eigen::Index i = 0; i < ratios.rows(); ++i) {
    const MislabelMatrix& mm = matrices[static_cast<std::size_t>(i)];
    mm.validate();
    if (mm.rows.cols() != ratios.cols())
      throw std::invalid_argument("ratio width does not match the label count");
    EnvRandomness env;
    env.env_id = static_cast<int>(i);
    env.ratio = ratios.row(i).transpose();
    env.u.resize(ratios.cols());
    env.hit = mm.rows.diagonal();
    for (Eigen::Index t = 0; t < ratios.cols(); ++t) {
      env.u(t) = label_entropy(mm.rows.row(t));
      report.u += env.u(t) * env.ratio(t);
      report.a += env.ratio(t) * mm.rows(t, t);
    }
    report.majority += env.ratio.maxCoeff();
    report.per_env.push_back(std::move(env));
  }
  report.acc_max = std::max(report.a, report.majority);
  return report;
}

RandomnessReport set_randomness(const SampleSet& set, MislabelSource source,
                                const ChannelParams& params) {
  if (set.empty()) throw std::invalid_argument("randomness of an empty sample set");
  const int m = num_labels(set.scheme);
  const double n = static_cast<double>(set.size());
  const auto by_env = set.rows_by_env();

  std::vector<int> env_ids;
  std::vector<MislabelMatrix> matrices;
  std::vector<Eigen::RowVectorXd> ratio_rows;
  for (std::size_t i = 0; i < by_env.size(); ++i) {
    const auto& rows = by_env[i];
    if (rows.empty()) continue;
    std::vector<int> labels;
    labels.reserve(rows.size());
    Eigen::RowVectorXd ratio = Eigen::RowVectorXd::Zero(m);
    for (auto r : rows) {
      labels.push_back(set.labels[r]);
      ratio(set.labels[r]) += 1.0;
    }
    ratio /= n;
    if (source == MislabelSource::kEmpirical) {
      matrices.push_back(empirical_mislabel(labels, set.scheme));
    } else {
      MislabelMatrix mean{set.scheme, Eigen::MatrixXd::Zero(m, m)};
      for (auto r : rows)
        mean.rows += analytic_mislabel(set.distances_m[r], params, set.scheme).rows;
      mean.rows /= static_cast<double>(rows.size());
      matrices.push_back(std::move(mean));
    }
    ratio_rows.push_back(std::move(ratio));
    env_ids.push_back(static_cast<int>(i));
  }

  Eigen::MatrixXd ratios(static_cast<Eigen::Index>(ratio_rows.size()), m);
  for (std::size_t k = 0; k < ratio_rows.size(); ++k)
    ratios.row(static_cast<Eigen::Index>(k)) = ratio_rows[k];
  RandomnessReport report = randomness_from(ratios, matrices);
  for (std::size_t k = 0; k < env_ids.size(); ++k)
    report.per_env[k].env_id = env_ids[k];
  return report;
}

PredictionReport predictor_randomness(std::span<const int> truth,
                                      std::span<const int> predicted,
                                      int num_labels) {
  if (truth.size() != predicted.size())
    throw std::invalid_argument("label sequences differ in length");
  if (truth.empty()) throw std::invalid_argument("no labels to score");
  PredictionReport report;
  report.confusion = Eigen::MatrixXi::Zero(num_labels, num_labels);
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (truth[k] < 0 || truth[k] >= num_labels || predicted[k] < 0 ||
        predicted[k] >= num_labels)
      throw std::invalid_argument("label outside the scheme");
    report.confusion(truth[k], predicted[k]) += 1;
  }
  const double n = static_cast<double>(truth.size());
  report.acc = report.confusion.trace() / n;
  const Eigen::VectorXd emitted = report.confusion.colwise().sum().transpose().cast<double>();
  report.r_p = emitted / n;
  for (int t = 0; t < num_labels; ++t) {
    if (emitted(t) == 0.0) continue;
    const Eigen::VectorXd given_t = report.confusion.col(t).cast<double>() / emitted(t);
    report.u_p += report.r_p(t) * label_entropy(given_t);
  }
  return report;
}

}  // namespace lqlab
