#ifndef LQLAB_METRICS_HPP
#define LQLAB_METRICS_HPP

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "lqlab/channel.hpp"
#include "lqlab/dataset.hpp"

namespace lqlab {

// Shannon entropy in bits of a probability row, with 0 log 0 = 0.
template <class Derived>
typename Derived::Scalar label_entropy(const Eigen::DenseBase<Derived>& row) {
  using Scalar = typename Derived::Scalar;
  Scalar h(0);
  for (Eigen::Index k = 0; k < row.size(); ++k) {
    const Scalar p = row.derived().coeff(k);
    if (p < Scalar(0)) throw std::invalid_argument("negative probability in entropy row");
    if (p > Scalar(0)) h -= p * std::log2(p);
  }
  return h;
}

template <class Scalar>
Scalar binary_entropy(Scalar p) {
  return label_entropy(Eigen::Matrix<Scalar, 2, 1>(Scalar(1) - p, p));
}

// p_tu: probability that a sample whose nominal label is t carries label u.
struct MislabelMatrix {
  Scheme scheme = Scheme::kTwoClass;
  Eigen::MatrixXd rows;

  // Rows sum to 1 within 1e-9, entries in [0, 1]. Throws std::invalid_argument.
  void validate() const;
};

// Every row equals the label law at delivery rate p: (1-p, p) or
// Binomial(3, p) over (G, MG, MB, B).
MislabelMatrix mislabel_for_rate(double p, Scheme scheme);
MislabelMatrix analytic_mislabel(double d_m, const ChannelParams& params,
                                 Scheme scheme);
// Every row equals the label marginal of the given environment's samples.
MislabelMatrix empirical_mislabel(std::span<const int> labels, Scheme scheme);

enum class MislabelSource { kAnalytic, kEmpirical };
std::string_view to_string(MislabelSource source);
MislabelSource parse_mislabel_source(std::string_view name);

struct EnvRandomness {
  int env_id = 0;
  Eigen::VectorXd u;      // U_i(t)
  Eigen::VectorXd ratio;  // R_i(t), relative to the whole set
  Eigen::VectorXd hit;    // p_tt
};

struct RandomnessReport {
  double u = 0.0;        // U(S), bits
  double a = 0.0;        // A(S)
  double acc_max = 0.0;  // max(A(S), sum_i max_t R_i(t))
  double majority = 0.0; // sum_i max_t R_i(t)
  std::vector<EnvRandomness> per_env;
};

// ratios(i, t) = R_i(t); one mislabel matrix per row of `ratios`.
RandomnessReport randomness_from(const Eigen::MatrixXd& ratios,
                                 std::span<const MislabelMatrix> matrices);

// Environments without samples contribute nothing and are omitted from
// per_env. The analytic source averages the per-sample analytic matrices of
// an environment (exact for fixed-distance environments).
RandomnessReport set_randomness(const SampleSet& set, MislabelSource source,
                                const ChannelParams& params);

struct PredictionReport {
  Eigen::MatrixXi confusion;  // (true, predicted) counts
  double acc = 0.0;
  double u_p = 0.0;
  Eigen::VectorXd r_p;        // R_p(t), share of outputs equal to t
  double acc_max = std::numeric_limits<double>::quiet_NaN();
  double u_set = std::numeric_limits<double>::quiet_NaN();  // U of the test set
};

// U_p = sum_t R_p(t) * H(p'_t.), with p'_tu = P(true = u | predicted = t).
PredictionReport predictor_randomness(std::span<const int> truth,
                                      std::span<const int> predicted,
                                      int num_labels);

}  // namespace lqlab

#endif  // LQLAB_METRICS_HPP
