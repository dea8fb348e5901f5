#ifndef LQLAB_MLP_HPP
#define LQLAB_MLP_HPP

#include <span>

#include <Eigen/Dense>

#include "lqlab/random.hpp"

namespace lqlab {

// One hidden layer of logistic units, softmax output, mean cross-entropy.
struct MlpParams {
  Eigen::MatrixXd w1;  // hidden x inputs
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // outputs x hidden
  Eigen::VectorXd b2;

  Eigen::Index inputs() const { return w1.cols(); }
  Eigen::Index hidden() const { return w1.rows(); }
  Eigen::Index outputs() const { return w2.rows(); }
  Eigen::Index parameter_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size();
  }

  // Flat view order: w1 (column-major), b1, w2, b2.
  Eigen::VectorXd flatten() const;
  void unflatten(const Eigen::VectorXd& flat);
};

// Glorot-uniform weights, zero biases.
MlpParams init_mlp(Eigen::Index inputs, Eigen::Index hidden,
                   Eigen::Index outputs, Rng& rng);

// Class probabilities, one row per row of x.
Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x);

// Mean cross-entropy over the rows of x; fills `grad` (same shapes as params)
// by backpropagation when non-null.
double mlp_loss(const MlpParams& params, const Eigen::MatrixXd& x,
                std::span<const int> labels, MlpParams* grad = nullptr);

// ||g_backprop - g_central|| / (||g_backprop|| + ||g_central||).
double mlp_gradient_check(const MlpParams& params, const Eigen::MatrixXd& x,
                          std::span<const int> labels, double step = 1e-5);

struct MlpTrainOptions {
  int epochs = 200;
  double learning_rate = 0.05;
  int batch_size = 32;
};

// Mini-batch gradient descent, rows reshuffled every epoch.
void mlp_train(MlpParams& params, const Eigen::MatrixXd& x,
               std::span<const int> labels, const MlpTrainOptions& options,
               Rng& rng);

}  // namespace lqlab

#endif  // LQLAB_MLP_HPP
