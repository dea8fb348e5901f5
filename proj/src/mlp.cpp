#include "lqlab/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace lqlab {

namespace {

Eigen::MatrixXd logistic(const Eigen::MatrixXd& z) {
  return (1.0 + (-z.array()).exp()).inverse().matrix();
}

// Row-wise softmax, stabilised by the row maximum.
Eigen::MatrixXd softmax_rows(Eigen::MatrixXd z) {
  const Eigen::VectorXd m = z.rowwise().maxCoeff();
  z.colwise() -= m;
  z = z.array().exp().matrix();
  const Eigen::VectorXd s = z.rowwise().sum();
  return s.asDiagonal().inverse() * z;
}

}  // namespace

Eigen::VectorXd MlpParams::flatten() const {
  Eigen::VectorXd flat(parameter_count());
  Eigen::Index o = 0;
  auto put = [&](const auto& m) {
    flat.segment(o, m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
    o += m.size();
  };
  put(w1);
  put(b1);
  put(w2);
  put(b2);
  return flat;
}

void MlpParams::unflatten(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count())
    throw std::invalid_argument("flat parameter vector has the wrong length");
  Eigen::Index o = 0;
  auto take = [&](auto& m) {
    Eigen::Map<Eigen::VectorXd>(m.data(), m.size()) = flat.segment(o, m.size());
    o += m.size();
  };
  take(w1);
  take(b1);
  take(w2);
  take(b2);
}

MlpParams init_mlp(Eigen::Index inputs, Eigen::Index hidden,
                   Eigen::Index outputs, Rng& rng) {
  auto glorot = [&](Eigen::Index rows, Eigen::Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = u(rng);
    return w;
  };
  MlpParams p;
  p.w1 = glorot(hidden, inputs);
  p.b1 = Eigen::VectorXd::Zero(hidden);
  p.w2 = glorot(outputs, hidden);
  p.b2 = Eigen::VectorXd::Zero(outputs);
  return p;
}

Eigen::MatrixXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x) {
  Eigen::MatrixXd a1 = x * params.w1.transpose();
  a1.rowwise() += params.b1.transpose();
  const Eigen::MatrixXd h = logistic(a1);
  Eigen::MatrixXd z = h * params.w2.transpose();
  z.rowwise() += params.b2.transpose();
  return softmax_rows(std::move(z));
}

double mlp_loss(const MlpParams& params, const Eigen::MatrixXd& x,
                std::span<const int> labels, MlpParams* grad) {
  const Eigen::Index n = x.rows();
  if (static_cast<std::size_t>(n) != labels.size() || n == 0)
    throw std::invalid_argument("mlp_loss needs one label per non-empty row");
  Eigen::MatrixXd a1 = x * params.w1.transpose();
  a1.rowwise() += params.b1.transpose();
  const Eigen::MatrixXd h = logistic(a1);
  Eigen::MatrixXd z = h * params.w2.transpose();
  z.rowwise() += params.b2.transpose();
  Eigen::MatrixXd prob = softmax_rows(std::move(z));

  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    loss -= std::log(std::max(prob(i, labels[static_cast<std::size_t>(i)]), 1e-300));
  loss /= static_cast<double>(n);

  if (grad != nullptr) {
    Eigen::MatrixXd dz = std::move(prob);  // d loss / d logits, times n
    for (Eigen::Index i = 0; i < n; ++i) dz(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    dz /= static_cast<double>(n);
    grad->w2 = dz.transpose() * h;
    grad->b2 = dz.colwise().sum().transpose();
    const Eigen::MatrixXd dh = dz * params.w2;
    const Eigen::MatrixXd da1 = (dh.array() * h.array() * (1.0 - h.array())).matrix();
    grad->w1 = da1.transpose() * x;
    grad->b1 = da1.colwise().sum().transpose();
  }
  return loss;
}

double mlp_gradient_check(const MlpParams& params, const Eigen::MatrixXd& x,
                          std::span<const int> labels, double step) {
  MlpParams analytic = params;
  mlp_loss(params, x, labels, &analytic);
  const Eigen::VectorXd g = analytic.flatten();

  const Eigen::VectorXd theta = params.flatten();
  Eigen::VectorXd numeric(theta.size());
  MlpParams probe = params;
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    Eigen::VectorXd t = theta;
    t(k) = theta(k) + step;
    probe.unflatten(t);
    const double up = mlp_loss(probe, x, labels);
    t(k) = theta(k) - step;
    probe.unflatten(t);
    const double down = mlp_loss(probe, x, labels);
    numeric(k) = (up - down) / (2.0 * step);
  }
  const double denom = g.norm() + numeric.norm();
  return denom == 0.0 ? 0.0 : (g - numeric).norm() / denom;
}

void mlp_train(MlpParams& params, const Eigen::MatrixXd& x,
               std::span<const int> labels, const MlpTrainOptions& options,
               Rng& rng) {
  const Eigen::Index n = x.rows();
  if (static_cast<std::size_t>(n) != labels.size())
    throw std::invalid_argument("mlp_train needs one label per row");
  if (options.batch_size < 1 || options.epochs < 0)
    throw std::invalid_argument("invalid mlp training options");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  const auto batch = static_cast<Eigen::Index>(options.batch_size);
  Eigen::MatrixXd xb;
  std::vector<int> yb;
  MlpParams grad = params;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (Eigen::Index start = 0; start < n; start += batch) {
      const Eigen::Index len = std::min(batch, n - start);
      xb.resize(len, x.cols());
      yb.resize(static_cast<std::size_t>(len));
      for (Eigen::Index i = 0; i < len; ++i) {
        const auto r = order[static_cast<std::size_t>(start + i)];
        xb.row(i) = x.row(r);
        yb[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(r)];
      }
      mlp_loss(params, xb, yb, &grad);
      params.w1 -= options.learning_rate * grad.w1;
      params.b1 -= options.learning_rate * grad.b1;
      params.w2 -= options.learning_rate * grad.w2;
      params.b2 -= options.learning_rate * grad.b2;
    }
  }
}

}  // namespace lqlab
