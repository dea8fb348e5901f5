#ifndef LQLAB_TREE_HPP
#define LQLAB_TREE_HPP

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lqlab/random.hpp"

namespace lqlab {

// Binary threshold tree. Internal nodes send x[feature] <= threshold left.
// Leaves carry either a class distribution or a single regression value.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  std::vector<double> value;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;

  template <class Row>
  const std::vector<double>& leaf(const Row& x) const {
    int n = 0;
    while (!nodes[static_cast<std::size_t>(n)].is_leaf()) {
      const TreeNode& node = nodes[static_cast<std::size_t>(n)];
      n = x(node.feature) <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(n)].value;
  }

  int depth() const;
  std::size_t leaf_count() const;
};

struct TreeGrowOptions {
  int max_depth = 8;
  double min_samples_leaf = 1.0;
  double min_samples_split = 2.0;
  int max_features = 0;  // per-node feature subsample; 0 = all features
  double lambda = 1.0;   // L2 term on regression leaf values
};

// Per-feature row orderings of a feature matrix, ascending by value (ties by
// row index). Shared by every tree grown on the same matrix.
class SortedColumns {
 public:
  explicit SortedColumns(const Eigen::MatrixXd& x);
  std::span<const int> order(Eigen::Index feature) const {
    return {order_.data() + feature * rows_, static_cast<std::size_t>(rows_)};
  }

 private:
  Eigen::Index rows_ = 0;
  std::vector<int> order_;
};

// CART with Gini impurity. `weights` are per-row multiplicities (bootstrap
// counts); rows with weight 0 are ignored. Leaves hold the weighted class
// distribution. Split ties resolve to the lowest feature, then the lowest
// threshold.
Tree grow_classification_tree(const Eigen::MatrixXd& x,
                              const SortedColumns& sorted,
                              std::span<const int> labels, int num_classes,
                              std::span<const double> weights,
                              const TreeGrowOptions& options, Rng& rng);

// Second-order regression tree: split gain G^2/(H+lambda), leaf value
// -G/(H+lambda).
Tree grow_regression_tree(const Eigen::MatrixXd& x, const SortedColumns& sorted,
                          std::span<const double> grad,
                          std::span<const double> hess,
                          const TreeGrowOptions& options, Rng& rng);

}  // namespace lqlab

#endif  // LQLAB_TREE_HPP
