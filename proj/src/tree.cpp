#include "lqlab/tree.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <stdexcept>

namespace lqlab {

namespace {

constexpr double kMinGain = 1e-12;
constexpr int kMaxClasses = 4;

struct ClassStats {
  std::array<double, kMaxClasses> count{};
  double weight = 0.0;
};

struct ClassCriterion {
  std::span<const int> labels;
  std::span<const double> weights;
  int num_classes;

  using Stats = ClassStats;
  double row_weight(int r) const { return weights[static_cast<std::size_t>(r)]; }
  void add(Stats& s, int r) const {
    const double w = weights[static_cast<std::size_t>(r)];
    s.count[static_cast<std::size_t>(labels[static_cast<std::size_t>(r)])] += w;
    s.weight += w;
  }
  Stats minus(const Stats& a, const Stats& b) const {
    Stats d;
    for (int k = 0; k < num_classes; ++k)
      d.count[static_cast<std::size_t>(k)] =
          a.count[static_cast<std::size_t>(k)] - b.count[static_cast<std::size_t>(k)];
    d.weight = a.weight - b.weight;
    return d;
  }
  double weight(const Stats& s) const { return s.weight; }
  // Weighted Gini impurity is w - sum c^2 / w, so minimising the children's
  // impurity maximises the sum of this score.
  double score(const Stats& s) const {
    if (s.weight <= 0.0) return 0.0;
    double sq = 0.0;
    for (int k = 0; k < num_classes; ++k)
      sq += s.count[static_cast<std::size_t>(k)] * s.count[static_cast<std::size_t>(k)];
    return sq / s.weight;
  }
  std::vector<double> leaf_value(const Stats& s) const {
    std::vector<double> v(static_cast<std::size_t>(num_classes), 0.0);
    for (int k = 0; k < num_classes; ++k)
      v[static_cast<std::size_t>(k)] =
          s.weight > 0.0 ? s.count[static_cast<std::size_t>(k)] / s.weight : 0.0;
    return v;
  }
};

struct GradStats {
  double g = 0.0;
  double h = 0.0;
  double weight = 0.0;
};

struct GradCriterion {
  std::span<const double> grad;
  std::span<const double> hess;
  double lambda;

  using Stats = GradStats;
  double row_weight(int) const { return 1.0; }
  void add(Stats& s, int r) const {
    s.g += grad[static_cast<std::size_t>(r)];
    s.h += hess[static_cast<std::size_t>(r)];
    s.weight += 1.0;
  }
  Stats minus(const Stats& a, const Stats& b) const {
    return {a.g - b.g, a.h - b.h, a.weight - b.weight};
  }
  double weight(const Stats& s) const { return s.weight; }
  double score(const Stats& s) const { return s.g * s.g / (s.h + lambda); }
  std::vector<double> leaf_value(const Stats& s) const {
    return {-s.g / (s.h + lambda)};
  }
};

// Level-wise growth: every level makes one pass per feature over the
// presorted rows, evaluating candidate thresholds for all open nodes at once.
template <class Criterion>
Tree grow(const Eigen::MatrixXd& x, const SortedColumns& sorted,
          const Criterion& crit, const TreeGrowOptions& opt, Rng& rng) {
  using Stats = typename Criterion::Stats;
  const auto n_rows = static_cast<int>(x.rows());
  const auto n_feat = static_cast<int>(x.cols());

  Tree tree;
  std::vector<Stats> stats;
  std::vector<int> node_of(static_cast<std::size_t>(n_rows), -1);

  Stats root{};
  for (int r = 0; r < n_rows; ++r) {
    if (crit.row_weight(r) > 0.0) {
      node_of[static_cast<std::size_t>(r)] = 0;
      crit.add(root, r);
    }
  }
  tree.nodes.emplace_back();
  stats.push_back(root);

  std::vector<int> level{0};
  const int subsample =
      opt.max_features > 0 ? std::min(opt.max_features, n_feat) : n_feat;
  std::vector<int> feature_pool(static_cast<std::size_t>(n_feat));

  for (int depth = 0; depth < opt.max_depth && !level.empty(); ++depth) {
    // Open nodes on this level and their slot index.
    std::vector<int> slot(tree.nodes.size(), -1);
    std::vector<int> open;
    for (int id : level) {
      const Stats& s = stats[static_cast<std::size_t>(id)];
      if (crit.weight(s) >= opt.min_samples_split &&
          crit.weight(s) >= 2.0 * opt.min_samples_leaf) {
        slot[static_cast<std::size_t>(id)] = static_cast<int>(open.size());
        open.push_back(id);
      }
    }
    if (open.empty()) break;

    // uses[slot * n_feat + f]: feature f is a split candidate for the node.
    std::vector<char> uses(open.size() * static_cast<std::size_t>(n_feat),
                           subsample == n_feat ? 1 : 0);
    if (subsample < n_feat) {
      for (std::size_t s = 0; s < open.size(); ++s) {
        std::iota(feature_pool.begin(), feature_pool.end(), 0);
        for (int k = 0; k < subsample; ++k) {
          std::uniform_int_distribution<int> pick(k, n_feat - 1);
          std::swap(feature_pool[static_cast<std::size_t>(k)],
                    feature_pool[static_cast<std::size_t>(pick(rng))]);
          uses[s * static_cast<std::size_t>(n_feat) +
               static_cast<std::size_t>(feature_pool[static_cast<std::size_t>(k)])] = 1;
        }
      }
    }

    std::vector<double> best_gain(open.size(), kMinGain);
    std::vector<int> best_feature(open.size(), -1);
    std::vector<double> best_threshold(open.size(), 0.0);
    std::vector<double> parent_score(open.size());
    for (std::size_t s = 0; s < open.size(); ++s)
      parent_score[s] = crit.score(stats[static_cast<std::size_t>(open[s])]);

    std::vector<Stats> left(open.size());
    std::vector<double> last(open.size());
    std::vector<char> seen(open.size());
    for (int f = 0; f < n_feat; ++f) {
      std::fill(left.begin(), left.end(), Stats{});
      std::fill(seen.begin(), seen.end(), 0);
      for (int r : sorted.order(f)) {
        const int id = node_of[static_cast<std::size_t>(r)];
        if (id < 0) continue;
        const int s = slot[static_cast<std::size_t>(id)];
        if (s < 0) continue;
        const auto su = static_cast<std::size_t>(s);
        if (!uses[su * static_cast<std::size_t>(n_feat) + static_cast<std::size_t>(f)]) continue;
        const double v = x(r, f);
        if (seen[su] && v > last[su]) {
          const Stats right = crit.minus(stats[static_cast<std::size_t>(id)], left[su]);
          if (crit.weight(left[su]) >= opt.min_samples_leaf &&
              crit.weight(right) >= opt.min_samples_leaf) {
            const double gain =
                crit.score(left[su]) + crit.score(right) - parent_score[su];
            if (gain > best_gain[su]) {
              best_gain[su] = gain;
              best_feature[su] = f;
              double thr = last[su] + 0.5 * (v - last[su]);
              if (!(thr < v)) thr = last[su];
              best_threshold[su] = thr;
            }
          }
        }
        crit.add(left[su], r);
        last[su] = v;
        seen[su] = 1;
      }
    }

    // Materialise children.
    std::vector<int> next;
    for (std::size_t s = 0; s < open.size(); ++s) {
      if (best_feature[s] < 0) continue;
      const int id = open[s];
      const int l = static_cast<int>(tree.nodes.size());
      tree.nodes.emplace_back();
      tree.nodes.emplace_back();
      stats.emplace_back();
      stats.emplace_back();
      TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
      node.feature = best_feature[s];
      node.threshold = best_threshold[s];
      node.left = l;
      node.right = l + 1;
      next.push_back(l);
      next.push_back(l + 1);
    }
    if (next.empty()) break;
    for (int r = 0; r < n_rows; ++r) {
      const int id = node_of[static_cast<std::size_t>(r)];
      if (id < 0) continue;
      const TreeNode& node = tree.nodes[static_cast<std::size_t>(id)];
      if (node.is_leaf()) continue;
      const int child = x(r, node.feature) <= node.threshold ? node.left : node.right;
      node_of[static_cast<std::size_t>(r)] = child;
      crit.add(stats[static_cast<std::size_t>(child)], r);
    }
    level = std::move(next);
  }

  for (std::size_t id = 0; id < tree.nodes.size(); ++id)
    if (tree.nodes[id].is_leaf()) tree.nodes[id].value = crit.leaf_value(stats[id]);
  return tree;
}

}  // namespace

int Tree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
    d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    deepest = std::max(deepest, d[i] + 1);
  }
  return deepest;
}

std::size_t Tree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

SortedColumns::SortedColumns(const Eigen::MatrixXd& x)
    : rows_(x.rows()), order_(static_cast<std::size_t>(x.rows() * x.cols())) {
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    auto first = order_.begin() + f * rows_;
    std::iota(first, first + rows_, 0);
    std::stable_sort(first, first + rows_,
                     [&](int a, int b) { return x(a, f) < x(b, f); });
  }
}

Tree grow_classification_tree(const Eigen::MatrixXd& x,
                              const SortedColumns& sorted,
                              std::span<const int> labels, int num_classes,
                              std::span<const double> weights,
                              const TreeGrowOptions& options, Rng& rng) {
  if (num_classes < 1 || num_classes > kMaxClasses)
    throw std::invalid_argument("classification tree supports 1..4 classes");
  if (labels.size() != static_cast<std::size_t>(x.rows()) ||
      weights.size() != labels.size())
    throw std::invalid_argument("labels/weights do not match the feature rows");
  return grow(x, sorted, ClassCriterion{labels, weights, num_classes}, options, rng);
}

Tree grow_regression_tree(const Eigen::MatrixXd& x, const SortedColumns& sorted,
                          std::span<const double> grad,
                          std::span<const double> hess,
                          const TreeGrowOptions& options, Rng& rng) {
  if (grad.size() != static_cast<std::size_t>(x.rows()) || hess.size() != grad.size())
    throw std::invalid_argument("gradients do not match the feature rows");
  return grow(x, sorted, GradCriterion{grad, hess, options.lambda}, options, rng);
}

}  // namespace lqlab
