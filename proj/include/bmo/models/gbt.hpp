#pragma once

// Gradient-boosted regression trees.
//
// Trees grow best-first (largest gain leaf is split next) up to `num_leaves`
// leaves and `max_depth` levels. Split search is exact over the sorted values
// of each sampled feature and scores candidates with the second-order gain
//   G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda).
// Every tree sees a fresh row subsample (without replacement) and column
// subsample. Regression boosts squared error from the target mean; binary
// classification boosts a single logit; C > 2 classes boost one tree per
// class per round under a softmax.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <random>
#include <vector>

#include "bmo/models/model.hpp"

namespace bmo {

struct GbtParams {
  int num_leaves = 31;
  double learning_rate = 0.1;
  int n_estimators = 100;
  double subsample = 1.0;
  double colsample_bytree = 1.0;
  int min_child_samples = 20;
  int max_depth = 8;
  double reg_lambda = 0.0;
  std::uint64_t seed = 0;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

class RegressionTree {
 public:
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  template <class Row>
  double predict(const Row& row) const {
    int node = 0;
    while (nodes_[static_cast<std::size_t>(node)].feature >= 0) {
      const TreeNode& n = nodes_[static_cast<std::size_t>(node)];
      node = row[n.feature] <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(node)].value;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.feature < 0; }));
  }

 private:
  std::vector<TreeNode> nodes_;
};

namespace detail {

// Grows one tree on (gradient, hessian) pairs. `sorted` holds, per feature,
// all training rows ordered by feature value; only rows flagged in `in_bag`
// take part.
class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const std::vector<std::vector<Index>>& sorted, const GbtParams& p,
              double min_hessian)
      : x_(x), sorted_(sorted), p_(p), min_hessian_(min_hessian) {}

  RegressionTree grow(const Vector& grad, const Vector& hess, const std::vector<char>& in_bag,
                      const std::vector<Index>& features, Vector& gain_importance) {
    const Index n = x_.rows();
    node_of_.assign(static_cast<std::size_t>(n), -1);
    std::vector<TreeNode> nodes(1);
    std::vector<Stats> stats(1);
    std::vector<int> depth(1, 0);
    for (Index i = 0; i < n; ++i) {
      if (!in_bag[static_cast<std::size_t>(i)]) continue;
      node_of_[static_cast<std::size_t>(i)] = 0;
      stats[0].add(grad[i], hess[i]);
    }

    struct Pending {
      double gain;
      int node;
      Split split;
      bool operator<(const Pending& o) const {
        // Max-heap on gain; lower node id first on ties.
        return gain < o.gain || (gain == o.gain && node > o.node);
      }
    };
    std::priority_queue<Pending> queue;
    auto consider = [&](int node) {
      if (p_.max_depth > 0 && depth[static_cast<std::size_t>(node)] >= p_.max_depth) return;
      Split s = best_split(node, stats[static_cast<std::size_t>(node)], grad, hess, features);
      if (s.feature >= 0) queue.push({s.gain, node, s});
    };
    consider(0);

    int leaves = 1;
    while (leaves < p_.num_leaves && !queue.empty()) {
      const Pending top = queue.top();
      queue.pop();
      const int parent = top.node;
      const int left = static_cast<int>(nodes.size());
      const int right = left + 1;
      nodes.resize(nodes.size() + 2);
      stats.resize(stats.size() + 2);
      depth.push_back(depth[static_cast<std::size_t>(parent)] + 1);
      depth.push_back(depth[static_cast<std::size_t>(parent)] + 1);
      TreeNode& pn = nodes[static_cast<std::size_t>(parent)];
      pn.feature = top.split.feature;
      pn.threshold = top.split.threshold;
      pn.left = left;
      pn.right = right;
      gain_importance[top.split.feature] += top.split.gain;

      for (Index i = 0; i < n; ++i) {
        auto& owner = node_of_[static_cast<std::size_t>(i)];
        if (owner != parent) continue;
        owner = x_(i, top.split.feature) <= top.split.threshold ? left : right;
        stats[static_cast<std::size_t>(owner)].add(grad[i], hess[i]);
      }
      ++leaves;
      consider(left);
      consider(right);
    }

    for (std::size_t k = 0; k < nodes.size(); ++k) {
      if (nodes[k].feature < 0) {
        nodes[k].value = -p_.learning_rate * stats[k].g / (stats[k].h + p_.reg_lambda);
        if (!std::isfinite(nodes[k].value)) nodes[k].value = 0.0;
      }
    }
    return RegressionTree(std::move(nodes));
  }

 private:
  struct Stats {
    double g = 0.0;
    double h = 0.0;
    Index count = 0;
    void add(double gi, double hi) {
      g += gi;
      h += hi;
      ++count;
    }
  };
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
  };

  double score(double g, double h) const {
    const double d = h + p_.reg_lambda;
    return d > 0.0 ? g * g / d : 0.0;
  }

  Split best_split(int node, const Stats& total, const Vector& grad, const Vector& hess,
                   const std::vector<Index>& features) const {
    Split best;
    const Index min_child = p_.min_child_samples;
    if (total.count < 2 * min_child) return best;
    const double parent_score = score(total.g, total.h);
    for (Index f : features) {
      Stats left;
      double prev_value = 0.0;
      bool have_prev = false;
      for (Index row : sorted_[static_cast<std::size_t>(f)]) {
        if (node_of_[static_cast<std::size_t>(row)] != node) continue;
        const double v = x_(row, f);
        if (have_prev && v > prev_value && left.count >= min_child &&
            total.count - left.count >= min_child && left.h >= min_hessian_ &&
            total.h - left.h >= min_hessian_) {
          const double gain =
              score(left.g, left.h) + score(total.g - left.g, total.h - left.h) - parent_score;
          if (gain > best.gain + 1e-12) {
            best.feature = static_cast<int>(f);
            best.threshold = prev_value + 0.5 * (v - prev_value);
            best.gain = gain;
          }
        }
        left.add(grad[row], hess[row]);
        prev_value = v;
        have_prev = true;
        if (total.count - left.count < min_child) break;
      }
    }
    return best;
  }

  const Matrix& x_;
  const std::vector<std::vector<Index>>& sorted_;
  const GbtParams& p_;
  double min_hessian_;
  std::vector<int> node_of_;
};

}  // namespace detail

class GbtModel final : public detail::FittedModel {
 public:
  static GbtModel fit(const Matrix& x, const Vector& y, TaskKind task, int n_classes,
                      const GbtParams& p) {
    const Index n = x.rows();
    const Index m = x.cols();
    const Index outputs = task == TaskKind::Regression ? 1 : (n_classes == 2 ? 1 : n_classes);

    GbtModel model;
    model.task_ = task;
    model.n_classes_ = n_classes;
    model.base_ = Vector::Zero(outputs);
    model.importance_ = Vector::Zero(m);

    if (task == TaskKind::Regression) {
      model.base_[0] = y.mean();
    } else {
      Vector prior = Vector::Zero(n_classes);
      for (Index i = 0; i < n; ++i) prior[static_cast<Index>(y[i])] += 1.0;
      prior = (prior.array() + 1e-12) / static_cast<double>(n);
      if (n_classes == 2) {
        model.base_[0] = std::log(prior[1] / prior[0]);
      } else {
        model.base_ = prior.array().log();
      }
    }

    std::vector<std::vector<Index>> sorted(static_cast<std::size_t>(m));
    for (Index f = 0; f < m; ++f) {
      auto& order = sorted[static_cast<std::size_t>(f)];
      order.resize(static_cast<std::size_t>(n));
      std::iota(order.begin(), order.end(), Index{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](Index a, Index b) { return x(a, f) < x(b, f); });
    }

    std::mt19937_64 rng(p.seed);
    const double min_hessian = task == TaskKind::Regression ? 0.0 : 1e-3;
    detail::TreeBuilder builder(x, sorted, p, min_hessian);

    Matrix raw = Matrix::Zero(n, outputs);
    raw.rowwise() += model.base_.transpose();
    const auto bag_size = std::max<Index>(1, static_cast<Index>(std::floor(p.subsample * static_cast<double>(n))));
    const auto col_count = std::max<Index>(1, static_cast<Index>(std::round(p.colsample_bytree * static_cast<double>(m))));
    std::vector<Index> rows(static_cast<std::size_t>(n));
    std::vector<Index> cols(static_cast<std::size_t>(m));

    Vector grad(n), hess(n);
    for (int round = 0; round < p.n_estimators; ++round) {
      std::iota(rows.begin(), rows.end(), Index{0});
      std::shuffle(rows.begin(), rows.end(), rng);
      std::vector<char> in_bag(static_cast<std::size_t>(n), 0);
      for (Index i = 0; i < bag_size; ++i) in_bag[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])] = 1;

      std::iota(cols.begin(), cols.end(), Index{0});
      std::shuffle(cols.begin(), cols.end(), rng);
      std::vector<Index> features(cols.begin(), cols.begin() + col_count);
      std::sort(features.begin(), features.end());

      const Matrix prob = task == TaskKind::Classification ? model.link(raw) : Matrix();
      std::vector<RegressionTree> trees;
      for (Index k = 0; k < outputs; ++k) {
        for (Index i = 0; i < n; ++i) {
          if (task == TaskKind::Regression) {
            grad[i] = raw(i, 0) - y[i];
            hess[i] = 1.0;
          } else {
            const Index cls = static_cast<Index>(y[i]);
            const double pk = outputs == 1 ? prob(i, 1) : prob(i, k);
            const double target = outputs == 1 ? (cls == 1 ? 1.0 : 0.0) : (cls == k ? 1.0 : 0.0);
            grad[i] = pk - target;
            hess[i] = std::max(pk * (1.0 - pk), 1e-16);
          }
        }
        trees.push_back(builder.grow(grad, hess, in_bag, features, model.importance_));
      }
      for (Index i = 0; i < n; ++i) {
        for (Index k = 0; k < outputs; ++k) raw(i, k) += trees[static_cast<std::size_t>(k)].predict(x.row(i));
      }
      model.rounds_.push_back(std::move(trees));
    }
    return model;
  }

  Matrix predict(const Matrix& features) const override {
    Matrix raw = raw_scores(features);
    return task_ == TaskKind::Regression ? raw : link(raw);
  }

  /// Additive scores before the output link.
  Matrix raw_scores(const Matrix& features) const {
    const Index outputs = base_.size();
    Matrix raw(features.rows(), outputs);
    raw.rowwise() = base_.transpose();
    for (Index i = 0; i < features.rows(); ++i) {
      const auto row = features.row(i);
      for (const auto& trees : rounds_) {
        for (Index k = 0; k < outputs; ++k) raw(i, k) += trees[static_cast<std::size_t>(k)].predict(row);
      }
    }
    return raw;
  }

  // Total split gain per feature.
  std::optional<ImportanceVector> importances() const override { return importance_; }

  void hash_state(detail::StateHasher& h) const override {
    h.values(base_);
    for (const auto& trees : rounds_) {
      for (const auto& t : trees) {
        for (const auto& node : t.nodes()) {
          h.value(static_cast<std::int64_t>(node.feature));
          h.value(node.threshold);
          h.value(node.value);
        }
      }
    }
  }

  const std::vector<std::vector<RegressionTree>>& rounds() const { return rounds_; }

 private:
  GbtModel() = default;

  // Raw scores -> class probabilities (N x C).
  Matrix link(const Matrix& raw) const {
    Matrix prob(raw.rows(), n_classes_);
    if (raw.cols() == 1) {
      for (Index i = 0; i < raw.rows(); ++i) {
        const double p1 = 1.0 / (1.0 + std::exp(-raw(i, 0)));
        prob(i, 1) = p1;
        prob(i, 0) = 1.0 - p1;
      }
    } else {
      for (Index i = 0; i < raw.rows(); ++i) {
        const double mx = raw.row(i).maxCoeff();
        double s = 0.0;
        for (Index k = 0; k < raw.cols(); ++k) s += (prob(i, k) = std::exp(raw(i, k) - mx));
        prob.row(i) /= s;
      }
    }
    return prob;
  }

  TaskKind task_ = TaskKind::Regression;
  int n_classes_ = 0;
  Vector base_;
  Vector importance_;
  std::vector<std::vector<RegressionTree>> rounds_;
};

}  // namespace bmo
