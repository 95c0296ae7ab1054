#pragma once

#include <limits>
#include <memory>
#include <numeric>
#include <random>

#include "bmo/detail/parallel.hpp"
#include "bmo/models/gbt.hpp"
#include "bmo/models/knn.hpp"
#include "bmo/models/mlp.hpp"
#include "bmo/models/model.hpp"
#include "bmo/models/ridge.hpp"
#include "bmo/models/spec.hpp"

namespace bmo {

/// Fits a model described by `spec`. For classification, `n_classes` may be
/// given explicitly so that a subset missing the top label still produces
/// the full probability width; 0 infers it from the labels.
inline TrainedModel fit(const ModelSpec& spec, const Matrix& features, const Vector& targets,
                        TaskKind task, int n_classes = 0) {
  validate(spec);
  if (features.rows() != targets.size()) {
    throw DimensionError("fit: feature rows and target length differ");
  }
  if (features.rows() < 2) throw FitError("fit needs at least two samples");
  if (features.cols() < 1) throw FitError("fit needs at least one feature");
  if (!features.allFinite() || !targets.allFinite()) throw FitError("fit data has non-finite values");

  if (task == TaskKind::Classification) {
    const int inferred = detail::infer_class_count(targets);
    if (n_classes == 0) n_classes = inferred;
    if (inferred > n_classes) throw LabelRangeError("label exceeds declared class count");
    int present = 0;
    std::vector<char> seen(static_cast<std::size_t>(n_classes), 0);
    for (Index i = 0; i < targets.size(); ++i) {
      auto& s = seen[static_cast<std::size_t>(targets[i])];
      if (!s) ++present;
      s = 1;
    }
    if (n_classes < 2 || present < 2) throw FitError("classification fit needs two distinct classes");
  } else {
    n_classes = 0;
  }

  std::shared_ptr<const detail::FittedModel> impl;
  switch (spec.kind) {
    case ModelKind::Ridge:
      if (task != TaskKind::Regression) throw SpecError("ridge supports regression only");
      impl = std::make_shared<RidgeModel>(RidgeModel::fit(features, targets, spec.get_real("penalty")));
      break;
    case ModelKind::KNearestNeighbors:
      impl = std::make_shared<KnnModel>(features, targets, spec.get_int("k"), task, n_classes);
      break;
    case ModelKind::MultiLayerPerceptron: {
      MlpParams p;
      for (auto h : spec.get_int_list("hidden_layer_sizes")) p.hidden.push_back(static_cast<Index>(h));
      p.activation = parse_activation(spec.get_text("activation"));
      p.alpha = spec.get_real("alpha");
      p.learning_rate = spec.get_real("learning_rate_init");
      p.max_epochs = static_cast<int>(spec.get_int("max_epochs"));
      p.batch_size = static_cast<int>(spec.get_int("batch_size"));
      p.seed = spec.seed;
      impl = std::make_shared<MlpModel>(MlpModel::fit(features, targets, task, n_classes, p));
      break;
    }
    case ModelKind::GradientBoostedTrees: {
      GbtParams p;
      p.num_leaves = static_cast<int>(spec.get_int("num_leaves"));
      p.learning_rate = spec.get_real("learning_rate");
      p.n_estimators = static_cast<int>(spec.get_int("n_estimators"));
      p.subsample = spec.get_real("subsample");
      p.colsample_bytree = spec.get_real("colsample_bytree");
      p.min_child_samples = static_cast<int>(spec.get_int("min_child_samples"));
      p.max_depth = static_cast<int>(spec.get_int("max_depth"));
      p.reg_lambda = spec.get_real("reg_lambda");
      p.seed = spec.seed;
      impl = std::make_shared<GbtModel>(GbtModel::fit(features, targets, task, n_classes, p));
      break;
    }
  }
  return TrainedModel(std::move(impl), spec.kind, task, features.cols(), n_classes);
}

inline TrainedModel fit(const ModelSpec& spec, const Dataset& data) {
  return fit(spec, data.features, data.targets, data.task, data.n_classes);
}

/// Fold id per row. Rows are shuffled with `seed`; classification rows are
/// then grouped by class and dealt round-robin so each fold keeps the class
/// proportions.
inline std::vector<int> assign_folds(const Vector& targets, TaskKind task, int folds,
                                     std::uint64_t seed) {
  const Index n = targets.size();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  if (task == TaskKind::Classification) {
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return targets[a] < targets[b]; });
  }
  std::vector<int> fold(static_cast<std::size_t>(n));
  for (std::size_t k = 0; k < order.size(); ++k) {
    fold[static_cast<std::size_t>(order[k])] = static_cast<int>(k % static_cast<std::size_t>(folds));
  }
  return fold;
}

struct CrossValidationResult {
  ModelSpec best;
  std::size_t best_index = 0;
  std::vector<double> mean_losses;  // one per grid candidate
};

/// k-fold grid search. Candidates are evaluated concurrently; the winner is
/// the minimum of (mean out-of-fold loss, grid index), so the result does not
/// depend on scheduling.
inline CrossValidationResult cross_validate_detailed(const HyperparameterGrid& grid,
                                                     const Matrix& features, const Vector& targets,
                                                     TaskKind task, const LossKind& loss, int folds,
                                                     std::uint64_t seed, int n_classes = 0) {
  grid.check();
  require_compatible(loss, task);
  if (folds < 2) throw ConfigError("cross-validation needs at least 2 folds");
  if (features.rows() < folds) {
    throw ConfigError("cross-validation has fewer samples (" + std::to_string(features.rows()) +
                      ") than folds (" + std::to_string(folds) + ")");
  }
  if (task == TaskKind::Classification && n_classes == 0) n_classes = detail::infer_class_count(targets);

  const std::vector<int> fold_of = assign_folds(targets, task, folds, seed);
  struct FoldData {
    Matrix train_x, test_x;
    Vector train_y, test_y;
  };
  std::vector<FoldData> fold_data(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> tr, te;
    for (Index i = 0; i < features.rows(); ++i) {
      (fold_of[static_cast<std::size_t>(i)] == f ? te : tr).push_back(i);
    }
    auto& fd = fold_data[static_cast<std::size_t>(f)];
    fd.train_x = features(tr, Eigen::all);
    fd.train_y = targets(tr);
    fd.test_x = features(te, Eigen::all);
    fd.test_y = targets(te);
  }

  CrossValidationResult result;
  result.mean_losses.assign(grid.candidates.size(), 0.0);
  detail::parallel_for(grid.candidates.size(), [&](std::size_t c) {
    double sum = 0.0;
    for (const auto& fd : fold_data) {
      const TrainedModel m = fit(grid.candidates[c], fd.train_x, fd.train_y, task, n_classes);
      sum += evaluate_loss(m.predict(fd.test_x), fd.test_y, loss);
    }
    result.mean_losses[c] = sum / static_cast<double>(folds);
  });

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < result.mean_losses.size(); ++c) {
    if (result.mean_losses[c] < best) {
      best = result.mean_losses[c];
      result.best_index = c;
    }
  }
  result.best = grid.candidates[result.best_index];
  return result;
}

inline ModelSpec cross_validate(const HyperparameterGrid& grid, const Matrix& features,
                                const Vector& targets, TaskKind task, const LossKind& loss,
                                int folds, std::uint64_t seed, int n_classes = 0) {
  return cross_validate_detailed(grid, features, targets, task, loss, folds, seed, n_classes).best;
}

}  // namespace bmo
