#pragma once

// Comparison methods: two filters (absolute Pearson correlation and
// histogram mutual information) ranked by select_top_k, and recursive
// feature elimination driven by a model's intrinsic importances.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "bmo/core.hpp"
#include "bmo/detail/parallel.hpp"
#include "bmo/models/fit.hpp"

namespace bmo {

enum class ScoreMethod { CrossCorrelation, MutualInformation };

struct ScoreVector {
  Vector scores;
  ScoreMethod method = ScoreMethod::CrossCorrelation;
};

/// |Pearson r| between each feature and the target. Constant features score
/// 0; a constant target is an error.
inline ScoreVector pearson_scores(const Matrix& features, const Vector& targets) {
  const Index n = features.rows();
  if (n < 2) throw ScoringError("correlation needs at least two samples");
  if (targets.size() != n) throw DimensionError("feature rows and target length differ");
  const Vector yc = targets.array() - targets.mean();
  const double syy = yc.squaredNorm();
  if (!(syy > 0.0)) throw ScoringError("target has zero variance");

  ScoreVector out{Vector::Zero(features.cols()), ScoreMethod::CrossCorrelation};
  for (Index j = 0; j < features.cols(); ++j) {
    const Vector xc = features.col(j).array() - features.col(j).mean();
    const double sxx = xc.squaredNorm();
    if (!(sxx > 0.0)) continue;
    const double r = xc.dot(yc) / std::sqrt(sxx * syy);
    out.scores[j] = std::min(1.0, std::abs(r));
  }
  return out;
}

/// Equal-width bin code per value, edges from the observed min/max. A
/// constant variable lands entirely in bin 0.
inline std::vector<int> equal_width_bins(const Vector& values, int bins) {
  if (bins < 1) throw ConfigError("bin count must be positive");
  std::vector<int> codes(static_cast<std::size_t>(values.size()), 0);
  const double lo = values.minCoeff();
  const double hi = values.maxCoeff();
  if (!(hi > lo)) return codes;
  const double width = (hi - lo) / bins;
  for (Index i = 0; i < values.size(); ++i) {
    const int b = static_cast<int>(std::floor((values[i] - lo) / width));
    codes[static_cast<std::size_t>(i)] = std::clamp(b, 0, bins - 1);
  }
  return codes;
}

/// Plug-in mutual information (nats) between two discrete code sequences.
/// Per-cell terms are summed in sorted order, so swapping the arguments gives
/// bit-identical results.
inline double discrete_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw DimensionError("code sequences differ in length");
  const auto n = static_cast<double>(a.size());
  std::map<int, double> ca, cb;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca[a[i]] += 1.0;
    cb[b[i]] += 1.0;
    joint[{a[i], b[i]}] += 1.0;
  }
  std::vector<double> terms;
  terms.reserve(joint.size());
  for (const auto& [cell, c] : joint) {
    const double denom = ca[cell.first] * cb[cell.second];
    terms.push_back(c / n * std::log(c * n / denom));
  }
  std::sort(terms.begin(), terms.end());
  double mi = 0.0;
  for (double t : terms) mi += t;
  return std::max(0.0, mi);
}

/// Histogram estimate of MI(feature; target) for every feature. Continuous
/// variables use `bins` equal-width bins; classification labels are used as
/// they are.
inline ScoreVector mutual_information_scores(const Matrix& features, const Vector& targets,
                                             TaskKind task, int bins = 10) {
  if (features.rows() < 2) throw ScoringError("mutual information needs at least two samples");
  if (targets.size() != features.rows()) throw DimensionError("feature rows and target length differ");
  std::vector<int> target_codes;
  if (task == TaskKind::Classification) {
    target_codes.reserve(static_cast<std::size_t>(targets.size()));
    for (Index i = 0; i < targets.size(); ++i) target_codes.push_back(static_cast<int>(targets[i]));
  } else {
    target_codes = equal_width_bins(targets, bins);
  }
  ScoreVector out{Vector::Zero(features.cols()), ScoreMethod::MutualInformation};
  detail::parallel_for(static_cast<std::size_t>(features.cols()), [&](std::size_t j) {
    const auto col = static_cast<Index>(j);
    out.scores[col] = discrete_mutual_information(equal_width_bins(features.col(col), bins), target_codes);
  });
  return out;
}

/// Indices of the k largest scores (ties to the lower index), ascending.
inline std::vector<std::size_t> select_top_k(const ScoreVector& scores, std::size_t k) {
  const auto m = static_cast<std::size_t>(scores.scores.size());
  if (k < 1 || k > m) {
    throw ConfigError("top-k: k = " + std::to_string(k) + " outside [1, " + std::to_string(m) + "]");
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores.scores[static_cast<Index>(a)] > scores.scores[static_cast<Index>(b)];
  });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

struct RfeConfig {
  std::size_t eta = 1;
  ModelSpec spec;
};

struct RfeResult {
  std::vector<std::size_t> selected;       // ascending
  std::vector<std::size_t> removal_order;  // original indices, first removed first
  std::size_t fits = 0;
};

inline bool supports_importances(ModelKind kind) {
  return kind == ModelKind::Ridge || kind == ModelKind::GradientBoostedTrees;
}

/// Recursive feature elimination: fit on the remaining columns, drop the one
/// with the smallest importance (ties to the lower index), repeat until `eta`
/// columns remain.
inline RfeResult rfe(const Matrix& features, const Vector& targets, TaskKind task,
                     const LossKind& loss, const RfeConfig& config, int n_classes = 0) {
  require_compatible(loss, task);
  const auto m = static_cast<std::size_t>(features.cols());
  if (!supports_importances(config.spec.kind)) {
    throw ConfigError(std::string("rfe: model kind ") + to_string(config.spec.kind) +
                      " has no intrinsic feature importances");
  }
  if (config.eta < 1 || config.eta > m) {
    throw ConfigError("rfe: eta = " + std::to_string(config.eta) + " outside [1, " +
                      std::to_string(m) + "]");
  }
  RfeResult out;
  std::vector<std::size_t> remaining(m);
  std::iota(remaining.begin(), remaining.end(), std::size_t{0});
  for (;;) {
    const TrainedModel model =
        fit(config.spec, select_columns(features, remaining), targets, task, n_classes);
    ++out.fits;
    if (remaining.size() <= config.eta) break;
    const ImportanceVector imp = *model.feature_importances();
    Index weakest = 0;
    for (Index k = 1; k < imp.size(); ++k) {
      if (imp[k] < imp[weakest]) weakest = k;
    }
    out.removal_order.push_back(remaining[static_cast<std::size_t>(weakest)]);
    remaining.erase(remaining.begin() + weakest);
  }
  out.selected = remaining;
  return out;
}

}  // namespace bmo
