#pragma once

// Backward elimination over a binary feature mask, driven by the predictions
// of one fixed, already-fitted model.
//
// Deselected features are zeroed, not removed, so the model keeps its input
// width and is never refitted while the mask is optimized. With standardized
// inputs, zeroing a column is the same as imputing its training mean.

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "bmo/core.hpp"
#include "bmo/detail/parallel.hpp"
#include "bmo/models/fit.hpp"

namespace bmo {

struct GbmoConfig {
  double mu = 0.0;               // slack: continue while loss <= previous * (1 + mu)
  std::size_t min_features = 1;  // never shrink the support below this
};

struct FlbmoConfig {
  std::size_t eta = 1;  // exact number of features to keep
};

struct SlufResult {
  std::size_t j_star = 0;
  double loss_min = 0.0;
};

enum class StopReason {
  LossThreshold,  // best candidate exceeded previous * (1 + mu); mask kept
  FeatureFloor,   // support reached min_features
  TargetReached,  // support reached eta
};

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::LossThreshold: return "loss_threshold";
    case StopReason::FeatureFloor: return "feature_floor";
    case StopReason::TargetReached: return "target_reached";
  }
  return "?";
}

/// One row of a selection trace. Elimination rows carry the removed index;
/// the final row is the stop record and has no index. Its loss is the
/// rejected candidate's loss for a threshold stop and empty otherwise.
struct TraceRecord {
  std::size_t iteration = 0;
  std::optional<std::size_t> eliminated;
  std::optional<double> loss_min;
  std::size_t remaining = 0;
};

struct SelectionTrace {
  std::vector<TraceRecord> records;
  Mask initial_mask;
  Mask terminal_mask;
  StopReason stop = StopReason::LossThreshold;

  std::size_t eliminations() const {
    std::size_t k = 0;
    for (const auto& r : records) k += r.eliminated.has_value();
    return k;
  }
};

struct SelectionOutcome {
  Mask mask;
  SelectionTrace trace;
};

namespace detail {

inline void require_nonempty_validation(const Matrix& x, const Vector& y) {
  if (x.rows() < 1) throw SelectionError("validation split is empty");
  if (x.rows() != y.size()) throw DimensionError("validation features and targets differ in length");
}

}  // namespace detail

/// Select Least Useful Feature: for every j in the support of `mask`, zero
/// column j (on top of the already-masked columns) and score the model on the
/// validation data. Returns the j with the smallest loss; ties go to the
/// lowest index. Candidates are scored concurrently and reduced in index
/// order.
template <Predictor P>
SlufResult sluf(const Mask& mask, const Matrix& val_features, const Vector& val_targets,
                const P& model, const LossKind& loss) {
  detail::require_nonempty_validation(val_features, val_targets);
  if (static_cast<Index>(mask.size()) != val_features.cols()) {
    throw DimensionError("mask length does not match validation width");
  }
  if (model.input_width() != val_features.cols()) {
    throw DimensionError("model width " + std::to_string(model.input_width()) +
                         " does not match validation width " + std::to_string(val_features.cols()));
  }
  const std::vector<std::size_t> support = mask.support();
  if (support.empty()) throw SelectionError("cannot select from an empty mask support");

  const Matrix masked = apply_mask(val_features, mask);
  std::vector<double> losses(support.size());
  detail::parallel_for(support.size(), [&](std::size_t k) {
    Matrix candidate = masked;
    candidate.col(static_cast<Index>(support[k])).setZero();
    losses[k] = evaluate_loss(model.predict(candidate), val_targets, loss);
  });

  SlufResult best{support.front(), losses.front()};
  for (std::size_t k = 1; k < support.size(); ++k) {
    if (losses[k] < best.loss_min) best = {support[k], losses[k]};
  }
  return best;
}

/// General binary mask optimization.
///
/// Starting from the all-ones mask and a previous loss of +infinity, each
/// iteration runs SLUF. If the best loss exceeds previous * (1 + mu) the
/// iteration stops and the current mask is returned; otherwise the chosen
/// feature is zeroed and its loss becomes the new baseline. The support
/// never drops below `config.min_features`.
template <Predictor P>
SelectionOutcome gbmo(const Dataset& train, const Dataset& val, const P& model,
                      const LossKind& loss, const GbmoConfig& config) {
  const auto m = static_cast<std::size_t>(val.width());
  if (!(config.mu >= 0.0)) throw ConfigError("gbmo: mu must be non-negative");
  if (config.min_features < 1 || config.min_features > m) {
    throw ConfigError("gbmo: min_features must lie in [1, M]");
  }
  if (train.width() != val.width()) throw DimensionError("train and validation widths differ");
  if (model.input_width() != val.width()) throw DimensionError("model was not fitted on all M features");
  detail::require_nonempty_validation(val.features, val.targets);

  SelectionOutcome out{Mask::ones(m), {}};
  out.trace.initial_mask = out.mask;
  double previous = std::numeric_limits<double>::infinity();
  for (std::size_t t = 1;; ++t) {
    const std::size_t remaining = out.mask.count();
    if (remaining <= config.min_features) {
      out.trace.records.push_back({t, std::nullopt, std::nullopt, remaining});
      out.trace.stop = StopReason::FeatureFloor;
      break;
    }
    const SlufResult r = sluf(out.mask, val.features, val.targets, model, loss);
    if (r.loss_min > previous * (1.0 + config.mu)) {
      out.trace.records.push_back({t, std::nullopt, r.loss_min, remaining});
      out.trace.stop = StopReason::LossThreshold;
      break;
    }
    out.mask.clear(r.j_star);
    out.trace.records.push_back({t, r.j_star, r.loss_min, remaining - 1});
    previous = r.loss_min;
  }
  out.trace.terminal_mask = out.mask;
  return out;
}

/// Fixed-length binary mask optimization: eliminate the SLUF choice until
/// exactly `config.eta` features remain.
template <Predictor P>
SelectionOutcome flbmo(const Dataset& train, const Dataset& val, const P& model,
                       const LossKind& loss, const FlbmoConfig& config) {
  const auto m = static_cast<std::size_t>(val.width());
  if (config.eta < 1 || config.eta > m) {
    throw ConfigError("flbmo: eta = " + std::to_string(config.eta) + " outside [1, " +
                      std::to_string(m) + "]");
  }
  if (train.width() != val.width()) throw DimensionError("train and validation widths differ");
  if (model.input_width() != val.width()) throw DimensionError("model was not fitted on all M features");
  detail::require_nonempty_validation(val.features, val.targets);

  SelectionOutcome out{Mask::ones(m), {}};
  out.trace.initial_mask = out.mask;
  std::size_t t = 1;
  while (out.mask.count() > config.eta) {
    const SlufResult r = sluf(out.mask, val.features, val.targets, model, loss);
    out.mask.clear(r.j_star);
    out.trace.records.push_back({t++, r.j_star, r.loss_min, out.mask.count()});
  }
  out.trace.records.push_back({t, std::nullopt, std::nullopt, out.mask.count()});
  out.trace.stop = StopReason::TargetReached;
  out.trace.terminal_mask = out.mask;
  return out;
}

struct FinalSelection {
  std::vector<std::size_t> indices;
  TrainedModel model;
};

/// Drops the masked columns from the training split and refits `spec` on
/// what is left.
inline FinalSelection finalize_selection(const Dataset& train, const Mask& mask,
                                         const ModelSpec& spec) {
  std::vector<std::size_t> indices = mask_support(mask);
  if (indices.empty()) throw SelectionError("cannot finalize an empty selection");
  if (static_cast<Index>(mask.size()) != train.width()) {
    throw DimensionError("mask length does not match training width");
  }
  TrainedModel model =
      fit(spec, select_columns(train.features, indices), train.targets, train.task, train.n_classes);
  return {std::move(indices), std::move(model)};
}

}  // namespace bmo
