#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "bmo/core.hpp"

namespace bmo {

enum class ModelKind { Ridge, KNearestNeighbors, MultiLayerPerceptron, GradientBoostedTrees };

inline const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Ridge: return "ridge";
    case ModelKind::KNearestNeighbors: return "knn";
    case ModelKind::MultiLayerPerceptron: return "mlp";
    case ModelKind::GradientBoostedTrees: return "gbt";
  }
  return "?";
}

/// Per-feature non-negative importance, length M_in.
using ImportanceVector = Vector;

namespace detail {

// FNV-1a over raw bytes; used to fingerprint fitted state.
class StateHasher {
 public:
  void bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash_ ^= p[i];
      hash_ *= 1099511628211ULL;
    }
  }
  void value(double v) { bytes(&v, sizeof v); }
  void value(std::int64_t v) { bytes(&v, sizeof v); }
  void values(const Matrix& m) {
    value(static_cast<std::int64_t>(m.rows()));
    value(static_cast<std::int64_t>(m.cols()));
    bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  }
  void values(const Vector& v) {
    value(static_cast<std::int64_t>(v.size()));
    bytes(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
  }
  std::uint64_t digest() const { return hash_; }

 private:
  std::uint64_t hash_ = 14695981039346656037ULL;
};

// Fitted state behind a TrainedModel. Implementations are immutable after
// construction.
class FittedModel {
 public:
  virtual ~FittedModel() = default;
  // X has already been checked to have the fitted width.
  virtual Matrix predict(const Matrix& features) const = 0;
  virtual std::optional<ImportanceVector> importances() const { return std::nullopt; }
  virtual void hash_state(StateHasher& hasher) const = 0;
};

}  // namespace detail

/// An opaque fitted predictor.
///
/// Copies share the same immutable state, so a TrainedModel can be handed to
/// several threads for concurrent prediction. Regression models emit one
/// column; classification models emit one probability column per class.
class TrainedModel {
 public:
  TrainedModel(std::shared_ptr<const detail::FittedModel> impl, ModelKind kind, TaskKind task,
               Index input_width, int n_classes)
      : impl_(std::move(impl)),
        kind_(kind),
        task_(task),
        input_width_(input_width),
        n_classes_(n_classes) {}

  Matrix predict(const Matrix& features) const {
    if (features.cols() != input_width_) {
      throw DimensionError("model expects " + std::to_string(input_width_) +
                           " columns, got " + std::to_string(features.cols()));
    }
    if (features.rows() == 0) return Matrix(0, output_width());
    return impl_->predict(features);
  }

  Index input_width() const { return input_width_; }
  TaskKind task() const { return task_; }
  ModelKind kind() const { return kind_; }
  int n_classes() const { return n_classes_; }
  Index output_width() const { return task_ == TaskKind::Regression ? 1 : n_classes_; }

  /// Intrinsic importances, or nullopt when the model kind has none.
  std::optional<ImportanceVector> feature_importances() const { return impl_->importances(); }

  /// Hash of the fitted parameters. Two models with the same fingerprint
  /// predict identically.
  std::uint64_t fingerprint() const {
    detail::StateHasher h;
    h.value(static_cast<std::int64_t>(kind_));
    h.value(static_cast<std::int64_t>(input_width_));
    impl_->hash_state(h);
    return h.digest();
  }

  /// Access to the concrete fitted state, e.g. ridge coefficients.
  template <class T>
  const T* as() const {
    return dynamic_cast<const T*>(impl_.get());
  }

 private:
  std::shared_ptr<const detail::FittedModel> impl_;
  ModelKind kind_;
  TaskKind task_;
  Index input_width_;
  int n_classes_;
};

static_assert(Predictor<TrainedModel>);

}  // namespace bmo
