#pragma once

// Domain types shared by every part of the library: datasets, binary feature
// masks, losses, and the Predictor concept the selectors are written against.
//
// Feature indices are 0-based everywhere.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bmo {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
  using Error::Error;
};
class LabelRangeError : public Error {
  using Error::Error;
};
class SelectionError : public Error {
  using Error::Error;
};
class ConfigError : public Error {
  using Error::Error;
};
class DataError : public Error {
  using Error::Error;
};
class FitError : public Error {
  using Error::Error;
};
class SpecError : public Error {
  using Error::Error;
};
class ScoringError : public Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

enum class TaskKind { Regression, Classification };

inline const char* to_string(TaskKind task) {
  return task == TaskKind::Regression ? "regression" : "classification";
}

namespace detail {

inline bool is_label(double v) {
  return std::isfinite(v) && v >= 0.0 && v == std::floor(v);
}

// Number of classes implied by a label vector (max label + 1). Throws if any
// entry is not a non-negative integer.
inline int infer_class_count(const Vector& labels) {
  double max_label = -1.0;
  for (Index i = 0; i < labels.size(); ++i) {
    if (!is_label(labels[i])) {
      throw LabelRangeError("classification target at row " + std::to_string(i) +
                            " is not a non-negative integer label");
    }
    max_label = std::max(max_label, labels[i]);
  }
  return static_cast<int>(max_label) + 1;
}

}  // namespace detail

/// Feature matrix (rows = samples, columns = features) plus targets.
///
/// Classification targets are stored as doubles holding integer labels in
/// [0, n_classes). `n_classes` is 0 for regression.
struct Dataset {
  Matrix features;
  Vector targets;
  TaskKind task = TaskKind::Regression;
  std::vector<std::string> feature_names;
  int n_classes = 0;

  Index samples() const { return features.rows(); }
  Index width() const { return features.cols(); }

  /// Builds and validates a dataset. For classification the class count is
  /// inferred from the labels unless given explicitly.
  static Dataset make(Matrix features, Vector targets, TaskKind task,
                      std::vector<std::string> names = {}, int n_classes = 0) {
    Dataset d{std::move(features), std::move(targets), task, std::move(names), 0};
    if (task == TaskKind::Classification) {
      d.n_classes = n_classes > 0 ? n_classes : detail::infer_class_count(d.targets);
    }
    d.validate();
    return d;
  }

  void validate() const {
    if (features.rows() != targets.size()) {
      throw DimensionError("dataset has " + std::to_string(features.rows()) +
                           " feature rows but " + std::to_string(targets.size()) +
                           " targets");
    }
    if (features.cols() < 1) throw DataError("dataset needs at least one feature");
    if (!feature_names.empty() &&
        static_cast<Index>(feature_names.size()) != features.cols()) {
      throw DataError("feature name count does not match feature width");
    }
    if (!features.allFinite()) throw DataError("feature matrix has NaN or infinite entries");
    if (!targets.allFinite()) throw DataError("target vector has NaN or infinite entries");
    if (task == TaskKind::Classification) {
      if (n_classes < 2) throw DataError("classification needs at least two classes");
      for (Index i = 0; i < targets.size(); ++i) {
        if (!detail::is_label(targets[i]) || targets[i] >= n_classes) {
          throw LabelRangeError("label " + std::to_string(targets[i]) + " at row " +
                                std::to_string(i) + " outside [0, " +
                                std::to_string(n_classes) + ")");
        }
      }
    }
  }

  /// Rows `rows` of this dataset, in the given order.
  Dataset subset(std::span<const Index> rows) const {
    Dataset out;
    out.features.resize(static_cast<Index>(rows.size()), features.cols());
    out.targets.resize(static_cast<Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      out.features.row(static_cast<Index>(i)) = features.row(rows[i]);
      out.targets[static_cast<Index>(i)] = targets[rows[i]];
    }
    out.task = task;
    out.feature_names = feature_names;
    out.n_classes = n_classes;
    return out;
  }
};

// ---------------------------------------------------------------------------
// Mask
// ---------------------------------------------------------------------------

/// Binary feature mask m in {0,1}^M. The length is fixed at construction.
class Mask {
 public:
  Mask() = default;

  static Mask ones(std::size_t m) { return Mask(std::vector<std::uint8_t>(m, 1)); }
  static Mask zeros(std::size_t m) { return Mask(std::vector<std::uint8_t>(m, 0)); }

  static Mask from_bits(std::span<const int> bits) {
    std::vector<std::uint8_t> b;
    b.reserve(bits.size());
    for (int v : bits) {
      if (v != 0 && v != 1) throw ConfigError("mask entries must be 0 or 1");
      b.push_back(static_cast<std::uint8_t>(v));
    }
    return Mask(std::move(b));
  }
  static Mask from_bits(std::initializer_list<int> bits) {
    return from_bits(std::span<const int>(bits.begin(), bits.size()));
  }

  /// Mask with ones exactly at `indices`.
  static Mask from_support(std::size_t m, std::span<const std::size_t> indices) {
    Mask out = zeros(m);
    for (auto j : indices) {
      if (j >= m) throw SelectionError("support index " + std::to_string(j) + " out of range");
      out.bits_[j] = 1;
    }
    return out;
  }

  std::size_t size() const { return bits_.size(); }
  bool operator[](std::size_t j) const { return bits_[j] != 0; }

  /// Zeroes entry j.
  void clear(std::size_t j) {
    if (j >= bits_.size()) throw SelectionError("mask index out of range");
    bits_[j] = 0;
  }

  /// ||m||_0
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
  }

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < bits_.size(); ++j) {
      if (bits_[j]) out.push_back(j);
    }
    return out;
  }

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  explicit Mask(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {}
  std::vector<std::uint8_t> bits_;
};

/// Ascending indices j with m_j = 1.
inline std::vector<std::size_t> mask_support(const Mask& mask) { return mask.support(); }

/// X with every column j where m_j = 0 replaced by zeros. The input is left
/// untouched.
inline Matrix apply_mask(const Matrix& features, const Mask& mask) {
  if (static_cast<Index>(mask.size()) != features.cols()) {
    throw DimensionError("mask length " + std::to_string(mask.size()) +
                         " does not match feature width " + std::to_string(features.cols()));
  }
  Matrix out = features;
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (!mask[j]) out.col(static_cast<Index>(j)).setZero();
  }
  return out;
}

/// Columns `indices` of X, in ascending index order.
inline Matrix select_columns(const Matrix& features, std::span<const std::size_t> indices) {
  if (indices.empty()) throw SelectionError("cannot select an empty set of columns");
  std::vector<std::size_t> sorted(indices.begin(), indices.end());
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw SelectionError("duplicate column index in selection");
  }
  if (sorted.back() >= static_cast<std::size_t>(features.cols())) {
    throw SelectionError("column index " + std::to_string(sorted.back()) +
                         " out of range for width " + std::to_string(features.cols()));
  }
  Matrix out(features.rows(), static_cast<Index>(sorted.size()));
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    out.col(static_cast<Index>(k)) = features.col(static_cast<Index>(sorted[k]));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct LossKind {
  enum class Kind { MeanSquaredError, LogLoss };

  Kind kind = Kind::MeanSquaredError;
  // Probability clipping bound for LogLoss: p is clipped to [eps, 1 - eps].
  double epsilon = 1e-15;

  static constexpr LossKind mse() { return {Kind::MeanSquaredError, 0.0}; }
  static constexpr LossKind log_loss(double eps = 1e-15) { return {Kind::LogLoss, eps}; }

  static constexpr LossKind for_task(TaskKind task) {
    return task == TaskKind::Regression ? mse() : log_loss();
  }

  bool compatible_with(TaskKind task) const {
    return (kind == Kind::MeanSquaredError) == (task == TaskKind::Regression);
  }

  const char* name() const { return kind == Kind::MeanSquaredError ? "mse" : "log_loss"; }
};

inline void require_compatible(const LossKind& loss, TaskKind task) {
  if (!loss.compatible_with(task)) {
    throw ConfigError(std::string("loss ") + loss.name() + " cannot be used for a " +
                      to_string(task) + " task");
  }
}

/// Mean per-sample loss.
///
/// Regression predictions are an N x 1 matrix. Classification predictions are
/// an N x C matrix of class probabilities and the loss is the mean negative
/// log of the clipped probability of the true class.
inline double evaluate_loss(const Matrix& predictions, const Vector& targets,
                            const LossKind& loss) {
  const Index n = targets.size();
  if (predictions.rows() != n) {
    throw DimensionError("predictions have " + std::to_string(predictions.rows()) +
                         " rows but there are " + std::to_string(n) + " targets");
  }
  if (n < 1) throw DimensionError("loss needs at least one sample");

  double total = 0.0;
  if (loss.kind == LossKind::Kind::MeanSquaredError) {
    if (predictions.cols() != 1) {
      throw DimensionError("squared error expects one prediction column");
    }
    for (Index i = 0; i < n; ++i) {
      const double d = predictions(i, 0) - targets[i];
      total += d * d;
    }
  } else {
    const Index classes = predictions.cols();
    const double lo = loss.epsilon;
    const double hi = 1.0 - loss.epsilon;
    for (Index i = 0; i < n; ++i) {
      const double label = targets[i];
      if (!detail::is_label(label) || label >= static_cast<double>(classes)) {
        throw LabelRangeError("label " + std::to_string(label) + " at row " + std::to_string(i) +
                              " outside [0, " + std::to_string(classes) + ")");
      }
      const double p = std::clamp(predictions(i, static_cast<Index>(label)), lo, hi);
      total -= std::log(p);
    }
  }
  return total / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Predictor concept
// ---------------------------------------------------------------------------

/// Anything that maps an N x M_in feature matrix to an N x outputs prediction
/// matrix without side effects. The selectors only ever query a Predictor;
/// they never fit one.
template <class P>
concept Predictor = requires(const P& p, const Matrix& x) {
  { p.predict(x) } -> std::convertible_to<Matrix>;
  { p.input_width() } -> std::convertible_to<Index>;
};

}  // namespace bmo
