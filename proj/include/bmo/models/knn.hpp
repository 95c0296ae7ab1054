#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include "bmo/models/model.hpp"

namespace bmo {

/// k-nearest-neighbour regressor / classifier under Euclidean distance.
/// Distance ties resolve to the lower training index.
class KnnModel final : public detail::FittedModel {
 public:
  KnnModel(Matrix x, Vector y, Index k, TaskKind task, int n_classes)
      : x_(std::move(x)), y_(std::move(y)), k_(std::min<Index>(k, y_.size())), task_(task),
        n_classes_(n_classes) {}

  Matrix predict(const Matrix& features) const override {
    const Index n_train = x_.rows();
    const Index outputs = task_ == TaskKind::Regression ? 1 : n_classes_;
    Matrix out = Matrix::Zero(features.rows(), outputs);
    std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(n_train));
    for (Index r = 0; r < features.rows(); ++r) {
      for (Index i = 0; i < n_train; ++i) {
        dist[static_cast<std::size_t>(i)] = {(x_.row(i) - features.row(r)).squaredNorm(), i};
      }
      std::partial_sort(dist.begin(), dist.begin() + k_, dist.end());
      for (Index n = 0; n < k_; ++n) {
        const double target = y_[dist[static_cast<std::size_t>(n)].second];
        if (task_ == TaskKind::Regression) {
          out(r, 0) += target;
        } else {
          out(r, static_cast<Index>(target)) += 1.0;
        }
      }
      out.row(r) /= static_cast<double>(k_);
    }
    return out;
  }

  void hash_state(detail::StateHasher& h) const override {
    h.values(x_);
    h.values(y_);
    h.value(static_cast<std::int64_t>(k_));
  }

 private:
  Matrix x_;
  Vector y_;
  Index k_;
  TaskKind task_;
  int n_classes_;
};

}  // namespace bmo
