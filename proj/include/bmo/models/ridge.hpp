#pragma once

#include "bmo/models/model.hpp"

namespace bmo {

/// Linear least squares with an L2 penalty on the slopes. The intercept is
/// not penalized. Regression only.
class RidgeModel final : public detail::FittedModel {
 public:
  RidgeModel(Vector coefficients, double intercept)
      : coefficients_(std::move(coefficients)), intercept_(intercept) {}

  static RidgeModel fit(const Matrix& x, const Vector& y, double penalty) {
    const Vector x_mean = x.colwise().mean();
    const double y_mean = y.mean();
    const Matrix xc = x.rowwise() - x_mean.transpose();
    const Vector yc = y.array() - y_mean;

    Matrix gram = xc.transpose() * xc;
    gram.diagonal().array() += penalty;
    const Vector rhs = xc.transpose() * yc;
    // Complete orthogonal decomposition gives the minimum-norm solution when
    // the penalty is zero and the Gram matrix is singular.
    Vector beta = gram.completeOrthogonalDecomposition().solve(rhs);
    const double intercept = y_mean - x_mean.dot(beta);
    return RidgeModel(std::move(beta), intercept);
  }

  Matrix predict(const Matrix& features) const override {
    Matrix out(features.rows(), 1);
    out.col(0) = (features * coefficients_).array() + intercept_;
    return out;
  }

  // |coefficient| per feature; only comparable across features when the
  // inputs were standardized before fitting.
  std::optional<ImportanceVector> importances() const override {
    return ImportanceVector(coefficients_.cwiseAbs());
  }

  void hash_state(detail::StateHasher& h) const override {
    h.values(coefficients_);
    h.value(intercept_);
  }

  const Vector& coefficients() const { return coefficients_; }
  double intercept() const { return intercept_; }

 private:
  Vector coefficients_;
  double intercept_;
};

}  // namespace bmo
