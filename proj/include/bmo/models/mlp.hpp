#pragma once

// Fully connected feed-forward network trained with mini-batch Adam.
//
// Regression uses an identity output and half squared error; classification
// uses a softmax output and cross-entropy. The L2 penalty is
// 0.5 * alpha * sum(W^2) / batch_size, biases excluded.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "bmo/models/model.hpp"

namespace bmo {

enum class Activation { Relu, Logistic };

inline Activation parse_activation(const std::string& name) {
  if (name == "relu") return Activation::Relu;
  if (name == "logistic") return Activation::Logistic;
  throw SpecError("unknown activation '" + name + "'");
}

class MlpNetwork {
 public:
  struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> biases;
  };

  /// `layer_sizes` = {inputs, hidden..., outputs}.
  MlpNetwork(std::vector<Index> layer_sizes, Activation activation, bool softmax_output)
      : sizes_(std::move(layer_sizes)), activation_(activation), softmax_(softmax_output) {
    if (sizes_.size() < 2) throw SpecError("network needs an input and an output layer");
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
      weights_.push_back(Matrix::Zero(sizes_[l], sizes_[l + 1]));
      biases_.push_back(Vector::Zero(sizes_[l + 1]));
    }
  }

  /// Glorot-uniform initialization (gain 2 for logistic units).
  void initialize(std::mt19937_64& rng) {
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      const double fan = static_cast<double>(sizes_[l] + sizes_[l + 1]);
      const double factor = activation_ == Activation::Logistic ? 2.0 : 6.0;
      const double bound = std::sqrt(factor / fan);
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Index i = 0; i < weights_[l].size(); ++i) weights_[l].data()[i] = dist(rng);
      for (Index i = 0; i < biases_[l].size(); ++i) biases_[l][i] = dist(rng);
    }
  }

  Matrix forward(const Matrix& x) const {
    Matrix a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      Matrix z = (a * weights_[l]).rowwise() + biases_[l].transpose();
      if (l + 1 < weights_.size()) {
        activate(z);
        a = std::move(z);
      } else {
        a = softmax_ ? softmax(z) : std::move(z);
      }
    }
    return a;
  }

  /// Objective on (x, target) and its gradient. `target` is N x outputs:
  /// real values for regression, one-hot rows for classification.
  double loss_and_gradient(const Matrix& x, const Matrix& target, double alpha,
                           Gradients* grad) const {
    const std::size_t layers = weights_.size();
    const double n = static_cast<double>(x.rows());
    std::vector<Matrix> acts;
    acts.reserve(layers + 1);
    acts.push_back(x);
    Matrix logits;
    for (std::size_t l = 0; l < layers; ++l) {
      Matrix z = (acts.back() * weights_[l]).rowwise() + biases_[l].transpose();
      if (l + 1 < layers) {
        activate(z);
        acts.push_back(std::move(z));
      } else {
        logits = std::move(z);
      }
    }

    double data_loss = 0.0;
    Matrix delta;
    if (softmax_) {
      const Vector shift = logits.rowwise().maxCoeff();
      const Matrix shifted = logits.colwise() - shift;
      const Vector log_norm = shifted.array().exp().rowwise().sum().log();
      const Matrix log_p = shifted.colwise() - log_norm;
      data_loss = -(target.array() * log_p.array()).sum() / n;
      delta = (log_p.array().exp().matrix() - target) / n;
    } else {
      const Matrix diff = logits - target;
      data_loss = 0.5 * diff.squaredNorm() / n;
      delta = diff / n;
    }

    double penalty = 0.0;
    for (const auto& w : weights_) penalty += w.squaredNorm();
    const double objective = data_loss + 0.5 * alpha * penalty / n;
    if (!grad) return objective;

    grad->weights.resize(layers);
    grad->biases.resize(layers);
    for (std::size_t l = layers; l-- > 0;) {
      grad->weights[l] = acts[l].transpose() * delta + (alpha / n) * weights_[l];
      grad->biases[l] = delta.colwise().sum().transpose();
      if (l > 0) {
        Matrix back = delta * weights_[l].transpose();
        const Matrix& a = acts[l];
        if (activation_ == Activation::Relu) {
          back = back.array() * (a.array() > 0.0).cast<double>();
        } else {
          back = back.array() * a.array() * (1.0 - a.array());
        }
        delta = std::move(back);
      }
    }
    return objective;
  }

  /// All weights then biases, layer by layer, flattened.
  Vector parameters() const {
    Vector out(parameter_count());
    Index k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      out.segment(k, weights_[l].size()) = weights_[l].reshaped();
      k += weights_[l].size();
      out.segment(k, biases_[l].size()) = biases_[l];
      k += biases_[l].size();
    }
    return out;
  }

  void set_parameters(const Vector& p) {
    if (p.size() != parameter_count()) throw DimensionError("parameter vector has wrong length");
    Index k = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
      weights_[l].reshaped() = p.segment(k, weights_[l].size());
      k += weights_[l].size();
      biases_[l] = p.segment(k, biases_[l].size());
      k += biases_[l].size();
    }
  }

  static Vector flatten(const Gradients& g) {
    Index total = 0;
    for (std::size_t l = 0; l < g.weights.size(); ++l) total += g.weights[l].size() + g.biases[l].size();
    Vector out(total);
    Index k = 0;
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
      out.segment(k, g.weights[l].size()) = g.weights[l].reshaped();
      k += g.weights[l].size();
      out.segment(k, g.biases[l].size()) = g.biases[l];
      k += g.biases[l].size();
    }
    return out;
  }

  Index parameter_count() const {
    Index total = 0;
    for (std::size_t l = 0; l < weights_.size(); ++l) total += weights_[l].size() + biases_[l].size();
    return total;
  }

  std::vector<Matrix>& weights() { return weights_; }
  std::vector<Vector>& biases() { return biases_; }
  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Vector>& biases() const { return biases_; }

 private:
  void activate(Matrix& z) const {
    if (activation_ == Activation::Relu) {
      z = z.cwiseMax(0.0);
    } else {
      z = (1.0 + (-z.array()).exp()).inverse().matrix();
    }
  }

  static Matrix softmax(const Matrix& z) {
    Matrix e = (z.colwise() - z.rowwise().maxCoeff()).array().exp().matrix();
    const Vector s = e.rowwise().sum();
    return e.array().colwise() / s.array();
  }

  std::vector<Index> sizes_;
  Activation activation_;
  bool softmax_;
  std::vector<Matrix> weights_;
  std::vector<Vector> biases_;
};

struct MlpParams {
  std::vector<Index> hidden;
  Activation activation = Activation::Relu;
  double alpha = 1e-4;
  double learning_rate = 1e-3;
  int max_epochs = 200;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

class MlpModel final : public detail::FittedModel {
 public:
  MlpModel(MlpNetwork net, TaskKind task) : net_(std::move(net)), task_(task) {}

  /// Adam (beta1 0.9, beta2 0.999) with a constant step size for a fixed
  /// number of epochs; rows are reshuffled every epoch.
  static MlpModel fit(const Matrix& x, const Vector& y, TaskKind task, int n_classes,
                      const MlpParams& p) {
    const Index outputs = task == TaskKind::Regression ? 1 : n_classes;
    std::vector<Index> sizes{x.cols()};
    sizes.insert(sizes.end(), p.hidden.begin(), p.hidden.end());
    sizes.push_back(outputs);
    MlpNetwork net(sizes, p.activation, task == TaskKind::Classification);
    std::mt19937_64 rng(p.seed);
    net.initialize(rng);

    Matrix target = Matrix::Zero(x.rows(), outputs);
    for (Index i = 0; i < x.rows(); ++i) {
      if (task == TaskKind::Regression) {
        target(i, 0) = y[i];
      } else {
        target(i, static_cast<Index>(y[i])) = 1.0;
      }
    }

    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    Vector params = net.parameters();
    Vector m = Vector::Zero(params.size());
    Vector v = Vector::Zero(params.size());
    std::int64_t step = 0;

    std::vector<Index> order(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    const Index batch = std::min<Index>(p.batch_size, x.rows());
    MlpNetwork::Gradients grad;
    for (int epoch = 0; epoch < p.max_epochs; ++epoch) {
      std::shuffle(order.begin(), order.end(), rng);
      for (Index start = 0; start < x.rows(); start += batch) {
        const Index len = std::min(batch, x.rows() - start);
        Matrix xb(len, x.cols());
        Matrix tb(len, outputs);
        for (Index i = 0; i < len; ++i) {
          xb.row(i) = x.row(order[static_cast<std::size_t>(start + i)]);
          tb.row(i) = target.row(order[static_cast<std::size_t>(start + i)]);
        }
        net.loss_and_gradient(xb, tb, p.alpha, &grad);
        const Vector g = MlpNetwork::flatten(grad);
        ++step;
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
        const double lr = p.learning_rate * std::sqrt(1.0 - std::pow(beta2, static_cast<double>(step))) /
                          (1.0 - std::pow(beta1, static_cast<double>(step)));
        params -= (lr * m.array() / (v.array().sqrt() + eps)).matrix();
        net.set_parameters(params);
      }
    }
    return MlpModel(std::move(net), task);
  }

  Matrix predict(const Matrix& features) const override { return net_.forward(features); }

  void hash_state(detail::StateHasher& h) const override { h.values(net_.parameters()); }

  const MlpNetwork& network() const { return net_; }

 private:
  MlpNetwork net_;
  TaskKind task_;
};

}  // namespace bmo
