#include <gtest/gtest.h>

#include <limits>
#include <random>

#include "bmo/selectors.hpp"

using namespace bmo;

namespace {

Matrix random_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal;
  Matrix x(rows, cols);
  for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  return x;
}

const ModelSpec kRidge{ModelKind::Ridge, {{"penalty", 1e-6}}, 0};

// y = 3 x0 + 0 x1 (+ optional noise); train / validation splits.
struct Toy {
  Dataset train, val;
};

Toy linear_toy(std::uint64_t seed, double w0, double w1, double noise) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  auto make = [&](Index n) {
    Matrix x = random_matrix(rng, n, 2);
    Vector y = w0 * x.col(0) + w1 * x.col(1);
    for (Index i = 0; i < n; ++i) y[i] += noise * normal(rng);
    return Dataset::make(std::move(x), std::move(y), TaskKind::Regression);
  };
  Toy t{make(60), make(40)};
  return t;
}

// Prediction independent of the input: every mask scores the same.
struct ConstantPredictor {
  Index width;
  Matrix predict(const Matrix& x) const { return Matrix::Constant(x.rows(), 1, 0.5); }
  Index input_width() const { return width; }
};

// Exhaustive reference for SLUF, written without apply_mask.
template <class Model>
std::pair<std::size_t, double> exhaustive(const Mask& mask, const Matrix& x, const Vector& y, const Model& model,
                                          const LossKind& loss) {
  std::size_t best_j = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < mask.size(); ++j) {
    if (!mask[j]) continue;
    Matrix z = x;
    for (std::size_t c = 0; c < mask.size(); ++c) {
      if (!mask[c] || c == j) z.col(static_cast<Index>(c)).setZero();
    }
    const double l = evaluate_loss(model.predict(z), y, loss);
    if (l < best) {
      best = l;
      best_j = j;
    }
  }
  return {best_j, best};
}

void expect_trace_invariants(const SelectionOutcome& out, std::size_t m) {
  const auto& records = out.trace.records;
  ASSERT_FALSE(records.empty());
  EXPECT_FALSE(records.back().eliminated.has_value());
  EXPECT_EQ(out.trace.eliminations(), m - out.mask.count());
  EXPECT_EQ(out.trace.eliminations() + 1, records.size());
  Mask rebuilt = out.trace.initial_mask;
  std::size_t remaining = m;
  for (const auto& r : records) {
    if (!r.eliminated) continue;
    EXPECT_TRUE(rebuilt[*r.eliminated]);
    rebuilt.clear(*r.eliminated);
    EXPECT_EQ(r.remaining, --remaining);
  }
  EXPECT_EQ(rebuilt, out.mask);
  EXPECT_EQ(out.trace.terminal_mask, out.mask);
}

}  // namespace

TEST(Sluf, SingletonSupportReturnsThatIndex) {
  const Toy t = linear_toy(1, 3.0, 0.0, 0.1);
  const TrainedModel m = fit(kRidge, t.train);
  const SlufResult r = sluf(Mask::from_bits({0, 1}), t.val.features, t.val.targets, m, LossKind::mse());
  EXPECT_EQ(r.j_star, 1u);
  const double all_zero = evaluate_loss(m.predict(Matrix::Zero(t.val.samples(), 2)), t.val.targets, LossKind::mse());
  EXPECT_EQ(r.loss_min, all_zero);
}

TEST(Sluf, DropsTheZeroWeightFeature) {
  const Toy t = linear_toy(2, 3.0, 0.0, 0.0);
  const TrainedModel m = fit(kRidge, t.train);
  const SlufResult r = sluf(Mask::ones(2), t.val.features, t.val.targets, m, LossKind::mse());
  EXPECT_EQ(r.j_star, 1u);
  EXPECT_LT(r.loss_min, 1e-6);
}

TEST(Sluf, ExactTiesGoToLowestIndex) {
  const ConstantPredictor p{5};
  const Matrix x = Matrix::Ones(4, 5);
  const SlufResult r = sluf(Mask::from_bits({0, 0, 1, 1, 1}), x, Vector::Zero(4), p, LossKind::mse());
  EXPECT_EQ(r.j_star, 2u);
  EXPECT_DOUBLE_EQ(r.loss_min, 0.25);
}

TEST(SlufProperty, MatchesExhaustiveEnumeration) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix xt = random_matrix(rng, 40, 6), xv = random_matrix(rng, 15, 6);
    const Vector w = random_matrix(rng, 6, 1).col(0);
    const Vector yt = xt * w + 0.2 * random_matrix(rng, 40, 1).col(0);
    const Vector yv = xv * w + 0.2 * random_matrix(rng, 15, 1).col(0);
    const ModelSpec spec = trial % 2 ? ModelSpec{ModelKind::KNearestNeighbors, {{"k", std::int64_t{3}}}, 0} : kRidge;
    const TrainedModel m = fit(spec, xt, yt, TaskKind::Regression);
    std::vector<int> bits(6);
    for (auto& b : bits) b = static_cast<int>(rng() % 2);
    bits[static_cast<std::size_t>(rng() % 6)] = 1;
    const Mask mask = Mask::from_bits(bits);
    const SlufResult r = sluf(mask, xv, yv, m, LossKind::mse());
    const auto [j, loss] = exhaustive(mask, xv, yv, m, LossKind::mse());
    EXPECT_EQ(r.j_star, j) << "trial " << trial;
    EXPECT_EQ(r.loss_min, loss) << "trial " << trial;
  }
}

TEST(SlufProperty, MatchesExhaustiveEnumerationForLogLoss) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    Matrix xt = random_matrix(rng, 60, 5), xv = random_matrix(rng, 20, 5);
    Vector yt(60), yv(20);
    for (Index i = 0; i < 60; ++i) yt[i] = xt(i, 0) + 0.5 * xt(i, 1) > 0 ? 1 : 0;
    for (Index i = 0; i < 20; ++i) yv[i] = xv(i, 0) + 0.5 * xv(i, 1) > 0 ? 1 : 0;
    const TrainedModel m =
        fit(ModelSpec{ModelKind::KNearestNeighbors, {{"k", std::int64_t{5}}}, 0}, xt, yt, TaskKind::Classification);
    const SlufResult r = sluf(Mask::ones(5), xv, yv, m, LossKind::log_loss());
    const auto [j, loss] = exhaustive(Mask::ones(5), xv, yv, m, LossKind::log_loss());
    EXPECT_EQ(r.j_star, j);
    EXPECT_EQ(r.loss_min, loss);
  }
}

TEST(Sluf, Errors) {
  const Toy t = linear_toy(5, 1.0, 1.0, 0.1);
  const TrainedModel m = fit(kRidge, t.train);
  EXPECT_THROW(sluf(Mask::zeros(2), t.val.features, t.val.targets, m, LossKind::mse()), SelectionError);
  EXPECT_THROW(sluf(Mask::ones(3), t.val.features, t.val.targets, m, LossKind::mse()), DimensionError);
  const Matrix wide = Matrix::Zero(4, 3);
  EXPECT_THROW(sluf(Mask::ones(3), wide, Vector::Zero(4), m, LossKind::mse()), DimensionError);
  EXPECT_THROW(sluf(Mask::ones(2), Matrix(0, 2), Vector(0), m, LossKind::mse()), SelectionError);
}

TEST(Gbmo, KeepsOnlyTheSignalFeatures) {
  std::mt19937_64 rng(6);
  auto make = [&](Index n) {
    Matrix x = random_matrix(rng, n, 4);
    Vector y = x.col(0) - x.col(2) + 0.05 * random_matrix(rng, n, 1).col(0);
    return Dataset::make(std::move(x), std::move(y), TaskKind::Regression);
  };
  const Dataset train = make(60), val = make(40);
  const TrainedModel m = fit(kRidge, train);
  const auto out = gbmo(train, val, m, LossKind::mse(), GbmoConfig{0.01});
  EXPECT_EQ(mask_support(out.mask), (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(out.trace.stop, StopReason::LossThreshold);
  expect_trace_invariants(out, 4);
  // the first step is always an elimination: nothing exceeds infinity
  ASSERT_TRUE(out.trace.records.front().eliminated.has_value());
  EXPECT_EQ(*out.trace.records.front().eliminated % 2, 1u);
  // the stop record carries the rejected candidate's loss
  ASSERT_TRUE(out.trace.records.back().loss_min.has_value());
  EXPECT_GT(*out.trace.records.back().loss_min, *out.trace.records.front().loss_min * 1.01);
}

TEST(Gbmo, EqualLossContinuesUntilTheFloor) {
  const ConstantPredictor p{6};
  const Dataset val = Dataset::make(Matrix::Ones(4, 6), Vector::Zero(4), TaskKind::Regression);
  const auto out = gbmo(val, val, p, LossKind::mse(), GbmoConfig{0.0, 2});
  EXPECT_EQ(mask_support(out.mask), (std::vector<std::size_t>{4, 5}));
  EXPECT_EQ(out.trace.stop, StopReason::FeatureFloor);
  EXPECT_FALSE(out.trace.records.back().loss_min.has_value());
  expect_trace_invariants(out, 6);
}

TEST(Gbmo, ModelIsNeverRefit) {
  std::mt19937_64 rng(7);
  const Dataset train = Dataset::make(random_matrix(rng, 50, 5), random_matrix(rng, 50, 1).col(0), TaskKind::Regression);
  const Dataset val = Dataset::make(random_matrix(rng, 30, 5), random_matrix(rng, 30, 1).col(0), TaskKind::Regression);
  ModelSpec spec{ModelKind::GradientBoostedTrees, {{"min_child_samples", std::int64_t{3}}, {"n_estimators", std::int64_t{10}}}, 0};
  const TrainedModel m = fit(spec, train);
  const auto before = m.fingerprint();
  const Matrix probe = m.predict(val.features);
  gbmo(train, val, m, LossKind::mse(), GbmoConfig{0.05});
  flbmo(train, val, m, LossKind::mse(), FlbmoConfig{2});
  EXPECT_EQ(m.fingerprint(), before);
  EXPECT_EQ(m.predict(val.features), probe);
}

TEST(Gbmo, ConfigurationErrors) {
  const Toy t = linear_toy(8, 1.0, 1.0, 0.1);
  const TrainedModel m = fit(kRidge, t.train);
  EXPECT_THROW(gbmo(t.train, t.val, m, LossKind::mse(), GbmoConfig{-0.1}), ConfigError);
  EXPECT_THROW(gbmo(t.train, t.val, m, LossKind::mse(), GbmoConfig{0.1, 0}), ConfigError);
  EXPECT_THROW(gbmo(t.train, t.val, m, LossKind::mse(), GbmoConfig{0.1, 3}), ConfigError);
  EXPECT_THROW(flbmo(t.train, t.val, m, LossKind::mse(), FlbmoConfig{0}), ConfigError);
  EXPECT_THROW(flbmo(t.train, t.val, m, LossKind::mse(), FlbmoConfig{3}), ConfigError);
  const TrainedModel narrow = fit(kRidge, t.train.features.leftCols(1), t.train.targets, TaskKind::Regression);
  EXPECT_THROW(gbmo(t.train, t.val, narrow, LossKind::mse(), GbmoConfig{0.1}), DimensionError);
}

namespace {

struct RandomProblem {
  Dataset train, val;
  TrainedModel model;
};

RandomProblem random_problem(std::uint64_t seed, Index m) {
  std::mt19937_64 rng(seed);
  const Matrix xt = random_matrix(rng, 60, m), xv = random_matrix(rng, 30, m);
  Vector w = random_matrix(rng, m, 1).col(0);
  for (Index j = m / 2; j < m; ++j) w[j] *= 0.05;
  Dataset train = Dataset::make(xt, xt * w + 0.3 * random_matrix(rng, 60, 1).col(0), TaskKind::Regression);
  Dataset val = Dataset::make(xv, xv * w + 0.3 * random_matrix(rng, 30, 1).col(0), TaskKind::Regression);
  const ModelSpec spec = seed % 2 ? kRidge : ModelSpec{ModelKind::KNearestNeighbors, {{"k", std::int64_t{4}}}, 0};
  TrainedModel model = fit(spec, train);
  return {std::move(train), std::move(val), std::move(model)};
}

}  // namespace

TEST(GbmoProperty, TraceInvariantsAndStoppingSoundness) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const RandomProblem p = random_problem(seed, 8);
    for (double mu : {0.0, 0.001, 0.05, 1.0}) {
      const std::size_t floor = 1 + seed % 3;
      const auto out = gbmo(p.train, p.val, p.model, LossKind::mse(), GbmoConfig{mu, floor});
      expect_trace_invariants(out, 8);
      double previous = std::numeric_limits<double>::infinity();
      for (const auto& r : out.trace.records) {
        if (r.eliminated) {
          EXPECT_LE(*r.loss_min, previous * (1.0 + mu));
          previous = *r.loss_min;
        } else if (out.trace.stop == StopReason::LossThreshold) {
          EXPECT_GT(*r.loss_min, previous * (1.0 + mu));
        } else {
          EXPECT_EQ(r.remaining, floor);
        }
      }
    }
  }
}

TEST(GbmoProperty, LargerSlackNeverStopsEarlier) {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    const RandomProblem p = random_problem(seed, 8);
    std::vector<std::size_t> previous_sequence;
    std::size_t previous_stop = 0;
    for (double mu : {0.0, 0.0005, 0.01, 0.1, 0.5, 10.0}) {
      const auto out = gbmo(p.train, p.val, p.model, LossKind::mse(), GbmoConfig{mu});
      std::vector<std::size_t> sequence;
      for (const auto& r : out.trace.records) {
        if (r.eliminated) sequence.push_back(*r.eliminated);
      }
      EXPECT_GE(out.trace.records.back().iteration, previous_stop);
      // elimination order does not depend on mu: shorter runs are prefixes
      EXPECT_TRUE(std::equal(previous_sequence.begin(), previous_sequence.end(), sequence.begin()));
      previous_sequence = sequence;
      previous_stop = out.trace.records.back().iteration;
    }
  }
}

TEST(Flbmo, EtaEqualToWidthKeepsEverything) {
  const Toy t = linear_toy(9, 1.0, 1.0, 0.1);
  const auto out = flbmo(t.train, t.val, fit(kRidge, t.train), LossKind::mse(), FlbmoConfig{2});
  EXPECT_EQ(out.mask, Mask::ones(2));
  EXPECT_EQ(out.trace.eliminations(), 0u);
  EXPECT_EQ(out.trace.records.size(), 1u);
  EXPECT_EQ(out.trace.stop, StopReason::TargetReached);
}

TEST(Flbmo, SingleSurvivorIsTheSignalFeature) {
  const Toy t = linear_toy(10, 1.0, 0.0, 0.05);
  const auto out = flbmo(t.train, t.val, fit(kRidge, t.train), LossKind::mse(), FlbmoConfig{1});
  EXPECT_EQ(mask_support(out.mask), (std::vector<std::size_t>{0}));
}

TEST(FlbmoProperty, SupportIsExactlyEta) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const RandomProblem p = random_problem(seed, 7);
    for (std::size_t eta = 1; eta <= 7; ++eta) {
      const auto out = flbmo(p.train, p.val, p.model, LossKind::mse(), FlbmoConfig{eta});
      EXPECT_EQ(out.mask.count(), eta);
      expect_trace_invariants(out, 7);
    }
  }
}

TEST(FlbmoProperty, SharesGbmoEliminationOrder) {
  const RandomProblem p = random_problem(3, 8);
  const auto g = gbmo(p.train, p.val, p.model, LossKind::mse(), GbmoConfig{1e9});
  const auto f = flbmo(p.train, p.val, p.model, LossKind::mse(), FlbmoConfig{1});
  ASSERT_EQ(g.trace.eliminations(), 7u);
  for (std::size_t k = 0; k < 7; ++k) {
    EXPECT_EQ(g.trace.records[k].eliminated, f.trace.records[k].eliminated);
    EXPECT_EQ(g.trace.records[k].loss_min, f.trace.records[k].loss_min);
  }
}

TEST(Finalize, AllOnesRefitEqualsFreshFit) {
  const Toy t = linear_toy(11, 1.0, 2.0, 0.1);
  const auto final = finalize_selection(t.train, Mask::ones(2), kRidge);
  EXPECT_EQ(final.model.fingerprint(), fit(kRidge, t.train).fingerprint());
  EXPECT_EQ(final.indices, (std::vector<std::size_t>{0, 1}));
}

TEST(Finalize, RefitUsesOnlySelectedColumns) {
  const Toy t = linear_toy(12, 1.0, 0.0, 0.05);
  const auto out = gbmo(t.train, t.val, fit(kRidge, t.train), LossKind::mse(), GbmoConfig{0.01});
  const auto final = finalize_selection(t.train, out.mask, kRidge);
  EXPECT_EQ(final.model.input_width(), 1);

  std::mt19937_64 rng(13);
  const Dataset three = Dataset::make(random_matrix(rng, 20, 3), random_matrix(rng, 20, 1).col(0), TaskKind::Regression);
  const auto f3 = finalize_selection(three, Mask::from_bits({1, 0, 1}), kRidge);
  EXPECT_EQ(f3.indices, (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(f3.model.input_width(), 2);
  EXPECT_THROW(finalize_selection(three, Mask::zeros(3), kRidge), SelectionError);
  EXPECT_THROW(finalize_selection(three, Mask::ones(2), kRidge), DimensionError);
}
