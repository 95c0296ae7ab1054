#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "bmo/data.hpp"

using namespace bmo;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
  const fs::path p = fs::temp_directory_path() / ("bmo_test_" + name);
  std::ofstream(p) << body;
  return p.string();
}

std::string sonar_path() { return std::string(BMO_TEST_DATA_DIR) + "/connectionist_bench_sonar.csv"; }

SplitSpec seeded(std::uint64_t seed) {
  SplitSpec s;
  s.seed = seed;
  return s;
}

Dataset labelled(Index n, int classes) {
  Matrix x(n, 2);
  Vector y(n);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = static_cast<double>(i);
    x(i, 1) = static_cast<double>(i % 7);
    y[i] = static_cast<double>(i % classes);
  }
  return Dataset::make(std::move(x), std::move(y), TaskKind::Classification);
}

}  // namespace

TEST(Synthetic, TargetAtZeroAndOne) {
  EXPECT_EQ(synthetic_target(Eigen::RowVectorXd::Zero(100), 10), 0.0);
  EXPECT_NEAR(synthetic_target(Eigen::RowVectorXd::Ones(100), 10), 10.0 * (1.0 + std::sin(1.0)), 1e-12);
}

TEST(Synthetic, TargetMatchesFormulaAndShape) {
  const Dataset d = generate_synthetic(300, 100, 10, 4);
  EXPECT_EQ(d.samples(), 300);
  EXPECT_EQ(d.features.cols(), 100);
  EXPECT_EQ(d.task, TaskKind::Regression);
  for (Index i = 0; i < d.samples(); ++i) {
    double y = 0.0;
    for (Index j = 0; j < 10; ++j) y += std::pow(d.features(i, j), 2) + std::sin(d.features(i, j));
    EXPECT_NEAR(d.targets[i], y, 1e-12);
  }
}

TEST(Synthetic, RedundantColumnsDoNotEnterTarget) {
  Dataset d = generate_synthetic(50, 20, 5, 2);
  Eigen::RowVectorXd row = d.features.row(3);
  const double y = synthetic_target(row, 5);
  std::mt19937_64 rng(1);
  std::shuffle(row.data() + 5, row.data() + 20, rng);
  row.tail(15) *= -3.0;
  EXPECT_EQ(synthetic_target(row, 5), y);
}

TEST(Synthetic, DeterministicPerSeed) {
  const Dataset a = generate_synthetic(40, 8, 3, 9), b = generate_synthetic(40, 8, 3, 9);
  const Dataset c = generate_synthetic(40, 8, 3, 10);
  EXPECT_EQ(a.features, b.features);
  EXPECT_EQ(a.targets, b.targets);
  EXPECT_NE(a.features, c.features);
}

TEST(Synthetic, FeatureMomentsAreStandardNormal) {
  const Dataset d = generate_synthetic(2000, 5, 5, 3);
  for (Index j = 0; j < 5; ++j) {
    const double mean = d.features.col(j).mean();
    const double var = (d.features.col(j).array() - mean).square().mean();
    EXPECT_NEAR(mean, 0.0, 4.0 / std::sqrt(2000.0));
    EXPECT_NEAR(var, 1.0, 0.1);
  }
}

TEST(Synthetic, InvalidArgumentsAreConfigErrors) {
  EXPECT_THROW(generate_synthetic(10, 5, 6, 0), ConfigError);
  EXPECT_THROW(generate_synthetic(10, 5, -1, 0), ConfigError);
  EXPECT_THROW(generate_synthetic(0, 5, 1, 0), ConfigError);
  EXPECT_THROW(generate_synthetic(10, 0, 0, 0), ConfigError);
  const Dataset zero_informative = generate_synthetic(10, 3, 0, 0);
  EXPECT_EQ(zero_informative.targets, Vector::Zero(10));
}

TEST(Csv, ReadsHeaderAndTargetByName) {
  const auto path = write_temp("small.csv", "a,b,y\n1,2,3\n4,5,6\n7,8,9\n");
  const Dataset d = load_csv(path, std::string("y"), TaskKind::Regression);
  Matrix x(3, 2);
  x << 1, 2, 4, 5, 7, 8;
  EXPECT_EQ(d.features, x);
  EXPECT_EQ(d.targets, Vector::LinSpaced(3, 3, 9));
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "b"}));

  const Dataset first = load_csv(path, 0L, TaskKind::Regression);
  EXPECT_EQ(first.targets, Vector::LinSpaced(3, 1, 7));
  EXPECT_EQ(first.feature_names, (std::vector<std::string>{"b", "y"}));
}

TEST(Csv, EncodesStringLabelsByFirstAppearance) {
  const auto path = write_temp("labels.csv", "x,cls\n0.1,R\n0.2,M\n0.3,R\n0.4,Q\n");
  const Dataset d = load_csv(path, -1L, TaskKind::Classification);
  EXPECT_EQ(d.targets, (Vector(4) << 0, 1, 0, 2).finished());
  EXPECT_EQ(d.n_classes, 3);
}

TEST(Csv, Sonar) {
  const Dataset d = load_csv(sonar_path(), std::string("label"), TaskKind::Classification);
  EXPECT_EQ(d.samples(), 208);
  EXPECT_EQ(d.features.cols(), 60);
  EXPECT_EQ(d.n_classes, 2);
  EXPECT_GE(d.features.minCoeff(), 0.0);
  EXPECT_LE(d.features.maxCoeff(), 1.0);
}

TEST(Csv, Errors) {
  EXPECT_THROW(load_csv("/nonexistent/bmo.csv", -1L, TaskKind::Regression), DataError);
  const auto path = write_temp("bad.csv", "a,y\n1,2\nfoo,3\n");
  try {
    load_csv(path, std::string("y"), TaskKind::Regression);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  const auto ok = write_temp("ok.csv", "a,y\n1,2\n3,4\n");
  EXPECT_THROW(load_csv(ok, std::string("missing"), TaskKind::Regression), DataError);
  EXPECT_THROW(load_csv(ok, 5L, TaskKind::Regression), DataError);
  const auto one_class = write_temp("one.csv", "a,y\n1,A\n2,A\n");
  EXPECT_THROW(load_csv(one_class, std::string("y"), TaskKind::Classification), DataError);
  const auto ragged = write_temp("ragged.csv", "a,b,y\n1,2,3\n4,5\n");
  EXPECT_THROW(load_csv(ragged, std::string("y"), TaskKind::Regression), DataError);
}

TEST(Split, DefaultFractionsOnHundredRows) {
  const Dataset d = generate_synthetic(100, 3, 1, 0);
  const SplitBundle b = split(d, SplitSpec{});
  EXPECT_EQ(b.train.samples(), 45);
  EXPECT_EQ(b.fs_val.samples(), 30);
  EXPECT_EQ(b.model_val.samples(), 10);
  EXPECT_EQ(b.test.samples(), 15);
  EXPECT_EQ(b.merged().samples(), 75);
  EXPECT_EQ(b.merged().features.topRows(45), b.train.features);
  EXPECT_EQ(b.merged().features.bottomRows(30), b.fs_val.features);
}

TEST(Split, ApportionLargestRemainder) {
  EXPECT_EQ(apportion(300, {0.45, 0.30, 0.10, 0.15}), (std::array<Index, 4>{135, 90, 30, 45}));
  EXPECT_EQ(apportion(208, {0.45, 0.30, 0.10, 0.15}), (std::array<Index, 4>{94, 62, 21, 31}));
  EXPECT_EQ(apportion(3, {0.25, 0.25, 0.25, 0.25}), (std::array<Index, 4>{1, 1, 1, 0}));
}

TEST(Split, InvalidFractions) {
  const Dataset d = generate_synthetic(20, 2, 1, 0);
  EXPECT_THROW(split(d, SplitSpec{{1.0, 0.0, 0.0, 0.0}, 0}), ConfigError);
  EXPECT_THROW(split(d, SplitSpec{{0.5, 0.3, 0.1, 0.2}, 0}), ConfigError);
  EXPECT_THROW(split(d, SplitSpec{{-0.1, 0.5, 0.3, 0.3}, 0}), ConfigError);
}

TEST(Split, SeedControlsAssignment) {
  const Dataset d = generate_synthetic(60, 2, 1, 0);
  EXPECT_EQ(split(d, seeded(3)).source_rows, split(d, seeded(3)).source_rows);
  EXPECT_NE(split(d, seeded(3)).source_rows, split(d, seeded(4)).source_rows);
}

TEST(SplitProperty, PartitionsRows) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 20 + static_cast<Index>(rng() % 300);
    const bool classify = trial % 2 == 1;
    const Dataset d = classify ? labelled(n, 2 + trial % 3) : generate_synthetic(n, 2, 1, rng());
    const SplitBundle b = split(d, seeded(rng()));
    std::set<Index> seen;
    std::size_t total = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const auto& rows = b.source_rows[k];
      total += rows.size();
      seen.insert(rows.begin(), rows.end());
      EXPECT_EQ(b.part(static_cast<SplitPart>(k)).features, d.subset(rows).features);
    }
    EXPECT_EQ(total, static_cast<std::size_t>(n));
    EXPECT_EQ(seen.size(), static_cast<std::size_t>(n));
  }
}

TEST(Split, StratifiesClassification) {
  const Dataset d = labelled(200, 2);
  const SplitBundle b = split(d, seeded(1));
  for (std::size_t k = 0; k < 4; ++k) {
    const Dataset& part = b.part(static_cast<SplitPart>(k));
    const double share = part.targets.mean();
    EXPECT_NEAR(share, 0.5, 0.5 / static_cast<double>(part.samples()) + 1e-12);
  }
}

TEST(Standardizer, MeanAndStdMapToZeroAndOne) {
  Matrix x(4, 2);
  x << 3, 1,
      7, 1,
      3, 1,
      7, 1;  // column 0: mean 5, population std 2; column 1 constant
  const Dataset train = Dataset::make(x, Vector::LinSpaced(4, 0, 3), TaskKind::Regression);
  const Standardizer s = Standardizer::estimate(train);
  EXPECT_EQ(s.means()[0], 5.0);
  EXPECT_EQ(s.stds()[0], 2.0);
  Matrix probe(2, 2);
  probe << 5, 9, 7, -4;
  const Matrix z = s.transform(probe);
  EXPECT_EQ(z(0, 0), 0.0);
  EXPECT_EQ(z(1, 0), 1.0);
  EXPECT_EQ(z.col(1), Vector::Zero(2));
}

TEST(StandardizerProperty, RoundTrip) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> normal(3.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix x(30, 4);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    const Dataset train = Dataset::make(x, x.col(0), TaskKind::Regression);
    const Standardizer s = Standardizer::estimate(train);
    EXPECT_LT((s.inverse_transform(s.transform(x)) - x).cwiseAbs().maxCoeff(), 1e-9);
    const Vector y = x.col(1);
    EXPECT_LT((s.inverse_transform_targets(s.transform_targets(y)) - y).cwiseAbs().maxCoeff(), 1e-9);
    const Matrix z = s.transform(x);
    EXPECT_LT(z.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Standardizer, UsesTrainingStatisticsOnly) {
  const Dataset d = generate_synthetic(200, 4, 2, 7);
  const SplitBundle b = split(d, seeded(7));
  const auto [z, s] = standardize(b);
  EXPECT_LT(z.train.features.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(std::abs(z.train.targets.mean()), 1e-12);
  EXPECT_GT(z.test.features.colwise().mean().cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_EQ(z.test.features, s.transform(b.test.features));
  const Dataset cls = labelled(100, 2);
  const auto [zc, sc] = standardize(split(cls, seeded(1)));
  EXPECT_EQ(zc.train.targets, split(cls, seeded(1)).train.targets);
}
