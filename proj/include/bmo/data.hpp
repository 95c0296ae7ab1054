#pragma once

// Synthetic data, CSV ingestion, the four-way split, and standardization.

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "bmo/core.hpp"

namespace bmo {

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Target of the synthetic benchmark for one row: sum over the first
/// `n_informative` features of x^2 + sin(x).
inline double synthetic_target(const Eigen::Ref<const Eigen::RowVectorXd>& row, Index n_informative) {
  double y = 0.0;
  for (Index j = 0; j < n_informative; ++j) y += row[j] * row[j] + std::sin(row[j]);
  return y;
}

/// Standard-normal features; only the first `n_informative` enter the target.
inline Dataset generate_synthetic(Index n_samples = 300, Index n_features = 100,
                                  Index n_informative = 10, std::uint64_t seed = 0) {
  if (n_samples < 1) throw ConfigError("synthetic data needs at least one sample");
  if (n_features < 1) throw ConfigError("synthetic data needs at least one feature");
  if (n_informative < 0 || n_informative > n_features) {
    throw ConfigError("n_informative must lie in [0, n_features]");
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n_samples, n_features);
  for (Index i = 0; i < n_samples; ++i) {
    for (Index j = 0; j < n_features; ++j) x(i, j) = normal(rng);
  }
  Vector y(n_samples);
  for (Index i = 0; i < n_samples; ++i) y[i] = synthetic_target(x.row(i), n_informative);
  std::vector<std::string> names;
  for (Index j = 0; j < n_features; ++j) {
    names.push_back((j < n_informative ? "inf" : "red") + std::to_string(j));
  }
  return Dataset::make(std::move(x), std::move(y), TaskKind::Regression, std::move(names));
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

/// Target column by header name, or by 0-based position; negative positions
/// count from the end (-1 is the last column).
using TargetColumn = std::variant<std::string, long>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

}  // namespace detail

/// Reads a comma-separated numeric table. The target column is removed from
/// the features. Classification targets (numeric or text) are encoded
/// 0, 1, ... in order of first appearance. Rows with an unparseable feature
/// cell are rejected with the 1-based line number.
inline Dataset load_csv(const std::string& path, const TargetColumn& target, TaskKind task,
                        bool header = true) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> names;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> row_lines;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    auto cells = detail::split_csv_line(line);
    if (header && names.empty() && rows.empty()) {
      names = std::move(cells);
      continue;
    }
    rows.push_back(std::move(cells));
    row_lines.push_back(line_no);
  }
  if (rows.empty()) throw DataError("'" + path + "' contains no data rows");
  const std::size_t width = header ? names.size() : rows.front().size();
  if (width < 2) throw DataError("'" + path + "' needs a target and at least one feature column");

  std::size_t target_col = 0;
  if (const auto* name = std::get_if<std::string>(&target)) {
    if (!header) throw DataError("target column by name requires a header row");
    auto it = std::find(names.begin(), names.end(), *name);
    if (it == names.end()) throw DataError("target column '" + *name + "' not found in '" + path + "'");
    target_col = static_cast<std::size_t>(it - names.begin());
  } else {
    long pos = std::get<long>(target);
    if (pos < 0) pos += static_cast<long>(width);
    if (pos < 0 || pos >= static_cast<long>(width)) {
      throw DataError("target column index out of range for '" + path + "'");
    }
    target_col = static_cast<std::size_t>(pos);
  }

  const auto n = static_cast<Index>(rows.size());
  Matrix x(n, static_cast<Index>(width - 1));
  Vector y(n);
  std::map<std::string, int> labels;
  std::vector<std::string> label_order;
  for (Index i = 0; i < n; ++i) {
    const auto& cells = rows[static_cast<std::size_t>(i)];
    const std::size_t lineno = row_lines[static_cast<std::size_t>(i)];
    if (cells.size() != width) {
      throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                      " cells, found " + std::to_string(cells.size()));
    }
    Index f = 0;
    for (std::size_t c = 0; c < width; ++c) {
      if (c == target_col) continue;
      double v = 0.0;
      if (!detail::parse_real(cells[c], v)) {
        throw DataError("line " + std::to_string(lineno) + ": non-numeric feature cell '" + cells[c] + "'");
      }
      x(i, f++) = v;
    }
    const std::string& t = cells[target_col];
    if (task == TaskKind::Classification) {
      if (t.empty()) throw DataError("line " + std::to_string(lineno) + ": empty class label");
      auto [it, inserted] = labels.emplace(t, static_cast<int>(labels.size()));
      if (inserted) label_order.push_back(t);
      y[i] = it->second;
    } else {
      double v = 0.0;
      if (!detail::parse_real(t, v)) {
        throw DataError("line " + std::to_string(lineno) + ": non-numeric target '" + t + "'");
      }
      y[i] = v;
    }
  }
  if (task == TaskKind::Classification && labels.size() < 2) {
    throw DataError("'" + path + "' has a single class in the target column");
  }

  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < width; ++c) {
    if (c == target_col) continue;
    feature_names.push_back(header ? names[c] : "x" + std::to_string(c));
  }
  return Dataset::make(std::move(x), std::move(y), task, std::move(feature_names),
                       static_cast<int>(labels.size()));
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

struct SplitSpec {
  // train, feature-selection validation, model validation, test
  std::array<double, 4> fractions{0.45, 0.30, 0.10, 0.15};
  std::uint64_t seed = 0;

  void validate() const {
    double sum = 0.0;
    for (double f : fractions) {
      if (!(f >= 0.0)) throw ConfigError("split fractions must be non-negative");
      sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  }
};

enum SplitPart : std::size_t { kTrain = 0, kFsValidation = 1, kModelValidation = 2, kTest = 3 };

struct SplitBundle {
  Dataset train;      // fits the model whose predictions drive the mask
  Dataset fs_val;     // scores masks
  Dataset model_val;  // picks selector hyperparameters
  Dataset test;
  std::array<std::vector<Index>, 4> source_rows;  // rows of the source dataset, per part

  /// train followed by fs_val: the training set for methods that do not
  /// need a separate selection split.
  Dataset merged() const {
    Dataset out = train;
    const Index a = train.samples();
    const Index b = fs_val.samples();
    out.features.conservativeResize(a + b, Eigen::NoChange);
    out.targets.conservativeResize(a + b);
    out.features.bottomRows(b) = fs_val.features;
    out.targets.tail(b) = fs_val.targets;
    return out;
  }

  const Dataset& part(SplitPart p) const {
    switch (p) {
      case kTrain: return train;
      case kFsValidation: return fs_val;
      case kModelValidation: return model_val;
      case kTest: return test;
    }
    return train;
  }
  Dataset& part(SplitPart p) { return const_cast<Dataset&>(std::as_const(*this).part(p)); }
};

/// Largest-remainder apportionment of n items by `fractions`. Remainder ties
/// go to the earlier part.
inline std::array<Index, 4> apportion(Index n, const std::array<double, 4>& fractions) {
  std::array<Index, 4> sizes{};
  std::array<double, 4> rem{};
  Index assigned = 0;
  for (std::size_t k = 0; k < 4; ++k) {
    const double exact = fractions[k] * static_cast<double>(n);
    // Guard against 0.3 * 100 = 30.000000000000004 style noise.
    const double floor_v = std::floor(exact + 1e-9);
    sizes[k] = static_cast<Index>(floor_v);
    rem[k] = std::max(0.0, exact - floor_v);
    assigned += sizes[k];
  }
  std::array<std::size_t, 4> order{0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < n; k = (k + 1) % 4) {
    ++sizes[order[k]];
    ++assigned;
  }
  return sizes;
}

/// Random four-way partition. Rows are permuted with `spec.seed` and cut into
/// contiguous blocks; for classification each class is apportioned and cut
/// separately so every part keeps the class mix.
inline SplitBundle split(const Dataset& data, const SplitSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::vector<Index> perm(static_cast<std::size_t>(data.samples()));
  std::iota(perm.begin(), perm.end(), Index{0});
  std::shuffle(perm.begin(), perm.end(), rng);

  SplitBundle out;
  auto cut = [&](const std::vector<Index>& rows) {
    const auto sizes = apportion(static_cast<Index>(rows.size()), spec.fractions);
    std::size_t pos = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      for (Index i = 0; i < sizes[k]; ++i) out.source_rows[k].push_back(rows[pos++]);
    }
  };
  if (data.task == TaskKind::Classification) {
    for (int c = 0; c < data.n_classes; ++c) {
      std::vector<Index> rows;
      for (Index r : perm) {
        if (static_cast<int>(data.targets[r]) == c) rows.push_back(r);
      }
      cut(rows);
    }
    // Interleave classes back into permutation order within each part.
    std::vector<std::size_t> rank(perm.size());
    for (std::size_t k = 0; k < perm.size(); ++k) rank[static_cast<std::size_t>(perm[k])] = k;
    for (auto& rows : out.source_rows) {
      std::sort(rows.begin(), rows.end(), [&](Index a, Index b) {
        return rank[static_cast<std::size_t>(a)] < rank[static_cast<std::size_t>(b)];
      });
    }
  } else {
    cut(perm);
  }

  static constexpr std::array<const char*, 4> kNames{"train", "fs_validation", "model_validation", "test"};
  for (std::size_t k = 0; k < 4; ++k) {
    if (out.source_rows[k].empty()) {
      throw ConfigError(std::string("split part '") + kNames[k] + "' would be empty");
    }
    out.part(static_cast<SplitPart>(k)) = data.subset(out.source_rows[k]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

/// Per-column mean and (population) standard deviation from the training
/// split. Constant columns map to zero.
class Standardizer {
 public:
  static Standardizer estimate(const Dataset& train) {
    Standardizer s;
    const Index n = train.samples();
    if (n < 1) throw DataError("cannot standardize from an empty training split");
    s.mean_ = train.features.colwise().mean();
    s.std_ = ((train.features.rowwise() - s.mean_.transpose()).array().square().colwise().sum() /
              static_cast<double>(n))
                 .sqrt()
                 .transpose();
    if (train.task == TaskKind::Regression) {
      s.scale_targets_ = true;
      s.target_mean_ = train.targets.mean();
      s.target_std_ = std::sqrt((train.targets.array() - s.target_mean_).square().mean());
      if (!(s.target_std_ > 0.0)) s.target_std_ = 1.0;
    }
    return s;
  }

  bool is_constant(Index j) const { return !(std_[j] > 0.0); }

  Matrix transform(const Matrix& x) const {
    Matrix out(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
      if (is_constant(j)) {
        out.col(j).setZero();
      } else {
        out.col(j) = (x.col(j).array() - mean_[j]) / std_[j];
      }
    }
    return out;
  }

  /// Inverse of transform for non-constant columns; constant columns come
  /// back as their training mean.
  Matrix inverse_transform(const Matrix& z) const {
    Matrix out(z.rows(), z.cols());
    for (Index j = 0; j < z.cols(); ++j) {
      out.col(j) = is_constant(j) ? Vector::Constant(z.rows(), mean_[j])
                                  : Vector((z.col(j).array() * std_[j] + mean_[j]).matrix());
    }
    return out;
  }

  Vector transform_targets(const Vector& y) const {
    if (!scale_targets_) return y;
    return (y.array() - target_mean_) / target_std_;
  }
  Vector inverse_transform_targets(const Vector& y) const {
    if (!scale_targets_) return y;
    return y.array() * target_std_ + target_mean_;
  }

  Dataset apply(const Dataset& d) const {
    Dataset out = d;
    out.features = transform(d.features);
    out.targets = transform_targets(d.targets);
    return out;
  }

  const Vector& means() const { return mean_; }
  const Vector& stds() const { return std_; }

 private:
  Vector mean_, std_;
  bool scale_targets_ = false;
  double target_mean_ = 0.0;
  double target_std_ = 1.0;
};

/// All four parts transformed with statistics of the training part.
/// Regression targets are standardized as well.
inline std::pair<SplitBundle, Standardizer> standardize(const SplitBundle& bundle) {
  Standardizer s = Standardizer::estimate(bundle.train);
  SplitBundle out = bundle;
  for (std::size_t k = 0; k < 4; ++k) {
    const auto p = static_cast<SplitPart>(k);
    out.part(p) = s.apply(bundle.part(p));
  }
  return {std::move(out), std::move(s)};
}

}  // namespace bmo
