#pragma once

// Model specifications: a model kind, its hyperparameters, and a seed.
// Each kind has a fixed schema (name, type, default, admissible range) and a
// spec is validated against it before any fitting happens.

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "bmo/core.hpp"
#include "bmo/models/model.hpp"

namespace bmo {

using IntList = std::vector<std::int64_t>;
using HyperValue = std::variant<std::int64_t, double, std::string, IntList>;

inline std::string format_hyper(const HyperValue& v) {
  std::ostringstream os;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, IntList>) {
          os << '(';
          for (std::size_t i = 0; i < x.size(); ++i) os << (i ? "," : "") << x[i];
          os << ')';
        } else if constexpr (std::is_same_v<T, double>) {
          os << fmt::format("{}", x);  // shortest round-trip form
        } else {
          os << x;
        }
      },
      v);
  return os.str();
}

enum class HyperType { Int, Real, Text, IntListT };

struct HyperSchemaEntry {
  std::string name;
  HyperType type;
  HyperValue default_value;
  double min = -std::numeric_limits<double>::infinity();
  double max = std::numeric_limits<double>::infinity();
  bool min_exclusive = false;
  std::vector<std::string> choices;  // Text only
};

inline const std::vector<HyperSchemaEntry>& schema_for(ModelKind kind) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  static const std::vector<HyperSchemaEntry> ridge{
      {"penalty", HyperType::Real, 1.0, 0.0, inf},
  };
  static const std::vector<HyperSchemaEntry> knn{
      {"k", HyperType::Int, std::int64_t{5}, 1.0, inf},
  };
  static const std::vector<HyperSchemaEntry> mlp{
      {"hidden_layer_sizes", HyperType::IntListT, IntList{20}, 1.0, inf},
      {"activation", HyperType::Text, std::string("relu"), -inf, inf, false, {"relu", "logistic"}},
      {"alpha", HyperType::Real, 1e-4, 0.0, inf},
      {"learning_rate_init", HyperType::Real, 1e-3, 0.0, inf, true},
      {"max_epochs", HyperType::Int, std::int64_t{200}, 1.0, inf},
      {"batch_size", HyperType::Int, std::int64_t{32}, 1.0, inf},
  };
  static const std::vector<HyperSchemaEntry> gbt{
      {"num_leaves", HyperType::Int, std::int64_t{31}, 2.0, inf},
      {"learning_rate", HyperType::Real, 0.1, 0.0, inf, true},
      {"n_estimators", HyperType::Int, std::int64_t{100}, 1.0, inf},
      {"subsample", HyperType::Real, 1.0, 0.0, 1.0, true},
      {"colsample_bytree", HyperType::Real, 1.0, 0.0, 1.0, true},
      {"min_child_samples", HyperType::Int, std::int64_t{20}, 1.0, inf},
      {"max_depth", HyperType::Int, std::int64_t{8}, 1.0, inf},
      {"reg_lambda", HyperType::Real, 0.0, 0.0, inf},
  };
  switch (kind) {
    case ModelKind::Ridge: return ridge;
    case ModelKind::KNearestNeighbors: return knn;
    case ModelKind::MultiLayerPerceptron: return mlp;
    case ModelKind::GradientBoostedTrees: return gbt;
  }
  return ridge;
}

struct ModelSpec {
  ModelKind kind = ModelKind::Ridge;
  std::map<std::string, HyperValue> hyperparameters;
  std::uint64_t seed = 0;

  ModelSpec& set(const std::string& name, HyperValue v) {
    hyperparameters[name] = std::move(v);
    return *this;
  }

  /// Integer hyperparameter, falling back to the schema default.
  std::int64_t get_int(const std::string& name) const {
    return std::get<std::int64_t>(lookup(name));
  }
  /// Real hyperparameter; integer values are widened.
  double get_real(const std::string& name) const {
    const HyperValue& v = lookup(name);
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::get<double>(v);
  }
  std::string get_text(const std::string& name) const {
    return std::get<std::string>(lookup(name));
  }
  IntList get_int_list(const std::string& name) const {
    const HyperValue& v = lookup(name);
    if (const auto* i = std::get_if<std::int64_t>(&v)) return IntList{*i};
    return std::get<IntList>(v);
  }

  /// "name=value" pairs in name order, for reports.
  std::string describe() const {
    std::string out = to_string(kind);
    for (const auto& [k, v] : hyperparameters) out += " " + k + "=" + format_hyper(v);
    return out;
  }

  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;

 private:
  const HyperValue& lookup(const std::string& name) const {
    if (auto it = hyperparameters.find(name); it != hyperparameters.end()) return it->second;
    for (const auto& e : schema_for(kind)) {
      if (e.name == name) return e.default_value;
    }
    throw SpecError(std::string("unknown hyperparameter '") + name + "' for " + to_string(kind));
  }
};

/// Checks names, types, and ranges against the kind's schema.
inline void validate(const ModelSpec& spec) {
  const auto& schema = schema_for(spec.kind);
  for (const auto& [name, value] : spec.hyperparameters) {
    const HyperSchemaEntry* entry = nullptr;
    for (const auto& e : schema) {
      if (e.name == name) entry = &e;
    }
    const std::string where = std::string(to_string(spec.kind)) + "." + name;
    if (!entry) throw SpecError("unknown hyperparameter " + where);

    auto check_range = [&](double x) {
      const bool below = entry->min_exclusive ? x <= entry->min : x < entry->min;
      if (below || x > entry->max || !std::isfinite(x)) {
        throw SpecError(where + " = " + format_hyper(value) + " out of range");
      }
    };
    switch (entry->type) {
      case HyperType::Int:
        if (!std::holds_alternative<std::int64_t>(value)) throw SpecError(where + " must be an integer");
        check_range(static_cast<double>(std::get<std::int64_t>(value)));
        break;
      case HyperType::Real:
        if (std::holds_alternative<std::int64_t>(value)) {
          check_range(static_cast<double>(std::get<std::int64_t>(value)));
        } else if (std::holds_alternative<double>(value)) {
          check_range(std::get<double>(value));
        } else {
          throw SpecError(where + " must be a number");
        }
        break;
      case HyperType::Text: {
        if (!std::holds_alternative<std::string>(value)) throw SpecError(where + " must be a string");
        const auto& s = std::get<std::string>(value);
        if (!entry->choices.empty() &&
            std::find(entry->choices.begin(), entry->choices.end(), s) == entry->choices.end()) {
          throw SpecError(where + " = '" + s + "' is not an accepted value");
        }
        break;
      }
      case HyperType::IntListT: {
        IntList list;
        if (const auto* i = std::get_if<std::int64_t>(&value)) {
          list = {*i};
        } else if (const auto* l = std::get_if<IntList>(&value)) {
          list = *l;
        } else {
          throw SpecError(where + " must be a list of integers");
        }
        if (list.empty()) throw SpecError(where + " must not be empty");
        for (auto x : list) check_range(static_cast<double>(x));
        break;
      }
    }
  }
}

/// Candidate specs for grid search. All candidates share one kind.
struct HyperparameterGrid {
  std::vector<ModelSpec> candidates;

  /// Cartesian product of per-parameter candidate lists. The last parameter
  /// in `axes` varies fastest.
  static HyperparameterGrid cartesian(
      ModelKind kind, const std::vector<std::pair<std::string, std::vector<HyperValue>>>& axes,
      std::uint64_t seed) {
    HyperparameterGrid grid;
    grid.candidates.push_back(ModelSpec{kind, {}, seed});
    for (const auto& [name, values] : axes) {
      if (values.empty()) throw ConfigError("grid axis '" + name + "' has no values");
      std::vector<ModelSpec> next;
      for (const auto& base : grid.candidates) {
        for (const auto& v : values) {
          ModelSpec s = base;
          s.set(name, v);
          next.push_back(std::move(s));
        }
      }
      grid.candidates = std::move(next);
    }
    for (const auto& c : grid.candidates) validate(c);
    return grid;
  }

  void check() const {
    if (candidates.empty()) throw ConfigError("hyperparameter grid is empty");
    for (const auto& c : candidates) {
      if (c.kind != candidates.front().kind) {
        throw ConfigError("hyperparameter grid mixes model kinds");
      }
    }
  }
};

/// The search spaces used in the experiments. MLP and GBT follow the
/// published grid; ridge and kNN get small grids of their own.
inline HyperparameterGrid default_grid(ModelKind kind, std::uint64_t seed) {
  using V = std::vector<HyperValue>;
  switch (kind) {
    case ModelKind::MultiLayerPerceptron:
      return HyperparameterGrid::cartesian(
          kind,
          {{"hidden_layer_sizes", V{IntList{20}, IntList{40}, IntList{10}, IntList{20, 10}}},
           {"activation", V{std::string("relu"), std::string("logistic")}},
           {"alpha", V{0.0001, 0.001, 0.01}},
           {"learning_rate_init", V{0.001, 0.01}}},
          seed);
    case ModelKind::GradientBoostedTrees:
      return HyperparameterGrid::cartesian(kind,
                                           {{"num_leaves", V{std::int64_t{7}, std::int64_t{15}}},
                                            {"learning_rate", V{0.01, 0.025, 0.05}},
                                            {"n_estimators", V{std::int64_t{10}, std::int64_t{20}}},
                                            {"subsample", V{0.6, 0.8}},
                                            {"colsample_bytree", V{0.6, 0.8}},
                                            {"min_child_samples", V{std::int64_t{5}, std::int64_t{10}}}},
                                           seed);
    case ModelKind::Ridge:
      return HyperparameterGrid::cartesian(kind, {{"penalty", V{0.01, 0.1, 1.0, 10.0, 100.0}}},
                                           seed);
    case ModelKind::KNearestNeighbors:
      return HyperparameterGrid::cartesian(
          kind, {{"k", V{std::int64_t{1}, std::int64_t{3}, std::int64_t{5}, std::int64_t{9}}}},
          seed);
  }
  throw ConfigError("unknown model kind");
}

inline ModelKind parse_model_kind(const std::string& name) {
  if (name == "ridge") return ModelKind::Ridge;
  if (name == "knn") return ModelKind::KNearestNeighbors;
  if (name == "mlp") return ModelKind::MultiLayerPerceptron;
  if (name == "gbt" || name == "lightgbm") return ModelKind::GradientBoostedTrees;
  throw ConfigError("unknown model kind '" + name + "'");
}

}  // namespace bmo
