#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "bmo/core.hpp"
#include "bmo/data.hpp"
#include "bmo/models/spec.hpp"
#include "json.hpp"

namespace bmo {

enum class Method { AllFeatures, Gbmo, Flbmo, CrossCorrelation, MutualInformation, Rfe };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::AllFeatures: return "all_features";
    case Method::Gbmo: return "gbmo";
    case Method::Flbmo: return "flbmo";
    case Method::CrossCorrelation: return "cc";
    case Method::MutualInformation: return "mi";
    case Method::Rfe: return "rfe";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : {Method::AllFeatures, Method::Gbmo, Method::Flbmo, Method::CrossCorrelation,
                   Method::MutualInformation, Method::Rfe}) {
    if (s == to_string(m)) return m;
  }
  throw ConfigError("unknown method '" + s + "'");
}

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> v{Method::AllFeatures, Method::Gbmo, Method::Flbmo,
                                     Method::CrossCorrelation, Method::MutualInformation, Method::Rfe};
  return v;
}

struct Fraction {
  std::int64_t num = 1;
  std::int64_t den = 1;

  static Fraction parse(const std::string& s) {
    Fraction f;
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) {
        f.num = std::stoll(s);
      } else {
        f.num = std::stoll(s.substr(0, slash));
        f.den = std::stoll(s.substr(slash + 1));
      }
    } catch (const std::exception&) {
      throw ConfigError("cannot parse fraction '" + s + "'");
    }
    if (f.num < 0 || f.den <= 0) throw ConfigError("fraction '" + s + "' must be non-negative");
    return f;
  }
};

/// Rounds each fraction * M half-up, clamps to [1, M-1], and drops repeats
/// (first occurrence wins).
inline std::vector<std::size_t> resolve_eta_grid(const std::vector<Fraction>& fractions, std::size_t m) {
  if (m < 2) throw ConfigError("eta grid needs at least two features");
  std::vector<std::size_t> out;
  const auto mm = static_cast<std::int64_t>(m);
  for (const Fraction& f : fractions) {
    // floor(M*num/den + 1/2) in exact integer arithmetic
    const std::int64_t rounded = (2 * mm * f.num + f.den) / (2 * f.den);
    const auto eta = static_cast<std::size_t>(std::clamp<std::int64_t>(rounded, 1, mm - 1));
    if (std::find(out.begin(), out.end(), eta) == out.end()) out.push_back(eta);
  }
  return out;
}

struct DatasetSource {
  enum class Kind { Synthetic, Csv };
  Kind kind = Kind::Synthetic;
  // synthetic
  Index samples = 300;
  Index features = 100;
  Index informative = 10;
  // csv
  std::string path;
  TargetColumn target = -1L;
  bool header = true;
  TaskKind task = TaskKind::Regression;
};

struct ExperimentConfig {
  std::string name = "experiment";
  DatasetSource source;
  ModelKind model = ModelKind::GradientBoostedTrees;
  std::optional<std::vector<std::pair<std::string, std::vector<HyperValue>>>> grid_axes;
  std::vector<Method> methods = all_methods();
  std::vector<double> mu_grid{0.00025, 0.001, 0.01, 0.05};
  std::size_t gbmo_min_features = 1;
  std::vector<Fraction> eta_fractions{{1, 6}, {1, 5}, {1, 4}, {1, 2}};
  std::vector<std::size_t> eta_values;  // overrides eta_fractions when non-empty
  SplitSpec split;
  int cv_folds = 3;
  int mi_bins = 10;
  std::uint64_t seed = 0;
  std::string output_dir = "out";

  TaskKind task() const {
    return source.kind == DatasetSource::Kind::Synthetic ? TaskKind::Regression : source.task;
  }
  LossKind loss() const { return LossKind::for_task(task()); }

  HyperparameterGrid grid() const {
    if (grid_axes) return HyperparameterGrid::cartesian(model, *grid_axes, seed);
    return default_grid(model, seed);
  }

  std::vector<std::size_t> eta_grid(std::size_t m) const {
    if (!eta_values.empty()) {
      for (auto e : eta_values) {
        if (e < 1 || e > m) throw ConfigError("eta value " + std::to_string(e) + " outside [1, M]");
      }
      return eta_values;
    }
    return resolve_eta_grid(eta_fractions, m);
  }

  void validate() const {
    if (methods.empty()) throw ConfigError("no methods configured");
    if (mu_grid.empty()) throw ConfigError("mu grid is empty");
    for (double mu : mu_grid) {
      if (!(mu >= 0.0)) throw ConfigError("mu values must be non-negative");
    }
    if (eta_values.empty() && eta_fractions.empty()) throw ConfigError("eta grid is empty");
    if (cv_folds < 2) throw ConfigError("cv_folds must be at least 2");
    if (mi_bins < 1) throw ConfigError("mi_bins must be positive");
    if (gbmo_min_features < 1) throw ConfigError("gbmo min_features must be positive");
    split.validate();
    grid().check();
  }

  /// The synthetic benchmark: 300 x 100 standard normal features, 10
  /// informative, gradient-boosted trees, eta grid {6, 10, 15, 20}.
  static ExperimentConfig synthetic(std::uint64_t seed) {
    ExperimentConfig c;
    c.name = "synthetic";
    c.source.kind = DatasetSource::Kind::Synthetic;
    c.model = ModelKind::GradientBoostedTrees;
    c.eta_values = {6, 10, 15, 20};
    c.seed = seed;
    c.split.seed = seed;
    return c;
  }

  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    try {
      return parse(j, base_dir);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }

  static ExperimentConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    return from_json(j, std::filesystem::path(path).parent_path());
  }

 private:
  static HyperValue hyper_from_json(const nlohmann::json& v) {
    if (v.is_number_integer()) return v.get<std::int64_t>();
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return v.get<std::string>();
    if (v.is_array()) return v.get<IntList>();
    throw ConfigError("unsupported hyperparameter value " + v.dump());
  }

  static ExperimentConfig parse(const nlohmann::json& j, const std::filesystem::path& base_dir) {
    ExperimentConfig c;
    c.name = j.value("name", c.name);
    c.seed = j.value("seed", c.seed);
    c.split.seed = c.seed;

    const auto& ds = j.at("dataset");
    const std::string kind = ds.value("kind", "synthetic");
    if (kind == "synthetic") {
      c.source.kind = DatasetSource::Kind::Synthetic;
      c.source.samples = ds.value("samples", c.source.samples);
      c.source.features = ds.value("features", c.source.features);
      c.source.informative = ds.value("informative", c.source.informative);
    } else if (kind == "csv") {
      c.source.kind = DatasetSource::Kind::Csv;
      std::filesystem::path p = ds.at("path").get<std::string>();
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      c.source.path = p.string();
      if (ds.contains("target")) {
        const auto& t = ds.at("target");
        if (t.is_string()) {
          c.source.target = t.get<std::string>();
        } else {
          c.source.target = t.get<long>();
        }
      }
      c.source.header = ds.value("header", true);
      const std::string task = ds.at("task").get<std::string>();
      if (task == "regression") {
        c.source.task = TaskKind::Regression;
      } else if (task == "classification") {
        c.source.task = TaskKind::Classification;
      } else {
        throw ConfigError("unknown task '" + task + "'");
      }
    } else {
      throw ConfigError("unknown dataset kind '" + kind + "'");
    }

    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model = parse_model_kind(m.value("kind", "gbt"));
      if (m.contains("grid")) {
        std::vector<std::pair<std::string, std::vector<HyperValue>>> axes;
        for (const auto& [name, values] : m.at("grid").items()) {
          std::vector<HyperValue> vs;
          if (values.is_array() && !(name == "hidden_layer_sizes" && !values.empty() && values[0].is_number())) {
            for (const auto& v : values) vs.push_back(hyper_from_json(v));
          } else {
            vs.push_back(hyper_from_json(values));
          }
          axes.emplace_back(name, std::move(vs));
        }
        c.grid_axes = std::move(axes);
      }
    }
    if (j.contains("methods")) {
      c.methods.clear();
      for (const auto& s : j.at("methods")) c.methods.push_back(parse_method(s.get<std::string>()));
    }
    if (j.contains("gbmo")) {
      const auto& g = j.at("gbmo");
      if (g.contains("mu")) c.mu_grid = g.at("mu").get<std::vector<double>>();
      c.gbmo_min_features = g.value("min_features", c.gbmo_min_features);
    }
    if (j.contains("eta")) {
      const auto& e = j.at("eta");
      if (e.contains("values")) c.eta_values = e.at("values").get<std::vector<std::size_t>>();
      if (e.contains("fractions")) {
        c.eta_fractions.clear();
        for (const auto& f : e.at("fractions")) c.eta_fractions.push_back(Fraction::parse(f.get<std::string>()));
      }
    }
    if (j.contains("split")) {
      const auto fr = j.at("split").at("fractions").get<std::vector<double>>();
      if (fr.size() != 4) throw ConfigError("split.fractions needs four entries");
      std::copy(fr.begin(), fr.end(), c.split.fractions.begin());
    }
    c.cv_folds = j.value("cv_folds", c.cv_folds);
    c.mi_bins = j.value("mi_bins", c.mi_bins);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.validate();
    return c;
  }
};

}  // namespace bmo
