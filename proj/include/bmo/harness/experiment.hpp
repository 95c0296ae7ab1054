#pragma once

// End-to-end comparison of feature-selection methods on one dataset.
//
// Protocol: four-way split, standardization from the training part, model
// tuning by k-fold grid search, per-method hyperparameter selection on the
// model-validation part, and a single test evaluation per method.

#include <algorithm>
#include <array>
#include <chrono>
#include <ctime>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bmo/baselines.hpp"
#include "bmo/data.hpp"
#include "bmo/harness/config.hpp"
#include "bmo/models/fit.hpp"
#include "bmo/selectors.hpp"

namespace bmo {

enum class ErrorCategory { Config, Data, Runtime };

/// An error raised inside one stage of the experiment, tagged with the stage
/// name and a category that maps onto CLI exit codes.
class StageError : public Error {
 public:
  StageError(std::string stage, ErrorCategory category, const std::string& what)
      : Error("[" + stage + "] " + what), stage_(std::move(stage)), category_(category) {}
  const std::string& stage() const { return stage_; }
  ErrorCategory category() const { return category_; }

 private:
  std::string stage_;
  ErrorCategory category_;
};

struct ReportRow {
  std::string method;
  std::optional<std::size_t> n_selected;
  std::string hyperparameter;  // validated value, e.g. "mu=0.01"
  std::optional<double> val_loss;
  std::optional<double> test_loss;
  std::vector<std::size_t> selected;
  std::string note;
};

struct NamedTrace {
  std::string name;  // e.g. "gbmo_mu=0.01"
  SelectionTrace trace;
};

struct ExperimentReport {
  std::string name;
  TaskKind task = TaskKind::Regression;
  LossKind loss;
  std::uint64_t seed = 0;
  Index n_samples = 0;
  Index n_features = 0;
  std::array<Index, 4> split_sizes{};
  std::string selector_model;  // tuned on the training part
  std::string baseline_model;  // tuned on train + fs validation
  std::vector<ReportRow> rows;
  std::vector<NamedTrace> traces;
  std::map<std::string, int> test_reads;  // per method
  std::string started_at;
  double elapsed_seconds = 0.0;

  const ReportRow* row(const std::string& method) const {
    for (const auto& r : rows) {
      if (r.method == method) return &r;
    }
    return nullptr;
  }
};

namespace detail {

template <class Fn>
auto run_stage(const std::string& stage, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError& e) {
    throw StageError(stage, ErrorCategory::Config, e.what());
  } catch (const SpecError& e) {
    throw StageError(stage, ErrorCategory::Config, e.what());
  } catch (const DataError& e) {
    throw StageError(stage, ErrorCategory::Data, e.what());
  } catch (const std::exception& e) {
    throw StageError(stage, ErrorCategory::Runtime, e.what());
  }
}

// Hands out the test split and counts who asked for it.
class TestSplitGuard {
 public:
  explicit TestSplitGuard(const Dataset& test) : test_(test) {}
  const Dataset& read(const std::string& method) {
    ++reads_[method];
    return test_;
  }
  const std::map<std::string, int>& reads() const { return reads_; }

 private:
  const Dataset& test_;
  std::map<std::string, int> reads_;
};

inline std::string format_real(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

inline std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace detail

inline Dataset load_source(const DatasetSource& src, std::uint64_t seed) {
  if (src.kind == DatasetSource::Kind::Synthetic) {
    return generate_synthetic(src.samples, src.features, src.informative, seed);
  }
  return load_csv(src.path, src.target, src.task, src.header);
}

/// Runs the full protocol for every configured method and returns one row
/// per method plus the selection traces of every GBMO/FLBMO candidate.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  detail::run_stage("config", [&] { config.validate(); });

  ExperimentReport report;
  report.name = config.name;
  report.task = config.task();
  report.loss = config.loss();
  report.seed = config.seed;
  report.started_at = detail::now_utc();
  const LossKind loss = config.loss();

  const Dataset source = detail::run_stage("load", [&] { return load_source(config.source, config.seed); });
  report.n_samples = source.samples();
  report.n_features = source.width();
  const auto m = static_cast<std::size_t>(source.width());

  const SplitBundle bundle = detail::run_stage("split", [&] {
    SplitSpec spec = config.split;
    spec.seed = config.seed;
    return standardize(split(source, spec)).first;
  });
  for (std::size_t k = 0; k < 4; ++k) report.split_sizes[k] = bundle.part(static_cast<SplitPart>(k)).samples();
  const Dataset ml_train = bundle.merged();
  detail::TestSplitGuard test_guard(bundle.test);

  auto uses = [&](Method meth) {
    return std::find(config.methods.begin(), config.methods.end(), meth) != config.methods.end();
  };
  const bool need_selector_model = uses(Method::Gbmo) || uses(Method::Flbmo);
  const bool need_baseline_model = uses(Method::AllFeatures) || uses(Method::CrossCorrelation) ||
                                   uses(Method::MutualInformation) || uses(Method::Rfe);

  const HyperparameterGrid grid = detail::run_stage("grid", [&] { return config.grid(); });
  ModelSpec selector_spec, baseline_spec;
  detail::run_stage("tune", [&] {
    if (need_selector_model) {
      selector_spec = cross_validate(grid, bundle.train.features, bundle.train.targets, report.task, loss,
                                     config.cv_folds, config.seed, bundle.train.n_classes);
      report.selector_model = selector_spec.describe();
    }
    if (need_baseline_model) {
      baseline_spec = cross_validate(grid, ml_train.features, ml_train.targets, report.task, loss,
                                     config.cv_folds, config.seed, ml_train.n_classes);
      report.baseline_model = baseline_spec.describe();
    }
  });

  const std::vector<std::size_t> etas = detail::run_stage("eta grid", [&] { return config.eta_grid(m); });

  // Candidate evaluation: fit on `train_part` restricted to `cols`, score on
  // model validation. Keeps the best (first on ties).
  struct Best {
    std::optional<double> val_loss;
    std::string hyper;
    std::vector<std::size_t> cols;
    std::optional<TrainedModel> model;
  };
  auto consider = [&](Best& best, const std::string& hyper, std::vector<std::size_t> cols,
                      const Dataset& train_part, const ModelSpec& spec) {
    TrainedModel model = fit(spec, select_columns(train_part.features, cols), train_part.targets,
                             train_part.task, train_part.n_classes);
    const double v =
        evaluate_loss(model.predict(select_columns(bundle.model_val.features, cols)), bundle.model_val.targets, loss);
    if (!best.val_loss || v < *best.val_loss) {
      best = {v, hyper, std::move(cols), std::move(model)};
    }
  };
  auto finish = [&](const std::string& method, Best& best) {
    ReportRow row;
    row.method = method;
    row.n_selected = best.cols.size();
    row.hyperparameter = best.hyper;
    row.val_loss = best.val_loss;
    const Dataset& test = test_guard.read(method);
    row.test_loss = evaluate_loss(best.model->predict(select_columns(test.features, best.cols)), test.targets, loss);
    row.selected = best.cols;
    report.rows.push_back(std::move(row));
  };

  std::optional<TrainedModel> selector_model;
  if (need_selector_model) {
    selector_model = detail::run_stage("fit selector model", [&] { return fit(selector_spec, bundle.train); });
  }
  std::vector<std::size_t> all_cols(m);
  std::iota(all_cols.begin(), all_cols.end(), std::size_t{0});

  for (Method method : config.methods) {
    const std::string name = to_string(method);
    detail::run_stage(name, [&] {
      Best best;
      switch (method) {
        case Method::AllFeatures:
          consider(best, "-", all_cols, ml_train, baseline_spec);
          break;
        case Method::Gbmo:
          for (double mu : config.mu_grid) {
            const std::string hyper = "mu=" + detail::format_real(mu);
            SelectionOutcome sel = gbmo(bundle.train, bundle.fs_val, *selector_model, loss,
                                        GbmoConfig{mu, config.gbmo_min_features});
            consider(best, hyper, sel.mask.support(), bundle.train, selector_spec);
            report.traces.push_back({"gbmo_" + hyper, std::move(sel.trace)});
          }
          break;
        case Method::Flbmo:
          for (std::size_t eta : etas) {
            const std::string hyper = "eta=" + std::to_string(eta);
            SelectionOutcome sel = flbmo(bundle.train, bundle.fs_val, *selector_model, loss, FlbmoConfig{eta});
            consider(best, hyper, sel.mask.support(), bundle.train, selector_spec);
            report.traces.push_back({"flbmo_" + hyper, std::move(sel.trace)});
          }
          break;
        case Method::CrossCorrelation:
        case Method::MutualInformation: {
          const ScoreVector scores =
              method == Method::CrossCorrelation
                  ? pearson_scores(ml_train.features, ml_train.targets)
                  : mutual_information_scores(ml_train.features, ml_train.targets, ml_train.task, config.mi_bins);
          for (std::size_t eta : etas) {
            consider(best, "eta=" + std::to_string(eta), select_top_k(scores, eta), ml_train, baseline_spec);
          }
          break;
        }
        case Method::Rfe:
          if (!supports_importances(baseline_spec.kind)) {
            ReportRow row;
            row.method = name;
            row.hyperparameter = "skipped";
            row.note = std::string("skipped: ") + to_string(baseline_spec.kind) +
                       " has no intrinsic feature importances";
            report.rows.push_back(std::move(row));
            return;
          }
          for (std::size_t eta : etas) {
            RfeResult r = rfe(ml_train.features, ml_train.targets, ml_train.task, loss,
                              RfeConfig{eta, baseline_spec}, ml_train.n_classes);
            consider(best, "eta=" + std::to_string(eta), std::move(r.selected), ml_train, baseline_spec);
          }
          break;
      }
      finish(name, best);
    });
  }

  report.test_reads = test_guard.reads();
  report.elapsed_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return report;
}

}  // namespace bmo
