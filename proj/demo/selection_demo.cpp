// Runs GBMO and FLBMO on a small synthetic problem and prints the traces.

#include <iostream>

#include "bmo/bmo.hpp"

int main() {
  const bmo::Dataset data = bmo::generate_synthetic(300, 30, 10, 7);
  auto [bundle, scaler] = bmo::standardize(bmo::split(data, bmo::SplitSpec{{0.45, 0.30, 0.10, 0.15}, 7}));

  bmo::ModelSpec spec{bmo::ModelKind::GradientBoostedTrees, {}, 7};
  spec.set("num_leaves", std::int64_t{7});
  spec.set("n_estimators", std::int64_t{50});
  spec.set("min_child_samples", std::int64_t{5});
  const bmo::TrainedModel model = bmo::fit(spec, bundle.train);
  const bmo::LossKind loss = bmo::LossKind::mse();

  const auto g = bmo::gbmo(bundle.train, bundle.fs_val, model, loss, bmo::GbmoConfig{0.01});
  std::cout << "gbmo (mu=0.01) kept " << g.mask.count() << " features:";
  for (auto j : g.mask.support()) std::cout << ' ' << j;
  std::cout << "\n\n" << bmo::trace_csv(g.trace) << "\n";

  const auto f = bmo::flbmo(bundle.train, bundle.fs_val, model, loss, bmo::FlbmoConfig{10});
  std::cout << "flbmo (eta=10) kept:";
  for (auto j : f.mask.support()) std::cout << ' ' << j;
  std::cout << "\n";

  const auto final = bmo::finalize_selection(bundle.train, g.mask, spec);
  const double test = bmo::evaluate_loss(
      final.model.predict(bmo::select_columns(bundle.test.features, final.indices)), bundle.test.targets, loss);
  std::cout << "refit on gbmo selection, test MSE " << test << "\n";
}
