// Command-line front end for the experiment harness.
//
//   bmo run   --config <path> [--out <dir>] [--format csv|markdown]... [--trace-dir <dir>]
//   bmo synth --seed <u64> --out <dir> [--format csv|markdown]... [--trace-dir <dir>]
//
// Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime error.

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "bmo/bmo.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

int exit_code(bmo::ErrorCategory c) {
  switch (c) {
    case bmo::ErrorCategory::Config: return kExitConfig;
    case bmo::ErrorCategory::Data: return kExitData;
    case bmo::ErrorCategory::Runtime: return kExitRuntime;
  }
  return kExitRuntime;
}

int execute(const bmo::ExperimentConfig& config, const std::string& out_dir,
            const std::vector<std::string>& formats, const std::string& trace_dir) {
  std::vector<bmo::ReportFormat> fmts;
  try {
    for (const auto& f : formats) fmts.push_back(bmo::parse_report_format(f));
  } catch (const bmo::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  if (fmts.empty()) fmts = {bmo::ReportFormat::Csv, bmo::ReportFormat::Markdown};

  bmo::ExperimentReport report;
  try {
    report = bmo::run_experiment(config);
  } catch (const bmo::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }

  try {
    const std::filesystem::path out = out_dir.empty() ? config.output_dir : out_dir;
    bmo::export_report(report, out, fmts);
    if (!report.traces.empty()) {
      bmo::export_traces(report.traces, trace_dir.empty() ? out / "traces" : std::filesystem::path(trace_dir));
    }
    std::cout << bmo::report_markdown(report);
    std::cout << "\nwrote results to " << out.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Binary feature mask optimization experiments"};
  app.require_subcommand(1);

  std::string out_dir;
  std::vector<std::string> formats;
  std::string trace_dir;

  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config file");
  std::string config_path;
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory (default: config output_dir)");
  run->add_option("--format", formats, "Report format(s): csv, markdown");
  run->add_option("--trace-dir", trace_dir, "Directory for selection traces (default: <out>/traces)");

  auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark and run every method on it");
  std::uint64_t seed = 0;
  synth->add_option("--seed", seed, "Random seed")->required();
  synth->add_option("--out", out_dir, "Output directory")->required();
  synth->add_option("--format", formats, "Report format(s): csv, markdown");
  synth->add_option("--trace-dir", trace_dir, "Directory for selection traces (default: <out>/traces)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (*run) {
    bmo::ExperimentConfig config;
    try {
      config = bmo::ExperimentConfig::load(config_path);
    } catch (const bmo::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kExitConfig;
    }
    return execute(config, out_dir, formats, trace_dir);
  }
  return execute(bmo::ExperimentConfig::synthetic(seed), out_dir, formats, trace_dir);
}
