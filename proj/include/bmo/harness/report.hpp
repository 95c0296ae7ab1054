#pragma once

// Report and trace files.
//
//   report.csv      method,n_selected,hyperparameter,val_loss,test_loss (raw losses)
//   report.md       the same table; regression losses scaled by 1e4; best test
//                   loss in bold (every tied row)
//   selections.csv  method,selected (space separated feature indices)
//   metadata.json   run metadata (sizes, tuned models, timestamps, test reads)
//   <trace>.csv     iteration,eliminated_index,loss_min,remaining_features
//   <trace>.svg     remaining features and validation loss against iteration

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "bmo/harness/experiment.hpp"
#include "json.hpp"

namespace bmo {

enum class ReportFormat { Csv, Markdown };

inline ReportFormat parse_report_format(const std::string& s) {
  if (s == "csv") return ReportFormat::Csv;
  if (s == "markdown" || s == "md") return ReportFormat::Markdown;
  throw ConfigError("unknown report format '" + s + "'");
}

namespace detail {

inline std::string csv_real(const std::optional<double>& v) {
  return v ? fmt::format("{:.12g}", *v) : std::string();
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

inline void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error("cannot create output directory '" + dir.string() + "'");
  }
}

// File-name-safe form of a trace name.
inline std::string file_stem(std::string name) {
  for (char& c : name) {
    if (c == '=') c = '_';
    if (c == '/' || c == ' ') c = '-';
  }
  return name;
}

}  // namespace detail

inline std::string report_csv(const ExperimentReport& report) {
  std::string out = "method,n_selected,hyperparameter,val_loss,test_loss\n";
  for (const auto& r : report.rows) {
    out += fmt::format("{},{},{},{},{}\n", r.method, r.n_selected ? std::to_string(*r.n_selected) : "",
                       r.hyperparameter, detail::csv_real(r.val_loss), detail::csv_real(r.test_loss));
  }
  return out;
}

inline std::string report_markdown(const ExperimentReport& report) {
  const bool regression = report.task == TaskKind::Regression;
  const double scale = regression ? 1e4 : 1.0;
  const std::string unit = regression ? "MSE (1e-4)" : "log loss";

  double best = std::numeric_limits<double>::infinity();
  for (const auto& r : report.rows) {
    if (r.test_loss) best = std::min(best, *r.test_loss);
  }

  std::string out = fmt::format("# {}\n\n", report.name);
  out += fmt::format("N = {}, M = {}, seed = {}\n\n", report.n_samples, report.n_features, report.seed);
  out += fmt::format("| Method | Selected | Hyperparameter | Validation {} | Test {} |\n", unit, unit);
  out += "|---|---|---|---|---|\n";
  for (const auto& r : report.rows) {
    std::string test = r.test_loss ? fmt::format("{:.4f}", *r.test_loss * scale) : "-";
    if (r.test_loss && *r.test_loss == best) test = "**" + test + "**";
    out += fmt::format("| {} | {} | {} | {} | {} |\n", r.method,
                       r.n_selected ? std::to_string(*r.n_selected) : "-", r.hyperparameter,
                       r.val_loss ? fmt::format("{:.4f}", *r.val_loss * scale) : "-", test);
  }
  bool any_note = false;
  for (const auto& r : report.rows) {
    if (r.note.empty()) continue;
    if (!any_note) out += "\n";
    any_note = true;
    out += fmt::format("- {}: {}\n", r.method, r.note);
  }
  out += "\nThe best test loss is shown in bold.\n";
  return out;
}

inline std::string selections_csv(const ExperimentReport& report) {
  std::string out = "method,selected\n";
  for (const auto& r : report.rows) {
    std::string ids;
    for (std::size_t k = 0; k < r.selected.size(); ++k) ids += (k ? " " : "") + std::to_string(r.selected[k]);
    out += r.method + "," + ids + "\n";
  }
  return out;
}

inline nlohmann::json report_metadata(const ExperimentReport& report) {
  nlohmann::json j;
  j["name"] = report.name;
  j["task"] = to_string(report.task);
  j["loss"] = report.loss.name();
  j["seed"] = report.seed;
  j["n_samples"] = report.n_samples;
  j["n_features"] = report.n_features;
  j["split_sizes"] = report.split_sizes;
  j["selector_model"] = report.selector_model;
  j["baseline_model"] = report.baseline_model;
  j["test_reads"] = report.test_reads;
  j["started_at"] = report.started_at;
  j["elapsed_seconds"] = report.elapsed_seconds;
  return j;
}

/// Writes the requested report files into `dir`.
inline std::vector<std::filesystem::path> export_report(const ExperimentReport& report,
                                                        const std::filesystem::path& dir,
                                                        const std::vector<ReportFormat>& formats) {
  detail::ensure_directory(dir);
  std::vector<std::filesystem::path> written;
  auto write = [&](const std::string& file, const std::string& body) {
    const auto path = dir / file;
    detail::open_for_write(path) << body;
    written.push_back(path);
  };
  for (ReportFormat f : formats) {
    if (f == ReportFormat::Csv) write("report.csv", report_csv(report));
    if (f == ReportFormat::Markdown) write("report.md", report_markdown(report));
  }
  write("selections.csv", selections_csv(report));
  write("metadata.json", report_metadata(report).dump(2) + "\n");
  return written;
}

inline std::string trace_csv(const SelectionTrace& trace) {
  std::string out = "iteration,eliminated_index,loss_min,remaining_features\n";
  for (const auto& r : trace.records) {
    out += fmt::format("{},{},{},{}\n", r.iteration, r.eliminated ? std::to_string(*r.eliminated) : "stopped",
                       detail::csv_real(r.loss_min), r.remaining);
  }
  return out;
}

/// Two stacked line charts: remaining features and validation loss, both
/// against iteration.
inline std::string trace_svg(const SelectionTrace& trace, const std::string& title) {
  constexpr double width = 640, panel = 220, pad = 50, gap = 40;
  const double plot_w = width - 2 * pad;
  std::vector<std::pair<double, double>> remaining, losses;
  for (const auto& r : trace.records) {
    remaining.emplace_back(static_cast<double>(r.iteration), static_cast<double>(r.remaining));
    if (r.eliminated && r.loss_min) losses.emplace_back(static_cast<double>(r.iteration), *r.loss_min);
  }
  const double max_iter = remaining.empty() ? 1.0 : std::max(1.0, remaining.back().first);

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\" "
      "font-size=\"11\">\n<text x=\"{}\" y=\"18\" font-size=\"13\">{}</text>\n",
      width, 2 * panel + gap + 2 * pad, pad, title);

  auto draw = [&](const std::vector<std::pair<double, double>>& pts, double top, const std::string& label) {
    const double bottom = top + panel;
    svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#888\"/>\n", pad,
                       top, plot_w, panel);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", pad + 4, top + 14, label);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">iteration</text>\n", pad + plot_w / 2 - 20, bottom + 28);
    if (pts.empty()) return;
    double lo = pts.front().second, hi = lo;
    for (const auto& p : pts) {
      lo = std::min(lo, p.second);
      hi = std::max(hi, p.second);
    }
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    svg += fmt::format("<text x=\"4\" y=\"{}\">{:.4g}</text>\n<text x=\"4\" y=\"{}\">{:.4g}</text>\n", top + 10, hi,
                       bottom, lo);
    svg += fmt::format("<text x=\"{}\" y=\"{}\">{}</text>\n", pad + plot_w - 20, bottom + 14, max_iter);
    svg += "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : pts) {
      svg += fmt::format("{:.2f},{:.2f} ", pad + plot_w * x / max_iter, bottom - panel * (y - lo) / (hi - lo));
    }
    svg += "\"/>\n";
  };
  draw(remaining, pad, "remaining features");
  draw(losses, pad + panel + gap, "validation loss");
  svg += "</svg>\n";
  return svg;
}

/// One CSV and one SVG per trace.
inline std::vector<std::filesystem::path> export_traces(const std::vector<NamedTrace>& traces,
                                                        const std::filesystem::path& dir) {
  if (traces.empty()) throw ConfigError("no traces to export");
  detail::ensure_directory(dir);
  std::vector<std::filesystem::path> written;
  for (const auto& t : traces) {
    const std::string stem = detail::file_stem(t.name);
    detail::open_for_write(dir / (stem + ".csv")) << trace_csv(t.trace);
    detail::open_for_write(dir / (stem + ".svg")) << trace_svg(t.trace, t.name);
    written.push_back(dir / (stem + ".csv"));
    written.push_back(dir / (stem + ".svg"));
  }
  return written;
}

}  // namespace bmo
