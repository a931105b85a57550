#include "breakeven/report.hpp"

#include <cstdio>

#include "breakeven/error.hpp"
#include "breakeven/metrics_io.hpp"

namespace breakeven {

using nlohmann::json;

namespace {

std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", *v);
  return buf;
}

std::string cell(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : std::string("-");
}

std::string with_step(const std::optional<double>& v, const std::optional<std::size_t>& step) {
  if (!v) return "-";
  return cell(v) + (step ? " @" + std::to_string(*step) : std::string());
}

}  // namespace

LoadedLog load_log(const std::filesystem::path& path) {
  LoadedLog out;
  out.path = path.string();
  out.label = path.stem().string();
  ParsedLog parsed = parse_jsonl(read_file(path));
  out.metadata = std::move(parsed.metadata);
  out.records = std::move(parsed.records);
  double threshold = 0.6;
  const json& cfg = out.metadata["config"];
  if (cfg.is_object() && cfg.contains("accuracy_threshold") && cfg["accuracy_threshold"].is_number())
    threshold = cfg["accuracy_threshold"].get<double>();
  bool diverged = false;
  if (out.metadata.contains("run") && out.metadata["run"].is_object())
    diverged = out.metadata["run"].value("diverged", false);
  out.summary = summarize(out.records, threshold, diverged);
  return out;
}

ChartSpec panel_chart(const ReportPanel& panel, const std::vector<LoadedLog>& logs,
                      const ReportSpec& spec, const std::string& config_hash) {
  if (!is_known_metric(panel.y)) throw Error(ErrorKind::UnknownMetric, panel.y);
  ChartSpec chart;
  chart.title = panel.y + " vs " + panel.x;
  chart.x_label = panel.x;
  chart.y_label = panel.y;
  chart.log_y = panel.log_y;
  chart.metadata = "breakeven report panel; metric=" + panel.y + "; config_hash=" + config_hash +
                   "; artifact_version=" + artifact_version();
  if (spec.moving_average > 1)
    chart.metadata += "; moving_average=" + std::to_string(spec.moving_average);

  for (std::size_t li = 0; li < logs.size(); ++li) {
    const LoadedLog& log = logs[li];
    ChartSeries s;
    s.label = log.label;
    std::vector<double> raw;
    std::vector<std::size_t> where;
    for (const auto& r : log.records) {
      s.x.push_back(panel.x == "epoch" ? static_cast<double>(r.epoch) : static_cast<double>(r.step));
      const auto v = metric_value(r, panel.y);
      s.y.push_back(v);
      if (v) {
        raw.push_back(*v);
        where.push_back(s.y.size() - 1);
      }
    }
    if (spec.moving_average > 1) {
      const std::vector<double> smooth = moving_average(raw, spec.moving_average);
      for (std::size_t i = 0; i < where.size(); ++i) s.y[where[i]] = smooth[i];
    }
    chart.series.push_back(std::move(s));

    if (spec.threshold_lines && log.summary.threshold_epoch) {
      const std::size_t te = *log.summary.threshold_epoch;
      std::optional<double> x;
      if (panel.x == "epoch") {
        x = static_cast<double>(te);
      } else {
        for (const auto& r : log.records)
          if (r.epoch >= te) {
            x = static_cast<double>(r.step);
            break;
          }
      }
      if (x) chart.vlines.push_back({*x, li, log.label + ": accuracy threshold reached"});
    }
  }
  return chart;
}

std::string summary_markdown(const std::vector<LoadedLog>& logs,
                             const std::optional<json>& sweep_report,
                             const std::string& config_hash) {
  std::string md = "<!-- breakeven report summary; config_hash=" + config_hash +
                   "; artifact_version=" + artifact_version() + " -->\n";
  md += "# Run summary\n\n";
  md += "| log | max lambda_K1 | max cond_ratio | max lambda_H1 | max Tr K | threshold epoch | "
        "first negative dL step | diverged |\n";
  md += "|---|---|---|---|---|---|---|---|\n";
  for (const auto& log : logs) {
    const RunSummary& s = log.summary;
    md += "| " + log.label + " | " + with_step(s.max_lambda_k1, s.max_lambda_k1_step) + " | " +
          with_step(s.max_cond_ratio, s.max_cond_ratio_step) + " | " +
          with_step(s.max_lambda_h1, s.max_lambda_h1_step) + " | " + cell(s.max_trace_k) + " | " +
          cell(s.threshold_epoch) + " | " + cell(s.first_negative_delta_loss_step) + " | " +
          (s.diverged ? "yes" : "no") + " |\n";
  }
  md += "\nMaxima are taken over instrumented steps (`@` gives the step).\n";

  if (sweep_report && sweep_report->contains("verdicts")) {
    md += "\n# Sweep verdicts\n\n";
    md += "Axis `" + sweep_report->value("axis", std::string("?")) +
          "`; seed means of per-seed maxima, ordered from least to most gradient noise.\n\n";
    md += "| metric | expected along noise | seed means | verdict |\n|---|---|---|---|\n";
    for (const auto& v : (*sweep_report)["verdicts"]) {
      std::string means;
      for (const auto& m : v["seed_means"]) {
        if (!means.empty()) means += ", ";
        means += m.is_null() ? std::string("-") : cell(std::optional<double>(m.get<double>()));
      }
      md += "| " + v.value("metric", std::string("?")) + " | " +
            (v.value("expect_decrease", true) ? "decrease" : "increase") + " | " + means + " | " +
            v.value("verdict", std::string("?")) + " |\n";
    }
  }
  return md;
}

ReportFiles write_report(const ReportSpec& spec, const std::string& config_hash,
                         const std::filesystem::path& out_dir) {
  if (spec.panels.empty()) throw SchemaError("panels", "must be non-empty");
  for (const auto& p : spec.panels)
    if (!is_known_metric(p.y)) throw Error(ErrorKind::UnknownMetric, p.y);
  std::vector<LoadedLog> logs;
  for (const auto& path : spec.logs) logs.push_back(load_log(path));
  std::optional<json> sweep;
  if (spec.sweep_report) {
    try {
      sweep = json::parse(read_file(*spec.sweep_report));
    } catch (const json::parse_error&) {
      throw SchemaError("sweep_report", "not valid JSON");
    }
  }

  ReportFiles files;
  for (std::size_t i = 0; i < spec.panels.size(); ++i) {
    const auto path = out_dir / ("panel_" + std::to_string(i) + "_" + spec.panels[i].y + ".svg");
    write_file_atomic(path, render_svg(panel_chart(spec.panels[i], logs, spec, config_hash)));
    files.svgs.push_back(path);
  }
  files.markdown = out_dir / "summary.md";
  write_file_atomic(files.markdown, summary_markdown(logs, sweep, config_hash));
  return files;
}

}  // namespace breakeven
