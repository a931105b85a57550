#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "breakeven/config.hpp"
#include "breakeven/svg_chart.hpp"
#include "breakeven/trainer.hpp"

namespace breakeven {

struct LoadedLog {
  std::string path;
  std::string label;  // file stem
  nlohmann::json metadata;
  std::vector<MetricRecord> records;
  RunSummary summary;  // recomputed from the records
};

// Throws Io or SchemaError.
LoadedLog load_log(const std::filesystem::path& path);

ChartSpec panel_chart(const ReportPanel& panel, const std::vector<LoadedLog>& logs,
                      const ReportSpec& spec, const std::string& config_hash);

std::string summary_markdown(const std::vector<LoadedLog>& logs,
                             const std::optional<nlohmann::json>& sweep_report,
                             const std::string& config_hash);

struct ReportFiles {
  std::vector<std::filesystem::path> svgs;
  std::filesystem::path markdown;
};

// panel_<i>_<metric>.svg per panel and summary.md under out_dir.
ReportFiles write_report(const ReportSpec& spec, const std::string& config_hash,
                         const std::filesystem::path& out_dir);

}  // namespace breakeven
