#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "breakeven/trainer.hpp"

namespace breakeven {

inline constexpr int kSchemaVersion = 1;
const char* artifact_version();

// Metric names a report panel may plot. Scalar MetricRecord columns plus
// lambda_h1 (first Ritz value), bn_gamma_last and alpha_ratio (lambda_k1 / lambda_h1).
const std::vector<std::string>& known_metrics();
bool is_known_metric(const std::string& name);
std::optional<double> metric_value(const MetricRecord& r, const std::string& name);

nlohmann::json to_json(const MetricRecord& r);
MetricRecord metric_record_from_json(const nlohmann::json& j);  // throws SchemaError
nlohmann::json to_json(const RunSummary& s);

/// {schema_version, config, config_hash, prng_algorithm, artifact_version} plus `extra`.
nlohmann::json metadata_json(const nlohmann::json& config, const nlohmann::json& extra = {});

std::string encode_jsonl(const nlohmann::json& metadata, const std::vector<MetricRecord>& log);

struct ParsedLog {
  nlohmann::json metadata;
  std::vector<MetricRecord> records;
};

// Throws SchemaError naming the first offending line.
ParsedLog parse_jsonl(std::string_view text);

// Every line parses, the first is metadata, every record has every field.
// Returns the problems found; empty means valid.
std::vector<std::string> validate_jsonl(std::string_view text);

// Writes to a sibling temp file and renames over the target. Throws Io.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);  // throws Io

// Shortest round-trip decimal form; "nan"/"inf" spelled out.
std::string format_double(double v);

}  // namespace breakeven
