#include "breakeven/metrics_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "breakeven/config.hpp"
#include "breakeven/error.hpp"
#include "breakeven/rng.hpp"

#ifndef BREAKEVEN_VERSION
#define BREAKEVEN_VERSION "0.0.0"
#endif

namespace breakeven {

using nlohmann::json;

const char* artifact_version() { return BREAKEVEN_VERSION; }

namespace {

const char* const kRecordFields[] = {
    "step",    "epoch",    "lr_current", "train_loss",   "train_acc",      "val_acc",
    "delta_loss", "lambda_k1", "lambda_k_star", "cond_ratio", "trace_k", "lambda_h_top",
    "g_ratio", "bn_gamma_norms", "gram_spectrum", "negative_ritz"};

json opt(const std::optional<double>& v) {
  if (!v || !std::isfinite(*v)) return nullptr;
  return *v;
}

json opt(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_opt(const json& j, const char* key) {
  const json& v = j.at(key);
  if (v.is_null()) return std::nullopt;
  if (!v.is_number()) throw SchemaError(key, "must be a number or null");
  return v.get<double>();
}

std::vector<double> read_array(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_array()) throw SchemaError(key, "must be an array");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw SchemaError(key, "entries must be numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::size_t read_count(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    throw SchemaError(key, "must be a non-negative integer");
  return v.get<std::size_t>();
}

}  // namespace

const std::vector<std::string>& known_metrics() {
  static const std::vector<std::string> names = {
      "train_loss", "train_acc", "val_acc",  "delta_loss",    "lambda_k1",
      "lambda_k_star", "cond_ratio", "trace_k", "lambda_h1", "g_ratio",
      "bn_gamma_last", "lr_current", "alpha_ratio"};
  return names;
}

bool is_known_metric(const std::string& name) {
  const auto& k = known_metrics();
  return std::find(k.begin(), k.end(), name) != k.end();
}

std::optional<double> metric_value(const MetricRecord& r, const std::string& name) {
  if (name == "train_loss") return r.train_loss;
  if (name == "train_acc") return r.train_acc;
  if (name == "val_acc") return r.val_acc;
  if (name == "delta_loss") return r.delta_loss;
  if (name == "lambda_k1") return r.lambda_k1;
  if (name == "lambda_k_star") return r.lambda_k_star;
  if (name == "cond_ratio") return r.cond_ratio;
  if (name == "trace_k") return r.trace_k;
  if (name == "lambda_h1") {
    if (r.lambda_h_top.empty()) return std::nullopt;
    return r.lambda_h_top.front();
  }
  if (name == "g_ratio") return r.g_ratio;
  if (name == "bn_gamma_last") {
    if (r.bn_gamma_norms.empty()) return std::nullopt;
    return r.bn_gamma_norms.back();
  }
  if (name == "lr_current") return r.lr_current;
  if (name == "alpha_ratio") {
    if (!r.lambda_k1 || r.lambda_h_top.empty() || r.lambda_h_top.front() == 0.0)
      return std::nullopt;
    return *r.lambda_k1 / r.lambda_h_top.front();
  }
  throw Error(ErrorKind::UnknownMetric, name);
}

json to_json(const MetricRecord& r) {
  json j;
  j["step"] = r.step;
  j["epoch"] = r.epoch;
  j["lr_current"] = r.lr_current;
  j["train_loss"] = opt(r.train_loss);
  j["train_acc"] = opt(r.train_acc);
  j["val_acc"] = opt(r.val_acc);
  j["delta_loss"] = opt(r.delta_loss);
  j["lambda_k1"] = opt(r.lambda_k1);
  j["lambda_k_star"] = opt(r.lambda_k_star);
  j["cond_ratio"] = opt(r.cond_ratio);
  j["trace_k"] = opt(r.trace_k);
  j["lambda_h_top"] = r.lambda_h_top;
  j["g_ratio"] = opt(r.g_ratio);
  j["bn_gamma_norms"] = r.bn_gamma_norms;
  j["gram_spectrum"] = r.gram_spectrum;
  j["negative_ritz"] = r.negative_ritz;
  return j;
}

MetricRecord metric_record_from_json(const json& j) {
  if (!j.is_object()) throw SchemaError("record", "must be an object");
  for (const char* f : kRecordFields)
    if (!j.contains(f)) throw SchemaError(f, "missing");
  MetricRecord r;
  r.step = read_count(j, "step");
  r.epoch = read_count(j, "epoch");
  if (!j["lr_current"].is_number()) throw SchemaError("lr_current", "must be a number");
  r.lr_current = j["lr_current"].get<double>();
  r.train_loss = read_opt(j, "train_loss");
  r.train_acc = read_opt(j, "train_acc");
  r.val_acc = read_opt(j, "val_acc");
  r.delta_loss = read_opt(j, "delta_loss");
  r.lambda_k1 = read_opt(j, "lambda_k1");
  r.lambda_k_star = read_opt(j, "lambda_k_star");
  r.cond_ratio = read_opt(j, "cond_ratio");
  r.trace_k = read_opt(j, "trace_k");
  r.lambda_h_top = read_array(j, "lambda_h_top");
  r.g_ratio = read_opt(j, "g_ratio");
  r.bn_gamma_norms = read_array(j, "bn_gamma_norms");
  r.gram_spectrum = read_array(j, "gram_spectrum");
  if (!j["negative_ritz"].is_boolean()) throw SchemaError("negative_ritz", "must be a boolean");
  r.negative_ritz = j["negative_ritz"].get<bool>();
  return r;
}

json to_json(const RunSummary& s) {
  json j;
  j["max_lambda_k1"] = opt(s.max_lambda_k1);
  j["max_lambda_k1_step"] = opt(s.max_lambda_k1_step);
  j["max_cond_ratio"] = opt(s.max_cond_ratio);
  j["max_cond_ratio_step"] = opt(s.max_cond_ratio_step);
  j["max_lambda_h1"] = opt(s.max_lambda_h1);
  j["max_lambda_h1_step"] = opt(s.max_lambda_h1_step);
  j["max_trace_k"] = opt(s.max_trace_k);
  j["threshold_epoch"] = opt(s.threshold_epoch);
  j["first_negative_delta_loss_step"] = opt(s.first_negative_delta_loss_step);
  j["diverged"] = s.diverged;
  json alpha = json::array();
  for (const auto& a : s.alpha_series) alpha.push_back(opt(a));
  j["alpha_series"] = alpha;
  return j;
}

json metadata_json(const json& config, const json& extra) {
  json m;
  m["schema_version"] = kSchemaVersion;
  m["config"] = config;
  m["config_hash"] = config_hash(config);
  m["prng_algorithm"] = kPrngAlgorithm;
  m["artifact_version"] = artifact_version();
  if (extra.is_object())
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
  return m;
}

std::string encode_jsonl(const json& metadata, const std::vector<MetricRecord>& log) {
  std::string out = metadata.dump();
  out += '\n';
  for (const auto& r : log) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

ParsedLog parse_jsonl(std::string_view text) {
  ParsedLog out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error&) {
      throw SchemaError("line " + std::to_string(line_no), "not valid JSON");
    }
    if (line_no == 1) {
      if (!j.is_object() || !j.contains("schema_version") || !j.contains("config") ||
          !j.contains("prng_algorithm") || !j.contains("artifact_version"))
        throw SchemaError("line 1", "metadata object missing required keys");
      if (j["schema_version"] != kSchemaVersion)
        throw SchemaError("schema_version", "unsupported version");
      out.metadata = std::move(j);
      continue;
    }
    try {
      out.records.push_back(metric_record_from_json(j));
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + "." + e.field(), e.reason());
    }
  }
  if (out.metadata.is_null()) throw SchemaError("line 1", "empty log");
  return out;
}

std::vector<std::string> validate_jsonl(std::string_view text) {
  std::vector<std::string> problems;
  if (text.empty() || text.back() != '\n') problems.push_back("log must end with a newline");
  try {
    parse_jsonl(text);
  } catch (const SchemaError& e) {
    problems.push_back(e.what());
  }
  return problems;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + path.parent_path().string());
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw Error(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot rename onto " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace breakeven
