#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <sys/wait.h>

#include <gtest/gtest.h>

#include "breakeven/commands.hpp"
#include "breakeven/config.hpp"
#include "breakeven/error.hpp"
#include "breakeven/metrics_io.hpp"
#include "breakeven/report.hpp"
#include "breakeven/svg_chart.hpp"

using namespace breakeven;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  fs::path p = fs::temp_directory_path() / "breakeven_tests" /
               (std::string(info->test_suite_name()) + "." + info->name()) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_json(const fs::path& dir, const std::string& name, const json& j) {
  const fs::path p = dir / name;
  write_file_atomic(p, j.dump(2));
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(BREAKEVEN_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Golden files are refreshed with BREAKEVEN_UPDATE_GOLDEN=1.
void expect_golden(const std::string& name, const std::string& actual) {
  const fs::path p = fs::path(GOLDEN_DIR) / name;
  if (std::getenv("BREAKEVEN_UPDATE_GOLDEN")) write_file_atomic(p, actual);
  EXPECT_EQ(read_file(p), actual) << "golden mismatch: " << p;
}

json minimal_train() {
  return {{"subcommand", "train"}, {"model", {{"layer_sizes", {2, 16, 16, 2}}}}};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_file(p));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  ADD_FAILURE() << "no column " << name;
  return 0;
}

json simulate_doc(double alpha = 0.5) {
  return {{"subcommand", "simulate"},
          {"curvatures", {{"n", 100}, {"low", 0.5}, {"high", 1.5}}},
          {"alpha", alpha},
          {"etas", {0.5, 0.1, 0.02}},
          {"batch_sizes", {1, 10, 100}},
          {"seed", 4}};
}

}  // namespace

TEST(Config, MinimalTrainConfigIsFullyDefaulted) {
  const ResolvedConfig rc = resolve_config(minimal_train(), {});
  const json& r = rc.resolved;
  EXPECT_EQ(r["subcommand"], "train");
  EXPECT_EQ(r["eta"], 0.05);
  EXPECT_EQ(r["batch_size"], 32);
  EXPECT_EQ(r["eval_every"], 10);
  EXPECT_EQ(r["momentum"], 0.0);
  EXPECT_EQ(r["accuracy_threshold"], 0.6);
  EXPECT_EQ(r["spectra"]["num_batches"], 25);
  EXPECT_EQ(r["spectra"]["hessian_k"], 5);
  EXPECT_EQ(r["model"]["activations"], nlohmann::json::array({"relu", "relu"}));
  EXPECT_EQ(rc.hash.size(), 16u);
  // Resolving the resolved form is a fixed point.
  EXPECT_EQ(resolve_config(r, {}).resolved, r);
  EXPECT_EQ(resolve_config(r, {}).hash, rc.hash);
}

TEST(Config, NegativeEtaIsSchemaError) {
  json doc = minimal_train();
  doc["eta"] = -0.1;
  try {
    resolve_config(doc, {});
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "eta");
    EXPECT_EQ(e.reason(), "must be > 0");
    EXPECT_EQ(exit_code_for(e), kExitConfig);
  }
  const fs::path dir = scratch("cfg");
  EXPECT_EQ(run_cli("train --config " + write_json(dir, "c.json", doc).string() + " --out " +
                    (dir / "out").string()),
            2);
}

TEST(Config, UnknownFieldRejected) {
  json doc = minimal_train();
  doc["spectra"] = {{"num_batchez", 3}};
  try {
    resolve_config(doc, {});
    FAIL();
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.field(), "spectra.num_batchez");
  }
}

TEST(Config, EtaFlagOverridesFile) {
  json doc = minimal_train();
  doc["eta"] = 0.1;
  FlagOverrides flags;
  flags.eta = 0.2;
  const ResolvedConfig rc = resolve_config(doc, flags);
  EXPECT_EQ(rc.resolved["eta"], 0.2);
  EXPECT_EQ(rc.train().eta, 0.2);
  EXPECT_NE(rc.hash, resolve_config(doc, {}).hash);
  expect_golden("metadata_eta_override.json", metadata_json(rc.resolved).dump() + "\n");

  // Same through the binary: the first JSONL line equals the golden line plus run info.
  const fs::path dir = scratch("cli");
  json small = doc;
  small["dataset"] = {{"n", 100}};
  small["epochs"] = 1;
  small["spectra"] = {{"enabled", false}};
  ASSERT_EQ(run_cli("train --config " + write_json(dir, "c.json", small).string() +
                    " --eta 0.2 --out " + (dir / "out").string()),
            0);
  const ParsedLog log = parse_jsonl(read_file(dir / "out" / "train.jsonl"));
  EXPECT_EQ(log.metadata["config"]["eta"], 0.2);
  EXPECT_EQ(log.metadata["config_hash"], config_hash(log.metadata["config"]));
}

TEST(Config, SimulateFlagsMapToGrids) {
  FlagOverrides flags;
  flags.eta = 0.3;
  flags.batch_size = 5;
  const SimulateConfig s = resolve_config(simulate_doc(), flags).simulate();
  EXPECT_EQ(s.etas, (std::vector<double>{0.3}));
  EXPECT_EQ(s.batch_sizes, (std::vector<std::size_t>{5}));
  EXPECT_EQ(s.curvatures.size(), 100u);
}

TEST(Config, MissingFileIsIo) {
  try {
    parse_config("/nonexistent/breakeven.json", {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
    EXPECT_EQ(exit_code_for(e), kExitIo);
  }
  EXPECT_EQ(run_cli("train --config /nonexistent/breakeven.json"), 3);
}

TEST(Config, InvalidJsonIsSchemaError) {
  const fs::path dir = scratch("bad");
  write_file_atomic(dir / "bad.json", "{\"subcommand\": ");
  EXPECT_THROW(parse_config(dir / "bad.json", {}), SchemaError);
}

TEST(Simulate, FullBatchRowIsTwoOverEta) {
  const fs::path out = scratch("sim");
  ASSERT_EQ(cmd_simulate(resolve_config(simulate_doc(), {}), {out, true}), kExitOk);
  const auto rows = read_csv(out / "breakeven_table.csv");
  const auto& h = rows[0];
  int checked = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i][column(h, "batch_size")] != "100") continue;
    const double eta = std::stod(rows[i][column(h, "eta")]);
    const double lambda = std::stod(rows[i][column(h, "lambda_closed_form")]);
    EXPECT_NEAR(lambda, 2.0 / eta, 1e-12 * 2.0 / eta);
    ++checked;
  }
  EXPECT_EQ(checked, 3);
  EXPECT_EQ(read_csv(out / "phase_diagram.csv").size(), 1u + 9u);
  EXPECT_EQ(read_file(out / "breakeven_table.csv").rfind("# breakeven simulate; config_hash=", 0), 0u);
}

TEST(Simulate, ZeroAlphaIsConstantInBatchSize) {
  const fs::path out = scratch("sim");
  ASSERT_EQ(cmd_simulate(resolve_config(simulate_doc(0.0), {}), {out, true}), kExitOk);
  const auto rows = read_csv(out / "breakeven_table.csv");
  std::map<std::string, std::set<std::string>> by_eta;
  for (std::size_t i = 1; i < rows.size(); ++i)
    by_eta[rows[i][column(rows[0], "eta")]].insert(rows[i][column(rows[0], "lambda_closed_form")]);
  for (const auto& [eta, lambdas] : by_eta) EXPECT_EQ(lambdas.size(), 1u) << eta;
}

TEST(Simulate, MonteCarloColumnWithinTolerance) {
  json doc = simulate_doc();
  doc["etas"] = {0.05, 0.5};
  doc["batch_sizes"] = {10, 100};
  doc["monte_carlo"] = {{"enabled", true}};
  const fs::path out = scratch("sim");
  ASSERT_EQ(cmd_simulate(resolve_config(doc, {}), {out, true}), kExitOk);
  const auto rows = read_csv(out / "monte_carlo.csv");
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 1; i < rows.size(); ++i)
    EXPECT_LE(std::stod(rows[i][column(rows[0], "abs_error")]), 0.02);
}

TEST(Simulate, ByteIdenticalRerun) {
  const fs::path a = scratch("a"), b = scratch("b");
  const fs::path cfg = write_json(scratch("cfg"), "sim.json", simulate_doc());
  ASSERT_EQ(run_cli("simulate --quiet --config " + cfg.string() + " --out " + a.string()), 0);
  ASSERT_EQ(run_cli("simulate --quiet --config " + cfg.string() + " --out " + b.string()), 0);
  for (const char* f : {"phase_diagram.csv", "breakeven_table.csv"})
    EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
}

TEST(Train, SmokeLogIsSchemaValidAndReproducible) {
  json doc = minimal_train();
  doc["dataset"] = {{"kind", "gaussian_blobs"}, {"n", 512}};
  doc["eta"] = 0.05;
  doc["batch_size"] = 32;
  doc["epochs"] = 20;
  const fs::path dir = scratch("train");
  const fs::path cfg = write_json(dir, "smoke.json", doc);
  ASSERT_EQ(run_cli("train --quiet --config " + cfg.string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run_cli("train --quiet --config " + cfg.string() + " --out " + (dir / "b").string()), 0);
  const std::string log = read_file(dir / "a" / "train.jsonl");
  EXPECT_TRUE(validate_jsonl(log).empty());
  EXPECT_EQ(log, read_file(dir / "b" / "train.jsonl"));
  EXPECT_EQ(read_file(dir / "a" / "summary.json"), read_file(dir / "b" / "summary.json"));
  EXPECT_FALSE(fs::exists(dir / "a" / "train.jsonl.tmp"));
}

TEST(Sweep, DivergingCellMarkedAndOthersIntact) {
  json doc = {{"subcommand", "sweep"},
              {"dataset", {{"n", 200}}},
              {"model", {{"layer_sizes", {2, 8, 2}}, {"loss", "mse"}}},
              {"batch_size", 16},
              {"epochs", 30},
              {"eval_every", 20},
              {"spectra", {{"num_batches", 5}, {"hessian_k", 1}, {"lanczos_iters", 5},
                           {"g_ratio_k", 2}, {"eval_subset_fraction", 0.2}}},
              {"axis", {{"name", "eta"}, {"values", {0.05, 10.0}}}},
              {"seeds", {1}}};
  const fs::path dir = scratch("sweep");
  ASSERT_EQ(run_cli("sweep --quiet --config " + write_json(dir, "s.json", doc).string() +
                    " --out " + (dir / "out").string()),
            0);
  const json report = json::parse(read_file(dir / "out" / "sweep_report.json"));
  ASSERT_EQ(report["cells"].size(), 2u);
  EXPECT_EQ(report["cells"][0]["diverged"], false);
  EXPECT_EQ(report["cells"][1]["diverged"], true);
  EXPECT_FALSE(report["cells"][0]["summary"]["max_lambda_k1"].is_null());
  for (const auto& c : report["cells"])
    EXPECT_TRUE(validate_jsonl(read_file(dir / "out" / c["log_file"].get<std::string>())).empty());
}

namespace {

ReportSpec fixture_report() {
  ReportSpec spec;
  spec.logs = {std::string(TEST_DATA_DIR) + "/eta_0.1.jsonl",
               std::string(TEST_DATA_DIR) + "/eta_0.02.jsonl"};
  spec.panels = {{"step", "lambda_k1", false}};
  return spec;
}

}  // namespace

TEST(Report, TwoSeriesPanelMatchesGolden) {
  const fs::path out = scratch("report");
  const ReportFiles files = write_report(fixture_report(), "fixturehash", out);
  ASSERT_EQ(files.svgs.size(), 1u);
  EXPECT_EQ(files.svgs[0].filename(), "panel_0_lambda_k1.svg");
  const std::string svg = read_file(files.svgs[0]);
  expect_golden("panel_lambda_k1.svg", svg);
  EXPECT_EQ(svg.rfind("<!-- breakeven report panel; metric=lambda_k1; config_hash=fixturehash", 0), 0u);
  // Deterministic bytes.
  const fs::path again = scratch("again");
  write_report(fixture_report(), "fixturehash", again);
  EXPECT_EQ(read_file(again / "panel_0_lambda_k1.svg"), svg);
  const std::string md = read_file(files.markdown);
  EXPECT_NE(md.find("| eta_0.1 | 0.9 @20 |"), std::string::npos) << md;
}

TEST(Report, EmptyPanelsExitTwo) {
  ReportSpec spec = fixture_report();
  spec.panels.clear();
  try {
    write_report(spec, "h", scratch("r"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(exit_code_for(e), kExitConfig);
  }
  const fs::path dir = scratch("cli");
  json doc = {{"subcommand", "report"}, {"logs", spec.logs}, {"panels", json::array()}};
  EXPECT_EQ(run_cli("report --config " + write_json(dir, "r.json", doc).string() + " --out " +
                    (dir / "out").string()),
            2);
}

TEST(Report, UnknownMetricExitTwo) {
  const fs::path dir = scratch("cli");
  json doc = {{"subcommand", "report"},
              {"logs", fixture_report().logs},
              {"panels", {{{"x", "step"}, {"y", "lambda_k9"}}}}};
  EXPECT_EQ(run_cli("report --config " + write_json(dir, "r.json", doc).string() + " --out " +
                    (dir / "out").string()),
            2);
  ReportSpec spec = fixture_report();
  spec.panels = {{"step", "lambda_k9", false}};
  try {
    write_report(spec, "h", scratch("r"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnknownMetric);
  }
}

TEST(Report, LogScaleClampsZeroWithFootnote) {
  ChartSpec c;
  c.title = "t";
  c.log_y = true;
  c.series = {{"a", {0, 1, 2}, {0.5, 0.0, 2.0}}};
  const std::string svg = render_svg(c);
  EXPECT_NE(svg.find("1 non-positive value(s) clamped to the panel minimum positive value 0.5"),
            std::string::npos);
  c.log_y = false;
  EXPECT_EQ(render_svg(c).find("clamped"), std::string::npos);
}

TEST(Report, ThresholdLinesFollowAccuracy) {
  const LoadedLog log = load_log(std::string(TEST_DATA_DIR) + "/eta_0.1.jsonl");
  ASSERT_TRUE(log.summary.threshold_epoch.has_value());
  const ChartSpec c = panel_chart({"epoch", "lambda_k1", false}, {log}, fixture_report(), "h");
  ASSERT_EQ(c.vlines.size(), 1u);
  EXPECT_EQ(c.vlines[0].x, static_cast<double>(*log.summary.threshold_epoch));
}

TEST(Svg, NiceTicks) {
  EXPECT_EQ(nice_ticks(0.0, 1.0), (std::vector<double>{0.0, 0.2, 0.4, 0.6, 0.8, 1.0}));
  for (double t : nice_ticks(0.013, 7.9)) {
    EXPECT_GE(t, 0.0);
    EXPECT_LE(t, 10.0);
  }
}

TEST(Jsonl, RoundTripAndValidation) {
  MetricRecord r;
  r.step = 5;
  r.train_loss = 0.25;
  r.lambda_h_top = {3.0, 1.0};
  r.cond_ratio = std::numeric_limits<double>::quiet_NaN();
  const std::string text = encode_jsonl(metadata_json(json{{"a", 1}}), {r});
  EXPECT_TRUE(validate_jsonl(text).empty());
  const ParsedLog p = parse_jsonl(text);
  ASSERT_EQ(p.records.size(), 1u);
  EXPECT_EQ(p.records[0].train_loss, 0.25);
  EXPECT_FALSE(p.records[0].cond_ratio.has_value());
  EXPECT_FALSE(p.records[0].lambda_k1.has_value());
  EXPECT_EQ(p.records[0].lambda_h_top, r.lambda_h_top);

  json broken = to_json(r);
  broken.erase("g_ratio");
  const std::string bad = metadata_json(json::object()).dump() + "\n" + broken.dump() + "\n";
  const auto problems = validate_jsonl(bad);
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_NE(problems[0].find("line 2.g_ratio"), std::string::npos);
  EXPECT_FALSE(validate_jsonl("{\"x\":1}\n").empty());
  EXPECT_FALSE(validate_jsonl(text.substr(0, text.size() - 1)).empty());
}

TEST(Jsonl, FormatDouble) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(20.0), "20");
  EXPECT_EQ(std::stod(format_double(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Help, DocumentsColumns) {
  const std::string help = output_columns_help();
  for (const char* col : {"lambda_closed_form", "growth_rate", "lambda_k_star", "gram_spectrum",
                          "g_ratio", "bn_gamma_norms", "delta_loss", "Exit codes"})
    EXPECT_NE(help.find(col), std::string::npos) << col;
}
