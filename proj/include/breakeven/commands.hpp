#pragma once

#include <exception>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "breakeven/config.hpp"
#include "breakeven/sweep.hpp"

namespace breakeven {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitComputational = 1;  // divergence, NoFlip
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

int exit_code_for(const std::exception& e);

struct CommandOptions {
  std::filesystem::path out_dir = "out";
  bool quiet = false;
};

// simulate: phase_diagram.csv, breakeven_table.csv, monte_carlo.csv (if enabled).
int cmd_simulate(const ResolvedConfig& config, const CommandOptions& options);
// train: train.jsonl, summary.json.
int cmd_train(const ResolvedConfig& config, const CommandOptions& options);
// sweep: cells/cell_v<i>_s<j>.jsonl, sweep_report.json.
int cmd_sweep(const ResolvedConfig& config, const CommandOptions& options);
// report: panel_<i>_<metric>.svg, summary.md.
int cmd_report(const ResolvedConfig& config, const CommandOptions& options);

int run_command(const ResolvedConfig& config, const CommandOptions& options);

nlohmann::json to_json(const SweepReport& report);
std::string cell_log_name(std::size_t value_index, std::size_t seed_index);

// Column documentation shared by --help and the README.
const char* output_columns_help();

}  // namespace breakeven
