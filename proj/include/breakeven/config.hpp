#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "breakeven/quadratic.hpp"
#include "breakeven/sweep.hpp"
#include "breakeven/trainer.hpp"

namespace breakeven {

/// Inputs of `simulate`. Curvatures come either from an explicit list or
/// from a Uniform(low, high) draw of size n.
struct SimulateConfig {
  std::vector<double> curvatures;
  nlohmann::json curvature_source;  // echoed as given, with defaults filled
  double psi_star = 0.0;
  double alpha = 0.5;
  double psi = 1.0;  // offset used by the closed-form break-even column
  std::vector<double> etas{0.5, 0.1, 0.02};
  std::vector<std::size_t> batch_sizes;  // default {1, N}

  double growth_rho_up = 1.01;
  double growth_rho_down = 0.99;
  double growth_lambda0_up = 1e-3;
  double growth_lambda0_down = 1e4;
  double growth_psi0 = 1.0;
  std::size_t growth_max_steps = 100000;

  bool monte_carlo = false;
  std::size_t mc_trajectories = 10000;
  std::size_t mc_steps = 200;
  double mc_psi0 = 1.0;

  std::uint64_t seed = 0;

  QuadraticModel model() const { return QuadraticModel(curvatures, psi_star, alpha); }
};

struct ReportPanel {
  std::string x = "step";  // step | epoch
  std::string y;
  bool log_y = false;
};

struct ReportSpec {
  std::vector<std::string> logs;
  std::vector<ReportPanel> panels;
  bool threshold_lines = true;
  std::size_t moving_average = 0;  // 0 / 1: raw series
  std::optional<std::string> sweep_report;
};

/// Flag overrides; unset fields leave the file value alone.
struct FlagOverrides {
  std::optional<double> eta;
  std::optional<std::size_t> batch_size;
  std::optional<double> momentum;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> eval_every;
  std::optional<std::uint64_t> seed;
};

struct ResolvedConfig {
  std::string subcommand;
  nlohmann::json resolved;  // every default filled in
  std::string hash;         // hex FNV-1a of resolved.dump()

  SimulateConfig simulate() const;
  RunConfig train() const;
  SweepConfig sweep() const;
  ReportSpec report() const;
};

// Typed <-> JSON. from_json fills defaults and throws SchemaError.
nlohmann::json to_json(const MlpSpec& spec);
MlpSpec mlp_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SweepConfig& config);
SweepConfig sweep_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimulateConfig& config);
SimulateConfig simulate_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ReportSpec& spec);
ReportSpec report_spec_from_json(const nlohmann::json& j);

std::string config_hash(const nlohmann::json& resolved);

// `subcommand` wins over a "subcommand" key in the document when given.
ResolvedConfig resolve_config(nlohmann::json doc, const FlagOverrides& flags,
                              const std::string& subcommand = {});

// Reads and resolves a file. Throws Io (missing/unreadable) or SchemaError.
ResolvedConfig parse_config(const std::filesystem::path& path, const FlagOverrides& flags,
                            const std::string& subcommand = {});

}  // namespace breakeven
