#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "breakeven/parallel.hpp"
#include "breakeven/trainer.hpp"

namespace breakeven {

enum class SweepAxis { eta, batch_size, momentum };
std::string to_string(SweepAxis a);
SweepAxis sweep_axis_from_string(const std::string& s);

struct SweepConfig {
  RunConfig base;
  SweepAxis axis = SweepAxis::eta;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds{0};

  void validate() const;  // NeedTwoValues, SchemaError
};

// Config of one (value, seed) cell. The run seed depends on the seed entry
// only, so every axis value starts from the same initialization.
RunConfig cell_config(const SweepConfig& sweep, std::size_t value_index, std::size_t seed_index);

struct SweepCell {
  std::size_t value_index = 0;
  std::size_t seed_index = 0;
  double value = 0.0;
  std::uint64_t run_seed = 0;
  RunResult result;
  std::optional<std::string> error;  // cell failed for a reason other than divergence

  bool usable() const { return !error && !result.summary.diverged; }
};

enum class Verdict { holds, violated, tie, inconclusive };
std::string to_string(Verdict v);

/// Ordinal check of one summary metric along the axis. Values are ordered from
/// least to most gradient noise (larger eta / momentum, smaller batch).
struct MetricVerdict {
  std::string metric;
  bool expect_decrease = true;  // along increasing noise
  std::vector<double> noise_ordered_values;
  std::vector<std::optional<double>> seed_means;  // aligned with noise_ordered_values
  Verdict verdict = Verdict::inconclusive;
};

struct SweepReport {
  SweepAxis axis = SweepAxis::eta;
  std::vector<double> values;
  std::vector<std::uint64_t> seeds;
  std::vector<SweepCell> cells;  // value-major
  std::vector<MetricVerdict> verdicts;

  const MetricVerdict& verdict_for(const std::string& metric) const;
  Verdict conjecture1() const { return verdict_for("max_lambda_k1").verdict; }
  Verdict conjecture2() const { return verdict_for("max_cond_ratio").verdict; }
};

Verdict ordinal_verdict(const std::vector<std::optional<double>>& noise_ordered_means,
                        bool expect_decrease);

// Seed-mean verdicts over usable cells.
std::vector<MetricVerdict> compute_verdicts(const SweepConfig& sweep,
                                            const std::vector<SweepCell>& cells);

/// Runs every (value, seed) cell; cell failures are recorded, not rethrown.
SweepReport sweep(const SweepConfig& config, Exec exec = Exec::parallel,
                  const std::function<void(const SweepCell&)>& on_cell = {});

}  // namespace breakeven
