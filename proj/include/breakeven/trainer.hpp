#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "breakeven/dataset.hpp"
#include "breakeven/netmodel.hpp"
#include "breakeven/spectra.hpp"

namespace breakeven {

struct LrSchedule {
  enum class Kind { constant, step_decay };
  Kind kind = Kind::constant;
  std::size_t decay_epoch = 0;
  double factor = 0.1;  // lr is multiplied by this once, at decay_epoch

  double lr_at(double eta, std::size_t epoch) const;
};

struct SpectraConfig {
  bool enabled = true;
  std::size_t num_batches = 25;            // L
  std::optional<std::size_t> batch_size;   // M; default max(8, n_train / 25)
  std::size_t hessian_k = 5;
  std::optional<HvpMethod> hvp_method;     // default pearlmutter, fd for BN nets
  std::size_t lanczos_iters = 20;
  double eval_subset_fraction = 0.05;
  std::size_t g_ratio_k = 5;

  std::size_t resolved_batch_size(std::size_t n_train) const;
  HvpMethod resolved_method(const MlpSpec& spec) const;
};

struct RunConfig {
  DatasetSpec dataset;
  std::uint64_t data_seed = 0;
  MlpSpec model;
  double eta = 0.05;
  std::size_t batch_size = 32;
  double momentum = 0.0;
  LrSchedule schedule;
  std::size_t epochs = 20;
  std::size_t eval_every = 10;
  // Cadence in examples seen instead of steps; must be a multiple of batch_size.
  // Keeps checkpoints aligned in epoch time when batch sizes are compared.
  std::optional<std::size_t> eval_every_examples;
  SpectraConfig spectra;
  std::uint64_t seed = 0;
  double accuracy_threshold = 0.60;

  // Throws SchemaError / InvalidConfig.
  void validate() const;
  void validate_against(std::size_t n_train) const;
  // Steps between checkpoints.
  std::size_t eval_interval() const;
};

/// One instrumentation row. Optional fields serialize as JSON null.
struct MetricRecord {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double lr_current = 0.0;
  std::optional<double> train_loss;
  std::optional<double> train_acc;
  std::optional<double> val_acc;
  std::optional<double> delta_loss;
  std::optional<double> lambda_k1;
  std::optional<double> lambda_k_star;
  std::optional<double> cond_ratio;
  std::optional<double> trace_k;
  std::vector<double> lambda_h_top;
  std::optional<double> g_ratio;
  std::vector<double> bn_gamma_norms;
  std::vector<double> gram_spectrum;
  bool negative_ritz = false;
};

struct RunSummary {
  std::optional<double> max_lambda_k1;
  std::optional<std::size_t> max_lambda_k1_step;
  std::optional<double> max_cond_ratio;
  std::optional<std::size_t> max_cond_ratio_step;
  std::optional<double> max_lambda_h1;
  std::optional<std::size_t> max_lambda_h1_step;
  std::optional<double> max_trace_k;
  std::optional<std::size_t> threshold_epoch;
  std::optional<std::size_t> first_negative_delta_loss_step;
  bool diverged = false;
  std::vector<std::optional<double>> alpha_series;  // lambda_K1 / lambda_H1
};

// Recomputes every summary field from a log.
RunSummary summarize(const std::vector<MetricRecord>& log, double accuracy_threshold,
                     bool diverged);

struct RunResult {
  std::vector<MetricRecord> log;
  RunSummary summary;
  std::optional<std::string> divergence_reason;
  ParamVector final_theta;
  BnStats final_bn_stats;
};

struct RunHooks {
  // Called at every instrumented step with the pre-step parameters.
  std::function<void(std::size_t step, const Checkpoint&)> on_checkpoint;
  // Called after every optimizer step.
  std::function<void(std::size_t step, std::span<const double> theta)> on_step;
};

// velocity' = beta * velocity + g; theta' = theta - eta * velocity'
void sgd_step(std::span<double> theta, std::span<const double> g, std::span<double> velocity,
              double eta, double beta);

// L(before) - L(after) on the full set; positive means the loss went down.
double delta_loss(const MlpSpec& spec, std::span<const double> before,
                  std::span<const double> after, const Batch& data, const BnMode& bn);

// The model seed inside config.model is replaced by one derived from
// config.seed. Throws InvalidConfig for zero epochs.
RunResult run_training(const RunConfig& config, const Dataset& data, const RunHooks& hooks = {});
RunResult run_training(const RunConfig& config, const RunHooks& hooks = {});

// Seed of the parameter initialization stream of a run.
std::uint64_t init_seed(const RunConfig& config);

// Shuffled without-replacement partition of the training rows for one epoch;
// the last batch may be short.
std::vector<std::vector<std::size_t>> epoch_batches(const RunConfig& config, std::size_t n_train,
                                                    std::size_t epoch);

struct BreakEvenIndicators {
  std::size_t argmax_lambda_k1_step = 0;
  std::optional<std::size_t> first_negative_delta_loss_step;
  std::optional<double> lambda_k1_lambda_h1_pearson;  // up to and including the argmax
  std::size_t early_points = 0;
};

// Throws InsufficientData with fewer than 5 complete checkpoints.
BreakEvenIndicators breakeven_indicators(const std::vector<MetricRecord>& log);

// Moving average with a trailing window; window <= 1 returns the input.
std::vector<double> moving_average(std::span<const double> x, std::size_t window);

// Debug snapshot: "BKLB", u32 version, u64 D, then D little-endian f64.
std::string encode_snapshot(std::span<const double> theta);
ParamVector decode_snapshot(std::string_view bytes);

}  // namespace breakeven
