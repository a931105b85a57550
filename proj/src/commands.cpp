#include "breakeven/commands.hpp"

#include <cmath>
#include <iostream>

#include "breakeven/error.hpp"
#include "breakeven/metrics_io.hpp"
#include "breakeven/quadratic.hpp"
#include "breakeven/report.hpp"

namespace breakeven {

using nlohmann::json;

int exit_code_for(const std::exception& e) {
  if (const auto* err = dynamic_cast<const Error*>(&e)) {
    switch (err->kind()) {
      case ErrorKind::Schema:
      case ErrorKind::InvalidConfig:
      case ErrorKind::InvalidParams:
      case ErrorKind::NeedTwoValues:
      case ErrorKind::UnknownMetric:
      case ErrorKind::CsvParse:
        return kExitConfig;
      case ErrorKind::Io:
        return kExitIo;
      default:
        return kExitComputational;
    }
  }
  return kExitComputational;
}

namespace {

std::string csv_header(const ResolvedConfig& config) {
  return "# breakeven " + config.subcommand + "; config_hash=" + config.hash +
         "; artifact_version=" + artifact_version() + "\n";
}

std::string yes_no(bool b) { return b ? "1" : "0"; }

void note(const CommandOptions& o, const std::string& msg) {
  if (!o.quiet) std::cerr << msg << '\n';
}

json run_meta(const RunResult& r) {
  return {{"diverged", r.summary.diverged},
          {"divergence_reason", r.divergence_reason ? json(*r.divergence_reason) : json(nullptr)}};
}

}  // namespace

int cmd_simulate(const ResolvedConfig& config, const CommandOptions& options) {
  const SimulateConfig sim = config.simulate();
  const QuadraticModel model = sim.model();
  const std::size_t n = model.size();

  std::string phase = csv_header(config) + "batch_size,eta,lhs,class\n";
  const auto grid = phase_diagram(sim.etas, sim.batch_sizes, model);
  for (std::size_t si = 0; si < sim.batch_sizes.size(); ++si)
    for (std::size_t ei = 0; ei < sim.etas.size(); ++ei) {
      const double lhs = stability_lhs(model, {sim.etas[ei], sim.batch_sizes[si]});
      phase += std::to_string(sim.batch_sizes[si]) + "," + format_double(sim.etas[ei]) + "," +
               format_double(lhs) + "," + to_string(grid[si][ei]) + "\n";
    }
  write_file_atomic(options.out_dir / "phase_diagram.csv", phase);

  bool all_flipped = true;
  std::string table = csv_header(config) +
                      "eta,batch_size,n,alpha,psi,lambda_closed_form,closed_form_negative,"
                      "lambda_flip_up,lambda_max_up,step_flip_up,flipped_up,"
                      "lambda_flip_down,lambda_max_down,step_flip_down,flipped_down\n";
  for (double eta : sim.etas)
    for (std::size_t s : sim.batch_sizes) {
      const ClosedFormBreakEven cf = breakeven_curvature_closed_form(eta, s, n, sim.alpha, sim.psi);
      const SgdSetting setting{eta, s};
      GrowthSchedule up{GrowthSchedule::Direction::increasing_from_stable, sim.growth_lambda0_up,
                        sim.growth_rho_up, sim.growth_psi0};
      GrowthSchedule down{GrowthSchedule::Direction::decreasing_from_unstable,
                          sim.growth_lambda0_down, sim.growth_rho_down, sim.growth_psi0};
      const GrowthResult gu = run_growth_dynamics(setting, up, sim.alpha, n, sim.growth_max_steps);
      const GrowthResult gd = run_growth_dynamics(setting, down, sim.alpha, n, sim.growth_max_steps);
      all_flipped = all_flipped && gu.flipped && gd.flipped;
      table += format_double(eta) + "," + std::to_string(s) + "," + std::to_string(n) + "," +
               format_double(sim.alpha) + "," + format_double(sim.psi) + "," +
               format_double(cf.lambda) + "," + yes_no(cf.negative) + "," +
               format_double(gu.lambda_at_flip) + "," + format_double(gu.lambda_max) + "," +
               std::to_string(gu.step_of_flip) + "," + yes_no(gu.flipped) + "," +
               format_double(gd.lambda_at_flip) + "," + format_double(gd.lambda_max) + "," +
               std::to_string(gd.step_of_flip) + "," + yes_no(gd.flipped) + "\n";
    }
  write_file_atomic(options.out_dir / "breakeven_table.csv", table);

  if (sim.monte_carlo) {
    std::string mc = csv_header(config) + "eta,batch_size,lhs,log_lhs,growth_rate,abs_error\n";
    std::uint64_t case_index = 0;
    for (double eta : sim.etas)
      for (std::size_t s : sim.batch_sizes) {
        const SgdSetting setting{eta, s};
        const double lhs = stability_lhs(model, setting);
        const MonteCarloGrowth g = monte_carlo_growth(model, setting, sim.mc_psi0,
                                                      sim.mc_trajectories, sim.mc_steps,
                                                      sim.seed + case_index * sim.mc_trajectories);
        ++case_index;
        const double log_lhs = std::log(lhs);
        mc += format_double(eta) + "," + std::to_string(s) + "," + format_double(lhs) + "," +
              format_double(log_lhs) + "," + format_double(g.growth_rate) + "," +
              format_double(std::abs(g.growth_rate - log_lhs)) + "\n";
      }
    write_file_atomic(options.out_dir / "monte_carlo.csv", mc);
  }
  if (!all_flipped) note(options, "simulate: growth dynamics hit max_steps without a flip (NoFlip)");
  note(options, "simulate: wrote " + options.out_dir.string());
  return all_flipped ? kExitOk : kExitComputational;
}

int cmd_train(const ResolvedConfig& config, const CommandOptions& options) {
  const RunConfig rc = config.train();
  const RunResult r = run_training(rc);
  const json meta = metadata_json(config.resolved, {{"run", run_meta(r)}});
  write_file_atomic(options.out_dir / "train.jsonl", encode_jsonl(meta, r.log));
  json summary = {{"metadata", meta}, {"summary", to_json(r.summary)}};
  write_file_atomic(options.out_dir / "summary.json", summary.dump(2) + "\n");
  if (r.summary.diverged) {
    note(options, "train: run diverged (" + r.divergence_reason.value_or("non-finite") + ")");
    return kExitComputational;
  }
  note(options, "train: wrote " + std::to_string(r.log.size()) + " records to " +
                    options.out_dir.string());
  return kExitOk;
}

std::string cell_log_name(std::size_t value_index, std::size_t seed_index) {
  return "cell_v" + std::to_string(value_index) + "_s" + std::to_string(seed_index) + ".jsonl";
}

json to_json(const SweepReport& report) {
  json j;
  j["axis"] = to_string(report.axis);
  j["values"] = report.values;
  j["seeds"] = report.seeds;
  j["aggregation"] = "seed mean of per-run maxima; diverged or failed cells excluded";
  json cells = json::array();
  for (const auto& c : report.cells) {
    cells.push_back({{"value_index", c.value_index},
                     {"seed_index", c.seed_index},
                     {"value", c.value},
                     {"run_seed", c.run_seed},
                     {"log_file", "cells/" + cell_log_name(c.value_index, c.seed_index)},
                     {"diverged", c.result.summary.diverged},
                     {"divergence_reason", c.result.divergence_reason
                                               ? json(*c.result.divergence_reason)
                                               : json(nullptr)},
                     {"error", c.error ? json(*c.error) : json(nullptr)},
                     {"summary", to_json(c.result.summary)}});
  }
  j["cells"] = cells;
  json verdicts = json::array();
  for (const auto& v : report.verdicts) {
    json means = json::array();
    for (const auto& m : v.seed_means) means.push_back(m ? json(*m) : json(nullptr));
    verdicts.push_back({{"metric", v.metric},
                        {"expect_decrease", v.expect_decrease},
                        {"noise_ordered_values", v.noise_ordered_values},
                        {"seed_means", means},
                        {"verdict", to_string(v.verdict)}});
  }
  j["verdicts"] = verdicts;
  j["conjecture1"] = to_string(report.conjecture1());
  j["conjecture2"] = to_string(report.conjecture2());
  return j;
}

int cmd_sweep(const ResolvedConfig& config, const CommandOptions& options) {
  const SweepConfig sc = config.sweep();
  const SweepReport report = sweep(sc, Exec::parallel);
  for (const auto& c : report.cells) {
    json cell_cfg = to_json(cell_config(sc, c.value_index, c.seed_index));
    cell_cfg["subcommand"] = "train";
    const json meta = metadata_json(
        cell_cfg, {{"run", run_meta(c.result)},
                   {"sweep_config_hash", config.hash},
                   {"cell", {{"value_index", c.value_index}, {"seed_index", c.seed_index}}}});
    write_file_atomic(options.out_dir / "cells" / cell_log_name(c.value_index, c.seed_index),
                      encode_jsonl(meta, c.result.log));
    if (c.error) note(options, "sweep: cell " + cell_log_name(c.value_index, c.seed_index) +
                                   " failed: " + *c.error);
  }
  json out = to_json(report);
  out["metadata"] = metadata_json(config.resolved);
  write_file_atomic(options.out_dir / "sweep_report.json", out.dump(2) + "\n");
  note(options, "sweep: conjecture1=" + to_string(report.conjecture1()) +
                    " conjecture2=" + to_string(report.conjecture2()));
  return kExitOk;
}

int cmd_report(const ResolvedConfig& config, const CommandOptions& options) {
  const ReportSpec spec = config.report();
  const ReportFiles files = write_report(spec, config.hash, options.out_dir);
  note(options, "report: wrote " + std::to_string(files.svgs.size()) + " panel(s) and " +
                    files.markdown.string());
  return kExitOk;
}

int run_command(const ResolvedConfig& config, const CommandOptions& options) {
  if (config.subcommand == "simulate") return cmd_simulate(config, options);
  if (config.subcommand == "train") return cmd_train(config, options);
  if (config.subcommand == "sweep") return cmd_sweep(config, options);
  if (config.subcommand == "report") return cmd_report(config, options);
  throw SchemaError("subcommand", "unknown subcommand '" + config.subcommand + "'");
}

const char* output_columns_help() {
  return R"(Output files (each starts with a metadata line/comment carrying config_hash):

simulate
  phase_diagram.csv    batch_size, eta, lhs (stability left-hand side),
                       class (stable | breakeven | unstable; band |lhs-1| <= 1e-9)
  breakeven_table.csv  eta, batch_size, n, alpha, psi,
                       lambda_closed_form (curvature where lhs = 1 with s^2 = alpha*lambda/psi^2),
                       closed_form_negative (1 if no positive stable curvature),
                       lambda_flip_up, lambda_max_up, step_flip_up, flipped_up
                         (increasing schedule, stable -> unstable),
                       lambda_flip_down, lambda_max_down, step_flip_down, flipped_down
                         (decreasing schedule, unstable -> stable)
  monte_carlo.csv      eta, batch_size, lhs, log_lhs,
                       growth_rate (LSQ slope of log mean (psi-psi*)^2 per step),
                       abs_error (|growth_rate - log_lhs|)

train / sweep cells (JSONL; line 1 = {schema_version, config, config_hash,
prng_algorithm, artifact_version, run}; then one record per instrumented step,
every eval_every steps or every eval_every_examples examples when that is set)
  step, epoch, lr_current, train_loss, train_acc, val_acc,
  delta_loss (full-train loss before minus after this step's update),
  lambda_k1, lambda_k_star, cond_ratio (lambda_k_star/lambda_k1), trace_k,
  lambda_h_top (top Hessian Ritz values, descending), g_ratio (|g|/|g_k|),
  bn_gamma_norms (per BN layer), gram_spectrum (descending, clamped at 0), negative_ritz
  Missing values are explicit nulls.
  summary.json / sweep_report.json hold run maxima and sweep verdicts.

report
  panel_<i>_<metric>.svg, summary.md
  metrics: train_loss train_acc val_acc delta_loss lambda_k1 lambda_k_star
           cond_ratio trace_k lambda_h1 g_ratio bn_gamma_last lr_current alpha_ratio

Exit codes: 0 ok, 1 divergence / NoFlip, 2 config or schema error, 3 I/O error.
)";
}

}  // namespace breakeven
