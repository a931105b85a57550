#include "breakeven/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "breakeven/error.hpp"
#include "breakeven/rng.hpp"

namespace breakeven {

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::eta: return "eta";
    case SweepAxis::batch_size: return "batch_size";
    case SweepAxis::momentum: return "momentum";
  }
  return "?";
}

SweepAxis sweep_axis_from_string(const std::string& s) {
  if (s == "eta") return SweepAxis::eta;
  if (s == "batch_size") return SweepAxis::batch_size;
  if (s == "momentum") return SweepAxis::momentum;
  throw SchemaError("axis.name", "must be one of eta, batch_size, momentum");
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::holds: return "holds";
    case Verdict::violated: return "violated";
    case Verdict::tie: return "tie";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

void SweepConfig::validate() const {
  if (values.size() < 2) throw Error(ErrorKind::NeedTwoValues, "a sweep axis needs >= 2 values");
  if (seeds.empty()) throw SchemaError("seeds", "need at least one seed");
  for (std::size_t v = 0; v < values.size(); ++v) cell_config(*this, v, 0).validate();
}

RunConfig cell_config(const SweepConfig& sweep, std::size_t value_index, std::size_t seed_index) {
  RunConfig c = sweep.base;
  const double v = sweep.values.at(value_index);
  switch (sweep.axis) {
    case SweepAxis::eta: c.eta = v; break;
    case SweepAxis::momentum: c.momentum = v; break;
    case SweepAxis::batch_size:
      if (!(v >= 1.0) || v != std::floor(v)) throw SchemaError("axis.values", "batch sizes must be positive integers");
      c.batch_size = static_cast<std::size_t>(v);
      break;
  }
  c.seed = derive_seed(sweep.base.seed, sweep.seeds.at(seed_index));
  return c;
}

const MetricVerdict& SweepReport::verdict_for(const std::string& metric) const {
  for (const auto& v : verdicts)
    if (v.metric == metric) return v;
  throw Error(ErrorKind::UnknownMetric, metric);
}

Verdict ordinal_verdict(const std::vector<std::optional<double>>& means, bool expect_decrease) {
  std::vector<double> present;
  for (const auto& m : means)
    if (m) present.push_back(*m);
  if (present.size() < 2) return Verdict::inconclusive;
  bool all_equal = true;
  bool all_expected = true;
  for (std::size_t i = 1; i < present.size(); ++i) {
    if (present[i] != present[i - 1]) all_equal = false;
    const bool ok = expect_decrease ? present[i] < present[i - 1] : present[i] > present[i - 1];
    if (!ok) all_expected = false;
  }
  if (all_equal) return Verdict::tie;
  return all_expected ? Verdict::holds : Verdict::violated;
}

std::vector<MetricVerdict> compute_verdicts(const SweepConfig& sweep,
                                            const std::vector<SweepCell>& cells) {
  // Order values from least to most noise.
  std::vector<std::size_t> order(sweep.values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const bool larger_is_noisier = sweep.axis != SweepAxis::batch_size;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return larger_is_noisier ? sweep.values[a] < sweep.values[b]
                             : sweep.values[a] > sweep.values[b];
  });

  struct MetricDef {
    const char* name;
    bool expect_decrease;
    std::optional<double> RunSummary::*field;
  };
  const MetricDef defs[] = {
      {"max_lambda_k1", true, &RunSummary::max_lambda_k1},
      {"max_lambda_h1", true, &RunSummary::max_lambda_h1},
      {"max_cond_ratio", false, &RunSummary::max_cond_ratio},
      {"max_trace_k", true, &RunSummary::max_trace_k},
  };

  std::vector<MetricVerdict> out;
  for (const auto& def : defs) {
    MetricVerdict mv;
    mv.metric = def.name;
    mv.expect_decrease = def.expect_decrease;
    for (std::size_t vi : order) {
      mv.noise_ordered_values.push_back(sweep.values[vi]);
      double sum = 0.0;
      std::size_t count = 0;
      for (const auto& cell : cells) {
        if (cell.value_index != vi || !cell.usable()) continue;
        const auto& v = cell.result.summary.*(def.field);
        if (!v) continue;
        sum += *v;
        ++count;
      }
      mv.seed_means.push_back(count > 0 ? std::optional<double>(sum / static_cast<double>(count))
                                        : std::nullopt);
    }
    mv.verdict = ordinal_verdict(mv.seed_means, def.expect_decrease);
    out.push_back(std::move(mv));
  }
  return out;
}

SweepReport sweep(const SweepConfig& config, Exec exec,
                  const std::function<void(const SweepCell&)>& on_cell) {
  config.validate();
  const Dataset data = make_dataset(config.base.dataset, config.base.data_seed);

  SweepReport report;
  report.axis = config.axis;
  report.values = config.values;
  report.seeds = config.seeds;
  report.cells.resize(config.values.size() * config.seeds.size());
  for_each_index(exec, report.cells.size(), [&](std::size_t c) {
    SweepCell& cell = report.cells[c];
    cell.value_index = c / config.seeds.size();
    cell.seed_index = c % config.seeds.size();
    cell.value = config.values[cell.value_index];
    try {
      const RunConfig rc = cell_config(config, cell.value_index, cell.seed_index);
      cell.run_seed = rc.seed;
      cell.result = run_training(rc, data);
    } catch (const std::exception& e) {
      cell.error = e.what();
    }
  });
  if (on_cell)
    for (const auto& cell : report.cells) on_cell(cell);
  report.verdicts = compute_verdicts(config, report.cells);
  return report;
}

}  // namespace breakeven
