#include "breakeven/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "breakeven/error.hpp"
#include "breakeven/metrics_io.hpp"
#include "breakeven/rng.hpp"

namespace breakeven {

using nlohmann::json;

namespace {

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void check_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path.empty() ? "config" : path, "must be an object");
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& path) {
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) throw SchemaError(join(path, it.key()), "unknown field");
}

bool present(const json& j, const char* key) { return j.contains(key) && !j.at(key).is_null(); }

double get_number(const json& j, const char* key, double def, const std::string& path) {
  if (!present(j, key)) return def;
  const json& v = j.at(key);
  if (!v.is_number()) throw SchemaError(join(path, key), "must be a number");
  return v.get<double>();
}

std::uint64_t get_u64(const json& j, const char* key, std::uint64_t def, const std::string& path) {
  if (!present(j, key)) return def;
  const json& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 0) throw SchemaError(join(path, key), "must be >= 0");
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  }
  throw SchemaError(join(path, key), "must be a non-negative integer");
}

std::size_t get_count(const json& j, const char* key, std::size_t def, const std::string& path) {
  return static_cast<std::size_t>(get_u64(j, key, def, path));
}

bool get_bool(const json& j, const char* key, bool def, const std::string& path) {
  if (!present(j, key)) return def;
  if (!j.at(key).is_boolean()) throw SchemaError(join(path, key), "must be a boolean");
  return j.at(key).get<bool>();
}

std::string get_string(const json& j, const char* key, const std::string& def,
                       const std::string& path) {
  if (!present(j, key)) return def;
  if (!j.at(key).is_string()) throw SchemaError(join(path, key), "must be a string");
  return j.at(key).get<std::string>();
}

std::vector<double> get_numbers(const json& j, const char* key, const std::string& path) {
  const json& v = j.at(key);
  if (!v.is_array()) throw SchemaError(join(path, key), "must be an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) throw SchemaError(join(path, key), "must be an array of numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

std::vector<std::size_t> get_counts(const json& j, const char* key, const std::string& path) {
  const json& v = j.at(key);
  if (!v.is_array()) throw SchemaError(join(path, key), "must be an array of integers");
  std::vector<std::size_t> out;
  for (const auto& e : v) {
    if (e.is_number_unsigned()) {
      out.push_back(e.get<std::size_t>());
    } else if (e.is_number_integer() && e.get<std::int64_t>() >= 0) {
      out.push_back(static_cast<std::size_t>(e.get<std::int64_t>()));
    } else {
      throw SchemaError(join(path, key), "must be an array of non-negative integers");
    }
  }
  return out;
}

// Runs fn, turning domain validation errors into schema errors on `field`.
template <class Fn>
auto as_schema(const std::string& field, Fn&& fn) {
  try {
    return fn();
  } catch (const SchemaError&) {
    throw;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidArgument || e.kind() == ErrorKind::InvalidParams)
      throw SchemaError(field, e.what());
    throw;
  }
}

const std::set<std::string> kSubcommands = {"simulate", "train", "sweep", "report"};

}  // namespace

// --- model -----------------------------------------------------------------

json to_json(const MlpSpec& spec) {
  json j;
  j["layer_sizes"] = spec.layer_sizes;
  json acts = json::array();
  for (auto a : spec.activations) acts.push_back(to_string(a));
  j["activations"] = acts;
  json bn = json::array();
  for (bool b : spec.batch_norm) bn.push_back(b);
  j["batch_norm"] = bn;
  j["loss"] = to_string(spec.loss);
  json init;
  init["kind"] = spec.init.kind == InitScheme::Kind::constant ? "constant" : "gaussian_scaled";
  init["gain"] = spec.init.gain ? json(*spec.init.gain) : json(nullptr);
  init["constant"] = spec.init.constant;
  j["init"] = init;
  j["loss_scale"] = spec.loss_scale;
  return j;
}

MlpSpec mlp_spec_from_json(const json& j) {
  const std::string path = "model";
  check_object(j, path);
  check_keys(j, {"layer_sizes", "activation", "activations", "batch_norm", "loss", "init", "loss_scale"},
             path);
  if (!present(j, "layer_sizes")) throw SchemaError("model.layer_sizes", "required");
  MlpSpec spec;
  spec.layer_sizes = get_counts(j, "layer_sizes", path);
  if (spec.layer_sizes.size() < 2) throw SchemaError("model.layer_sizes", "need >= 2 entries");
  const std::size_t hidden = spec.layer_sizes.size() - 2;

  if (present(j, "activations")) {
    if (!j["activations"].is_array()) throw SchemaError("model.activations", "must be an array");
    for (const auto& a : j["activations"]) {
      if (!a.is_string()) throw SchemaError("model.activations", "entries must be strings");
      spec.activations.push_back(
          as_schema("model.activations", [&] { return activation_from_string(a.get<std::string>()); }));
    }
  } else {
    const std::string a = get_string(j, "activation", "relu", path);
    spec.activations.assign(hidden, as_schema("model.activation", [&] { return activation_from_string(a); }));
  }

  if (present(j, "batch_norm") && j["batch_norm"].is_array()) {
    for (const auto& b : j["batch_norm"]) {
      if (!b.is_boolean()) throw SchemaError("model.batch_norm", "entries must be booleans");
      spec.batch_norm.push_back(b.get<bool>());
    }
  } else {
    spec.batch_norm.assign(hidden, get_bool(j, "batch_norm", false, path));
  }

  const std::string loss = get_string(j, "loss", "softmax_cross_entropy", path);
  spec.loss = as_schema("model.loss", [&] { return loss_from_string(loss); });
  spec.loss_scale = get_number(j, "loss_scale", 1.0, path);

  if (present(j, "init")) {
    const json& init = j["init"];
    check_object(init, "model.init");
    check_keys(init, {"kind", "gain", "constant"}, "model.init");
    const std::string kind = get_string(init, "kind", "gaussian_scaled", "model.init");
    if (kind == "gaussian_scaled") {
      spec.init.kind = InitScheme::Kind::gaussian_scaled;
    } else if (kind == "constant") {
      spec.init.kind = InitScheme::Kind::constant;
    } else {
      throw SchemaError("model.init.kind", "must be gaussian_scaled or constant");
    }
    if (present(init, "gain")) spec.init.gain = get_number(init, "gain", 1.0, "model.init");
    spec.init.constant = get_number(init, "constant", 0.0, "model.init");
  }
  as_schema("model", [&] {
    spec.validate();
    return 0;
  });
  return spec;
}

// --- train / sweep ---------------------------------------------------------

json to_json(const RunConfig& c) {
  json j;
  j["dataset"] = c.dataset.to_json();
  j["data_seed"] = c.data_seed;
  j["model"] = to_json(c.model);
  j["eta"] = c.eta;
  j["batch_size"] = c.batch_size;
  j["momentum"] = c.momentum;
  j["momentum_convention"] = "v = beta*v + g; theta = theta - eta*v";
  json sched;
  sched["kind"] = c.schedule.kind == LrSchedule::Kind::step_decay ? "step_decay" : "constant";
  sched["decay_epoch"] = c.schedule.decay_epoch;
  sched["factor"] = c.schedule.factor;
  j["schedule"] = sched;
  j["epochs"] = c.epochs;
  j["eval_every"] = c.eval_every;
  j["eval_every_examples"] = c.eval_every_examples ? json(*c.eval_every_examples) : json(nullptr);
  json sp;
  sp["enabled"] = c.spectra.enabled;
  sp["num_batches"] = c.spectra.num_batches;
  sp["batch_size"] = c.spectra.batch_size ? json(*c.spectra.batch_size) : json(nullptr);
  sp["hessian_k"] = c.spectra.hessian_k;
  sp["hvp_method"] = c.spectra.hvp_method ? json(to_string(*c.spectra.hvp_method)) : json(nullptr);
  sp["lanczos_iters"] = c.spectra.lanczos_iters;
  sp["eval_subset_fraction"] = c.spectra.eval_subset_fraction;
  sp["g_ratio_k"] = c.spectra.g_ratio_k;
  j["spectra"] = sp;
  j["seed"] = c.seed;
  j["accuracy_threshold"] = c.accuracy_threshold;
  return j;
}

namespace {

const std::initializer_list<const char*> kRunKeys = {
    "subcommand", "dataset", "data_seed", "model", "eta", "batch_size", "momentum",
    "momentum_convention", "schedule", "epochs", "eval_every", "eval_every_examples", "spectra", "seed",
    "accuracy_threshold", "axis", "seeds"};

RunConfig run_config_fields(const json& j) {
  RunConfig c;
  if (present(j, "dataset")) {
    check_object(j["dataset"], "dataset");
    check_keys(j["dataset"], {"kind", "n", "classes", "dim", "radius", "sigma", "turns", "path",
                              "val_fraction"},
               "dataset");
    try {
      c.dataset = DatasetSpec::from_json(j["dataset"]);
    } catch (const json::exception& e) {
      throw SchemaError("dataset", e.what());
    }
  }
  c.data_seed = get_u64(j, "data_seed", c.data_seed, "");
  if (!present(j, "model")) throw SchemaError("model", "required");
  c.model = mlp_spec_from_json(j["model"]);
  c.eta = get_number(j, "eta", c.eta, "");
  c.batch_size = get_count(j, "batch_size", c.batch_size, "");
  c.momentum = get_number(j, "momentum", c.momentum, "");
  if (present(j, "schedule")) {
    const json& s = j["schedule"];
    check_object(s, "schedule");
    check_keys(s, {"kind", "decay_epoch", "factor"}, "schedule");
    const std::string kind = get_string(s, "kind", "constant", "schedule");
    if (kind == "constant") {
      c.schedule.kind = LrSchedule::Kind::constant;
    } else if (kind == "step_decay") {
      c.schedule.kind = LrSchedule::Kind::step_decay;
    } else {
      throw SchemaError("schedule.kind", "must be constant or step_decay");
    }
    c.schedule.decay_epoch = get_count(s, "decay_epoch", c.schedule.decay_epoch, "schedule");
    c.schedule.factor = get_number(s, "factor", c.schedule.factor, "schedule");
  }
  c.epochs = get_count(j, "epochs", c.epochs, "");
  c.eval_every = get_count(j, "eval_every", c.eval_every, "");
  if (present(j, "eval_every_examples"))
    c.eval_every_examples = get_count(j, "eval_every_examples", 0, "");
  if (present(j, "spectra")) {
    const json& s = j["spectra"];
    check_object(s, "spectra");
    check_keys(s, {"enabled", "num_batches", "batch_size", "hessian_k", "hvp_method",
                   "lanczos_iters", "eval_subset_fraction", "g_ratio_k"},
               "spectra");
    c.spectra.enabled = get_bool(s, "enabled", true, "spectra");
    c.spectra.num_batches = get_count(s, "num_batches", c.spectra.num_batches, "spectra");
    if (present(s, "batch_size")) c.spectra.batch_size = get_count(s, "batch_size", 0, "spectra");
    c.spectra.hessian_k = get_count(s, "hessian_k", c.spectra.hessian_k, "spectra");
    if (present(s, "hvp_method")) {
      const std::string m = get_string(s, "hvp_method", "", "spectra");
      c.spectra.hvp_method = as_schema("spectra.hvp_method", [&] { return hvp_method_from_string(m); });
    }
    c.spectra.lanczos_iters = get_count(s, "lanczos_iters", c.spectra.lanczos_iters, "spectra");
    c.spectra.eval_subset_fraction =
        get_number(s, "eval_subset_fraction", c.spectra.eval_subset_fraction, "spectra");
    c.spectra.g_ratio_k = get_count(s, "g_ratio_k", c.spectra.g_ratio_k, "spectra");
  }
  c.seed = get_u64(j, "seed", c.seed, "");
  c.accuracy_threshold = get_number(j, "accuracy_threshold", c.accuracy_threshold, "");
  return c;
}

void check_model_matches_data(const RunConfig& c) {
  if (c.dataset.kind == DatasetSpec::Kind::csv) return;
  if (c.model.input_dim() != c.dataset.dim)
    throw SchemaError("model.layer_sizes", "input width must equal dataset.dim");
  if (c.model.output_dim() != c.dataset.classes)
    throw SchemaError("model.layer_sizes", "output width must equal dataset.classes");
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
  check_object(j, "");
  check_keys(j, kRunKeys, "");
  RunConfig c = run_config_fields(j);
  c.validate();
  check_model_matches_data(c);
  return c;
}

json to_json(const SweepConfig& s) {
  json j = to_json(s.base);
  j["axis"] = {{"name", to_string(s.axis)}, {"values", s.values}};
  j["seeds"] = s.seeds;
  return j;
}

SweepConfig sweep_config_from_json(const json& j) {
  check_object(j, "");
  check_keys(j, kRunKeys, "");
  SweepConfig s;
  s.base = run_config_fields(j);
  if (!present(j, "axis")) throw SchemaError("axis", "required");
  const json& axis = j["axis"];
  check_object(axis, "axis");
  check_keys(axis, {"name", "values"}, "axis");
  s.axis = sweep_axis_from_string(get_string(axis, "name", "eta", "axis"));
  if (!present(axis, "values")) throw SchemaError("axis.values", "required");
  s.values = get_numbers(axis, "values", "axis");
  if (present(j, "seeds")) {
    s.seeds.clear();
    for (std::size_t v : get_counts(j, "seeds", "")) s.seeds.push_back(v);
  }
  s.validate();
  check_model_matches_data(s.base);
  return s;
}

// --- simulate --------------------------------------------------------------

json to_json(const SimulateConfig& c) {
  json j;
  j["curvatures"] = c.curvature_source;
  j["psi_star"] = c.psi_star;
  j["alpha"] = c.alpha;
  j["psi"] = c.psi;
  j["etas"] = c.etas;
  j["batch_sizes"] = c.batch_sizes;
  j["growth"] = {{"rho_up", c.growth_rho_up},         {"rho_down", c.growth_rho_down},
                 {"lambda0_up", c.growth_lambda0_up}, {"lambda0_down", c.growth_lambda0_down},
                 {"psi0", c.growth_psi0},             {"max_steps", c.growth_max_steps}};
  j["monte_carlo"] = {{"enabled", c.monte_carlo},
                      {"trajectories", c.mc_trajectories},
                      {"steps", c.mc_steps},
                      {"psi0", c.mc_psi0}};
  j["seed"] = c.seed;
  return j;
}

SimulateConfig simulate_config_from_json(const json& j) {
  check_object(j, "");
  check_keys(j, {"subcommand", "curvatures", "psi_star", "alpha", "psi", "etas", "batch_sizes",
                 "growth", "monte_carlo", "seed"},
             "");
  SimulateConfig c;
  c.seed = get_u64(j, "seed", c.seed, "");
  if (!present(j, "curvatures")) throw SchemaError("curvatures", "required");
  const json& cv = j["curvatures"];
  if (cv.is_array()) {
    c.curvatures = get_numbers(j, "curvatures", "");
    c.curvature_source = c.curvatures;
  } else if (cv.is_object()) {
    check_keys(cv, {"n", "low", "high", "seed"}, "curvatures");
    const std::size_t n = get_count(cv, "n", 100, "curvatures");
    const double low = get_number(cv, "low", 0.5, "curvatures");
    const double high = get_number(cv, "high", 1.5, "curvatures");
    const std::uint64_t seed = get_u64(cv, "seed", c.seed, "curvatures");
    if (!(high >= low)) throw SchemaError("curvatures.high", "must be >= low");
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) c.curvatures.push_back(rng.uniform(low, high));
    c.curvature_source = {{"n", n}, {"low", low}, {"high", high}, {"seed", seed}};
  } else {
    throw SchemaError("curvatures", "must be an array or {n, low, high, seed}");
  }
  c.psi_star = get_number(j, "psi_star", c.psi_star, "");
  c.alpha = get_number(j, "alpha", c.alpha, "");
  c.psi = get_number(j, "psi", c.psi, "");
  if (c.psi == 0.0) throw SchemaError("psi", "must be != 0");
  as_schema("curvatures", [&] { return c.model().size(); });
  const std::size_t n = c.curvatures.size();

  if (present(j, "etas")) c.etas = get_numbers(j, "etas", "");
  if (c.etas.empty()) throw SchemaError("etas", "must be non-empty");
  for (double e : c.etas)
    if (!std::isfinite(e) || !(e > 0.0)) throw SchemaError("etas", "must be > 0");
  if (present(j, "batch_sizes")) {
    c.batch_sizes = get_counts(j, "batch_sizes", "");
  } else {
    c.batch_sizes = {1, n};
  }
  if (c.batch_sizes.empty()) throw SchemaError("batch_sizes", "must be non-empty");
  for (std::size_t s : c.batch_sizes)
    if (s < 1 || s > n) throw SchemaError("batch_sizes", "entries must be in [1, N]");

  if (present(j, "growth")) {
    const json& g = j["growth"];
    check_object(g, "growth");
    check_keys(g, {"rho_up", "rho_down", "lambda0_up", "lambda0_down", "psi0", "max_steps"}, "growth");
    c.growth_rho_up = get_number(g, "rho_up", c.growth_rho_up, "growth");
    c.growth_rho_down = get_number(g, "rho_down", c.growth_rho_down, "growth");
    c.growth_lambda0_up = get_number(g, "lambda0_up", c.growth_lambda0_up, "growth");
    c.growth_lambda0_down = get_number(g, "lambda0_down", c.growth_lambda0_down, "growth");
    c.growth_psi0 = get_number(g, "psi0", c.growth_psi0, "growth");
    c.growth_max_steps = get_count(g, "max_steps", c.growth_max_steps, "growth");
  }
  if (!(c.growth_rho_up > 1.0)) throw SchemaError("growth.rho_up", "must be > 1");
  if (!(c.growth_rho_down > 0.0 && c.growth_rho_down < 1.0))
    throw SchemaError("growth.rho_down", "must be in (0, 1)");
  if (!(c.growth_lambda0_up > 0.0)) throw SchemaError("growth.lambda0_up", "must be > 0");
  if (!(c.growth_lambda0_down > 0.0)) throw SchemaError("growth.lambda0_down", "must be > 0");
  if (c.growth_psi0 == 0.0 || !std::isfinite(c.growth_psi0))
    throw SchemaError("growth.psi0", "must be finite and != 0");

  if (present(j, "monte_carlo")) {
    const json& m = j["monte_carlo"];
    check_object(m, "monte_carlo");
    check_keys(m, {"enabled", "trajectories", "steps", "psi0"}, "monte_carlo");
    c.monte_carlo = get_bool(m, "enabled", true, "monte_carlo");
    c.mc_trajectories = get_count(m, "trajectories", c.mc_trajectories, "monte_carlo");
    c.mc_steps = get_count(m, "steps", c.mc_steps, "monte_carlo");
    c.mc_psi0 = get_number(m, "psi0", c.mc_psi0, "monte_carlo");
  }
  if (c.mc_trajectories < 1) throw SchemaError("monte_carlo.trajectories", "must be >= 1");
  if (c.mc_steps < 2) throw SchemaError("monte_carlo.steps", "must be >= 2");
  if (c.mc_psi0 == c.psi_star) throw SchemaError("monte_carlo.psi0", "must differ from psi_star");
  return c;
}

// --- report ----------------------------------------------------------------

json to_json(const ReportSpec& r) {
  json j;
  j["logs"] = r.logs;
  json panels = json::array();
  for (const auto& p : r.panels) panels.push_back({{"x", p.x}, {"y", p.y}, {"log_y", p.log_y}});
  j["panels"] = panels;
  j["threshold_lines"] = r.threshold_lines;
  j["moving_average"] = r.moving_average;
  j["sweep_report"] = r.sweep_report ? json(*r.sweep_report) : json(nullptr);
  return j;
}

ReportSpec report_spec_from_json(const json& j) {
  check_object(j, "");
  check_keys(j, {"subcommand", "logs", "panels", "threshold_lines", "moving_average", "sweep_report"},
             "");
  ReportSpec r;
  if (!present(j, "logs") || !j["logs"].is_array() || j["logs"].empty())
    throw SchemaError("logs", "need >= 1 log path");
  for (const auto& l : j["logs"]) {
    if (!l.is_string()) throw SchemaError("logs", "entries must be strings");
    r.logs.push_back(l.get<std::string>());
  }
  if (!present(j, "panels") || !j["panels"].is_array())
    throw SchemaError("panels", "must be an array");
  if (j["panels"].empty()) throw SchemaError("panels", "must be non-empty");
  for (const auto& p : j["panels"]) {
    check_object(p, "panels");
    check_keys(p, {"x", "y", "log_y"}, "panels");
    ReportPanel panel;
    panel.x = get_string(p, "x", "step", "panels");
    if (panel.x != "step" && panel.x != "epoch") throw SchemaError("panels.x", "must be step or epoch");
    if (!present(p, "y")) throw SchemaError("panels.y", "required");
    panel.y = get_string(p, "y", "", "panels");
    if (!is_known_metric(panel.y)) throw Error(ErrorKind::UnknownMetric, panel.y);
    panel.log_y = get_bool(p, "log_y", false, "panels");
    r.panels.push_back(panel);
  }
  r.threshold_lines = get_bool(j, "threshold_lines", r.threshold_lines, "");
  r.moving_average = get_count(j, "moving_average", r.moving_average, "");
  if (present(j, "sweep_report")) r.sweep_report = get_string(j, "sweep_report", "", "");
  return r;
}

// --- resolution ------------------------------------------------------------

std::string config_hash(const json& resolved) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(resolved.dump())));
  return buf;
}

ResolvedConfig resolve_config(json doc, const FlagOverrides& flags, const std::string& subcommand) {
  if (!doc.is_object()) throw SchemaError("config", "must be a JSON object");
  std::string sub = subcommand;
  if (sub.empty()) {
    if (!present(doc, "subcommand")) throw SchemaError("subcommand", "required");
    if (!doc["subcommand"].is_string()) throw SchemaError("subcommand", "must be a string");
    sub = doc["subcommand"].get<std::string>();
  }
  if (!kSubcommands.count(sub)) throw SchemaError("subcommand", "unknown subcommand '" + sub + "'");

  if (sub == "train" || sub == "sweep") {
    if (flags.eta) doc["eta"] = *flags.eta;
    if (flags.batch_size) doc["batch_size"] = *flags.batch_size;
    if (flags.momentum) doc["momentum"] = *flags.momentum;
    if (flags.epochs) doc["epochs"] = *flags.epochs;
    if (flags.eval_every) doc["eval_every"] = *flags.eval_every;
    if (flags.seed) doc["seed"] = *flags.seed;
  } else if (sub == "simulate") {
    if (flags.eta) doc["etas"] = json::array({*flags.eta});
    if (flags.batch_size) doc["batch_sizes"] = json::array({*flags.batch_size});
    if (flags.seed) doc["seed"] = *flags.seed;
  }

  ResolvedConfig rc;
  rc.subcommand = sub;
  try {
    if (sub == "train") {
      rc.resolved = to_json(run_config_from_json(doc));
    } else if (sub == "sweep") {
      rc.resolved = to_json(sweep_config_from_json(doc));
    } else if (sub == "simulate") {
      rc.resolved = to_json(simulate_config_from_json(doc));
    } else {
      rc.resolved = to_json(report_spec_from_json(doc));
    }
  } catch (const json::exception& e) {
    throw SchemaError("config", e.what());
  }
  rc.resolved["subcommand"] = sub;
  rc.hash = config_hash(rc.resolved);
  return rc;
}

ResolvedConfig parse_config(const std::filesystem::path& path, const FlagOverrides& flags,
                            const std::string& subcommand) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::Io, "cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  json doc;
  try {
    doc = json::parse(ss.str());
  } catch (const json::parse_error& e) {
    throw SchemaError("config", std::string("invalid JSON: ") + e.what());
  }
  return resolve_config(std::move(doc), flags, subcommand);
}

SimulateConfig ResolvedConfig::simulate() const { return simulate_config_from_json(resolved); }
RunConfig ResolvedConfig::train() const { return run_config_from_json(resolved); }
SweepConfig ResolvedConfig::sweep() const { return sweep_config_from_json(resolved); }
ReportSpec ResolvedConfig::report() const { return report_spec_from_json(resolved); }

}  // namespace breakeven
