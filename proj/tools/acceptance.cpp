// breakeven_acceptance: one PASS/FAIL line per acceptance criterion.
//
// Criteria 7-12 share the desk-scale runs; they are computed once and the
// artifacts (JSONL logs, sweep reports, SVG panels) are kept under --out.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "CLI11.hpp"
#include "json.hpp"

#include "breakeven/commands.hpp"
#include "breakeven/config.hpp"
#include "breakeven/dataset.hpp"
#include "breakeven/error.hpp"
#include "breakeven/linalg.hpp"
#include "breakeven/metrics_io.hpp"
#include "breakeven/netmodel.hpp"
#include "breakeven/quadratic.hpp"
#include "breakeven/rng.hpp"
#include "breakeven/spectra.hpp"
#include "breakeven/sweep.hpp"
#include "breakeven/trainer.hpp"

using namespace breakeven;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  bool soft = false;  // failure is reported but does not gate the exit code
};

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os.precision(precision);
  os << v;
  return os.str();
}

std::string fmt_list(const std::vector<std::optional<double>>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    s += xs[i] ? fmt(*xs[i]) : "null";
  }
  return s + "]";
}

// ---------------------------------------------------------------------------
// Desk-scale task shared by criteria 7-12.

// Overlap is set by sigma / radius = 0.7 (Bayes error about 8%). Inputs are
// spread wide enough, and the init small enough, that the network sharpens
// well past 2/eta of the larger learning rates after leaving the origin.
json desk_base() {
  return {{"dataset", {{"kind", "gaussian_blobs"}, {"n", 2000}, {"radius", 6.0}, {"sigma", 4.2}}},
          {"model", {{"layer_sizes", {2, 32, 32, 2}}, {"init", {{"gain", 0.2}}}, {"loss", "mse"}}},
          {"eta", 0.05},
          {"batch_size", 32},
          {"epochs", 100},
          {"eval_every", 10}};
}

const std::vector<std::uint64_t> kSeeds{0, 1, 2, 3, 4};

ResolvedConfig resolve(json doc, const std::string& sub) { return resolve_config(std::move(doc), {}, sub); }

struct SweepRun {
  fs::path dir;
  json report;

  std::vector<std::optional<double>> seed_means(const std::string& metric) const {
    for (const auto& v : report["verdicts"])
      if (v["metric"] == metric) {
        std::vector<std::optional<double>> out;
        for (const auto& m : v["seed_means"])
          out.push_back(m.is_null() ? std::nullopt : std::optional<double>(m.get<double>()));
        return out;
      }
    throw Error(ErrorKind::InvalidParams, "sweep report has no metric " + metric);
  }
  // Seed means ordered by the axis values as given (not by noise).
  std::vector<std::optional<double>> by_value(const std::string& metric) const {
    std::vector<std::optional<double>> noise = seed_means(metric);
    std::vector<double> ordered;
    for (const auto& v : report["verdicts"])
      if (v["metric"] == metric) ordered = v["noise_ordered_values"].get<std::vector<double>>();
    std::vector<std::optional<double>> out;
    for (double value : report["values"].get<std::vector<double>>())
      for (std::size_t i = 0; i < ordered.size(); ++i)
        if (ordered[i] == value) out.push_back(noise[i]);
    return out;
  }
  std::size_t diverged_cells() const {
    std::size_t n = 0;
    for (const auto& c : report["cells"]) n += c["diverged"].get<bool>() || !c["error"].is_null();
    return n;
  }
};

class Artifacts {
 public:
  explicit Artifacts(fs::path root) : root_(std::move(root)) { fs::create_directories(root_); }

  const fs::path& root() const { return root_; }

  const SweepRun& eta_sweep() {
    if (!eta_) eta_ = run_sweep("c7_eta", "eta", {0.01, 0.05, 0.2}, desk_base());
    return *eta_;
  }
  const SweepRun& batch_sweep() {
    // Checkpoints at the finest cadence common to all batch sizes, so every run
    // is evaluated at the same points in epoch time. With a cadence in steps the
    // small-batch runs would get more checkpoints, and the maximum of a noisy
    // series grows with the number of draws.
    json base = desk_base();
    base["eval_every_examples"] = 128;
    if (!batch_) batch_ = run_sweep("c7_batch", "batch_size", {8, 32, 128}, base);
    return *batch_;
  }
  const SweepRun& bn_sweep() {
    json base = desk_base();
    base["model"]["batch_norm"] = {true, true};
    base["epochs"] = 50;
    if (!bn_) bn_ = run_sweep("c11_bn", "eta", {0.01, 0.2}, base);
    return *bn_;
  }
  // Every JSONL written so far.
  std::vector<fs::path> jsonl_files() const {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(root_))
      if (e.path().extension() == ".jsonl") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  SweepRun run_sweep(const std::string& name, const std::string& axis, const std::vector<double>& values,
                     json base) {
    base["axis"] = {{"name", axis}, {"values", values}};
    base["seeds"] = kSeeds;
    const ResolvedConfig rc = resolve(base, "sweep");
    SweepRun run{root_ / name, {}};
    fs::create_directories(run.dir);
    const int code = cmd_sweep(rc, {run.dir, true});
    if (code != kExitOk) throw Error(ErrorKind::InvalidConfig, name + ": sweep exit " + std::to_string(code));
    run.report = json::parse(read_file(run.dir / "sweep_report.json"));
    return run;
  }

  fs::path root_;
  std::optional<SweepRun> eta_, batch_, bn_;
};

bool strictly(const std::vector<std::optional<double>>& xs, bool decreasing) {
  for (const auto& x : xs)
    if (!x) return false;
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (decreasing ? !(*xs[i] < *xs[i - 1]) : !(*xs[i] > *xs[i - 1])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// 1. Closed-form break-even at S = N, read back from the simulate table.

Outcome criterion1(const fs::path& out) {
  const fs::path dir = out / "c1_simulate";
  fs::create_directories(dir);
  const json doc = {{"curvatures", {{"n", 100}, {"low", 0.5}, {"high", 1.5}, {"seed", 1}}},
                    {"alpha", 0.5},
                    {"etas", {0.5, 0.1, 0.02}},
                    {"batch_sizes", {1, 10, 100}}};
  cmd_simulate(resolve(doc, "simulate"), {dir, true});
  std::istringstream table(read_file(dir / "breakeven_table.csv"));
  std::string line;
  double worst = 0.0;
  std::size_t rows = 0;
  while (std::getline(table, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("eta,", 0) == 0) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) f.push_back(cell);
    const double eta = std::stod(f[0]);
    if (std::stoul(f[1]) != std::stoul(f[2])) continue;
    const double expected = 2.0 / eta;
    worst = std::max(worst, std::abs(std::stod(f[5]) - expected) / expected);
    ++rows;
  }
  return {rows == 3 && worst <= 1e-12, "S=N rows " + std::to_string(rows) + ", max rel err " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// 2. Stability LHS vs Monte-Carlo growth of the second moment.

// Kurtosis-style ratio E[x^4] / E[x^2]^2 of the per-step multiplier x = 1 - eta*lambda_B
// under a Gaussian approximation of the minibatch curvature. The ensemble mean
// of a product of 200 such factors is only a usable estimator of its
// expectation when this ratio is close to 1.
double multiplier_dispersion(const QuadraticModel& m, const SgdSetting& s) {
  const double n = static_cast<double>(m.size()), b = static_cast<double>(s.batch_size);
  const double mu = 1.0 - s.eta * m.mean_curvature();
  const double var = s.eta * s.eta * m.curvature_variance() * (n - b) / (b * (n - 1.0));
  const double m2 = mu * mu + var, m4 = mu * mu * mu * mu + 6.0 * mu * mu * var + 3.0 * var * var;
  return m4 / (m2 * m2);
}

Outcome criterion2() {
  Rng rng(20240531);
  double worst = 0.0;
  std::size_t cases = 0, draws = 0;
  std::string worst_case;
  while (cases < 20) {
    ++draws;
    const std::size_t n = 20 + rng.below(181);
    const double mean = rng.uniform(0.5, 5.0), spread = rng.uniform(0.0, 0.9);
    std::vector<double> h(n);
    for (auto& x : h) x = mean * (1.0 + spread * rng.uniform(-1.0, 1.0));
    const QuadraticModel model(h, rng.uniform(-1.0, 1.0));
    const SgdSetting setting{rng.uniform(0.1, 2.3) / mean, 1 + rng.below(n)};
    if (std::log(multiplier_dispersion(model, setting)) > 0.01) continue;  // see multiplier_dispersion
    const MonteCarloGrowth g =
        monte_carlo_growth(model, setting, model.psi_star + 1.0, 10000, 200, 1000 + cases);
    const double err = std::abs(g.growth_rate - std::log(stability_lhs(model, setting)));
    if (err > worst) {
      worst = err;
      worst_case = "N=" + std::to_string(n) + " eta=" + fmt(setting.eta) + " S=" +
                   std::to_string(setting.batch_size);
    }
    ++cases;
  }
  return {worst <= 0.02, "20 cases (" + std::to_string(draws) + " drawn), max |rate - log lhs| " +
                             fmt(worst) + " at " + worst_case};
}

// ---------------------------------------------------------------------------
// 3. Orderings of the growth dynamics.

Outcome criterion3() {
  const std::vector<double> etas{0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
  const std::vector<std::size_t> sizes{1, 2, 8, 32, 100, 200};
  const std::size_t n = 200;
  const double alpha = 0.5;
  std::size_t checks = 0, violations = 0;
  std::string first;
  for (bool up : {true, false}) {
    const auto dir = up ? GrowthSchedule::Direction::increasing_from_stable
                        : GrowthSchedule::Direction::decreasing_from_unstable;
    const GrowthSchedule sched{dir, up ? 1e-3 : 1e4, up ? 1.01 : 0.99, 1.0};
    // Increasing schedule: the largest curvature visited. Decreasing schedule:
    // the curvature at which the iterate first stops growing.
    auto value = [&](double eta, std::size_t s) {
      const GrowthResult r = run_growth_dynamics({eta, s}, sched, alpha, n, 100000);
      if (!r.flipped) throw Error(ErrorKind::NoConvergence, "growth dynamics did not flip");
      return up ? r.lambda_max : r.lambda_at_flip;
    };
    auto check = [&](bool ok, const std::string& what) {
      ++checks;
      if (!ok && violations++ == 0) first = what;
    };
    for (std::size_t s : sizes)
      for (std::size_t i = 1; i < etas.size(); ++i)
        check(value(etas[i], s) <= value(etas[i - 1], s),
              std::string(up ? "up" : "down") + " S=" + std::to_string(s) + " eta " + fmt(etas[i]));
    for (double eta : etas)
      for (std::size_t i = 1; i < sizes.size(); ++i)
        check(value(eta, sizes[i]) >= value(eta, sizes[i - 1]),
              std::string(up ? "up" : "down") + " eta=" + fmt(eta) + " S " + std::to_string(sizes[i]));
  }
  return {violations == 0, std::to_string(checks) + " pairwise checks, " + std::to_string(violations) +
                               " violations" + (first.empty() ? "" : " (first: " + first + ")")};
}

// ---------------------------------------------------------------------------
// 4. Gram trick vs dense covariance (Eigen as the independent solver).

Outcome criterion4() {
  Rng rng(4);
  double worst_eig = 0.0, worst_trace = 0.0;
  for (int c = 0; c < 50; ++c) {
    const std::size_t d = 1 + rng.below(64), l = 2 + rng.below(9);
    std::vector<ParamVector> grads(l, ParamVector(d));
    const double scale = std::exp(rng.uniform(-2.0, 2.0));
    for (auto& g : grads)
      for (auto& x : g) x = scale * rng.normal();
    const ParamVector mean = mean_gradient(grads);
    const KSpectrum k = k_spectrum(gram_from_gradients(grads, mean, Exec::serial));

    Eigen::MatrixXd x(l, d);
    for (std::size_t i = 0; i < l; ++i)
      for (std::size_t j = 0; j < d; ++j) x(i, j) = grads[i][j];
    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(l);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    std::vector<double> dense(es.eigenvalues().data(), es.eigenvalues().data() + d);
    std::sort(dense.rbegin(), dense.rend());
    const std::size_t rank = std::min(l - 1, d);
    for (std::size_t i = 0; i < rank; ++i)
      worst_eig = std::max(worst_eig, std::abs(k.gram_spectrum[i] - dense[i]));
    const double tr = cov.trace();
    worst_trace = std::max(worst_trace, std::abs(k.trace_k - tr) / tr);
  }
  return {worst_eig <= 1e-10 && worst_trace <= 1e-9,
          "50 cases, max |eig diff| " + fmt(worst_eig) + ", max trace rel err " + fmt(worst_trace)};
}

// ---------------------------------------------------------------------------
// 5. Lanczos vs Jacobi.

Outcome criterion5() {
  double worst = 0.0;
  for (std::uint64_t c = 0; c < 25; ++c) {
    Rng rng(500 + c);
    std::vector<double> a(50 * 50);
    for (auto& x : a) x = rng.normal();
    const DenseSymmetric m(50, a);
    const EigenPairs lz = lanczos_topk(LinearOperator::from_dense(m), {5, 50, c});
    const EigenPairs jc = jacobi_eigh(m);
    for (std::size_t i = 0; i < 5; ++i) worst = std::max(worst, std::abs(lz.eigenvalues[i] - jc.eigenvalues[i]));
  }
  return {worst <= 1e-8, "25 matrices, max top-5 |diff| " + fmt(worst)};
}

// ---------------------------------------------------------------------------
// 6. Backprop and HVP vs finite differences over the spec test matrix.

Batch check_batch(const MlpSpec& spec, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Batch b;
  b.n = n;
  b.d = spec.input_dim();
  for (std::size_t i = 0; i < n * b.d; ++i) b.inputs.push_back(rng.normal());
  if (spec.loss == LossKind::mse) {
    b.target_dim = spec.output_dim();
    for (std::size_t i = 0; i < n * b.target_dim; ++i) b.targets.push_back(rng.normal());
  } else {
    for (std::size_t i = 0; i < n; ++i) b.labels.push_back(static_cast<int>(rng.below(spec.output_dim())));
  }
  return b;
}

double max_rel_fd_error(const MlpSpec& spec, ParamVector theta, const Batch& b, const BnMode& bn) {
  const ParamVector g = grad(spec, theta, b, bn);
  double worst = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    const double h = 1e-5 * std::max(1.0, std::abs(theta[j])), t = theta[j];
    theta[j] = t + h;
    const double up = forward_loss(spec, theta, b, bn).mean_loss;
    theta[j] = t - h;
    const double down = forward_loss(spec, theta, b, bn).mean_loss;
    theta[j] = t;
    const double fd = (up - down) / (2.0 * h);
    worst = std::max(worst, std::abs(g[j] - fd) / std::max({1.0, std::abs(g[j]), std::abs(fd)}));
  }
  return worst;
}

Outcome criterion6() {
  double worst_grad = 0.0, worst_hvp = 0.0;
  std::size_t specs = 0;
  for (Activation act : {Activation::relu, Activation::tanh})
    for (LossKind loss : {LossKind::softmax_cross_entropy, LossKind::mse})
      for (bool bn : {false, true})
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
          const MlpSpec spec = make_mlp({3, 6, 5, 3}, act, loss, bn, 7 + seed);
          ParamVector theta = init_params(spec);
          Rng rng(seed);
          for (auto& t : theta) t += 0.1 * rng.normal();
          const Batch b = check_batch(spec, 10, 100 + seed);
          worst_grad = std::max(worst_grad, max_rel_fd_error(spec, theta, b, BnMode::batch()));
          if (bn) {
            const BnMode frozen = BnMode::frozen(forward_loss(spec, theta, b, BnMode::batch()).batch_stats);
            worst_grad = std::max(worst_grad, max_rel_fd_error(spec, theta, b, frozen));
          } else {
            const Vec v = rng.normal_vector(theta.size());
            const ParamVector exact = hvp_pearlmutter(spec, theta, b, v);
            const ParamVector fd = hvp_fd(spec, theta, b, v, BnMode::batch());
            Vec d(fd.size());
            for (std::size_t i = 0; i < d.size(); ++i) d[i] = fd[i] - exact[i];
            worst_hvp = std::max(worst_hvp, norm2(d) / norm2(exact));
          }
          ++specs;
        }
  return {worst_grad < 1e-5 && worst_hvp < 1e-4,
          std::to_string(specs) + " (spec, point) pairs, max grad rel err " + fmt(worst_grad) +
              ", max HVP rel err " + fmt(worst_hvp)};
}

// ---------------------------------------------------------------------------
// 7-8. Conjectures on the desk task.

Outcome criterion7(Artifacts& art) {
  const SweepRun& e = art.eta_sweep();
  const SweepRun& s = art.batch_sweep();
  const auto k_eta = e.by_value("max_lambda_k1"), h_eta = e.by_value("max_lambda_h1");
  const auto k_s = s.by_value("max_lambda_k1");
  const bool ok = strictly(k_eta, true) && strictly(h_eta, true) && strictly(k_s, false);
  return {ok, "eta {0.01,0.05,0.2}: max lambda_K1 " + fmt_list(k_eta) + ", max lambda_H1 " +
                  fmt_list(h_eta) + "; S {8,32,128}: max lambda_K1 " + fmt_list(k_s) + "; diverged cells " +
                  std::to_string(e.diverged_cells() + s.diverged_cells())};
}

Outcome criterion8(Artifacts& art) {
  const SweepRun& e = art.eta_sweep();
  const SweepRun& s = art.batch_sweep();
  const auto c_eta = e.by_value("max_cond_ratio"), c_s = s.by_value("max_cond_ratio");
  const auto t_eta = e.by_value("max_trace_k");
  const bool ok = strictly(c_eta, false) && strictly(c_s, true) && strictly(t_eta, true);
  return {ok, "max cond_ratio eta " + fmt_list(c_eta) + ", S " + fmt_list(c_s) + "; max Tr(K) eta " +
                  fmt_list(t_eta)};
}

// ---------------------------------------------------------------------------
// 9. Early-phase diagnostics on the eta = 0.01 run (seed index 0).

Outcome criterion9(Artifacts& art) {
  const SweepRun& e = art.eta_sweep();
  const fs::path log_path = e.dir / "cells" / cell_log_name(0, 0);
  const ParsedLog log = parse_jsonl(read_file(log_path));
  const BreakEvenIndicators ind = breakeven_indicators(log.records);

  // Panels for inspection whatever the outcome.
  const fs::path plots = art.root() / "c9_report";
  fs::create_directories(plots);
  const json rep = {{"logs", {log_path.string()}},
                    {"panels",
                     {{{"y", "lambda_k1"}}, {{"y", "lambda_h1"}}, {{"y", "delta_loss"}}, {{"y", "train_loss"}}}}};
  cmd_report(resolve(rep, "report"), {plots, true});

  const std::optional<double> r = ind.lambda_k1_lambda_h1_pearson;
  const double peak = static_cast<double>(ind.argmax_lambda_k1_step);
  const std::optional<std::size_t> neg = ind.first_negative_delta_loss_step;
  const bool timing = neg && std::abs(static_cast<double>(*neg) - peak) <= 0.2 * peak;
  const bool corr = r && *r >= 0.6;
  Outcome o;
  o.pass = corr && timing;
  o.soft = !o.pass && r && *r >= 0.4;
  o.detail = "pearson(lambda_K1, lambda_H1) up to argmax = " + (r ? fmt(*r) : std::string("null")) + " over " +
             std::to_string(ind.early_points) + " points; argmax lambda_K1 step " +
             std::to_string(ind.argmax_lambda_k1_step) + ", first negative delta_loss step " +
             (neg ? std::to_string(*neg) : std::string("none")) + "; panels in " + plots.string();
  return o;
}

// ---------------------------------------------------------------------------
// 10. M-sensitivity along one trajectory (eta = 0.05, S = 32, seed 0).

Outcome criterion10() {
  json doc = desk_base();
  doc["eval_every"] = 50;
  doc["spectra"] = {{"enabled", false}};
  const RunConfig config = resolve(doc, "train").train();
  const Dataset data = make_dataset(config.dataset, config.data_seed);
  std::vector<Checkpoint> checkpoints;
  RunHooks hooks;
  hooks.on_checkpoint = [&](std::size_t, const Checkpoint& c) { checkpoints.push_back(c); };
  const RunResult run = run_training(config, data, hooks);
  MlpSpec spec = config.model;
  spec.seed = init_seed(config);
  // MSE runs train against one-hot targets of the class labels.
  Batch train = data.train;
  train.target_dim = spec.output_dim();
  train.targets.assign(train.n * train.target_dim, 0.0);
  for (std::size_t i = 0; i < train.n; ++i)
    train.targets[i * train.target_dim + static_cast<std::size_t>(train.labels[i])] = 1.0;
  const MSensitivity m = m_sensitivity_report(spec, checkpoints, train, 10, 1, 32, 800);
  const std::optional<double> r = m.pearson_r;
  return {r && *r >= 0.8, std::to_string(checkpoints.size()) + " checkpoints, L*M = 800, pearson(M=1, M=32) = " +
                              (r ? fmt(*r) : std::string("null")) + (run.summary.diverged ? " (diverged)" : "")};
}

// ---------------------------------------------------------------------------
// 11. Batch normalization.

Outcome criterion11(Artifacts& art) {
  const SweepRun& bn = art.bn_sweep();
  const auto cond = bn.by_value("max_cond_ratio");
  const bool cond_ok = cond.size() == 2 && cond[0] && cond[1] && *cond[1] > *cond[0];
  // ||gamma|| of the last BN layer: seed mean at step 0 vs after 5 epochs, eta = 0.2.
  double start = 0.0, after = 0.0;
  std::size_t seeds = 0;
  for (std::size_t si = 0; si < kSeeds.size(); ++si) {
    const ParsedLog log = parse_jsonl(read_file(bn.dir / "cells" / cell_log_name(1, si)));
    std::optional<double> s0, s5;
    for (const auto& r : log.records) {
      if (r.bn_gamma_norms.empty()) continue;
      if (!s0) s0 = r.bn_gamma_norms.back();
      if (r.epoch == 5) {
        s5 = r.bn_gamma_norms.back();
        break;
      }
    }
    if (s0 && s5) {
      start += *s0;
      after += *s5;
      ++seeds;
    }
  }
  const bool gamma_ok = seeds == kSeeds.size() && after < start;
  return {cond_ok && gamma_ok,
          "max cond_ratio eta {0.01,0.2} " + fmt_list(cond) + "; ||gamma_last|| at eta=0.2: step 0 " +
              fmt(start / std::max<std::size_t>(seeds, 1)) + " -> epoch 5 " +
              fmt(after / std::max<std::size_t>(seeds, 1)) + " (seed mean over " + std::to_string(seeds) + ")"};
}

// ---------------------------------------------------------------------------
// 12. Byte-identical outputs and schema-valid logs.

Outcome criterion12(Artifacts& art) {
  json doc = desk_base();
  doc["epochs"] = 10;
  const ResolvedConfig train_rc = resolve(doc, "train");
  const fs::path dir = art.root() / "c12";
  fs::create_directories(dir);
  const json rep = {{"logs", {(dir / "train.jsonl").string()}},
                    {"panels", {{{"y", "lambda_k1"}}, {{"y", "cond_ratio"}, {"log_y", true}}}}};
  const ResolvedConfig report_rc = resolve(rep, "report");

  // Same configs twice into the same directory; every file must come back byte-identical.
  auto produce = [&] {
    cmd_train(train_rc, {dir, true});
    cmd_report(report_rc, {dir / "report", true});
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_file(e.path());
    return files;
  };
  const auto first = produce(), second = produce();
  std::vector<std::string> problems;
  std::size_t svgs = 0;
  for (const auto& [name, bytes] : first) {
    svgs += fs::path(name).extension() == ".svg";
    const auto it = second.find(name);
    if (it == second.end() || it->second != bytes) problems.push_back(name + " differs between runs");
  }
  if (svgs == 0) problems.push_back("no SVG produced");
  std::size_t logs = 0;
  for (const fs::path& p : art.jsonl_files()) {
    ++logs;
    for (const auto& issue : validate_jsonl(read_file(p))) problems.push_back(p.filename().string() + ": " + issue);
  }
  std::string detail = std::to_string(first.size()) + " files (" + std::to_string(svgs) +
                       " SVG) byte-identical across reruns, " + std::to_string(logs) + " JSONL logs validated";
  if (!problems.empty()) detail += "; first problem: " + problems.front();
  return {problems.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"breakeven acceptance criteria"};
  std::string out = "acceptance_out";
  std::vector<int> only;
  app.add_option("--out", out, "artifact directory")->capture_default_str();
  app.add_option("--only", only, "run only these criteria (1-12)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);

  Artifacts art(out);
  const std::vector<Criterion> criteria{
      {1, "break-even closed form (S=N)", 1, [&] { return criterion1(art.root()); }},
      {2, "stability LHS vs Monte-Carlo growth", 120, criterion2},
      {3, "growth-dynamics orderings", 10, criterion3},
      {4, "Gram / dense covariance equivalence", 10, criterion4},
      {5, "Lanczos vs Jacobi", 30, criterion5},
      {6, "gradient and HVP checks", 60, criterion6},
      {7, "variance reduction (desk scale)", 1200, [&] { return criterion7(art); }},
      {8, "pre-conditioning (desk scale)", 0, [&] { return criterion8(art); }},
      {9, "early-phase diagnostics", 0, [&] { return criterion9(art); }},
      {10, "M-sensitivity", 600, criterion10},
      {11, "batch normalization", 600, [&] { return criterion11(art); }},
      {12, "reproducibility and formats", 60, [&] { return criterion12(art); }},
  };

  const std::set<int> selected(only.begin(), only.end());
  std::size_t failed = 0, soft = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && !selected.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    // A zero budget means the criterion shares the runtime of an earlier one.
    if (c.budget_s > 0 && secs > c.budget_s) {
      o.pass = false;
      o.soft = false;
      o.detail += "; over runtime budget";
    }
    std::ostringstream timing;
    timing.precision(3);
    timing << secs << " s";
    if (c.budget_s > 0) timing << " / " << c.budget_s << " s";
    std::cout << (o.pass ? "PASS" : "FAIL") << (o.soft ? " (soft)" : "") << "  criterion " << c.id << ": "
              << c.name << " -- " << o.detail << " [" << timing.str() << "]" << std::endl;
    if (!o.pass) (o.soft ? soft : failed)++;
  }
  std::cout << "acceptance: " << failed << " hard failure(s), " << soft << " soft failure(s)" << std::endl;
  return failed == 0 ? 0 : 1;
}
