#include "breakeven/quadratic.hpp"

#include <algorithm>
#include <cmath>

#include "breakeven/error.hpp"
#include "breakeven/linalg.hpp"
#include "breakeven/rng.hpp"

namespace breakeven {

QuadraticModel::QuadraticModel(std::vector<double> h, double psi_star_, double alpha_)
    : curvatures(std::move(h)), psi_star(psi_star_), alpha(alpha_) {
  if (curvatures.size() < 2) throw Error(ErrorKind::InvalidArgument, "need N >= 2 curvatures");
  if (!all_finite(curvatures) || !std::isfinite(psi_star) || !std::isfinite(alpha))
    throw Error(ErrorKind::NonFinite, "quadratic model parameters must be finite");
  if (!(mean_curvature() > 0.0))
    throw Error(ErrorKind::InvalidArgument, "mean curvature must be positive");
}

double QuadraticModel::mean_curvature() const {
  double s = 0.0;
  for (double h : curvatures) s += h;
  return s / static_cast<double>(curvatures.size());
}

double QuadraticModel::curvature_variance() const {
  const double m = mean_curvature();
  double s = 0.0;
  for (double h : curvatures) s += (h - m) * (h - m);
  return s / static_cast<double>(curvatures.size());
}

void SgdSetting::validate(std::size_t n) const {
  if (!std::isfinite(eta) || eta < 0.0)
    throw Error(ErrorKind::InvalidArgument, "learning rate must be finite and >= 0");
  if (batch_size < 1 || batch_size > n)
    throw Error(ErrorKind::InvalidArgument, "batch size must be in [1, N]");
}

double finite_population_factor(std::size_t n, std::size_t s) {
  if (n < 2 || s < 1 || s > n) throw Error(ErrorKind::InvalidArgument, "need N >= 2, 1 <= S <= N");
  return static_cast<double>(n - s) / (static_cast<double>(s) * static_cast<double>(n - 1));
}

double stability_lhs(double mean_curvature, double variance, double eta, std::size_t n,
                     std::size_t s) {
  const double drift = 1.0 - eta * mean_curvature;
  return drift * drift + variance * eta * eta * finite_population_factor(n, s);
}

double stability_lhs(const QuadraticModel& model, const SgdSetting& setting) {
  setting.validate(model.size());
  return stability_lhs(model.mean_curvature(), model.curvature_variance(), setting.eta,
                       model.size(), setting.batch_size);
}

bool is_stable(double lhs) { return lhs <= 1.0; }
bool is_break_even(double lhs, double tol) { return std::abs(lhs - 1.0) <= tol; }

namespace {

// Mean curvature of one freshly sampled batch; idx is permuted in place.
double sample_batch_curvature(const QuadraticModel& model, std::size_t s,
                              std::vector<std::size_t>& idx, Rng& rng) {
  rng.partial_shuffle(idx, s);
  double sum = 0.0;
  for (std::size_t i = 0; i < s; ++i) sum += model.curvatures[idx[i]];
  return sum / static_cast<double>(s);
}

}  // namespace

SgdTrajectory simulate_sgd(const QuadraticModel& model, const SgdSetting& setting, double psi0,
                           std::size_t steps, std::uint64_t seed, double divergence_threshold) {
  setting.validate(model.size());
  if (steps < 1) throw Error(ErrorKind::InvalidArgument, "steps must be >= 1");
  const bool full_batch = setting.batch_size == model.size();
  const double full_mean = model.mean_curvature();
  Rng rng(seed);
  std::vector<std::size_t> idx = iota_indices(model.size());

  SgdTrajectory out;
  out.psi.reserve(steps + 1);
  out.psi.push_back(psi0);
  double offset = psi0 - model.psi_star;
  for (std::size_t t = 0; t < steps; ++t) {
    const double h = full_batch ? full_mean
                                : sample_batch_curvature(model, setting.batch_size, idx, rng);
    offset -= setting.eta * h * offset;
    out.psi.push_back(model.psi_star + offset);
    if (!(std::abs(offset) <= divergence_threshold)) {
      out.diverged = true;
      break;
    }
  }
  return out;
}

MonteCarloGrowth monte_carlo_growth(const QuadraticModel& model, const SgdSetting& setting,
                                    double psi0, std::size_t trajectories, std::size_t steps,
                                    std::uint64_t seed, Exec exec) {
  setting.validate(model.size());
  if (trajectories < 1 || steps < 1)
    throw Error(ErrorKind::InvalidArgument, "need >= 1 trajectory and >= 1 step");
  const double offset0 = psi0 - model.psi_star;
  if (offset0 == 0.0) throw Error(ErrorKind::DegenerateOffset, "psi0 equals the minimum");

  // sq[t * trajectories + j] = (psi_j(t) - psi*)^2
  std::vector<double> sq((steps + 1) * trajectories);
  for_each_index(exec, trajectories, [&](std::size_t j) {
    Rng rng(seed + j);
    std::vector<std::size_t> idx = iota_indices(model.size());
    double offset = offset0;
    sq[j] = offset * offset;
    for (std::size_t t = 1; t <= steps; ++t) {
      const double h = sample_batch_curvature(model, setting.batch_size, idx, rng);
      offset -= setting.eta * h * offset;
      sq[t * trajectories + j] = offset * offset;
    }
  });

  MonteCarloGrowth out;
  out.mean_sq.resize(steps + 1);
  for (std::size_t t = 0; t <= steps; ++t)
    out.mean_sq[t] = pairwise_sum(std::span<const double>(sq).subspan(t * trajectories, trajectories)) /
                     static_cast<double>(trajectories);

  // Least-squares slope of log(mean_sq) against t.
  const double n = static_cast<double>(steps + 1);
  const double t_mean = static_cast<double>(steps) / 2.0;
  double y_mean = 0.0;
  for (double m : out.mean_sq) y_mean += std::log(m);
  y_mean /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t t = 0; t <= steps; ++t) {
    const double dt = static_cast<double>(t) - t_mean;
    sxy += dt * (std::log(out.mean_sq[t]) - y_mean);
    sxx += dt * dt;
  }
  out.growth_rate = sxy / sxx;
  return out;
}

ClosedFormBreakEven breakeven_curvature_closed_form(double eta, std::size_t s, std::size_t n,
                                                    double alpha, double psi) {
  if (!(eta > 0.0)) throw Error(ErrorKind::InvalidArgument, "eta must be > 0");
  if (psi == 0.0) throw Error(ErrorKind::DegenerateOffset, "psi must be nonzero");
  const double factor = static_cast<double>(n - s) / static_cast<double>(n - 1);
  (void)finite_population_factor(n, s);  // validates n, s
  const double noise = alpha / (psi * psi) * factor * eta / static_cast<double>(s);
  ClosedFormBreakEven out;
  out.lambda = (2.0 - noise) / eta;
  out.negative = !(out.lambda > 0.0);
  return out;
}

void GrowthSchedule::validate() const {
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0))
    throw Error(ErrorKind::InvalidArgument, "lambda0 must be > 0");
  if (!(rho > 0.0) || rho == 1.0 || !std::isfinite(rho))
    throw Error(ErrorKind::InvalidArgument, "rho must be positive and != 1");
  if (direction == Direction::increasing_from_stable && rho < 1.0)
    throw Error(ErrorKind::InvalidArgument, "increasing schedule needs rho > 1");
  if (direction == Direction::decreasing_from_unstable && rho > 1.0)
    throw Error(ErrorKind::InvalidArgument, "decreasing schedule needs rho < 1");
  if (psi0 == 0.0 || !std::isfinite(psi0))
    throw Error(ErrorKind::InvalidArgument, "psi0 must be finite and nonzero");
}

GrowthResult run_growth_dynamics(const SgdSetting& setting, const GrowthSchedule& schedule,
                                 double alpha, std::size_t n, std::size_t max_steps) {
  setting.validate(n);
  schedule.validate();
  const bool increasing =
      schedule.direction == GrowthSchedule::Direction::increasing_from_stable;
  // psi moves by the same factor in both directions: toward the minimum while
  // stable, away from it while unstable.
  const double psi_factor = schedule.rho > 1.0 ? schedule.rho : 1.0 / schedule.rho;

  auto stable_at = [&](double lambda, double psi) {
    const double variance = alpha * lambda / (psi * psi);
    return is_stable(stability_lhs(lambda, variance, setting.eta, n, setting.batch_size));
  };
  auto flipped = [&](bool stable) { return increasing ? !stable : stable; };

  GrowthResult out;
  double lambda = schedule.lambda0;
  double psi = schedule.psi0;
  out.lambda_max = lambda;
  bool stable = stable_at(lambda, psi);
  for (std::size_t step = 0;; ++step) {
    if (flipped(stable)) {
      out.flipped = true;
      out.step_of_flip = step;
      out.lambda_at_flip = lambda;
      break;
    }
    if (step == max_steps) break;
    psi = stable ? psi / psi_factor : psi * psi_factor;
    lambda *= schedule.rho;
    out.lambda_max = std::max(out.lambda_max, lambda);
    stable = stable_at(lambda, psi);
  }
  out.psi_at_stop = psi;
  if (!out.flipped) out.lambda_at_flip = lambda;
  return out;
}

const char* to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::stable: return "stable";
    case StabilityClass::breakeven: return "breakeven";
    case StabilityClass::unstable: return "unstable";
  }
  return "?";
}

std::vector<std::vector<StabilityClass>> phase_diagram(const std::vector<double>& etas,
                                                       const std::vector<std::size_t>& batch_sizes,
                                                       const QuadraticModel& model) {
  if (etas.empty() || batch_sizes.empty())
    throw Error(ErrorKind::InvalidArgument, "phase diagram grids must be nonempty");
  const double mean = model.mean_curvature();
  const double var = model.curvature_variance();
  std::vector<std::vector<StabilityClass>> grid;
  for (std::size_t s : batch_sizes) {
    std::vector<StabilityClass> row;
    for (double eta : etas) {
      SgdSetting{eta, s}.validate(model.size());
      const double lhs = stability_lhs(mean, var, eta, model.size(), s);
      if (std::abs(lhs - 1.0) <= kPhaseBand) {
        row.push_back(StabilityClass::breakeven);
      } else {
        row.push_back(lhs < 1.0 ? StabilityClass::stable : StabilityClass::unstable);
      }
    }
    grid.push_back(std::move(row));
  }
  return grid;
}

}  // namespace breakeven
