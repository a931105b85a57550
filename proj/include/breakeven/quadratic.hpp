#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "breakeven/parallel.hpp"

namespace breakeven {

/// One-dimensional quadratic model of the loss along the top Hessian
/// direction: L(psi) = (1 / 2N) * sum_i H_i (psi - psi_star)^2, so the
/// per-example gradient is H_i (psi - psi_star).
struct QuadraticModel {
  std::vector<double> curvatures;  // H_i
  double psi_star = 0.0;
  double alpha = 0.0;  // coupling: lambda_K = alpha * lambda_H

  QuadraticModel(std::vector<double> h, double psi_star = 0.0, double alpha = 0.0);

  std::size_t size() const { return curvatures.size(); }
  double mean_curvature() const;
  // Population variance (divide by N); exact for the finite-population factor.
  double curvature_variance() const;
};

struct SgdSetting {
  double eta = 0.0;
  std::size_t batch_size = 1;

  void validate(std::size_t n) const;
};

// (N - S) / (S (N - 1)): variance factor of a without-replacement batch mean.
double finite_population_factor(std::size_t n, std::size_t s);

// (1 - eta * lambda)^2 + var * eta^2 * (N - S) / (S (N - 1)).
double stability_lhs(double mean_curvature, double variance, double eta, std::size_t n,
                     std::size_t s);
double stability_lhs(const QuadraticModel& model, const SgdSetting& setting);

inline constexpr double kBreakEvenTolerance = 1e-12;
bool is_stable(double lhs);
bool is_break_even(double lhs, double tol = kBreakEvenTolerance);

struct SgdTrajectory {
  std::vector<double> psi;  // psi[0] = psi0
  bool diverged = false;
};

SgdTrajectory simulate_sgd(const QuadraticModel& model, const SgdSetting& setting, double psi0,
                           std::size_t steps, std::uint64_t seed,
                           double divergence_threshold = 1e12);

struct MonteCarloGrowth {
  std::vector<double> mean_sq;  // E[(psi - psi*)^2] per step, step 0..steps
  double growth_rate = 0.0;     // least-squares slope of log(mean_sq) vs step
};

/// Ensemble estimate of the per-step second-moment multiplier. Trajectory j
/// uses seed + j; the ensemble mean per step is a pairwise sum over
/// trajectories in index order, so serial and parallel runs agree bitwise.
MonteCarloGrowth monte_carlo_growth(const QuadraticModel& model, const SgdSetting& setting,
                                    double psi0, std::size_t trajectories, std::size_t steps,
                                    std::uint64_t seed, Exec exec = Exec::parallel);

struct ClosedFormBreakEven {
  double lambda = 0.0;
  bool negative = false;  // no positive curvature is stable for these settings
};

/// Curvature at which the stability inequality holds with equality when the
/// curvature variance is tied to the mean via s^2 = alpha * lambda / psi^2.
/// Throws DegenerateOffset for psi == 0.
ClosedFormBreakEven breakeven_curvature_closed_form(double eta, std::size_t s, std::size_t n,
                                                    double alpha, double psi);

struct GrowthSchedule {
  enum class Direction { increasing_from_stable, decreasing_from_unstable };
  Direction direction = Direction::increasing_from_stable;
  double lambda0 = 1.0;
  double rho = 1.01;
  double psi0 = 1.0;

  void validate() const;
};

struct GrowthResult {
  double lambda_max = 0.0;      // largest lambda visited
  double lambda_at_flip = 0.0;  // lambda when the stability predicate flipped
  double psi_at_stop = 0.0;
  std::size_t step_of_flip = 0;
  bool flipped = false;  // false: max_steps exhausted (NoFlip)
};

/// Walks lambda <- lambda * rho while psi shrinks on stable steps and grows on
/// unstable ones, until stability flips. The noise term uses
/// s^2 = alpha * lambda / psi^2.
GrowthResult run_growth_dynamics(const SgdSetting& setting, const GrowthSchedule& schedule,
                                 double alpha, std::size_t n, std::size_t max_steps);

enum class StabilityClass { stable, breakeven, unstable };
const char* to_string(StabilityClass c);

inline constexpr double kPhaseBand = 1e-9;

// rows follow batch_sizes, columns follow etas.
std::vector<std::vector<StabilityClass>> phase_diagram(const std::vector<double>& etas,
                                                       const std::vector<std::size_t>& batch_sizes,
                                                       const QuadraticModel& model);

}  // namespace breakeven
