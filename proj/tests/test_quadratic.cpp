#include <cmath>

#include <gtest/gtest.h>

#include "breakeven/error.hpp"
#include "breakeven/quadratic.hpp"
#include "breakeven/rng.hpp"

using namespace breakeven;

namespace {

QuadraticModel uniform_model(std::size_t n, double lo, double hi, std::uint64_t seed,
                             double psi_star = 0.0) {
  Rng rng(seed);
  std::vector<double> h(n);
  for (auto& x : h) x = rng.uniform(lo, hi);
  return QuadraticModel(h, psi_star);
}

// Unbiased estimate of E[(psi_1 - psi*)^2] / (psi_0 - psi*)^2 from independent
// single SGD steps, with its standard error.
struct MultiplierEstimate {
  double mean;
  double se;
};

MultiplierEstimate one_step_multiplier(const QuadraticModel& m, const SgdSetting& s,
                                       std::size_t samples, std::uint64_t seed) {
  const double psi0 = m.psi_star + 1.0;
  double sum = 0.0, sum2 = 0.0;
  for (std::size_t j = 0; j < samples; ++j) {
    const SgdTrajectory t = simulate_sgd(m, s, psi0, 1, derive_seed(seed, j));
    const double r = (t.psi[1] - m.psi_star) * (t.psi[1] - m.psi_star);
    sum += r;
    sum2 += r * r;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  const double var = (sum2 - n * mean * mean) / (n - 1.0);
  return {mean, std::sqrt(var / n)};
}

double bisect_breakeven(double eta, std::size_t s, std::size_t n, double alpha, double psi) {
  auto f = [&](double lambda) {
    return stability_lhs(lambda, alpha * lambda / (psi * psi), eta, n, s) - 1.0;
  };
  double lo = 1e-6, hi = 4.0 / eta;
  EXPECT_LT(f(lo), 0.0);
  EXPECT_GT(f(hi), 0.0);
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

GrowthResult grow(double eta, std::size_t s, std::size_t n, GrowthSchedule::Direction dir,
                  double alpha = 0.5) {
  GrowthSchedule g;
  g.direction = dir;
  const bool up = dir == GrowthSchedule::Direction::increasing_from_stable;
  g.lambda0 = up ? 1e-3 : 1e4;
  g.rho = up ? 1.01 : 0.99;
  g.psi0 = 1.0;
  return run_growth_dynamics({eta, s}, g, alpha, n, 100000);
}

}  // namespace

TEST(StabilityLhs, FullBatchBreakEvenAtTwoOverEta) {
  const double lhs = stability_lhs(20.0, 123.0, 0.1, 50, 50);
  EXPECT_NEAR(lhs, 1.0, 1e-12);
  EXPECT_TRUE(is_break_even(lhs));
  const QuadraticModel m({19.0, 21.0, 20.0, 20.0});
  EXPECT_TRUE(is_break_even(stability_lhs(m, {0.1, 4})));
}

TEST(StabilityLhs, ZeroLearningRateIsMarginal) {
  const QuadraticModel m = uniform_model(30, 0.5, 1.5, 1);
  EXPECT_EQ(stability_lhs(m, {0.0, 3}), 1.0);
  const double tiny = stability_lhs(m, {1e-6, 3});
  EXPECT_LT(tiny, 1.0);
  EXPECT_GT(tiny, 1.0 - 1e-5);
}

TEST(StabilityLhs, MatchesMonteCarloMultiplier) {
  const QuadraticModel m = uniform_model(100, 0.5, 1.5, 2024);
  const SgdSetting s{0.05, 10};
  const MultiplierEstimate est = one_step_multiplier(m, s, 40000, 7);
  EXPECT_LT(std::abs(est.mean - stability_lhs(m, s)), 3.0 * est.se);
}

TEST(StabilityLhs, MonteCarloAgreementOnRandomizedCases) {
  Rng rng(99);
  for (int c = 0; c < 20; ++c) {
    const std::size_t n = 2 + rng.below(60);
    const double lo = rng.uniform(0.0, 2.0), hi = lo + rng.uniform(0.1, 4.0);
    const QuadraticModel m = uniform_model(n, lo, hi, rng.next(), rng.uniform(-1.0, 1.0));
    const SgdSetting s{rng.uniform(0.01, 1.5) / m.mean_curvature(), 1 + rng.below(n)};
    const MultiplierEstimate est = one_step_multiplier(m, s, 20000, rng.next());
    const double lhs = stability_lhs(m, s);
    EXPECT_LE(std::abs(est.mean - lhs), 3.0 * est.se + 1e-12)
        << "case " << c << " n=" << n << " S=" << s.batch_size << " eta=" << s.eta;
  }
}

TEST(StabilityLhs, PopulationVarianceAndFactor) {
  const QuadraticModel m({1.0, 3.0});
  EXPECT_DOUBLE_EQ(m.curvature_variance(), 1.0);
  EXPECT_DOUBLE_EQ(finite_population_factor(2, 1), 1.0);
  EXPECT_DOUBLE_EQ(finite_population_factor(10, 10), 0.0);
  // S=1 of two equally likely curvatures: E[(1 - eta h)^2] by enumeration.
  const double eta = 0.3;
  const double exact = 0.5 * (std::pow(1 - eta * 1.0, 2) + std::pow(1 - eta * 3.0, 2));
  EXPECT_NEAR(stability_lhs(m, {eta, 1}), exact, 1e-15);
}

TEST(QuadraticModel, RejectsInvalid) {
  EXPECT_THROW(QuadraticModel({1.0}), Error);
  EXPECT_THROW(QuadraticModel({-1.0, 0.5}), Error);
  const QuadraticModel m({1.0, 2.0});
  EXPECT_THROW(stability_lhs(m, {0.1, 3}), Error);
}

TEST(SimulateSgd, ZeroEtaIsConstant) {
  const QuadraticModel m = uniform_model(20, 0.5, 1.5, 3, 0.25);
  const SgdTrajectory t = simulate_sgd(m, {0.0, 4}, 2.0, 50, 1);
  for (double p : t.psi) EXPECT_EQ(p, 2.0);
  EXPECT_FALSE(t.diverged);
}

TEST(SimulateSgd, FullBatchIsGeometric) {
  const QuadraticModel m = uniform_model(16, 0.5, 1.5, 4, -0.5);
  const double eta = 0.7, psi0 = 1.5;
  const SgdTrajectory t = simulate_sgd(m, {eta, 16}, psi0, 100, 5);
  ASSERT_EQ(t.psi.size(), 101u);
  const double r = 1.0 - eta * m.mean_curvature();
  for (std::size_t k = 0; k <= 100; ++k) {
    const double expected = std::pow(r, static_cast<double>(k)) * (psi0 - m.psi_star);
    EXPECT_NEAR(t.psi[k] - m.psi_star, expected, 1e-12 * std::abs(expected) + 1e-15) << k;
  }
}

TEST(SimulateSgd, DivergenceTruncates) {
  const QuadraticModel m({10.0, 10.0});
  const SgdTrajectory t = simulate_sgd(m, {1.0, 2}, 1.0, 1000, 0, 1e6);
  EXPECT_TRUE(t.diverged);
  EXPECT_LT(t.psi.size(), 1001u);
  EXPECT_GT(std::abs(t.psi.back()), 1e6);
}

TEST(MonteCarlo, GrowthRateMatchesLogLhs) {
  const QuadraticModel m = uniform_model(100, 0.5, 1.5, 2024);
  for (SgdSetting s : {SgdSetting{0.05, 10}, SgdSetting{0.5, 20}, SgdSetting{2.1, 50}}) {
    const MonteCarloGrowth g = monte_carlo_growth(m, s, 1.0, 10000, 200, 17);
    EXPECT_NEAR(g.growth_rate, std::log(stability_lhs(m, s)), 0.02)
        << "eta=" << s.eta << " S=" << s.batch_size;
    EXPECT_EQ(g.mean_sq.size(), 201u);
    EXPECT_EQ(g.mean_sq[0], 1.0);
  }
}

TEST(MonteCarlo, DegenerateOffset) {
  const QuadraticModel m({1.0, 2.0}, 0.5);
  EXPECT_THROW(monte_carlo_growth(m, {0.1, 1}, 0.5, 10, 10, 0), Error);
}

TEST(ClosedForm, FullBatchIsTwoOverEta) {
  EXPECT_DOUBLE_EQ(breakeven_curvature_closed_form(0.1, 100, 100, 0.7, 0.3).lambda, 20.0);
  for (std::size_t s : {1u, 5u, 50u, 100u})
    EXPECT_DOUBLE_EQ(breakeven_curvature_closed_form(0.02, s, 100, 0.0, 1.0).lambda, 100.0);
}

TEST(ClosedForm, MatchesBisectionRoot) {
  const ClosedFormBreakEven cf = breakeven_curvature_closed_form(0.02, 1, 101, 0.5, 1.0);
  EXPECT_FALSE(cf.negative);
  EXPECT_NEAR(cf.lambda, bisect_breakeven(0.02, 1, 101, 0.5, 1.0), 1e-8);
  // Non-unit offset: the root of the stability equation with s^2 = alpha lambda / psi^2.
  EXPECT_NEAR(breakeven_curvature_closed_form(0.05, 4, 64, 0.8, 0.7).lambda,
              bisect_breakeven(0.05, 4, 64, 0.8, 0.7), 1e-8);
}

TEST(ClosedForm, NegativeFlagAndDegenerateOffset) {
  const ClosedFormBreakEven cf = breakeven_curvature_closed_form(1.0, 1, 10, 100.0, 1.0);
  EXPECT_TRUE(cf.negative);
  try {
    breakeven_curvature_closed_form(0.1, 1, 10, 0.5, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateOffset);
  }
}

TEST(Growth, FineScheduleFlipsNearTwoOverEta) {
  GrowthSchedule g{GrowthSchedule::Direction::increasing_from_stable, 1.0, 1.001, 1.0};
  const GrowthResult r = run_growth_dynamics({0.1, 50}, g, 0.5, 50, 100000);
  ASSERT_TRUE(r.flipped);
  EXPECT_NEAR(r.lambda_at_flip, 20.0, 0.005 * 20.0);
  EXPECT_GE(r.lambda_max, r.lambda_at_flip);
}

TEST(Growth, LargerEtaGivesSmallerMaximum) {
  const auto up = GrowthSchedule::Direction::increasing_from_stable;
  const GrowthResult a = grow(0.1, 10, 1000, up), b = grow(0.01, 10, 1000, up);
  ASSERT_TRUE(a.flipped && b.flipped);
  EXPECT_LT(a.lambda_max, b.lambda_max);
  EXPECT_LT(0.5 * a.lambda_max, 0.5 * b.lambda_max);
}

TEST(Growth, SmallerBatchGivesSmallerMaximum) {
  const auto up = GrowthSchedule::Direction::increasing_from_stable;
  const GrowthResult a = grow(0.05, 8, 1000, up), b = grow(0.05, 64, 1000, up);
  ASSERT_TRUE(a.flipped && b.flipped);
  EXPECT_LT(a.lambda_max, b.lambda_max);
  // At the flip offset the closed form orders the same way.
  EXPECT_LT(breakeven_curvature_closed_form(0.05, 8, 1000, 0.5, a.psi_at_stop).lambda,
            breakeven_curvature_closed_form(0.05, 64, 1000, 0.5, a.psi_at_stop).lambda);
}

TEST(Growth, TheoremOrderingsOverGrid) {
  const std::vector<double> etas{0.005, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
  const std::size_t n = 200;
  const std::vector<std::size_t> sizes{1, 2, 8, 32, 100, 200};
  for (auto dir : {GrowthSchedule::Direction::increasing_from_stable,
                   GrowthSchedule::Direction::decreasing_from_unstable}) {
    const bool up = dir == GrowthSchedule::Direction::increasing_from_stable;
    auto value = [&](const GrowthResult& r) { return up ? r.lambda_max : r.lambda_at_flip; };
    for (std::size_t s : sizes)
      for (std::size_t i = 1; i < etas.size(); ++i) {
        const GrowthResult a = grow(etas[i - 1], s, n, dir), b = grow(etas[i], s, n, dir);
        ASSERT_TRUE(a.flipped && b.flipped);
        EXPECT_LE(value(b), value(a)) << "S=" << s << " eta " << etas[i - 1] << "->" << etas[i];
      }
    for (double eta : etas)
      for (std::size_t i = 1; i < sizes.size(); ++i) {
        const GrowthResult a = grow(eta, sizes[i - 1], n, dir), b = grow(eta, sizes[i], n, dir);
        EXPECT_GE(value(b), value(a)) << "eta=" << eta << " S " << sizes[i - 1] << "->" << sizes[i];
      }
  }
}

TEST(Growth, NoFlipReported) {
  GrowthSchedule g{GrowthSchedule::Direction::increasing_from_stable, 1e-3, 1.01, 1.0};
  const GrowthResult r = run_growth_dynamics({0.1, 10}, g, 0.5, 10, 5);
  EXPECT_FALSE(r.flipped);
}

TEST(Growth, ScheduleValidation) {
  GrowthSchedule g{GrowthSchedule::Direction::increasing_from_stable, 1.0, 0.9, 1.0};
  EXPECT_THROW(g.validate(), Error);
  g = {GrowthSchedule::Direction::increasing_from_stable, 1.0, 1.1, 0.0};
  EXPECT_THROW(g.validate(), Error);
  g = {GrowthSchedule::Direction::decreasing_from_unstable, 0.0, 0.9, 1.0};
  EXPECT_THROW(g.validate(), Error);
}

TEST(PhaseDiagram, FullBatchRowSplitsAtTwoOverMean) {
  const QuadraticModel m({0.5, 1.5, 1.0, 1.0});  // mean 1
  const auto grid = phase_diagram({0.5, 1.0, 2.0, 2.5}, {4}, m);
  using C = StabilityClass;
  EXPECT_EQ(grid[0], (std::vector<C>{C::stable, C::stable, C::breakeven, C::unstable}));
}

TEST(PhaseDiagram, SingleTransitionAlongEta) {
  const QuadraticModel m = uniform_model(50, 0.2, 3.0, 8);
  std::vector<double> etas;
  for (int i = 1; i <= 400; ++i) etas.push_back(0.01 * i);
  const auto grid = phase_diagram(etas, {1, 2, 5, 25, 50}, m);
  for (const auto& row : grid) {
    int transitions = 0;
    for (std::size_t i = 1; i < row.size(); ++i)
      if ((row[i] == StabilityClass::unstable) != (row[i - 1] == StabilityClass::unstable))
        ++transitions;
    EXPECT_LE(transitions, 1);
    EXPECT_EQ(row.front(), StabilityClass::stable);
  }
}

TEST(PhaseDiagram, ZeroEtaIsBreakEven) {
  const QuadraticModel m = uniform_model(10, 0.5, 1.5, 1);
  const auto grid = phase_diagram({0.0}, {1, 5, 10}, m);
  for (const auto& row : grid) EXPECT_EQ(row[0], StabilityClass::breakeven);
}
