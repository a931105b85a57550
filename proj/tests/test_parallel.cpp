#include <gtest/gtest.h>

#include "breakeven/quadratic.hpp"
#include "breakeven/spectra.hpp"
#include "test_util.hpp"

using namespace breakeven;

// Every parallel kernel must reproduce its serial reference bit for bit.

TEST(Parallel, MonteCarloEnsemble) {
  Rng rng(1);
  std::vector<double> h(64);
  for (auto& x : h) x = rng.uniform(0.5, 1.5);
  const QuadraticModel m(h);
  const auto a = monte_carlo_growth(m, {0.3, 4}, 1.0, 2000, 50, 9, Exec::serial);
  const auto b = monte_carlo_growth(m, {0.3, 4}, 1.0, 2000, 50, 9, Exec::parallel);
  EXPECT_EQ(a.mean_sq, b.mean_sq);
  EXPECT_EQ(a.growth_rate, b.growth_rate);
}

TEST(Parallel, MinibatchGradientsAndGram) {
  MlpSpec spec = make_mlp({3, 16, 16, 3}, Activation::relu, LossKind::softmax_cross_entropy, false, 2);
  const ParamVector theta = init_params(spec);
  const Batch data = bt::random_batch(300, 3, 3, 4);
  const auto a = sample_minibatch_gradients(spec, theta, data, 25, 16, 7, BnMode::batch(), Exec::serial);
  const auto b = sample_minibatch_gradients(spec, theta, data, 25, 16, 7, BnMode::batch(), Exec::parallel);
  EXPECT_EQ(a.grads, b.grads);
  EXPECT_EQ(a.mean, b.mean);
  const GramMatrix ga = gram_from_gradients(a.grads, a.mean, Exec::serial);
  const GramMatrix gb = gram_from_gradients(b.grads, b.mean, Exec::parallel);
  EXPECT_TRUE(std::equal(ga.entries.entries().begin(), ga.entries.entries().end(),
                         gb.entries.entries().begin()));
  EXPECT_EQ(ga.order, gb.order);
}

TEST(Parallel, PerExampleGradients) {
  MlpSpec spec = make_mlp({3, 8, 3}, Activation::tanh, LossKind::softmax_cross_entropy, true, 2);
  const ParamVector theta = bt::perturbed_params(spec, 3);
  const Batch data = bt::random_batch(40, 3, 3, 4);
  const BnMode frozen = BnMode::frozen(forward_loss(spec, theta, data, BnMode::batch()).batch_stats);
  EXPECT_EQ(per_example_grads(spec, theta, data, frozen, Exec::serial),
            per_example_grads(spec, theta, data, frozen, Exec::parallel));
}

TEST(Parallel, ExceptionFromLowestIndexWins) {
  auto fn = [](std::size_t i) {
    if (i == 3 || i == 7) throw std::runtime_error("item " + std::to_string(i));
  };
  for (Exec e : {Exec::serial, Exec::parallel}) {
    try {
      for_each_index(e, 10, fn);
      FAIL();
    } catch (const std::runtime_error& err) {
      EXPECT_STREQ(err.what(), "item 3");
    }
  }
}
