#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "breakeven/linalg.hpp"
#include "breakeven/netmodel.hpp"
#include "breakeven/parallel.hpp"

namespace breakeven {

enum class CenterSource { mean_of_samples, exact_full_batch };

struct MinibatchGradients {
  std::vector<ParamVector> grads;
  ParamVector mean;
};

/// Draws L minibatches of size M (each without replacement, independent across
/// batches) and returns their mean-loss gradients. Batch j is drawn from its
/// own stream derive_seed(seed, j). Throws InsufficientData when M > n.
MinibatchGradients sample_minibatch_gradients(const MlpSpec& spec, std::span<const double> theta,
                                              const Batch& data, std::size_t num_batches,
                                              std::size_t batch_size, std::uint64_t seed,
                                              const BnMode& bn, Exec exec = Exec::parallel,
                                              CenterSource center = CenterSource::mean_of_samples);

// Sample order used for every reduction over gradient samples, so results do
// not depend on the order in which samples were supplied.
std::vector<std::size_t> canonical_order(const std::vector<ParamVector>& grads);

ParamVector mean_gradient(const std::vector<ParamVector>& grads);

/// K^M_ij = (1/L) <g_i - gbar, g_j - gbar>, rows in canonical sample order.
struct GramMatrix {
  std::size_t samples = 0;
  DenseSymmetric entries = DenseSymmetric::zeros(1);
  std::vector<std::size_t> order;  // row r holds sample order[r]
};

GramMatrix gram_from_gradients(const std::vector<ParamVector>& grads, std::span<const double> mean,
                               Exec exec = Exec::parallel);

struct KSpectrum {
  double lambda_k1 = 0.0;
  double lambda_k_star = 0.0;
  double trace_k = 0.0;
  std::optional<double> cond_ratio;
  std::vector<double> gram_spectrum;  // clamped at 0, descending
};

KSpectrum k_spectrum(const GramMatrix& gram);

// Ambient-space eigenvectors of K for the top k Gram eigenvalues. Throws
// RankDeficient when fewer than k eigenvalues are >= 1e-12.
std::vector<Vec> k_top_eigvecs(const std::vector<ParamVector>& grads, std::span<const double> mean,
                               const GramMatrix& gram, std::size_t k = 5);

// |g| / |P g| for the projection P onto span(top_vecs).
double grad_subspace_ratio(std::span<const double> g, const std::vector<Vec>& top_vecs);

struct HessianSpectrum {
  std::vector<double> top;  // top-k algebraic Ritz values, descending
  Vec top_vector;
  bool negative_ritz = false;
  HvpMethod method = HvpMethod::pearlmutter;
  std::uint64_t seed = 0;
};

HessianSpectrum hessian_spectrum(const MlpSpec& spec, std::span<const double> theta,
                                 const Batch& eval_subset, std::size_t k, HvpMethod method,
                                 std::size_t max_iters, std::uint64_t seed, const BnMode& bn);

/// Full per-checkpoint K/H diagnostics.
struct SpectralSummary {
  KSpectrum k;
  std::vector<Vec> top_eigvecs_k;
  std::vector<double> lambda_h_top;
  HvpMethod hvp_method = HvpMethod::pearlmutter;
};

struct Checkpoint {
  ParamVector theta;
  BnStats bn_stats;
};

struct MSensitivity {
  std::size_t small_m = 1;
  std::size_t large_m = 1;
  std::vector<double> lambda_small_m;
  std::vector<double> lambda_large_m;
  std::optional<double> pearson_r;
};

// Largest Gram eigenvalue; Lanczos for large L, Jacobi otherwise.
double gram_top_eigenvalue(const GramMatrix& gram, std::uint64_t seed);

/// lambda_K^1 at two minibatch sizes along a trajectory, keeping L * M equal to
/// total_examples for both. Throws InsufficientCheckpoints below 10 points.
MSensitivity m_sensitivity_report(const MlpSpec& spec, const std::vector<Checkpoint>& checkpoints,
                                  const Batch& data, std::uint64_t seed, std::size_t small_m,
                                  std::size_t large_m, std::size_t total_examples,
                                  Exec exec = Exec::parallel);

}  // namespace breakeven
