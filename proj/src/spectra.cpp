#include "breakeven/spectra.hpp"

#include <algorithm>
#include <cmath>

#include "breakeven/error.hpp"
#include "breakeven/rng.hpp"

namespace breakeven {

MinibatchGradients sample_minibatch_gradients(const MlpSpec& spec, std::span<const double> theta,
                                              const Batch& data, std::size_t num_batches,
                                              std::size_t batch_size, std::uint64_t seed,
                                              const BnMode& bn, Exec exec, CenterSource center) {
  if (num_batches < 2) throw Error(ErrorKind::InvalidArgument, "need L >= 2 minibatches");
  if (batch_size < 1 || batch_size > data.n)
    throw Error(ErrorKind::InsufficientData, "minibatch size exceeds dataset size");
  if (spec.has_batch_norm() && bn.kind != BnMode::Kind::frozen)
    throw Error(ErrorKind::BnBatchStatsUnsupported, "gradient sampling needs frozen BN statistics");

  MinibatchGradients out;
  out.grads.resize(num_batches);
  for_each_index(exec, num_batches, [&](std::size_t j) {
    Rng rng(derive_seed(seed, j));
    std::vector<std::size_t> idx = iota_indices(data.n);
    rng.partial_shuffle(idx, batch_size);
    idx.resize(batch_size);
    // Row order does not change the distribution; sorting makes a full-size
    // batch reproduce the full-batch gradient bit for bit.
    std::sort(idx.begin(), idx.end());
    out.grads[j] = grad(spec, theta, data.select(idx), bn);
  });
  if (center == CenterSource::exact_full_batch) {
    out.mean = grad(spec, theta, data, bn);
  } else {
    out.mean = mean_gradient(out.grads);
  }
  return out;
}

std::vector<std::size_t> canonical_order(const std::vector<ParamVector>& grads) {
  std::vector<std::size_t> order = iota_indices(grads.size());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::lexicographical_compare(grads[a].begin(), grads[a].end(), grads[b].begin(),
                                        grads[b].end());
  });
  return order;
}

ParamVector mean_gradient(const std::vector<ParamVector>& grads) {
  if (grads.empty()) throw Error(ErrorKind::InvalidArgument, "no gradients to average");
  ParamVector mean(grads.front().size(), 0.0);
  for (std::size_t idx : canonical_order(grads)) {
    if (grads[idx].size() != mean.size())
      throw Error(ErrorKind::DimensionMismatch, "gradient lengths differ");
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += grads[idx][i];
  }
  scale(mean, 1.0 / static_cast<double>(grads.size()));
  return mean;
}

GramMatrix gram_from_gradients(const std::vector<ParamVector>& grads, std::span<const double> mean,
                               Exec exec) {
  const std::size_t count = grads.size();
  if (count < 2) throw Error(ErrorKind::InvalidArgument, "Gram matrix needs L >= 2");
  for (const auto& g : grads)
    if (g.size() != mean.size()) throw Error(ErrorKind::DimensionMismatch, "gradient length");

  GramMatrix gram;
  gram.samples = count;
  gram.order = canonical_order(grads);
  std::vector<Vec> centered(count);
  for (std::size_t r = 0; r < count; ++r) {
    const ParamVector& g = grads[gram.order[r]];
    centered[r].resize(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) centered[r][i] = g[i] - mean[i];
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < count; ++i)
    for (std::size_t j = i; j < count; ++j) pairs.emplace_back(i, j);
  std::vector<double> entries(count * count);
  const double inv = 1.0 / static_cast<double>(count);
  for_each_index(exec, pairs.size(), [&](std::size_t p) {
    const auto [i, j] = pairs[p];
    const double v = dot(centered[i], centered[j]) * inv;
    entries[i * count + j] = v;
    entries[j * count + i] = v;
  });
  gram.entries = DenseSymmetric(count, std::move(entries));
  return gram;
}

KSpectrum k_spectrum(const GramMatrix& gram) {
  const EigenPairs pairs = jacobi_eigh(gram.entries);
  KSpectrum out;
  out.gram_spectrum = pairs.eigenvalues;
  for (auto& v : out.gram_spectrum) v = std::max(v, 0.0);
  const std::size_t count = out.gram_spectrum.size();
  out.lambda_k1 = out.gram_spectrum.front();
  // Centering removes one direction; the next one up is the smallest
  // non-zero eigenvalue.
  out.lambda_k_star = count >= 2 ? out.gram_spectrum[count - 2] : out.gram_spectrum.front();
  out.trace_k = gram.entries.trace();
  if (out.lambda_k1 >= 1e-12) out.cond_ratio = out.lambda_k_star / out.lambda_k1;
  return out;
}

std::vector<Vec> k_top_eigvecs(const std::vector<ParamVector>& grads, std::span<const double> mean,
                               const GramMatrix& gram, std::size_t k) {
  if (grads.size() != gram.samples) throw Error(ErrorKind::DimensionMismatch, "sample count");
  if (k + 1 > gram.samples) throw Error(ErrorKind::InvalidArgument, "k must be <= L - 1");
  const EigenPairs pairs = jacobi_eigh(gram.entries);
  std::size_t positive = 0;
  for (double v : pairs.eigenvalues)
    if (v >= 1e-12) ++positive;
  if (positive < k)
    throw Error(ErrorKind::RankDeficient, "fewer than k positive Gram eigenvalues");

  std::vector<Vec> out;
  for (std::size_t e = 0; e < k; ++e) {
    Vec v(mean.size(), 0.0);
    for (std::size_t r = 0; r < gram.samples; ++r) {
      const double u = pairs.eigenvectors[e][r];
      const ParamVector& g = grads[gram.order[r]];
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += u * (g[i] - mean[i]);
    }
    scale(v, 1.0 / norm2(v));
    apply_sign_convention(v);
    out.push_back(std::move(v));
  }
  return out;
}

double grad_subspace_ratio(std::span<const double> g, const std::vector<Vec>& top_vecs) {
  const double gn = norm2(g);
  const Projection p = project_onto_subspace(g, top_vecs);
  const double pn = norm2(p.projection);
  if (!(pn >= 1e-12 * gn) || pn == 0.0)
    throw Error(ErrorKind::DegenerateProjection, "projection onto subspace vanishes");
  // The projection can exceed |g| by rounding; the ratio is >= 1 by definition.
  return std::max(1.0, gn / pn);
}

HessianSpectrum hessian_spectrum(const MlpSpec& spec, std::span<const double> theta,
                                 const Batch& eval_subset, std::size_t k, HvpMethod method,
                                 std::size_t max_iters, std::uint64_t seed, const BnMode& bn) {
  if (eval_subset.n == 0) throw Error(ErrorKind::InvalidArgument, "empty evaluation subset");
  const LinearOperator op = hessian_operator(spec, theta, eval_subset, method, bn);
  const EigenPairs pairs = lanczos_topk(op, {k, max_iters, seed});
  HessianSpectrum out;
  out.top = pairs.eigenvalues;
  out.top_vector = pairs.eigenvectors.front();
  out.negative_ritz =
      std::any_of(out.top.begin(), out.top.end(), [](double v) { return v < 0.0; });
  out.method = method;
  out.seed = seed;
  return out;
}

double gram_top_eigenvalue(const GramMatrix& gram, std::uint64_t seed) {
  constexpr std::size_t kDenseLimit = 64;
  if (gram.samples <= kDenseLimit) return std::max(0.0, jacobi_eigh(gram.entries).eigenvalues[0]);
  const LinearOperator op = LinearOperator::from_dense(gram.entries);
  const EigenPairs top = lanczos_topk(op, {1, std::min<std::size_t>(gram.samples, 80), seed});
  return std::max(0.0, top.eigenvalues[0]);
}

MSensitivity m_sensitivity_report(const MlpSpec& spec, const std::vector<Checkpoint>& checkpoints,
                                  const Batch& data, std::uint64_t seed, std::size_t small_m,
                                  std::size_t large_m, std::size_t total_examples, Exec exec) {
  if (checkpoints.size() < 10)
    throw Error(ErrorKind::InsufficientCheckpoints, "need >= 10 checkpoints");
  if (small_m == 0 || large_m == 0 || total_examples / small_m < 2 || total_examples / large_m < 2)
    throw Error(ErrorKind::InvalidArgument, "total_examples must allow L >= 2 for both M values");

  MSensitivity out;
  out.small_m = small_m;
  out.large_m = large_m;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    const BnMode bn = BnMode::frozen(checkpoints[c].bn_stats);
    for (int which = 0; which < 2; ++which) {
      const std::size_t m = which == 0 ? small_m : large_m;
      const std::size_t count = total_examples / m;
      const std::uint64_t s = derive_seed(seed, c, m);
      const MinibatchGradients mg =
          sample_minibatch_gradients(spec, checkpoints[c].theta, data, count, m, s, bn, exec);
      const double top = gram_top_eigenvalue(gram_from_gradients(mg.grads, mg.mean, exec), s);
      (which == 0 ? out.lambda_small_m : out.lambda_large_m).push_back(top);
    }
  }
  out.pearson_r = pearson(out.lambda_small_m, out.lambda_large_m);
  return out;
}

}  // namespace breakeven
