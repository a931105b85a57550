#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "breakeven/linalg.hpp"
#include "breakeven/netmodel.hpp"
#include "breakeven/rng.hpp"

namespace bt {

using namespace breakeven;

inline DenseSymmetric random_symmetric(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  std::vector<double> a(n * n);
  for (auto& x : a) x = scale * rng.normal();
  return DenseSymmetric(n, a);
}

inline Eigen::MatrixXd to_eigen(const DenseSymmetric& a) {
  Eigen::MatrixXd m(a.dim(), a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i)
    for (std::size_t j = 0; j < a.dim(); ++j) m(i, j) = a(i, j);
  return m;
}

// Eigenvalues descending, computed by Eigen (independent of the code under test).
inline std::vector<double> eigen_eigenvalues_desc(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + m.rows());
  std::sort(out.rbegin(), out.rend());
  return out;
}

inline Batch random_batch(std::size_t n, std::size_t d, std::size_t classes, std::uint64_t seed) {
  Rng rng(seed);
  Batch b;
  b.n = n;
  b.d = d;
  for (std::size_t i = 0; i < n * d; ++i) b.inputs.push_back(rng.normal());
  for (std::size_t i = 0; i < n; ++i) b.labels.push_back(static_cast<int>(rng.below(classes)));
  return b;
}

inline Batch random_regression_batch(std::size_t n, std::size_t d, std::size_t out,
                                     std::uint64_t seed) {
  Rng rng(seed);
  Batch b;
  b.n = n;
  b.d = d;
  b.target_dim = out;
  for (std::size_t i = 0; i < n * d; ++i) b.inputs.push_back(rng.normal());
  for (std::size_t i = 0; i < n * out; ++i) b.targets.push_back(rng.normal());
  return b;
}

// Init plus a small random perturbation so BN gamma/beta are not at 1/0.
inline ParamVector perturbed_params(const MlpSpec& spec, std::uint64_t seed, double amount = 0.1) {
  ParamVector theta = init_params(spec);
  Rng rng(seed);
  for (auto& t : theta) t += amount * rng.normal();
  return theta;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

inline double rel_err(std::span<const double> a, std::span<const double> b) {
  Vec d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return norm2(d) / std::max(norm2(b), 1e-300);
}

}  // namespace bt
