#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace breakeven {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
void scale(std::span<double> x, double a);
bool all_finite(std::span<const double> x);

// Pairwise (cascade) summation; result depends only on the order of x.
double pairwise_sum(std::span<const double> x);

/// Dense symmetric matrix, row-major. Construction symmetrizes the input as
/// (A + A^T) / 2 so that entry(i, j) == entry(j, i) holds exactly.
class DenseSymmetric {
 public:
  DenseSymmetric(std::size_t dim, std::vector<double> entries);

  static DenseSymmetric zeros(std::size_t dim);
  static DenseSymmetric diagonal(std::span<const double> diag);

  std::size_t dim() const { return dim_; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * dim_ + j]; }
  std::span<const double> entries() const { return entries_; }
  Vec apply(std::span<const double> v) const;
  double frobenius_norm() const;
  double trace() const;

 private:
  std::size_t dim_;
  std::vector<double> entries_;
};

/// Symmetric linear map given only through its action on vectors (e.g. a
/// Hessian evaluated by Hessian-vector products).
struct LinearOperator {
  std::size_t dim = 0;
  std::function<Vec(std::span<const double>)> apply;

  static LinearOperator from_dense(const DenseSymmetric& a);
};

/// Eigenvalues sorted descending; eigenvectors orthonormal, each with its
/// largest-magnitude component positive (lowest index wins ties).
struct EigenPairs {
  std::vector<double> eigenvalues;
  std::vector<Vec> eigenvectors;
};

// Flips v so that its largest-|.| component is positive.
void apply_sign_convention(std::span<double> v);

// Full spectrum by cyclic Jacobi rotations. Throws NonFinite, NoConvergence.
EigenPairs jacobi_eigh(const DenseSymmetric& a);

struct LanczosOptions {
  std::size_t k = 1;
  std::size_t max_iters = 20;
  std::uint64_t seed = 0;
};

/// Top-k algebraically largest Ritz pairs of a symmetric operator. Uses full
/// reorthogonalization; on breakdown the Krylov basis is extended with a fresh
/// random vector orthogonal to everything found so far. Throws InvalidK.
EigenPairs lanczos_topk(const LinearOperator& op, const LanczosOptions& options);

struct Projection {
  Vec projection;
  Vec residual;
};

// Orthogonal projection onto span(basis); basis must be orthonormal.
Projection project_onto_subspace(std::span<const double> v, const std::vector<Vec>& basis);

// Two-pass Pearson correlation; nullopt when either series has zero variance
// or fewer than two points.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

}  // namespace breakeven
