#include "breakeven/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "breakeven/error.hpp"
#include "breakeven/rng.hpp"

namespace breakeven {

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error(ErrorKind::DimensionMismatch, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void scale(std::span<double> x, double a) {
  for (auto& v : x) v *= a;
}

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

double pairwise_sum(std::span<const double> x) {
  if (x.size() <= 8) {
    double s = 0.0;
    for (double v : x) s += v;
    return s;
  }
  const std::size_t half = x.size() / 2;
  return pairwise_sum(x.first(half)) + pairwise_sum(x.subspan(half));
}

DenseSymmetric::DenseSymmetric(std::size_t dim, std::vector<double> entries)
    : dim_(dim), entries_(std::move(entries)) {
  if (dim_ == 0) throw Error(ErrorKind::InvalidArgument, "matrix dimension must be positive");
  if (entries_.size() != dim_ * dim_)
    throw Error(ErrorKind::DimensionMismatch, "expected dim*dim entries");
  if (!all_finite(entries_)) throw Error(ErrorKind::NonFinite, "matrix has NaN/Inf entries");
  for (std::size_t i = 0; i < dim_; ++i)
    for (std::size_t j = i + 1; j < dim_; ++j) {
      const double m = 0.5 * (entries_[i * dim_ + j] + entries_[j * dim_ + i]);
      entries_[i * dim_ + j] = m;
      entries_[j * dim_ + i] = m;
    }
}

DenseSymmetric DenseSymmetric::zeros(std::size_t dim) {
  return DenseSymmetric(dim, std::vector<double>(dim * dim, 0.0));
}

DenseSymmetric DenseSymmetric::diagonal(std::span<const double> diag) {
  std::vector<double> e(diag.size() * diag.size(), 0.0);
  for (std::size_t i = 0; i < diag.size(); ++i) e[i * diag.size() + i] = diag[i];
  return DenseSymmetric(diag.size(), std::move(e));
}

Vec DenseSymmetric::apply(std::span<const double> v) const {
  if (v.size() != dim_) throw Error(ErrorKind::DimensionMismatch, "matrix-vector product");
  Vec out(dim_, 0.0);
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = 0.0;
    const double* row = entries_.data() + i * dim_;
    for (std::size_t j = 0; j < dim_; ++j) s += row[j] * v[j];
    out[i] = s;
  }
  return out;
}

double DenseSymmetric::frobenius_norm() const { return norm2(entries_); }

double DenseSymmetric::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) t += entries_[i * dim_ + i];
  return t;
}

LinearOperator LinearOperator::from_dense(const DenseSymmetric& a) {
  return LinearOperator{a.dim(), [a](std::span<const double> v) { return a.apply(v); }};
}

void apply_sign_convention(std::span<double> v) {
  std::size_t best = 0;
  double best_abs = -1.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > best_abs) {
      best_abs = std::abs(v[i]);
      best = i;
    }
  }
  if (!v.empty() && v[best] < 0.0) scale(v, -1.0);
}

namespace {

double off_diagonal_norm(const std::vector<double>& a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) s += a[i * n + j] * a[i * n + j];
  return std::sqrt(s);
}

EigenPairs sorted_pairs(const std::vector<double>& values, const std::vector<double>& columns,
                        std::size_t n) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  EigenPairs out;
  out.eigenvalues.reserve(n);
  out.eigenvectors.reserve(n);
  for (std::size_t idx : order) {
    out.eigenvalues.push_back(values[idx]);
    Vec v(n);
    for (std::size_t r = 0; r < n; ++r) v[r] = columns[r * n + idx];
    apply_sign_convention(v);
    out.eigenvectors.push_back(std::move(v));
  }
  return out;
}

}  // namespace

EigenPairs jacobi_eigh(const DenseSymmetric& a_in) {
  constexpr int kMaxSweeps = 100;
  const std::size_t n = a_in.dim();
  std::vector<double> a(a_in.entries().begin(), a_in.entries().end());
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  const double tol = 1e-12 * a_in.frobenius_norm();
  bool converged = false;
  for (int sweep = 0; sweep <= kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a, n) <= tol) {
      converged = true;
      break;
    }
    if (sweep == kMaxSweeps) break;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e150) {
          t = 0.5 / theta;
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged)
    throw Error(ErrorKind::NoConvergence, "Jacobi sweep cap reached above tolerance");

  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a[i * n + i];
  return sorted_pairs(diag, v, n);
}

namespace {

// Two rounds of classical Gram-Schmidt against every stored Lanczos vector.
void reorthogonalize(Vec& w, const std::vector<Vec>& basis) {
  for (int round = 0; round < 2; ++round)
    for (const auto& q : basis) axpy(-dot(q, w), q, w);
}

}  // namespace

EigenPairs lanczos_topk(const LinearOperator& op, const LanczosOptions& options) {
  const std::size_t n = op.dim;
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "operator dimension must be positive");
  if (options.k == 0 || options.k > n) throw Error(ErrorKind::InvalidK, "k must be in [1, dim]");
  if (options.k > options.max_iters)
    throw Error(ErrorKind::InvalidK, "k must not exceed max_iters");
  const std::size_t m = std::min(options.max_iters, n);

  Rng rng(options.seed);
  Vec q = rng.normal_vector(n);
  scale(q, 1.0 / norm2(q));

  std::vector<Vec> basis;
  std::vector<double> alphas;
  std::vector<double> betas;
  double t_norm = 0.0;

  for (std::size_t j = 0; j < m; ++j) {
    basis.push_back(q);
    Vec w = op.apply(q);
    if (w.size() != n) throw Error(ErrorKind::DimensionMismatch, "operator output size");
    if (!all_finite(w)) throw Error(ErrorKind::NonFinite, "operator produced NaN/Inf");
    const double alpha = dot(q, w);
    axpy(-alpha, q, w);
    if (j > 0) axpy(-betas.back(), basis[j - 1], w);
    reorthogonalize(w, basis);
    alphas.push_back(alpha);
    if (j + 1 == m) break;

    const double beta = norm2(w);
    t_norm = std::max(t_norm, std::abs(alpha) + beta);
    if (beta < 1e-13 * std::max(1.0, t_norm)) {
      // Invariant subspace found; continue from a fresh direction.
      bool extended = false;
      for (int attempt = 0; attempt < 3 && !extended; ++attempt) {
        Vec r = rng.normal_vector(n);
        const double r0 = norm2(r);
        reorthogonalize(r, basis);
        const double rn = norm2(r);
        if (rn > 1e-8 * r0) {
          scale(r, 1.0 / rn);
          q = std::move(r);
          extended = true;
        }
      }
      if (!extended) break;
      betas.push_back(0.0);
    } else {
      scale(w, 1.0 / beta);
      q = std::move(w);
      betas.push_back(beta);
    }
  }

  const std::size_t size = alphas.size();
  std::vector<double> t(size * size, 0.0);
  for (std::size_t i = 0; i < size; ++i) {
    t[i * size + i] = alphas[i];
    if (i + 1 < size) {
      t[i * size + i + 1] = betas[i];
      t[(i + 1) * size + i] = betas[i];
    }
  }
  const EigenPairs ritz = jacobi_eigh(DenseSymmetric(size, std::move(t)));

  const std::size_t k = std::min(options.k, size);
  EigenPairs out;
  for (std::size_t r = 0; r < k; ++r) {
    out.eigenvalues.push_back(ritz.eigenvalues[r]);
    Vec x(n, 0.0);
    for (std::size_t i = 0; i < size; ++i) axpy(ritz.eigenvectors[r][i], basis[i], x);
    scale(x, 1.0 / norm2(x));
    apply_sign_convention(x);
    out.eigenvectors.push_back(std::move(x));
  }
  return out;
}

Projection project_onto_subspace(std::span<const double> v, const std::vector<Vec>& basis) {
  Projection out{Vec(v.size(), 0.0), Vec(v.begin(), v.end())};
  for (const auto& b : basis) {
    if (b.size() != v.size())
      throw Error(ErrorKind::DimensionMismatch, "basis vector length differs from v");
    axpy(dot(v, b), b, out.projection);
  }
  for (std::size_t i = 0; i < v.size(); ++i) out.residual[i] = v[i] - out.projection[i];
  return out;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorKind::DimensionMismatch, "pearson");
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const auto constant = [](std::span<const double> s) {
    return std::all_of(s.begin(), s.end(), [&](double v) { return v == s.front(); });
  };
  if (constant(x) || constant(y)) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace breakeven
