#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "breakeven/error.hpp"
#include "breakeven/linalg.hpp"
#include "test_util.hpp"

using namespace breakeven;

namespace {

void expect_orthonormal(const EigenPairs& p) {
  for (std::size_t i = 0; i < p.eigenvectors.size(); ++i) {
    EXPECT_NEAR(norm2(p.eigenvectors[i]), 1.0, 1e-10);
    for (std::size_t j = 0; j < i; ++j)
      EXPECT_LT(std::abs(dot(p.eigenvectors[i], p.eigenvectors[j])), 1e-8);
  }
}

void expect_sign_convention(const Vec& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (std::abs(v[i]) > std::abs(v[best])) best = i;
  EXPECT_GT(v[best], 0.0);
}

}  // namespace

TEST(DenseSymmetric, SymmetrizesOnConstruction) {
  DenseSymmetric a(2, {1.0, 2.0, 4.0, 5.0});
  EXPECT_EQ(a(0, 1), a(1, 0));
  EXPECT_EQ(a(0, 1), 3.0);
}

TEST(DenseSymmetric, RejectsNonFinite) {
  try {
    DenseSymmetric a(2, {1.0, std::numeric_limits<double>::quiet_NaN(), 0.0, 1.0});
    FAIL() << "expected NonFinite";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonFinite);
  }
}

TEST(Jacobi, Diagonal) {
  const double d[] = {1.0, 2.0, 3.0};
  const EigenPairs p = jacobi_eigh(DenseSymmetric::diagonal(d));
  ASSERT_EQ(p.eigenvalues.size(), 3u);
  EXPECT_DOUBLE_EQ(p.eigenvalues[0], 3.0);
  EXPECT_DOUBLE_EQ(p.eigenvalues[1], 2.0);
  EXPECT_DOUBLE_EQ(p.eigenvalues[2], 1.0);
  EXPECT_EQ(p.eigenvectors[0], (Vec{0.0, 0.0, 1.0}));
  EXPECT_EQ(p.eigenvectors[2], (Vec{1.0, 0.0, 0.0}));
}

TEST(Jacobi, TwoByTwo) {
  const EigenPairs p = jacobi_eigh(DenseSymmetric(2, {2.0, 1.0, 1.0, 2.0}));
  EXPECT_NEAR(p.eigenvalues[0], 3.0, 1e-14);
  EXPECT_NEAR(p.eigenvalues[1], 1.0, 1e-14);
  expect_orthonormal(p);
}

TEST(Jacobi, RandomReconstruction) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const DenseSymmetric a = bt::random_symmetric(8, seed);
    const EigenPairs p = jacobi_eigh(a);
    expect_orthonormal(p);
    const double scale = std::max(1.0, a.frobenius_norm());
    double tr = 0.0;
    for (std::size_t i = 0; i < 8; ++i) {
      Vec r = a.apply(p.eigenvectors[i]);
      axpy(-p.eigenvalues[i], p.eigenvectors[i], r);
      EXPECT_LT(norm2(r), 1e-10 * scale);
      expect_sign_convention(p.eigenvectors[i]);
      tr += p.eigenvalues[i];
    }
    EXPECT_LT(std::abs(tr - a.trace()), 1e-9 * std::max(1.0, std::abs(a.trace())));
    // V diag(l) V^T == A
    double err = 0.0;
    for (std::size_t i = 0; i < 8; ++i)
      for (std::size_t j = 0; j < 8; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < 8; ++k)
          s += p.eigenvectors[k][i] * p.eigenvalues[k] * p.eigenvectors[k][j];
        err += (s - a(i, j)) * (s - a(i, j));
      }
    EXPECT_LT(std::sqrt(err), 1e-9);
    // Sorted descending and equal to an independent solver.
    const auto ref = bt::eigen_eigenvalues_desc(bt::to_eigen(a));
    for (std::size_t i = 0; i < 8; ++i) EXPECT_NEAR(p.eigenvalues[i], ref[i], 1e-10);
  }
}

TEST(Jacobi, OneByOne) {
  const EigenPairs p = jacobi_eigh(DenseSymmetric(1, {-4.0}));
  EXPECT_EQ(p.eigenvalues, (Vec{-4.0}));
  EXPECT_EQ(p.eigenvectors[0], (Vec{1.0}));
}

TEST(SignConvention, TiesGoToLowestIndex) {
  Vec v{-0.5, 0.5, 0.1};
  apply_sign_convention(v);
  EXPECT_EQ(v, (Vec{0.5, -0.5, -0.1}));
}

TEST(Lanczos, DiagonalTop1) {
  const double d[] = {5.0, 3.0, 1.0};
  const EigenPairs p =
      lanczos_topk(LinearOperator::from_dense(DenseSymmetric::diagonal(d)), {1, 3, 7});
  EXPECT_NEAR(p.eigenvalues[0], 5.0, 1e-10);
  EXPECT_NEAR(p.eigenvectors[0][0], 1.0, 1e-10);
  EXPECT_NEAR(p.eigenvectors[0][1], 0.0, 1e-10);
}

TEST(Lanczos, IdentityBreaksDownImmediately) {
  LinearOperator id{10, [](std::span<const double> v) { return Vec(v.begin(), v.end()); }};
  const EigenPairs p = lanczos_topk(id, {1, 10, 3});
  EXPECT_NEAR(p.eigenvalues[0], 1.0, 1e-12);
  EXPECT_NEAR(norm2(p.eigenvectors[0]), 1.0, 1e-12);
}

TEST(Lanczos, MatchesJacobiTop5) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DenseSymmetric a = bt::random_symmetric(50, 100 + seed);
    const EigenPairs ref = jacobi_eigh(a);
    const EigenPairs p = lanczos_topk(LinearOperator::from_dense(a), {5, 50, seed});
    expect_orthonormal(p);
    for (std::size_t i = 0; i < 5; ++i) {
      EXPECT_NEAR(p.eigenvalues[i], ref.eigenvalues[i], 1e-8);
      expect_sign_convention(p.eigenvectors[i]);
    }
  }
}

TEST(Lanczos, RitzBoundsAgainstJacobi) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const DenseSymmetric a = bt::random_symmetric(20, 200 + seed);
    const double top = jacobi_eigh(a).eigenvalues[0];
    const EigenPairs p = lanczos_topk(LinearOperator::from_dense(a), {1, 20, seed});
    EXPECT_LE(p.eigenvalues[0], top + 1e-8);
    EXPECT_GE(p.eigenvalues[0], top - 1e-6);
    // With few iterations the Ritz value is still a lower bound.
    const EigenPairs short_run = lanczos_topk(LinearOperator::from_dense(a), {1, 4, seed});
    EXPECT_LE(short_run.eigenvalues[0], top + 1e-8);
  }
}

TEST(Lanczos, DeterministicInSeed) {
  const DenseSymmetric a = bt::random_symmetric(30, 9);
  const EigenPairs p = lanczos_topk(LinearOperator::from_dense(a), {3, 15, 42});
  const EigenPairs q = lanczos_topk(LinearOperator::from_dense(a), {3, 15, 42});
  EXPECT_EQ(p.eigenvalues, q.eigenvalues);
  EXPECT_EQ(p.eigenvectors, q.eigenvectors);
}

TEST(Lanczos, LowRankOperatorExhaustsKrylovSpace) {
  // rank-2 matrix: Krylov space closes after two steps; remaining Ritz values are 0.
  Vec u{1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
  Vec w{0.0, 1.0, 1.0, 0.0, 0.0, 0.0};
  std::vector<double> e(36, 0.0);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) e[i * 6 + j] = 3.0 * u[i] * u[j] + 2.0 * w[i] * w[j];
  const EigenPairs p = lanczos_topk(LinearOperator::from_dense(DenseSymmetric(6, e)), {3, 6, 1});
  EXPECT_NEAR(p.eigenvalues[0], 4.0, 1e-10);
  EXPECT_NEAR(p.eigenvalues[1], 3.0, 1e-10);
  EXPECT_NEAR(p.eigenvalues[2], 0.0, 1e-10);
  expect_orthonormal(p);
}

TEST(Lanczos, InvalidK) {
  const DenseSymmetric a = bt::random_symmetric(4, 1);
  for (LanczosOptions o : {LanczosOptions{0, 4, 0}, LanczosOptions{5, 10, 0}, LanczosOptions{3, 2, 0}}) {
    try {
      lanczos_topk(LinearOperator::from_dense(a), o);
      FAIL() << "expected InvalidK";
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::InvalidK);
    }
  }
}

TEST(Projection, InSpanAndOrthogonal) {
  const std::vector<Vec> basis{{1.0, 0.0, 0.0}};
  Projection p = project_onto_subspace(Vec{1.0, 0.0, 0.0}, basis);
  EXPECT_EQ(p.projection, (Vec{1.0, 0.0, 0.0}));
  EXPECT_EQ(norm2(p.residual), 0.0);
  p = project_onto_subspace(Vec{0.0, 2.0, 3.0}, basis);
  EXPECT_EQ(norm2(p.projection), 0.0);
  EXPECT_EQ(p.residual, (Vec{0.0, 2.0, 3.0}));
}

TEST(Projection, PythagorasOnRandomBasis) {
  Rng rng(5);
  Eigen::MatrixXd g(20, 5);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 5; ++j) g(i, j) = rng.normal();
  const Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(g).householderQ() *
                            Eigen::MatrixXd::Identity(20, 5);
  std::vector<Vec> basis(5, Vec(20));
  for (int j = 0; j < 5; ++j)
    for (int i = 0; i < 20; ++i) basis[j][i] = q(i, j);
  const Vec v = rng.normal_vector(20);
  const Projection p = project_onto_subspace(v, basis);
  const double lhs = dot(p.projection, p.projection) + dot(p.residual, p.residual);
  EXPECT_NEAR(lhs, dot(v, v), 1e-10);
  for (std::size_t i = 0; i < 20; ++i) EXPECT_NEAR(p.projection[i] + p.residual[i], v[i], 1e-12);
  for (const auto& b : basis) EXPECT_LT(std::abs(dot(p.residual, b)), 1e-10);
}

TEST(Projection, DimensionMismatch) {
  try {
    project_onto_subspace(Vec{1.0, 2.0}, {Vec{1.0, 0.0, 0.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(Pearson, Cases) {
  const Vec x{1, 2, 3, 4, 5};
  EXPECT_NEAR(*pearson(x, x), 1.0, 1e-15);
  EXPECT_NEAR(*pearson(x, Vec{5, 4, 3, 2, 1}), -1.0, 1e-15);
  EXPECT_FALSE(pearson(x, Vec{2, 2, 2, 2, 2}).has_value());
  EXPECT_FALSE(pearson(Vec{1.0}, Vec{2.0}).has_value());
}

TEST(PairwiseSum, MatchesLongDoubleReference) {
  Rng rng(3);
  const Vec x = rng.normal_vector(1001);
  long double ref = 0.0L;
  for (double v : x) ref += v;
  EXPECT_NEAR(pairwise_sum(x), static_cast<double>(ref), 1e-12);
}
