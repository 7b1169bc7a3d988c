#include "eokfair/kernels.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include <random>

using namespace eokfair;
using namespace eokfair::testing;

TEST(Kernels, PointEvaluations) {
  EXPECT_NEAR(eval_kernel(KernelSpec::rbf(1.0), vec({0}), vec({1})), 0.606531, 1e-6);
  EXPECT_DOUBLE_EQ(eval_kernel(KernelSpec::rbf(1.0), vec({0}), vec({1})), std::exp(-0.5));
  EXPECT_DOUBLE_EQ(eval_kernel(KernelSpec::linear(3.0), vec({1}), vec({2})), 2.0);
  EXPECT_DOUBLE_EQ(eval_kernel(KernelSpec::laplacian(2.0, 2), vec({0, 0}), vec({1, -1})), std::exp(-1.0));
  EXPECT_DOUBLE_EQ(eval_kernel(KernelSpec::rbf(0.7), vec({0.3, 2}), vec({0.3, 2})), 1.0);
}

TEST(Kernels, ProductAndSum) {
  const auto prod = KernelSpec::product(KernelSpec::rbf(1.0), KernelSpec::linear(2.0), 1);
  EXPECT_DOUBLE_EQ(prod.nu, 4.0);
  EXPECT_DOUBLE_EQ(eval_kernel(prod, vec({0, 1}), vec({1, 2})), std::exp(-0.5) * 2.0);
  const auto sum = KernelSpec::sum(KernelSpec::linear(1.0), KernelSpec::rbf(0.5));
  EXPECT_DOUBLE_EQ(sum.nu, 2.0);
  EXPECT_DOUBLE_EQ(eval_kernel(sum, vec({0.5}), vec({1.0})), 0.5 + std::exp(-0.5));
}

TEST(Kernels, DiagonalBoundedByNu) {
  std::mt19937_64 gen(4);
  const std::vector<KernelSpec> specs{KernelSpec::rbf(0.5), KernelSpec::laplacian(1.0, 3), KernelSpec::linear(10.0),
                                      KernelSpec::product(KernelSpec::rbf(1.0), KernelSpec::laplacian(2.0, 2), 1),
                                      KernelSpec::sum(KernelSpec::linear(10.0), KernelSpec::rbf(1.0))};
  const Matrix A = random_matrix(40, 3, gen);
  for (const auto& spec : specs) {
    const auto g = gram(spec, A, A);
    EXPECT_LE(g.values.diagonal().maxCoeff(), spec.nu + 1e-12) << to_string(spec.family);
  }
}

TEST(Kernels, GramExamples) {
  const auto g = gram(KernelSpec::rbf(1.0), col({0, 1}), col({0, 1}));
  EXPECT_DOUBLE_EQ(g.values(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(g.values(0, 1), std::exp(-0.5));
  EXPECT_DOUBLE_EQ(g.values(1, 0), std::exp(-0.5));
  const auto l = gram(KernelSpec::linear(3.0), col({1, 2}), col({1, 2}));
  EXPECT_EQ(l.values, (Matrix(2, 2) << 1, 2, 2, 4).finished());
}

TEST(Kernels, GramTransposeAndPsd) {
  std::mt19937_64 gen(8);
  const Matrix A = random_matrix(30, 2, gen), B = random_matrix(17, 2, gen);
  for (const auto& spec : {KernelSpec::rbf(0.8), KernelSpec::laplacian(1.5, 2), KernelSpec::linear(8.0)}) {
    const auto ab = gram(spec, A, B), ba = gram(spec, B, A);
    EXPECT_EQ(ab.values, ba.values.transpose());
    const Matrix K = gram(spec, A, A).values;
    const Eigen::MatrixXd sym = 0.5 * (K + K.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(Kernels, LipschitzConstants) {
  EXPECT_NEAR(lipschitz_constant(KernelSpec::rbf(1.0)), 0.606531, 1e-6);
  EXPECT_DOUBLE_EQ(lipschitz_constant(KernelSpec::laplacian(2.0)), 0.5);
  EXPECT_DOUBLE_EQ(lipschitz_constant(KernelSpec::linear(3.0)), 3.0);
}

TEST(Kernels, LipschitzHoldsOnRandomTriples) {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> nd(0.0, 1.0);
  const Eigen::Index d = 3;
  const std::vector<KernelSpec> specs{KernelSpec::rbf(0.7), KernelSpec::laplacian(1.3, d), KernelSpec::linear(6.0)};
  for (const auto& spec : specs) {
    for (int t = 0; t < 1000; ++t) {
      Vector a(d), b(d), z(d);
      for (Eigen::Index k = 0; k < d; ++k) {
        a[k] = nd(gen);
        b[k] = a[k] + 0.3 * nd(gen);
        z[k] = nd(gen);
      }
      const double lhs = std::abs(eval_kernel(spec, a, z) - eval_kernel(spec, b, z));
      EXPECT_LE(lhs, lipschitz_constant(spec) * (a - b).norm() + 1e-12) << to_string(spec.family);
    }
  }
}

TEST(Kernels, LipschitzIsTightForRbf) {
  // The profile's steepest slope is attained at distance sigma.
  const auto spec = KernelSpec::rbf(1.0);
  const double h = 1e-6;
  const double slope = (eval_kernel(spec, vec({1.0 + h}), vec({0})) - eval_kernel(spec, vec({1.0 - h}), vec({0}))) / (2 * h);
  EXPECT_NEAR(std::abs(slope), lipschitz_constant(spec), 1e-8);
}

TEST(Kernels, Errors) {
  try {
    eval_kernel(KernelSpec::rbf(1.0), vec({0, 1}), vec({1}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
  try {
    eval_kernel(KernelSpec::linear(1.0), vec({2}), vec({0.5}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::domain);
  }
  EXPECT_THROW(gram(KernelSpec::rbf(1.0), col({1, 2}), Matrix::Zero(2, 2)), Error);
  EXPECT_THROW(KernelSpec::rbf(0.0), Error);
  EXPECT_THROW(KernelSpec::linear(-1.0), Error);
}

TEST(Kernels, StreamedSumsMatchMaterializedGram) {
  std::mt19937_64 gen(3);
  const Matrix A = random_matrix(300, 2, gen), B = random_matrix(257, 2, gen);
  for (const auto& spec : {KernelSpec::rbf(1.0), KernelSpec::laplacian(1.0, 2), KernelSpec::linear(10.0)}) {
    const Matrix K = gram(spec, A, B).values;
    EXPECT_NEAR(gram_sum(spec, A, B), K.sum(), 1e-9);
    const Matrix KA = gram(spec, A, A).values;
    EXPECT_NEAR(gram_sum_offdiag(spec, A), KA.sum() - KA.trace(), 1e-9);
  }
}
