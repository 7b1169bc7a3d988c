#include "eokfair/complexity.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace eokfair;
using namespace eokfair::testing;

namespace {

template <class F>
ErrorKind kind_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::validation;
}

EncoderFamily grid_of(std::vector<Matrix> maps) {
  EncoderFamily f;
  f.kind = EncoderKind::finite_grid;
  f.grid = std::move(maps);
  return f;
}

Matrix rotation(double angle, double scale) {
  Matrix W(2, 2);
  W << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
  return W * scale;
}

PopulationSpec concentration_population() {
  return make_population(0.5, 0.4, 0.7, {{{vec({0.2, 0.1}), vec({0.9, -0.3})}, {vec({-0.4, 0.5}), vec({0.6, 0.4})}}},
                         0.05);
}

}  // namespace

TEST(GaussianComplexity, SingletonGridIsCentered) {
  std::mt19937_64 gen(1);
  const Matrix X = random_matrix(30, 3, gen);
  const auto est = gaussian_complexity_mc(grid_of({random_matrix(2, 3, gen)}), X, 2000, 7);
  EXPECT_EQ(est.method, ComplexityMethod::monte_carlo);
  EXPECT_EQ(est.trials, 2000u);
  EXPECT_LT(std::abs(est.value), 3 * est.std_error);
}

TEST(GaussianComplexity, SymmetricPairGivesMeanAbsoluteNormal) {
  // X = e_1 (one row), W = +-[1 0]: the images are +-1 in R^1.
  const Matrix X = (Matrix(1, 2) << 1.0, 0.0).finished();
  const Matrix f = (Matrix(1, 2) << 1.0, 0.0).finished();
  const auto est = gaussian_complexity_mc(grid_of({f, Matrix(-f)}), X, 20000, 3);
  EXPECT_LT(std::abs(est.value - std::sqrt(2 / std::numbers::pi)), 3 * est.std_error);
  EXPECT_NEAR(std::sqrt(2 / std::numbers::pi), 0.79788, 1e-5);
}

TEST(GaussianComplexity, LargerGridNeverDecreases) {
  std::mt19937_64 gen(2);
  const Matrix X = random_matrix(20, 2, gen);
  std::vector<Matrix> maps;
  double prev = -1e300;
  for (int k = 0; k < 6; ++k) {
    maps.push_back(random_matrix(1, 2, gen));
    const auto draws = gaussian_sup_draws(grid_images(grid_of(maps), X), 200, 5);
    const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / 200;
    EXPECT_GE(mean, prev);
    prev = mean;
  }
}

TEST(GaussianComplexity, Errors) {
  const Matrix X = Matrix::Identity(2, 2);
  EXPECT_EQ(kind_of([&] { gaussian_complexity_mc(grid_of({}), X, 100, 1); }), ErrorKind::validation);
  EXPECT_EQ(kind_of([&] { gaussian_complexity_mc(grid_of({Matrix::Identity(2, 2)}), X, 99, 1); }),
            ErrorKind::parameter);
  EXPECT_EQ(kind_of([&] { gaussian_complexity_mc(grid_of({Matrix::Identity(3, 3)}), X, 100, 1); }),
            ErrorKind::dimension);
}

TEST(GaussianComplexity, DrawsConcentrate) {
  // Sup draws stay within D sqrt(n d log(2/delta) / 2) of their mean at rate >= 1 - delta,
  // with D the largest distance between single encoded points.
  std::mt19937_64 gen(3);
  const Matrix X = random_matrix(25, 2, gen);
  std::vector<Matrix> maps;
  for (int k = 0; k < 8; ++k) maps.push_back(random_matrix(2, 2, gen, 0.5));
  const auto fam = grid_of(maps);
  double D = 0;
  std::vector<Matrix> Zs;
  for (const auto& W : maps) Zs.push_back(X * W.transpose());
  for (const auto& A : Zs)
    for (const auto& B : Zs)
      for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < B.rows(); ++j) D = std::max(D, (A.row(i) - B.row(j)).norm());
  const double delta = 0.05;
  const double radius = D * std::sqrt(25.0 * 2 * std::log(2 / delta) / 2);
  const auto draws = gaussian_sup_draws(grid_images(fam, X), 1000, 11);
  const double mean = std::accumulate(draws.begin(), draws.end(), 0.0) / 1000;
  std::size_t inside = 0;
  for (double d : draws) inside += std::abs(d - mean) <= radius;
  EXPECT_GE(static_cast<double>(inside) / 1000, 1 - delta);
}

TEST(FnnBound, WorkedExample) {
  FnnSpec fnn{2, 1.0, 1.0, {}};
  const Matrix X = Matrix::Identity(2, 2);
  EXPECT_NEAR(fnn_complexity_bound(fnn, X), 6.6604369, 1e-7);
  EXPECT_NEAR(fnn_complexity_bound(fnn, X), 4 * std::sqrt(2 * std::log(4.0)), 1e-12);
  EXPECT_NEAR(fnn_complexity_bound(fnn, X), 6.66039, 1e-4);
  EXPECT_NEAR(fnn_complexity_bound(fnn, Matrix(3.0 * X)), 3 * fnn_complexity_bound(fnn, X), 1e-12);
  FnnSpec wide = fnn;
  wide.omega = 2.0;
  EXPECT_NEAR(fnn_complexity_bound(wide, X), 4 * fnn_complexity_bound(fnn, X), 1e-12);
  EXPECT_EQ(fnn_complexity_estimate(fnn, X).method, ComplexityMethod::fnn_closed_form);
  EXPECT_EQ(kind_of([] { fnn_complexity_bound(FnnSpec{0, 1.0, 1.0, {}}, Matrix::Identity(2, 2)); }),
            ErrorKind::validation);
}

TEST(FnnBound, RandomNetworksRespectNormConstraint) {
  const FnnSpec fnn{3, 1.5, 1.0, {2, 4, 3, 1}};
  CounterRng rng(4, 0);
  for (int t = 0; t < 20; ++t) {
    const Network net = random_network(fnn, rng);
    ASSERT_EQ(net.layers.size(), 3u);
    for (const auto& W : net.layers) EXPECT_LE(W.rowwise().lpNorm<1>().maxCoeff(), 1.5 + 1e-12);
  }
}

TEST(FnnBound, DominatesMonteCarloComplexity) {
  std::mt19937_64 gen(5);
  const Matrix X = random_matrix(40, 2, gen);
  for (int depth = 1; depth <= 3; ++depth) {
    std::vector<Eigen::Index> widths{2};
    for (int k = 1; k < depth; ++k) widths.push_back(4);
    widths.push_back(1);
    const FnnSpec fnn{depth, 1.0, 1.0, widths};
    CounterRng rng(6, static_cast<std::uint64_t>(depth));
    Matrix images(50, X.rows());
    for (int t = 0; t < 50; ++t) images.row(t) = network_apply(random_network(fnn, rng), X).transpose();
    const auto mc = gaussian_complexity_mc(images, 2000, 7);
    EXPECT_LE(mc.value, fnn_complexity_bound(fnn, X) + 3 * mc.std_error) << "depth " << depth;
  }
}

TEST(DeviationBound, WorkedExample) {
  const double first = 16 * std::sqrt(std::log(4.0) / 100);
  const double second = 2 * std::sqrt(2 * std::numbers::pi) / 100 * 6;
  EXPECT_NEAR(deviation_bound(100, 0.5, 0.5, 1, 1, 0.5, 1), first + second, 1e-12);
  EXPECT_NEAR(deviation_bound(100, 0.5, 0.5, 1, 1, 0.5, 1), 2.1846514, 1e-7);
  EXPECT_NEAR(deviation_bound(100, 0.5, 0.5, 1, 1, 0.5, 0), first, 1e-12);
}

TEST(DeviationBound, Monotonicity) {
  double prev = 1e300;
  for (std::size_t n = 2; n < 5000; n = n * 3 / 2 + 1) {
    const double b = deviation_bound(n, 0.3, 0.7, 1.0, 0.6, 0.05, 2.0);
    EXPECT_LT(b, prev);
    prev = b;
  }
  const double base = deviation_bound(500, 0.3, 0.7, 1.0, 0.6, 0.05, 2.0);
  EXPECT_GT(deviation_bound(500, 0.3, 0.7, 2.0, 0.6, 0.05, 2.0), base);
  EXPECT_GT(deviation_bound(500, 0.3, 0.7, 1.0, 0.9, 0.05, 2.0), base);
  EXPECT_GT(deviation_bound(500, 0.3, 0.7, 1.0, 0.6, 0.05, 3.0), base);
}

TEST(DeviationBound, ParameterErrors) {
  EXPECT_EQ(kind_of([] { deviation_bound(100, 0.5, 0.6, 1, 1, 0.5, 1); }), ErrorKind::parameter);
  EXPECT_EQ(kind_of([] { deviation_bound(100, 0.0, 1.0, 1, 1, 0.5, 1); }), ErrorKind::parameter);
  EXPECT_EQ(kind_of([] { deviation_bound(100, 0.5, 0.5, 1, 1, 1.0, 1); }), ErrorKind::parameter);
  EXPECT_EQ(kind_of([] { deviation_bound(1, 0.5, 0.5, 1, 1, 0.5, 1); }), ErrorKind::parameter);
}

TEST(Concentration, IdenticalMixturesStayNearZero) {
  const auto pop = make_population(0.5, 0.4, 0.4, {{{vec({0.3, 0.1}), vec({0.8, 0.2})}, {vec({0.3, 0.1}), vec({0.8, 0.2})}}},
                                   0.05);
  const auto rep = concentration_check(grid_of({Matrix::Identity(2, 2)}), KernelSpec::linear(4.0), pop, {400, 1600}, 20,
                                       0.05, 9);
  ASSERT_EQ(rep.rows.size(), 2u);
  for (const auto& r : rep.rows) {
    EXPECT_LT(r.mean_dev, 0.01);
    EXPECT_LE(r.quantile_dev, r.bound);
  }
}

TEST(Concentration, RootNRateAndEnvelope) {
  const auto fam = grid_of({Matrix::Identity(2, 2), rotation(0.7, 0.8), rotation(-1.2, 0.6), rotation(2.0, 1.0)});
  std::vector<std::size_t> ns;
  for (std::size_t n = 100; n <= 6400; n *= 2) ns.push_back(n);
  const auto rep = concentration_check(fam, KernelSpec::linear(4.0), concentration_population(), ns, 60, 0.05, 10);
  ASSERT_EQ(rep.rows.size(), ns.size());
  EXPECT_GE(rep.slope, -0.65);
  EXPECT_LE(rep.slope, -0.35);
  EXPECT_TRUE(rep.within_bound);
  for (const auto& r : rep.rows) EXPECT_LE(r.quantile_dev, r.bound) << r.n;
}

TEST(Concentration, RequiresLinearKernel) {
  EXPECT_EQ(kind_of([] {
              concentration_check(grid_of({Matrix::Identity(2, 2)}), KernelSpec::rbf(1.0), concentration_population(),
                                  {100}, 5, 0.05, 1);
            }),
            ErrorKind::unsupported);
}
