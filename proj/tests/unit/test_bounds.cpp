#include "eokfair/bounds.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

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

/// Label rates equal across groups; the groups differ by a shift of the features.
PopulationSpec unbiased_spec(double shift) {
  return make_population(0.5, 0.4, 0.4, {{{vec({0, 0}), vec({1, 0})}, {vec({0, shift}), vec({1, shift})}}}, 0.4);
}

/// Cell (0, y) and (1, y) share a law, so the reweighted mixtures coincide.
PopulationSpec eo_zero_spec(double p1_s0, double p1_s1) {
  return make_population(0.5, p1_s0, p1_s1, {{{vec({0, 0}), vec({1.5, 0})}, {vec({0, 0}), vec({1.5, 0})}}}, 0.3);
}

PopulationSpec random_biased_spec(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), p(0.15, 0.85);
  double a = p(gen), b = p(gen);
  while (std::abs(a - b) < 0.1) b = p(gen);
  std::array<std::array<Vector, 2>, 2> means;
  for (auto& row : means)
    for (auto& m : row) m = vec({u(gen), u(gen)});
  return make_population(0.5, a, b, means, 0.3);
}

LabeledDataset discrete_dataset(std::mt19937_64& gen, int atoms, std::size_t n) {
  std::uniform_int_distribution<int> pick(0, atoms - 1);
  const Matrix support = random_matrix(atoms, 2, gen);
  LabeledDataset d;
  d.z.resize(static_cast<Eigen::Index>(n), 2);
  for (std::size_t i = 0; i < n; ++i) {
    const int a = i < 2 ? static_cast<int>(i) % atoms : pick(gen);
    d.z.row(static_cast<Eigen::Index>(i)) = support.row(a);
    d.s.push_back(static_cast<std::uint8_t>(i % 2));
    d.y.push_back(static_cast<std::uint8_t>((i / 2) % 2));
  }
  return d;
}

}  // namespace

TEST(Report, HoldsConvention) {
  EXPECT_TRUE(make_report("a", ClauseKind::inequality, 1.0, 1.04, 0.05, "").holds);
  EXPECT_FALSE(make_report("a", ClauseKind::inequality, 1.0, 1.06, 0.05, "").holds);
  EXPECT_TRUE(make_report("a", ClauseKind::equality, 1.0, 0.99, 0.02, "").holds);
  EXPECT_FALSE(make_report("a", ClauseKind::equality, 1.0, 1.03, 0.02, "").holds);
  EXPECT_DOUBLE_EQ(make_report("a", ClauseKind::inequality, 0.3, 0.5, 0.0, "").slack, -0.2);
}

TEST(UnbiasedEquality, HoldsOnUnbiasedSpec) {
  const auto d = sample_population(unbiased_spec(0.8), 10000, 1);
  const auto r = check_unbiased_equality(KernelSpec::rbf(1.0), d, 0.02, 0.05);
  EXPECT_TRUE(r.holds) << r.lhs << " vs " << r.rhs;
  EXPECT_GT(r.lhs, 0.05);
  EXPECT_EQ(r.kind, ClauseKind::equality);
}

TEST(UnbiasedEquality, PooledCellsGiveZero) {
  // Four identical cells of two points.
  const auto d = make_dataset(col({0.2, 0.9, 0.2, 0.9, 0.2, 0.9, 0.2, 0.9}), {0, 0, 0, 0, 1, 1, 1, 1},
                              {0, 0, 1, 1, 0, 0, 1, 1});
  const auto r = check_unbiased_equality(KernelSpec::rbf(1.0), d, 1e-12);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_NEAR(r.rhs, 0.0, 1e-7);
  EXPECT_TRUE(r.holds || std::abs(r.slack) < 1e-7);
}

TEST(UnbiasedEquality, BiasedDataIsInapplicable) {
  const auto d = sample_population(eo_zero_spec(0.2, 0.7), 2000, 2);
  EXPECT_EQ(kind_of([&] { check_unbiased_equality(KernelSpec::rbf(1.0), d, 0.02); }), ErrorKind::inapplicable);
}

TEST(UnbiasedEquality, SlackShrinksAtRootNRate) {
  std::vector<double> ns, slacks;
  // Diagonal group shift: label-rate fluctuations enter the slack at first order.
  const auto spec = make_population(0.5, 0.4, 0.4, {{{vec({0, 0}), vec({1, 0})}, {vec({0.6, 0.8}), vec({1.6, 0.8})}}}, 0.4);
  for (std::size_t n : {250, 500, 1000, 2000, 4000, 8000}) {
    double acc = 0;
    for (std::uint64_t s = 0; s < 16; ++s)
      acc += std::abs(check_unbiased_equality(KernelSpec::rbf(1.0), sample_population(spec, n, 10 + s), 1.0, 1.0).slack);
    ns.push_back(static_cast<double>(n));
    slacks.push_back(acc / 16);
  }
  const double slope = loglog_slope(ns, slacks);
  EXPECT_GE(slope, -0.8);
  EXPECT_LE(slope, -0.2);
}

TEST(BiasedLowerBound, UnbiasedDataReducesToEok) {
  const auto d = make_dataset(col({0, 1, 0.5, 1.5, 0.1, 1.1, 0.4, 1.6}), {0, 0, 0, 0, 1, 1, 1, 1},
                              {0, 1, 0, 1, 0, 1, 0, 1});
  const auto spec = KernelSpec::rbf(1.0);
  const auto r = check_biased_lower_bound(spec, d, 0.03);
  EXPECT_EQ(r.constants.at("label_bias"), 0.0);
  EXPECT_NEAR(r.rhs, eok_hat_plugin(spec, d).eok / 2, 1e-15);
}

TEST(BiasedLowerBound, ConstructedZeroEokSpec) {
  const auto d = sample_population(eo_zero_spec(0.15, 0.75), 10000, 3);
  const auto spec = KernelSpec::rbf(1.0);
  const auto r = check_biased_lower_bound(spec, d, 0.03);
  EXPECT_LT(r.constants.at("eok"), 0.05);
  EXPECT_GT(r.constants.at("beta"), 0.3);
  EXPECT_TRUE(r.holds);
  const double floor = r.constants.at("label_bias") * r.constants.at("beta") / 2;
  EXPECT_GE(r.lhs, floor - 0.05);
  EXPECT_GT(floor, 0.1);
}

TEST(BiasedLowerBound, RandomBiasedSpecs) {
  std::mt19937_64 gen(4);
  for (int t = 0; t < 10; ++t) {
    const auto d = sample_population(random_biased_spec(gen), 3000, 100 + static_cast<std::uint64_t>(t));
    for (const auto& spec : {KernelSpec::rbf(1.0), KernelSpec::laplacian(1.0, 2)})
      EXPECT_TRUE(check_biased_lower_bound(spec, d, 0.03).holds);
  }
}

TEST(BiasedLowerBound, EmptyCell) {
  const auto d = make_dataset(col({0, 1, 2, 3}), {0, 0, 1, 1}, {0, 1, 0, 0});
  EXPECT_EQ(kind_of([&] { check_biased_lower_bound(KernelSpec::rbf(1.0), d, 0.03); }), ErrorKind::empty_cell);
}

TEST(BaBounds, Examples) {
  EXPECT_DOUBLE_EQ(ba_bound(1.0, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(ba_bound(4.0, 4.0), 1.0);
  EXPECT_DOUBLE_EQ(ba_bound(1.0, 2.0), 1.0);

  const auto same = make_dataset(col({0.3, 0.8, 0.3, 0.8}), {0, 0, 1, 1}, {0, 1, 0, 1});
  const auto [up, low] = check_ba_bounds(KernelSpec::rbf(1.0), same, 10, 0.01);
  EXPECT_NEAR(up.lhs, 0.5, 1e-12);
  EXPECT_NEAR(up.rhs, 0.5, 1e-12);
  EXPECT_TRUE(up.holds);
  EXPECT_TRUE(low.holds);
}

TEST(BaBounds, SeparatedGaussians) {
  const auto spec = make_population(0.5, 0.3, 0.6, {{{vec({0, 0}), vec({1.5, 0})}, {vec({0, 1}), vec({1.5, 1})}}}, 0.5);
  const auto d = sample_population(spec, 4000, 5);
  const auto [up, low] = check_ba_bounds(KernelSpec::rbf(1.0), d, 50, 0.01);
  EXPECT_TRUE(up.holds) << up.slack;
  EXPECT_TRUE(low.holds) << low.slack;
  EXPECT_GT(low.lhs, 0.55);
}

TEST(CalibrationChain, TwoAtomExample) {
  // S = 0 holds (Y=1, t=0.8) twice; S = 1 holds (Y=1, t=0.2) twice: DC = 0.5.
  const auto d = make_dataset(col({0.0, 0.1, 2.0, 2.1}), {0, 0, 1, 1}, {1, 1, 1, 1});
  const auto h = external_scores(vec({0.8, 0.8, 0.2, 0.2}));
  const auto spec_u = KernelSpec::sum(KernelSpec::linear(1.0), KernelSpec::rbf(1.0));
  const auto spec_y = KernelSpec::rbf(1.0);
  const auto [a, b] = check_calibration_chain(KernelSpec::rbf(1.0), spec_u, spec_y, d, h, 0.05);
  // Tensor Gram on the atoms p=(0.8,1), q=(0.2,1): k(p,p)=1.64, k(q,q)=1.04, k(p,q)=0.16+exp(-0.18).
  const double gamma = std::sqrt(1.64 + 1.04 - 2 * (0.16 + std::exp(-0.18)));
  EXPECT_DOUBLE_EQ(a.lhs, 0.5);
  EXPECT_NEAR(a.rhs, gamma / (4 * std::sqrt(2.0)), 1e-12);
  EXPECT_TRUE(a.holds);
  EXPECT_TRUE(b.holds);
  EXPECT_NEAR(b.constants.at("one_norm"), std::sqrt(2 / (1 + std::exp(-0.5))), 1e-12);
}

TEST(CalibrationChain, ConstantScoreUnderIndependence) {
  const auto d = sample_population(unbiased_spec(0.0), 3000, 6);
  const auto spec_u = KernelSpec::sum(KernelSpec::linear(1.0), KernelSpec::rbf(0.5));
  const auto [a, b] = check_calibration_chain(KernelSpec::rbf(1.0), spec_u, KernelSpec::rbf(1.0), d,
                                              constant_classifier(0.5), 0.05);
  EXPECT_LT(a.lhs, 0.03);
  EXPECT_LT(a.rhs, 0.03);
  EXPECT_LT(b.rhs, 0.03);
  EXPECT_TRUE(a.holds);
  EXPECT_TRUE(b.holds);
}

TEST(CalibrationChain, RandomBiasedSpecsWithWitness) {
  std::mt19937_64 gen(7);
  const auto spec_z = KernelSpec::rbf(1.0);
  const auto spec_u = KernelSpec::sum(KernelSpec::linear(1.0), KernelSpec::rbf(0.5));
  for (int t = 0; t < 5; ++t) {
    const auto d = sample_population(random_biased_spec(gen), 2000, 200 + static_cast<std::uint64_t>(t));
    const auto h = label_witness(spec_z, d, LabelOf::s);
    const auto [a, b] = check_calibration_chain(spec_z, spec_u, KernelSpec::rbf(1.0), d, h, 0.05);
    EXPECT_TRUE(a.holds) << a.slack;
    EXPECT_TRUE(b.holds) << b.slack;
  }
}

TEST(CalibrationChain, ScoreKernelWithoutIdentity) {
  const auto d = make_dataset(col({0, 1, 2, 3}), {0, 0, 1, 1}, {0, 1, 0, 1});
  EXPECT_EQ(kind_of([&] {
              check_calibration_chain(KernelSpec::rbf(1.0), KernelSpec::rbf(1.0), KernelSpec::rbf(1.0), d,
                                      constant_classifier(0.5), 0.05);
            }),
            ErrorKind::config);
  EXPECT_EQ(kind_of([&] {
              check_calibration_chain(KernelSpec::rbf(1.0), KernelSpec::linear(1.0), KernelSpec::linear(1.0), d,
                                      constant_classifier(0.5), 0.05);
            }),
            ErrorKind::config);
}

TEST(TvdDominance, Examples) {
  const auto same = make_dataset(col({0.5, 1.0, 0.5, 1.0}), {0, 0, 1, 1}, {0, 1, 1, 0});
  const auto r0 = check_tvd_dominance(KernelSpec::rbf(1.0), same, 1e-9);
  EXPECT_EQ(r0.lhs, 0.0);
  EXPECT_NEAR(r0.rhs, 0.0, 1e-7);

  const auto disjoint = make_dataset(col({0.0, 0.0, 1.0, 1.0}), {0, 0, 1, 1}, {0, 1, 0, 1});
  const auto r1 = check_tvd_dominance(KernelSpec::rbf(1.0), disjoint, 1e-9);
  EXPECT_DOUBLE_EQ(r1.constants.at("tvd"), 1.0);
  EXPECT_DOUBLE_EQ(r1.lhs, 2.0);
  EXPECT_NEAR(r1.rhs, std::sqrt(2 - 2 * std::exp(-0.5)), 1e-12);
  EXPECT_TRUE(r1.holds);
}

TEST(TvdDominance, RandomDiscreteInstances) {
  std::mt19937_64 gen(8);
  for (int t = 0; t < 50; ++t) {
    const auto d = discrete_dataset(gen, 2 + t % 20, 40);
    const KernelSpec spec = t % 3 == 0 ? KernelSpec::rbf(0.7) : t % 3 == 1 ? KernelSpec::laplacian(1.0, 2) : KernelSpec::linear(6.0);
    EXPECT_TRUE(check_tvd_dominance(spec, d, 1e-9).holds);
  }
}

TEST(TvdDominance, LargeSupportIsInapplicable) {
  std::mt19937_64 gen(9);
  LabeledDataset d;
  d.z = random_matrix(100, 1, gen);
  for (int i = 0; i < 100; ++i) {
    d.s.push_back(static_cast<std::uint8_t>(i % 2));
    d.y.push_back(0);
  }
  EXPECT_EQ(kind_of([&] { check_tvd_dominance(KernelSpec::rbf(1.0), d, 1e-9); }), ErrorKind::inapplicable);
}

TEST(Bounds, ReportsAreReproducible) {
  const auto d = sample_population(eo_zero_spec(0.3, 0.6), 1000, 10);
  const auto a = check_ba_bounds(KernelSpec::rbf(1.0), d, 5, 0.01, 3);
  const auto b = check_ba_bounds(KernelSpec::rbf(1.0), d, 5, 0.01, 3);
  EXPECT_EQ(a.first.lhs, b.first.lhs);
  EXPECT_EQ(a.first.rhs, b.first.rhs);
  EXPECT_EQ(a.first.inputs_digest, b.first.inputs_digest);
  EXPECT_EQ(a.first.holds, b.first.holds);
  const auto c = check_ba_bounds(KernelSpec::rbf(1.0), d, 5, 0.02, 3);
  EXPECT_NE(a.first.inputs_digest, c.first.inputs_digest);
}

TEST(Bounds, SupDpFloorGrowsWithLabelBias) {
  // Mixtures coincide at every bias level, so sup DP is driven by the bias alone.
  double prev = -1.0;
  for (int k = 0; k <= 5; ++k) {
    const double b = 0.1 * k;
    double lowest = 1e9;
    for (std::uint64_t s = 0; s < 3; ++s) {
      const auto d = sample_population(eo_zero_spec(0.5 - b / 2, 0.5 + b / 2), 4000, 300 + s);
      lowest = std::min(lowest, sup_dp(KernelSpec::rbf(1.0), d));
    }
    EXPECT_GE(lowest, prev) << "bias " << b;
    prev = lowest;
  }
}
