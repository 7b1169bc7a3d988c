#pragma once

// Test-only helpers: naive reference estimators (independent of the library's
// blocked reductions), synthetic spec builders, and small statistics.

#include "eokfair/dataset.hpp"
#include "eokfair/kernels.hpp"
#include "eokfair/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace eokfair::testing {

inline double naive_k(const KernelSpec& spec, const Matrix& A, Eigen::Index i, const Matrix& B, Eigen::Index j) {
  return eval_kernel(spec, row_view(A, i), row_view(B, j));
}

/// Double-loop U-statistic.
inline double naive_mmd2_unbiased(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
  const double n0 = static_cast<double>(A.rows()), n1 = static_cast<double>(B.rows());
  double saa = 0, sbb = 0, sab = 0;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.rows(); ++j)
      if (i != j) saa += naive_k(spec, A, i, A, j);
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j)
      if (i != j) sbb += naive_k(spec, B, i, B, j);
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j) sab += naive_k(spec, A, i, B, j);
  return saa / (n0 * (n0 - 1)) + sbb / (n1 * (n1 - 1)) - 2 * sab / (n0 * n1);
}

/// Double-loop V-statistic.
inline double naive_mmd2_biased(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
  const double n0 = static_cast<double>(A.rows()), n1 = static_cast<double>(B.rows());
  double saa = 0, sbb = 0, sab = 0;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < A.rows(); ++j) saa += naive_k(spec, A, i, A, j);
  for (Eigen::Index i = 0; i < B.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j) sbb += naive_k(spec, B, i, B, j);
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j) sab += naive_k(spec, A, i, B, j);
  return saa / (n0 * n0) + sbb / (n1 * n1) - 2 * sab / (n0 * n1);
}

inline Matrix col(std::initializer_list<double> v) {
  Matrix m(static_cast<Eigen::Index>(v.size()), 1);
  Eigen::Index i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

inline CellGaussian iso_cell(Vector mean, double var) {
  const auto d = mean.size();
  return {std::move(mean), DenseMatrix::Identity(d, d) * var};
}

/// Population with cell means supplied per (s, y), isotropic covariance var.
inline PopulationSpec make_population(double pi_s, double p1_given_s0, double p1_given_s1,
                                      const std::array<std::array<Vector, 2>, 2>& means, double var) {
  PopulationSpec p;
  p.pi_s = pi_s;
  p.p_y_given_s = {{{1 - p1_given_s0, p1_given_s0}, {1 - p1_given_s1, p1_given_s1}}};
  p.dim = means[0][0].size();
  for (int s = 0; s < 2; ++s)
    for (int y = 0; y < 2; ++y) p.cells[s][y] = iso_cell(means[s][y], var);
  return p;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline LabeledDataset make_dataset(Matrix z, std::vector<std::uint8_t> s, std::vector<std::uint8_t> y) {
  LabeledDataset d{std::move(z), std::move(s), std::move(y)};
  d.validate();
  return d;
}

struct MeanSe {
  double mean = 0;
  double se = 0;
};

inline MeanSe mean_se(const std::vector<double>& xs) {
  const double n = static_cast<double>(xs.size());
  const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double v = 0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= (n - 1);
  return {m, std::sqrt(v / n)};
}

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& gen, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = nd(gen);
  return m;
}

}  // namespace eokfair::testing
