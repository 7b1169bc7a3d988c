#pragma once

// Maximum mean discrepancy estimators: quadratic-time U- and V-statistics,
// the paired linear-time estimator, and the empirical witness function.

#include "eokfair/error.hpp"
#include "eokfair/kernels.hpp"
#include "eokfair/linalg.hpp"
#include "eokfair/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

namespace eokfair {

enum class MmdVariant { unbiased, biased, linear_time };

inline std::string to_string(MmdVariant v) {
  switch (v) {
    case MmdVariant::unbiased: return "unbiased";
    case MmdVariant::biased: return "biased";
    case MmdVariant::linear_time: return "linear_time";
  }
  return "unknown";
}

struct MmdEstimate {
  double mmd2 = 0.0;  // may be negative for unbiased and linear_time
  double mmd = 0.0;   // sqrt(max(mmd2, 0))
  MmdVariant variant = MmdVariant::unbiased;
  std::size_t n0 = 0;
  std::size_t n1 = 0;
  bool clipped = false;

  static MmdEstimate make(double mmd2, MmdVariant variant, std::size_t n0, std::size_t n1) {
    return {mmd2, std::sqrt(std::max(mmd2, 0.0)), variant, n0, n1, mmd2 < 0.0};
  }
};

inline MmdEstimate mmd2_unbiased(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
  require(A.rows() >= 2 && B.rows() >= 2, ErrorKind::size, "unbiased MMD needs at least 2 samples per group");
  require(A.cols() == B.cols(), ErrorKind::dimension, "sample dimensions differ");
  const double n0 = static_cast<double>(A.rows());
  const double n1 = static_cast<double>(B.rows());
  const double v = gram_sum_offdiag(spec, A) / (n0 * (n0 - 1.0)) + gram_sum_offdiag(spec, B) / (n1 * (n1 - 1.0)) -
                   2.0 * gram_sum(spec, A, B) / (n0 * n1);
  return MmdEstimate::make(v, MmdVariant::unbiased, static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(B.rows()));
}

inline MmdEstimate mmd2_biased(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
  require(A.rows() >= 1 && B.rows() >= 1, ErrorKind::size, "biased MMD needs non-empty groups");
  require(A.cols() == B.cols(), ErrorKind::dimension, "sample dimensions differ");
  const double n0 = static_cast<double>(A.rows());
  const double n1 = static_cast<double>(B.rows());
  const double within_a = (gram_sum_offdiag(spec, A) + gram_trace(spec, A)) / (n0 * n0);
  const double within_b = (gram_sum_offdiag(spec, B) + gram_trace(spec, B)) / (n1 * n1);
  const double v = within_a + within_b - 2.0 * gram_sum(spec, A, B) / (n0 * n1);
  return MmdEstimate::make(v, MmdVariant::biased, static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(B.rows()));
}

/// Linear-time estimator: both groups are shuffled with `seed`, truncated to
/// a common even length m, and h((a,b),(a',b')) = k(a,a') + k(b,b') - k(a,b')
/// - k(a',b) is averaged over the m/2 disjoint consecutive pairs.
inline MmdEstimate mmd2_linear_time(const KernelSpec& spec, const Matrix& A, const Matrix& B, std::uint64_t seed) {
  require(std::min(A.rows(), B.rows()) >= 4, ErrorKind::size, "linear-time MMD needs at least 4 samples per group");
  require(A.cols() == B.cols(), ErrorKind::dimension, "sample dimensions differ");
  check_domain(spec, A);
  check_domain(spec, B);
  auto shuffled = [](Eigen::Index n, CounterRng rng) {
    std::vector<std::size_t> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::shuffle(idx.begin(), idx.end(), rng);
    return idx;
  };
  CounterRng rng(seed, 11);
  const auto ia = shuffled(A.rows(), rng.split(0));
  const auto ib = shuffled(B.rows(), rng.split(1));
  const std::size_t m = static_cast<std::size_t>(std::min(A.rows(), B.rows())) & ~std::size_t{1};
  const Eigen::Index d = A.cols();
  auto a = [&](std::size_t i) { return A.data() + static_cast<Eigen::Index>(ia[i]) * d; };
  auto b = [&](std::size_t i) { return B.data() + static_cast<Eigen::Index>(ib[i]) * d; };
  std::vector<double> h(m / 2);
  for (std::size_t p = 0; p < m / 2; ++p) {
    const std::size_t i = 2 * p, j = 2 * p + 1;
    h[p] = detail::eval_raw(spec, a(i), a(j), d) + detail::eval_raw(spec, b(i), b(j), d) -
           detail::eval_raw(spec, a(i), b(j), d) - detail::eval_raw(spec, a(j), b(i), d);
  }
  const double v = pairwise_sum(h) / static_cast<double>(h.size());
  return MmdEstimate::make(v, MmdVariant::linear_time, static_cast<std::size_t>(A.rows()), static_cast<std::size_t>(B.rows()));
}

/// Coefficients c such that sum_j c_j k(., X_j), X = [A; B], is the unit-norm
/// witness (mu_A - mu_B) / ||mu_A - mu_B|| of the empirical embeddings.
struct Witness {
  Matrix centers;
  Vector coeffs;
  double norm = 0.0;  // ||mu_A - mu_B||_H = sqrt(biased mmd2)
};

inline Witness make_witness(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
  const MmdEstimate est = mmd2_biased(spec, A, B);
  require(est.mmd2 > 1e-12, ErrorKind::normalization, "witness undefined: empirical embeddings coincide");
  Witness w;
  w.norm = std::sqrt(est.mmd2);
  w.centers.resize(A.rows() + B.rows(), A.cols());
  w.centers << A, B;
  w.coeffs.resize(w.centers.rows());
  w.coeffs.head(A.rows()).setConstant(1.0 / (static_cast<double>(A.rows()) * w.norm));
  w.coeffs.tail(B.rows()).setConstant(-1.0 / (static_cast<double>(B.rows()) * w.norm));
  return w;
}

inline Vector witness_eval(const KernelSpec& spec, const Witness& w, const Matrix& queries) {
  return kernel_apply(spec, queries, w.centers, w.coeffs);
}

/// [mean_i k(q, a_i) - mean_j k(q, b_j)] / sqrt(biased mmd2).
inline double witness_eval(const KernelSpec& spec, const Matrix& A, const Matrix& B, const Vector& query) {
  require(query.size() == A.cols(), ErrorKind::dimension, "query dimension differs from samples");
  const Witness w = make_witness(spec, A, B);
  Matrix q = query.transpose();
  return witness_eval(spec, w, q)[0];
}

}  // namespace eokfair
