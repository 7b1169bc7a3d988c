#pragma once

// Bounded reproducing kernels with their sup-diagonal bound nu and the
// Lipschitz constant l of z -> k(z, z').
//
// Lipschitz constants (Euclidean norm on inputs):
//   rbf        k = exp(-r^2 / (2 sigma^2)); |dk/dr| = (r / sigma^2) exp(-r^2/(2 sigma^2))
//              peaks at r = sigma, giving l = 1 / (sigma * sqrt(e)).
//   laplacian  k = exp(-||a-b||_1 / sigma); the gradient is sign(a-b)/sigma times k,
//              whose Euclidean norm is at most sqrt(d)/sigma for inputs in R^d.
//   linear     |<a,z> - <b,z>| <= ||z|| ||a-b|| <= R ||a-b|| on the radius-R ball.
//   product    k1(a1,b1) k2(a2,b2): l <= l1 nu2 + l2 nu1, since |k_i| <= nu_i.
//   sum        k1 + k2: l = l1 + l2.

#include "eokfair/error.hpp"
#include "eokfair/linalg.hpp"

#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace eokfair {

enum class KernelFamily { rbf, laplacian, linear, product, sum };

inline std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::rbf: return "rbf";
    case KernelFamily::laplacian: return "laplacian";
    case KernelFamily::linear: return "linear";
    case KernelFamily::product: return "product";
    case KernelFamily::sum: return "sum";
  }
  return "unknown";
}

struct KernelSpec {
  KernelFamily family = KernelFamily::rbf;
  double sigma = 1.0;          // rbf, laplacian bandwidth
  double radius = 0.0;         // linear: admissible inputs satisfy ||z|| <= radius
  Eigen::Index input_dim = 1;  // laplacian: dimension entering the Lipschitz constant
  Eigen::Index split = 0;      // product: first factor reads coordinates [0, split)
  std::shared_ptr<const KernelSpec> first;
  std::shared_ptr<const KernelSpec> second;
  double nu = 1.0;
  double lipschitz = 0.0;

  static KernelSpec rbf(double sigma) {
    require(std::isfinite(sigma) && sigma > 0.0, ErrorKind::parameter, "rbf bandwidth must be positive");
    KernelSpec k;
    k.family = KernelFamily::rbf;
    k.sigma = sigma;
    k.nu = 1.0;
    k.lipschitz = 1.0 / (sigma * std::exp(0.5));
    return k;
  }

  static KernelSpec laplacian(double sigma, Eigen::Index input_dim = 1) {
    require(std::isfinite(sigma) && sigma > 0.0, ErrorKind::parameter, "laplacian bandwidth must be positive");
    require(input_dim >= 1, ErrorKind::parameter, "laplacian input_dim must be >= 1");
    KernelSpec k;
    k.family = KernelFamily::laplacian;
    k.sigma = sigma;
    k.input_dim = input_dim;
    k.nu = 1.0;
    k.lipschitz = std::sqrt(static_cast<double>(input_dim)) / sigma;
    return k;
  }

  static KernelSpec linear(double radius) {
    require(std::isfinite(radius) && radius > 0.0, ErrorKind::parameter, "linear kernel radius must be positive");
    KernelSpec k;
    k.family = KernelFamily::linear;
    k.radius = radius;
    k.nu = radius * radius;
    k.lipschitz = radius;
    return k;
  }

  static KernelSpec product(const KernelSpec& a, const KernelSpec& b, Eigen::Index split) {
    require(split >= 1, ErrorKind::parameter, "product split must be >= 1");
    KernelSpec k;
    k.family = KernelFamily::product;
    k.split = split;
    k.first = std::make_shared<const KernelSpec>(a);
    k.second = std::make_shared<const KernelSpec>(b);
    k.nu = a.nu * b.nu;
    k.lipschitz = a.lipschitz * b.nu + b.lipschitz * a.nu;
    return k;
  }

  static KernelSpec sum(const KernelSpec& a, const KernelSpec& b) {
    KernelSpec k;
    k.family = KernelFamily::sum;
    k.first = std::make_shared<const KernelSpec>(a);
    k.second = std::make_shared<const KernelSpec>(b);
    k.nu = a.nu + b.nu;
    k.lipschitz = a.lipschitz + b.lipschitz;
    return k;
  }

  bool differentiable() const { return family == KernelFamily::rbf || family == KernelFamily::linear; }
};

/// Canonical one-line description, stable across runs (used in digests and reports).
inline std::string describe(const KernelSpec& spec) {
  switch (spec.family) {
    case KernelFamily::rbf: return "rbf(sigma=" + format_real(spec.sigma) + ")";
    case KernelFamily::laplacian:
      return "laplacian(sigma=" + format_real(spec.sigma) + ",dim=" + std::to_string(spec.input_dim) + ")";
    case KernelFamily::linear: return "linear(radius=" + format_real(spec.radius) + ")";
    case KernelFamily::product:
      return "product(split=" + std::to_string(spec.split) + "," + describe(*spec.first) + "," + describe(*spec.second) + ")";
    case KernelFamily::sum: return "sum(" + describe(*spec.first) + "," + describe(*spec.second) + ")";
  }
  return "unknown";
}

inline double lipschitz_constant(const KernelSpec& spec) { return spec.lipschitz; }

namespace detail {

inline double sqdist(const double* a, const double* b, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) {
    const double t = a[k] - b[k];
    s += t * t;
  }
  return s;
}

inline double eval_raw(const KernelSpec& spec, const double* a, const double* b, Eigen::Index d) {
  switch (spec.family) {
    case KernelFamily::rbf:
      return std::exp(-sqdist(a, b, d) / (2.0 * spec.sigma * spec.sigma));
    case KernelFamily::laplacian: {
      double s = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) s += std::abs(a[k] - b[k]);
      return std::exp(-s / spec.sigma);
    }
    case KernelFamily::linear: {
      double s = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) s += a[k] * b[k];
      return s;
    }
    case KernelFamily::product:
      return eval_raw(*spec.first, a, b, spec.split) *
             eval_raw(*spec.second, a + spec.split, b + spec.split, d - spec.split);
    case KernelFamily::sum:
      return eval_raw(*spec.first, a, b, d) + eval_raw(*spec.second, a, b, d);
  }
  return 0.0;
}

inline void check_domain(const KernelSpec& spec, const double* a, Eigen::Index d) {
  switch (spec.family) {
    case KernelFamily::linear: {
      double n2 = 0.0;
      for (Eigen::Index k = 0; k < d; ++k) n2 += a[k] * a[k];
      if (!(std::sqrt(n2) <= spec.radius * (1.0 + 1e-12)))
        throw Error(ErrorKind::domain, "linear kernel input of norm " + std::to_string(std::sqrt(n2)) +
                                           " exceeds radius " + std::to_string(spec.radius));
      return;
    }
    case KernelFamily::product:
      require(d > spec.split, ErrorKind::dimension, "product kernel input shorter than split + 1");
      check_domain(*spec.first, a, spec.split);
      check_domain(*spec.second, a + spec.split, d - spec.split);
      return;
    case KernelFamily::sum:
      check_domain(*spec.first, a, d);
      check_domain(*spec.second, a, d);
      return;
    default:
      return;
  }
}

}  // namespace detail

/// Throws a domain error if any row of `m` lies outside the kernel's domain.
inline void check_domain(const KernelSpec& spec, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) detail::check_domain(spec, m.data() + i * m.cols(), m.cols());
}

inline double eval_kernel(const KernelSpec& spec, RowView a, RowView b) {
  require(a.size() == b.size(), ErrorKind::dimension, "kernel arguments differ in dimension");
  const auto d = static_cast<Eigen::Index>(a.size());
  detail::check_domain(spec, a.data(), d);
  detail::check_domain(spec, b.data(), d);
  return detail::eval_raw(spec, a.data(), b.data(), d);
}

inline double eval_kernel(const KernelSpec& spec, const Vector& a, const Vector& b) {
  return eval_kernel(spec, RowView(a.data(), static_cast<std::size_t>(a.size())),
                     RowView(b.data(), static_cast<std::size_t>(b.size())));
}

struct GramMatrix {
  Matrix values;
  KernelSpec spec;
};

/// Full materialized Gram matrix, values(i, j) = k(A_i, B_j).
inline GramMatrix gram(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
  require(A.cols() == B.cols(), ErrorKind::dimension, "gram: column dimensions differ");
  check_domain(spec, A);
  check_domain(spec, B);
  GramMatrix g{Matrix(A.rows(), B.rows()), spec};
  const Eigen::Index d = A.cols();
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    for (Eigen::Index j = 0; j < B.rows(); ++j)
      g.values(i, j) = detail::eval_raw(spec, A.data() + i * d, B.data() + j * d, d);
  return g;
}

// ---------------------------------------------------------------------------
// Streamed Gram reductions. Rows are processed in fixed blocks; each block's
// partial sum is stored and the partials are combined by pairwise summation,
// so memory stays O(block) and results are reproducible.
// ---------------------------------------------------------------------------

inline constexpr Eigen::Index kGramBlock = 128;

namespace detail {

template <class RowBlockFn>
double blocked_reduce(Eigen::Index rows, RowBlockFn&& fn) {
  std::vector<double> partials;
  partials.reserve(static_cast<std::size_t>(rows / kGramBlock + 1));
  for (Eigen::Index r0 = 0; r0 < rows; r0 += kGramBlock) partials.push_back(fn(r0, std::min(rows, r0 + kGramBlock)));
  return pairwise_sum(partials);
}

}  // namespace detail

/// Sum over all (i, j) of k(A_i, B_j).
inline double gram_sum(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
  require(A.cols() == B.cols(), ErrorKind::dimension, "gram_sum: column dimensions differ");
  check_domain(spec, A);
  check_domain(spec, B);
  const Eigen::Index d = A.cols();
  if (spec.family == KernelFamily::linear) {
    const Vector sa = A.colwise().sum().transpose();
    const Vector sb = B.colwise().sum().transpose();
    return sa.dot(sb);
  }
  return detail::blocked_reduce(A.rows(), [&](Eigen::Index r0, Eigen::Index r1) {
    double s = 0.0;
    for (Eigen::Index i = r0; i < r1; ++i) {
      const double* a = A.data() + i * d;
      double row = 0.0;
      for (Eigen::Index j = 0; j < B.rows(); ++j) row += detail::eval_raw(spec, a, B.data() + j * d, d);
      s += row;
    }
    return s;
  });
}

/// Sum over i != j of k(A_i, A_j).
inline double gram_sum_offdiag(const KernelSpec& spec, const Matrix& A) {
  check_domain(spec, A);
  const Eigen::Index d = A.cols();
  if (spec.family == KernelFamily::linear) {
    const Vector sa = A.colwise().sum().transpose();
    return sa.squaredNorm() - A.rowwise().squaredNorm().sum();
  }
  return 2.0 * detail::blocked_reduce(A.rows(), [&](Eigen::Index r0, Eigen::Index r1) {
    double s = 0.0;
    for (Eigen::Index i = r0; i < r1; ++i) {
      const double* a = A.data() + i * d;
      double row = 0.0;
      for (Eigen::Index j = i + 1; j < A.rows(); ++j) row += detail::eval_raw(spec, a, A.data() + j * d, d);
      s += row;
    }
    return s;
  });
}

/// Sum of the diagonal k(A_i, A_i).
inline double gram_trace(const KernelSpec& spec, const Matrix& A) {
  check_domain(spec, A);
  const Eigen::Index d = A.cols();
  double s = 0.0;
  for (Eigen::Index i = 0; i < A.rows(); ++i) s += detail::eval_raw(spec, A.data() + i * d, A.data() + i * d, d);
  return s;
}

/// Mean of the full Gram matrix between A and B (diagonal included when A is B).
inline double gram_mean(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
  return gram_sum(spec, A, B) / (static_cast<double>(A.rows()) * static_cast<double>(B.rows()));
}

/// out_i = sum_j coeffs_j k(Q_i, X_j): evaluation of a kernel expansion.
inline Vector kernel_apply(const KernelSpec& spec, const Matrix& Q, const Matrix& X, const Vector& coeffs) {
  require(Q.cols() == X.cols(), ErrorKind::dimension, "kernel_apply: column dimensions differ");
  require(coeffs.size() == X.rows(), ErrorKind::dimension, "kernel_apply: one coefficient per center required");
  check_domain(spec, Q);
  check_domain(spec, X);
  if (spec.family == KernelFamily::linear) return Q * (X.transpose() * coeffs);
  const Eigen::Index d = X.cols();
  Vector out(Q.rows());
  for (Eigen::Index i = 0; i < Q.rows(); ++i) {
    const double* q = Q.data() + i * d;
    double s = 0.0;
    for (Eigen::Index j = 0; j < X.rows(); ++j) s += coeffs[j] * detail::eval_raw(spec, q, X.data() + j * d, d);
    out[i] = s;
  }
  return out;
}

}  // namespace eokfair
