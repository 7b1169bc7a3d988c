#pragma once

// Synthetic (Z, S, Y) populations: S ~ Bernoulli(pi_s), Y | S=s from a 2x2
// row-stochastic table, Z | (s, y) Gaussian. Provides closed-form oracles for
// linear-kernel EO_k^2 and for RBF-kernel MMD^2 between Gaussians.

#include "eokfair/dataset.hpp"
#include "eokfair/error.hpp"
#include "eokfair/linalg.hpp"
#include "eokfair/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <random>
#include <string>

namespace eokfair {

using DenseMatrix = Eigen::MatrixXd;

struct CellGaussian {
  Vector mean;
  DenseMatrix cov;

  Eigen::Index dim() const { return mean.size(); }

  void validate() const {
    require(mean.size() > 0, ErrorKind::validation, "cell mean is empty");
    require(cov.rows() == mean.size() && cov.cols() == mean.size(), ErrorKind::validation,
            "cell covariance must be d x d with d = dim(mean)");
    require(cov.allFinite() && mean.allFinite(), ErrorKind::validation, "cell parameters must be finite");
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    require((cov - cov.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale, ErrorKind::validation,
            "cell covariance is not symmetric");
    Eigen::LLT<DenseMatrix> llt(cov);
    require(llt.info() == Eigen::Success, ErrorKind::validation, "cell covariance is not positive definite");
  }
};

struct PopulationSpec {
  double pi_s = 0.5;
  std::array<std::array<double, 2>, 2> p_y_given_s{{{0.5, 0.5}, {0.5, 0.5}}};
  std::array<std::array<CellGaussian, 2>, 2> cells;  // cells[s][y]
  Eigen::Index dim = 1;

  void validate() const {
    require(dim >= 1, ErrorKind::validation, "dim must be a positive integer");
    require(pi_s > 0.0 && pi_s < 1.0, ErrorKind::validation, "pi_s must lie in (0, 1)");
    for (int s = 0; s < 2; ++s) {
      const auto& row = p_y_given_s[static_cast<std::size_t>(s)];
      require(row[0] >= 0.0 && row[1] >= 0.0, ErrorKind::validation,
              "p_y_given_s[" + std::to_string(s) + "] has a negative entry");
      require(std::abs(row[0] + row[1] - 1.0) <= 1e-12, ErrorKind::validation,
              "p_y_given_s[" + std::to_string(s) + "] does not sum to 1");
      for (int y = 0; y < 2; ++y) {
        const auto& cell = cells[static_cast<std::size_t>(s)][static_cast<std::size_t>(y)];
        try {
          cell.validate();
        } catch (const Error& e) {
          throw Error(ErrorKind::validation,
                      "cells." + std::to_string(s) + std::to_string(y) + ": " + std::string(e.what()));
        }
        require(cell.dim() == dim, ErrorKind::validation,
                "cells." + std::to_string(s) + std::to_string(y) + " dimension differs from dim");
      }
    }
  }

  const CellGaussian& cell(int s, int y) const { return cells[static_cast<std::size_t>(s)][static_cast<std::size_t>(y)]; }
  double p(int y, int s) const { return p_y_given_s[static_cast<std::size_t>(s)][static_cast<std::size_t>(y)]; }
};

/// Draws n i.i.d. rows. The same (spec, n, seed) always yields the same bytes.
inline LabeledDataset sample_population(const PopulationSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  require(n >= 4, ErrorKind::size, "sample_population needs n >= 4");
  std::array<std::array<DenseMatrix, 2>, 2> chol;
  for (int s = 0; s < 2; ++s)
    for (int y = 0; y < 2; ++y) chol[s][y] = Eigen::LLT<DenseMatrix>(spec.cell(s, y).cov).matrixL();

  CounterRng label_rng(seed, 1);
  CounterRng noise_rng(seed, 2);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  LabeledDataset data;
  data.z.resize(static_cast<Eigen::Index>(n), spec.dim);
  data.s.resize(n);
  data.y.resize(n);
  Vector eps(spec.dim);
  for (std::size_t i = 0; i < n; ++i) {
    const int s = unif(label_rng) < spec.pi_s ? 1 : 0;
    const int y = unif(label_rng) < spec.p(1, s) ? 1 : 0;
    for (Eigen::Index k = 0; k < spec.dim; ++k) eps[k] = normal(noise_rng);
    data.z.row(static_cast<Eigen::Index>(i)) = (spec.cell(s, y).mean + chol[s][y] * eps).transpose();
    data.s[i] = static_cast<std::uint8_t>(s);
    data.y[i] = static_cast<std::uint8_t>(y);
  }
  return data;
}

/// Mean of the S=s mixture reweighted by p_{y|0}: p_{0|0} m_{s,0} + p_{1|0} m_{s,1}.
inline Vector reweighted_mixture_mean(const PopulationSpec& spec, int s) {
  return spec.p(0, 0) * spec.cell(s, 0).mean + spec.p(1, 0) * spec.cell(s, 1).mean;
}

/// Population EO_k^2 under the linear kernel: squared distance of the two
/// reweighted mixture means.
inline double analytic_eok2_linear(const PopulationSpec& spec) {
  spec.validate();
  return (reweighted_mixture_mean(spec, 0) - reweighted_mixture_mean(spec, 1)).squaredNorm();
}

namespace detail {

// E exp(-||X - Y||^2 / (2 sigma^2)) with X - Y ~ N(delta, C):
//   det(I + C / sigma^2)^{-1/2} exp(-1/2 delta^T (C + sigma^2 I)^{-1} delta)
inline double expected_rbf(const Vector& delta, const DenseMatrix& C, double sigma) {
  const Eigen::Index d = delta.size();
  const double s2 = sigma * sigma;
  const DenseMatrix I = DenseMatrix::Identity(d, d);
  Eigen::LDLT<DenseMatrix> shifted(C + s2 * I);
  const double quad = delta.dot(shifted.solve(delta));
  Eigen::LLT<DenseMatrix> scaled(I + C / s2);
  double logdet = 0.0;
  for (Eigen::Index k = 0; k < d; ++k) logdet += 2.0 * std::log(DenseMatrix(scaled.matrixL())(k, k));
  return std::exp(-0.5 * logdet - 0.5 * quad);
}

}  // namespace detail

/// Closed-form MMD^2 between two Gaussian laws under the RBF kernel.
inline double analytic_mmd2_rbf_gaussians(const CellGaussian& g1, const CellGaussian& g2, double sigma) {
  require(std::isfinite(sigma) && sigma > 0.0, ErrorKind::parameter, "sigma must be positive");
  g1.validate();
  g2.validate();
  require(g1.dim() == g2.dim(), ErrorKind::dimension, "Gaussians differ in dimension");
  const Vector zero = Vector::Zero(g1.dim());
  const double kxx = detail::expected_rbf(zero, 2.0 * g1.cov, sigma);
  const double kyy = detail::expected_rbf(zero, 2.0 * g2.cov, sigma);
  const double kxy = detail::expected_rbf(g1.mean - g2.mean, g1.cov + g2.cov, sigma);
  return std::max(0.0, kxx + kyy - 2.0 * kxy);
}

}  // namespace eokfair
