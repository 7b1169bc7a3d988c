#pragma once

// Gaussian complexity of encoder images, the feed-forward network bound, the
// uniform MMD deviation bound, and an empirical concentration harness.

#include "eokfair/eok.hpp"
#include "eokfair/kernels.hpp"
#include "eokfair/rng.hpp"
#include "eokfair/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace eokfair {

/// Feed-forward network family: depth iota, ||W^(k)||_{1,inf} <= omega,
/// activation tanh(lambda_act * t) (lambda_act-Lipschitz), widths d_0..d_iota with d_iota = 1.
struct FnnSpec {
  int depth = 1;
  double omega = 1.0;
  double lambda_act = 1.0;
  std::vector<Eigen::Index> widths;

  void validate() const {
    require(depth >= 1, ErrorKind::validation, "fnn depth must be >= 1");
    require(omega > 0.0, ErrorKind::validation, "fnn omega must be positive");
    require(lambda_act > 0.0, ErrorKind::validation, "fnn lambda_act must be positive");
    require(widths.empty() || widths.size() == static_cast<std::size_t>(depth) + 1, ErrorKind::validation,
            "fnn widths must list d_0..d_depth");
    for (auto w : widths) require(w >= 1, ErrorKind::validation, "fnn widths must be positive");
    require(widths.empty() || widths.back() == 1, ErrorKind::validation, "fnn output width must be 1");
  }
};

enum class EncoderKind { finite_grid, fnn_spec };

struct EncoderFamily {
  EncoderKind kind = EncoderKind::finite_grid;
  std::vector<Matrix> grid;  // linear maps W (d_out x d_in), Z = X W^T
  FnnSpec fnn;

  void validate() const {
    if (kind == EncoderKind::finite_grid) {
      require(!grid.empty(), ErrorKind::validation, "encoder grid is empty");
      for (const auto& W : grid)
        require(W.rows() == grid.front().rows() && W.cols() == grid.front().cols(), ErrorKind::dimension,
                "encoder grid maps must share one shape");
    } else {
      fnn.validate();
    }
  }
};

enum class ComplexityMethod { monte_carlo, fnn_closed_form };

inline std::string to_string(ComplexityMethod m) {
  return m == ComplexityMethod::monte_carlo ? "monte_carlo" : "fnn_closed_form";
}

struct ComplexityEstimate {
  double value = 0.0;
  ComplexityMethod method = ComplexityMethod::monte_carlo;
  std::size_t trials = 0;
  double std_error = 0.0;
};

inline constexpr std::size_t kMinComplexityTrials = 100;

/// Stacked images f(X) of every grid member, one row per member.
inline Matrix grid_images(const EncoderFamily& family, const Matrix& X) {
  family.validate();
  require(family.kind == EncoderKind::finite_grid, ErrorKind::unsupported, "image stacking needs a finite grid");
  require(X.rows() > 0, ErrorKind::size, "sample matrix is empty");
  require(family.grid.front().cols() == X.cols(), ErrorKind::dimension, "encoder input dimension differs from X");
  const Eigen::Index width = X.rows() * family.grid.front().rows();
  Matrix images(static_cast<Eigen::Index>(family.grid.size()), width);
  for (std::size_t g = 0; g < family.grid.size(); ++g) {
    const Matrix Z = X * family.grid[g].transpose();  // row-major: row i holds W x_i
    images.row(static_cast<Eigen::Index>(g)) = Eigen::Map<const Eigen::RowVectorXd>(Z.data(), width);
  }
  return images;
}

/// Individual draws of sup_f <xi, f(X)>, xi standard normal over all coordinates.
inline std::vector<double> gaussian_sup_draws(const Matrix& images, std::size_t trials, std::uint64_t seed) {
  require(images.rows() > 0 && images.cols() > 0, ErrorKind::validation, "image set is empty");
  const CounterRng root(seed, 300);
  std::vector<double> out(trials);
  Vector xi(images.cols());
  for (std::size_t t = 0; t < trials; ++t) {
    CounterRng rng = root.split(t);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& v : xi) v = normal(rng);
    out[t] = (images * xi).maxCoeff();
  }
  return out;
}

/// Monte-Carlo Gaussian complexity of a finite image set.
inline ComplexityEstimate gaussian_complexity_mc(const Matrix& images, std::size_t trials, std::uint64_t seed) {
  require(trials >= kMinComplexityTrials, ErrorKind::parameter,
          "gaussian complexity needs at least " + std::to_string(kMinComplexityTrials) + " trials");
  const auto draws = gaussian_sup_draws(images, trials, seed);
  const double n = static_cast<double>(trials);
  const double mean = pairwise_sum(draws) / n;
  double var = 0.0;
  for (double d : draws) var += (d - mean) * (d - mean);
  var /= n - 1.0;
  return {mean, ComplexityMethod::monte_carlo, trials, std::sqrt(var / n)};
}

inline ComplexityEstimate gaussian_complexity_mc(const EncoderFamily& family, const Matrix& X, std::size_t trials,
                                                 std::uint64_t seed) {
  return gaussian_complexity_mc(grid_images(family, X), trials, seed);
}

/// Largest Euclidean distance between two images.
inline double image_diameter(const Matrix& images) {
  double best = 0.0;
  for (Eigen::Index a = 0; a < images.rows(); ++a)
    for (Eigen::Index b = a + 1; b < images.rows(); ++b) best = std::max(best, (images.row(a) - images.row(b)).norm());
  return best;
}

/// Closed-form bound (2 omega)^iota lambda^(iota-1) sqrt(2 log(2 d_0)) max_k ||X_{.,k}||.
inline double fnn_complexity_bound(const FnnSpec& fnn, const Matrix& X) {
  fnn.validate();
  require(X.rows() > 0 && X.cols() > 0, ErrorKind::size, "sample matrix is empty");
  require(fnn.widths.empty() || fnn.widths.front() == X.cols(), ErrorKind::dimension,
          "fnn input width differs from X");
  const double d0 = static_cast<double>(X.cols());
  const double col_norm = X.colwise().norm().maxCoeff();
  return std::pow(2.0 * fnn.omega, fnn.depth) * std::pow(fnn.lambda_act, fnn.depth - 1) *
         std::sqrt(2.0 * std::log(2.0 * d0)) * col_norm;
}

inline ComplexityEstimate fnn_complexity_estimate(const FnnSpec& fnn, const Matrix& X) {
  return {fnn_complexity_bound(fnn, X), ComplexityMethod::fnn_closed_form, 0, 0.0};
}

/// One network of the family; layer k is a (widths[k+1] x widths[k]) matrix.
struct Network {
  std::vector<Matrix> layers;
  double lambda_act = 1.0;
};

/// Random member: Gaussian entries, each row rescaled to an L1 norm drawn
/// uniformly from (0, omega].
inline Network random_network(const FnnSpec& fnn, CounterRng& rng) {
  fnn.validate();
  require(!fnn.widths.empty(), ErrorKind::validation, "random networks need explicit widths");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Network net;
  net.lambda_act = fnn.lambda_act;
  for (int k = 0; k < fnn.depth; ++k) {
    Matrix W(fnn.widths[static_cast<std::size_t>(k) + 1], fnn.widths[static_cast<std::size_t>(k)]);
    for (Eigen::Index r = 0; r < W.rows(); ++r) {
      for (Eigen::Index c = 0; c < W.cols(); ++c) W(r, c) = normal(rng);
      const double l1 = W.row(r).lpNorm<1>();
      W.row(r) *= fnn.omega * (1.0 - unif(rng)) / std::max(l1, 1e-300);
    }
    net.layers.push_back(std::move(W));
  }
  return net;
}

/// f(x) for every row of X: tanh(lambda *) activations between linear layers.
inline Vector network_apply(const Network& net, const Matrix& X) {
  Matrix H = X;
  for (std::size_t k = 0; k < net.layers.size(); ++k) {
    H = H * net.layers[k].transpose();
    if (k + 1 < net.layers.size()) H = (H.array() * net.lambda_act).tanh().matrix();
  }
  require(H.cols() == 1, ErrorKind::dimension, "network output width must be 1");
  return H.col(0);
}

/// 8 nu max(1/rho) sqrt(log(2/delta)/n) + (2 sqrt(2 pi) l / n) max((1 + 1/rho)/rho) g_mean.
inline double deviation_bound(std::size_t n, double rho0, double rho1, double nu, double l, double delta,
                              double g_mean) {
  require(rho0 > 0.0 && rho0 < 1.0 && rho1 > 0.0 && rho1 < 1.0, ErrorKind::parameter, "rho0, rho1 must lie in (0, 1)");
  require(std::abs(rho0 + rho1 - 1.0) <= 1e-12, ErrorKind::parameter, "rho0 + rho1 must equal 1");
  require(delta > 0.0 && delta < 1.0, ErrorKind::parameter, "delta must lie in (0, 1)");
  require(n >= 2, ErrorKind::parameter, "n must be >= 2");
  require(nu > 0.0 && l >= 0.0 && g_mean >= 0.0, ErrorKind::parameter, "nu > 0, l >= 0 and g_mean >= 0 required");
  const double nd = static_cast<double>(n);
  const double inv = std::max(1.0 / rho0, 1.0 / rho1);
  const double mix = std::max((1.0 + 1.0 / rho0) / rho0, (1.0 + 1.0 / rho1) / rho1);
  return 8.0 * nu * inv * std::sqrt(std::log(2.0 / delta) / nd) +
         (2.0 * std::sqrt(2.0 * std::numbers::pi) * l / nd) * mix * g_mean;
}

struct ConcentrationRow {
  std::size_t n = 0;
  double mean_dev = 0.0;
  double quantile_dev = 0.0;
  double bound = 0.0;
  double g_mean = 0.0;
  double g_std_error = 0.0;
};

struct ConcentrationReport {
  std::vector<ConcentrationRow> rows;
  double slope = 0.0;  // least-squares slope of log mean_dev against log n
  bool within_bound = true;
  double delta = 0.05;
  std::size_t trials = 0;
};

/// Empirical (1 - delta)-quantile, using the ceil((1 - delta) m)-th order statistic.
inline double upper_quantile(std::vector<double> xs, double delta) {
  require(!xs.empty(), ErrorKind::size, "quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const auto m = static_cast<double>(xs.size());
  const auto k = static_cast<std::size_t>(std::ceil((1.0 - delta) * m));
  return xs[std::clamp<std::size_t>(k, 1, xs.size()) - 1];
}

inline double loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::size, "slope fit needs at least two points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0, ErrorKind::domain, "log-log fit needs positive values");
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

/// For each n: `trials` datasets, each giving sup over the grid of
/// |plugin EO_k^2(X W^T) - EO_k^2 under W|, with the linear-kernel truth
/// ||W (mixture mean difference)||^2.
inline ConcentrationReport concentration_check(const EncoderFamily& family, const KernelSpec& spec,
                                               const PopulationSpec& population, const std::vector<std::size_t>& n_grid,
                                               std::size_t trials, double delta, std::uint64_t seed,
                                               std::size_t complexity_trials = kMinComplexityTrials) {
  family.validate();
  population.validate();
  require(family.kind == EncoderKind::finite_grid, ErrorKind::unsupported, "concentration check needs a finite grid");
  require(spec.family == KernelFamily::linear, ErrorKind::unsupported,
          "concentration check needs the linear kernel (analytic truth)");
  require(!n_grid.empty() && trials >= 2, ErrorKind::parameter, "need a nonempty n grid and at least 2 trials");
  require(delta > 0.0 && delta < 1.0, ErrorKind::parameter, "delta must lie in (0, 1)");
  require(family.grid.front().cols() == population.dim, ErrorKind::dimension,
          "encoder input dimension differs from population dim");

  const Vector diff = reweighted_mixture_mean(population, 0) - reweighted_mixture_mean(population, 1);
  std::vector<double> truth;
  for (const auto& W : family.grid) truth.push_back((W * diff).squaredNorm());

  ConcentrationReport report;
  report.delta = delta;
  report.trials = trials;
  std::vector<double> ns, means;
  for (std::size_t ni = 0; ni < n_grid.size(); ++ni) {
    const std::size_t n = n_grid[ni];
    std::vector<double> devs(trials);
    Matrix first_x;
    for (std::size_t t = 0; t < trials; ++t) {
      const std::uint64_t data_seed = splitmix64(seed ^ splitmix64(0x5EED0000ULL + ni * 1000003ULL + t));
      LabeledDataset data = sample_population(population, n, data_seed);
      if (t == 0) first_x = data.z;
      const MixtureWeights w = empirical_weights(data);
      double worst = 0.0;
      LabeledDataset encoded = data;
      for (std::size_t g = 0; g < family.grid.size(); ++g) {
        encoded.z = data.z * family.grid[g].transpose();
        worst = std::max(worst, std::abs(eok_hat_plugin(spec, encoded, w).eok2 - truth[g]));
      }
      devs[t] = worst;
    }
    ConcentrationRow row;
    row.n = n;
    row.mean_dev = pairwise_sum(devs) / static_cast<double>(trials);
    row.quantile_dev = upper_quantile(devs, delta);
    const ComplexityEstimate g = gaussian_complexity_mc(family, first_x, complexity_trials, seed + ni);
    row.g_mean = g.value;
    row.g_std_error = g.std_error;
    row.bound = deviation_bound(n, 1.0 - population.pi_s, population.pi_s, spec.nu, spec.lipschitz, delta,
                                std::max(g.value, 0.0));
    report.within_bound = report.within_bound && row.quantile_dev <= row.bound;
    ns.push_back(static_cast<double>(n));
    means.push_back(row.mean_dev);
    report.rows.push_back(row);
  }
  report.slope = n_grid.size() >= 2 ? loglog_fit(ns, means) : 0.0;
  return report;
}

}  // namespace eokfair
