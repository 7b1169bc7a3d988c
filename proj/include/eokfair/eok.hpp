#pragma once

// EO_k: the MMD between the two S-groups after reweighting each group's
// Y-conditional laws by the S=0 label proportions,
//   Zbar^(s) = p_{0|0} Z_s^0 + p_{1|0} Z_s^1,   EO_k = gamma_k(Zbar^(0), Zbar^(1)).
// Both groups use p_{.|0}; relabeling S -> 1 - S therefore changes the value
// whenever p_{.|0} != p_{.|1}.

#include "eokfair/dataset.hpp"
#include "eokfair/error.hpp"
#include "eokfair/fairness.hpp"
#include "eokfair/kernels.hpp"
#include "eokfair/mmd.hpp"
#include "eokfair/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <string>

namespace eokfair {

/// Mixture weights (p_{0|0}, p_{1|0}).
struct MixtureWeights {
  double w0 = 0.5;
  double w1 = 0.5;

  void validate() const {
    require(w0 >= 0.0 && w1 >= 0.0 && std::abs(w0 + w1 - 1.0) <= 1e-12, ErrorKind::validation,
            "mixture weights must be nonnegative and sum to 1");
  }
};

enum class WeightsSource { empirical, spec_given };
enum class EokMethod { bootstrap, plugin };

inline std::string to_string(WeightsSource w) { return w == WeightsSource::empirical ? "empirical" : "spec-given"; }
inline std::string to_string(EokMethod m) { return m == EokMethod::bootstrap ? "bootstrap" : "plugin"; }

inline MixtureWeights empirical_weights(const LabeledDataset& data) {
  const GroupStats g = group_stats(data);
  return {g.p(0, 0), g.p(1, 0)};
}

struct ReweightedSample {
  Matrix group0;
  Matrix group1;
  MixtureWeights weights;
  std::uint64_t seed = 0;
  std::array<std::array<std::size_t, 2>, 2> draws_per_cell{};  // draws_per_cell[s][y]
};

struct EokEstimate {
  double eok2 = 0.0;
  double eok = 0.0;
  EokMethod method = EokMethod::plugin;
  WeightsSource weights_source = WeightsSource::empirical;
  std::size_t n0 = 0;
  std::size_t n1 = 0;
};

namespace detail {

/// Cell rows sorted lexicographically by z, so resampling does not depend on
/// the input row order.
inline CellIndex canonical_cells(const LabeledDataset& data) {
  CellIndex cells = cell_index(data);
  const Eigen::Index d = data.dim();
  for (auto& row : cells)
    for (auto& idx : row)
      std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        const double* za = data.z.data() + static_cast<Eigen::Index>(a) * d;
        const double* zb = data.z.data() + static_cast<Eigen::Index>(b) * d;
        return std::lexicographical_compare(za, za + d, zb, zb + d);
      });
  return cells;
}

inline EokEstimate make_estimate(double eok2, EokMethod m, WeightsSource w, std::size_t n0, std::size_t n1) {
  return {eok2, std::sqrt(std::max(eok2, 0.0)), m, w, n0, n1};
}

}  // namespace detail

/// Stratified bootstrap: each of the m_s draws for group s picks y with
/// probability (w0, w1), then a row uniformly with replacement from cell (s, y).
inline ReweightedSample reweight_sample(const LabeledDataset& data, std::size_t m0, std::size_t m1, std::uint64_t seed,
                                        std::optional<MixtureWeights> weights = {}) {
  data.validate();
  const CellIndex cells = detail::canonical_cells(data);
  require_all_cells(cells);
  require(m0 >= 2 && m1 >= 2, ErrorKind::size, "reweight_sample needs m0, m1 >= 2");
  const MixtureWeights w = weights.value_or(empirical_weights(data));
  w.validate();

  ReweightedSample out;
  out.weights = w;
  out.seed = seed;
  const std::array<std::size_t, 2> m{m0, m1};
  std::array<Matrix*, 2> dst{&out.group0, &out.group1};
  for (int s = 0; s < 2; ++s) {
    CounterRng rng(seed, 100 + static_cast<std::uint64_t>(s));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Matrix& g = *dst[static_cast<std::size_t>(s)];
    g.resize(static_cast<Eigen::Index>(m[static_cast<std::size_t>(s)]), data.dim());
    for (std::size_t i = 0; i < m[static_cast<std::size_t>(s)]; ++i) {
      const int y = unif(rng) < w.w0 ? 0 : 1;
      const auto& cell = cells[static_cast<std::size_t>(s)][static_cast<std::size_t>(y)];
      std::uniform_int_distribution<std::size_t> pick(0, cell.size() - 1);
      g.row(static_cast<Eigen::Index>(i)) = data.z.row(static_cast<Eigen::Index>(cell[pick(rng)]));
      ++out.draws_per_cell[static_cast<std::size_t>(s)][static_cast<std::size_t>(y)];
    }
  }
  return out;
}

/// U-statistic EO_k^2 on a stratified bootstrap of the reweighted mixtures.
/// m0 = m1 = 0 selects the per-group counts n_s.
inline EokEstimate eok_hat_bootstrap(const KernelSpec& spec, const LabeledDataset& data, std::size_t m0, std::size_t m1,
                                     std::uint64_t seed, std::optional<MixtureWeights> weights = {}) {
  if (m0 == 0 || m1 == 0) {
    const GroupStats g = group_stats(data);
    if (m0 == 0) m0 = g.counts[0][0] + g.counts[0][1];
    if (m1 == 0) m1 = g.counts[1][0] + g.counts[1][1];
  }
  const ReweightedSample r = reweight_sample(data, m0, m1, seed, weights);
  const MmdEstimate est = mmd2_unbiased(spec, r.group0, r.group1);
  return detail::make_estimate(est.mmd2, EokMethod::bootstrap,
                               weights ? WeightsSource::spec_given : WeightsSource::empirical, m0, m1);
}

/// Gram means <mu_a, mu_b> for the four cells ordered (0,0), (0,1), (1,0), (1,1).
using CellGramMeans = Eigen::Matrix4d;

/// Cell rows in canonical order, so downstream sums do not depend on row order.
inline std::array<Matrix, 4> cell_matrices(const LabeledDataset& data) {
  const CellIndex cells = detail::canonical_cells(data);
  require_all_cells(cells);
  return {select_rows(data.z, cells[0][0]), select_rows(data.z, cells[0][1]), select_rows(data.z, cells[1][0]),
          select_rows(data.z, cells[1][1])};
}

inline CellGramMeans cell_gram_means(const KernelSpec& spec, const std::array<Matrix, 4>& cells) {
  CellGramMeans M;
  for (int a = 0; a < 4; ++a)
    for (int b = a; b < 4; ++b) {
      const auto& A = cells[static_cast<std::size_t>(a)];
      const auto& B = cells[static_cast<std::size_t>(b)];
      const double nn = static_cast<double>(A.rows()) * static_cast<double>(B.rows());
      M(a, b) = a == b ? (gram_sum_offdiag(spec, A) + gram_trace(spec, A)) / nn : gram_sum(spec, A, B) / nn;
      M(b, a) = M(a, b);
    }
  return M;
}

/// ||mu_bar_0 - mu_bar_1||^2 from the cell Gram means, mu_bar_s = w0 mu_s^0 + w1 mu_s^1.
inline double plugin_eok2(const CellGramMeans& M, const MixtureWeights& w) {
  const Eigen::Vector4d v(w.w0, w.w1, -w.w0, -w.w1);
  return v.dot(M * v);
}

/// Weighted V-statistic on the empirical embeddings; no resampling noise.
inline EokEstimate eok_hat_plugin(const KernelSpec& spec, const LabeledDataset& data,
                                  std::optional<MixtureWeights> weights = {}) {
  data.validate();
  const auto cells = cell_matrices(data);
  const MixtureWeights w = weights.value_or(empirical_weights(data));
  w.validate();
  const double v = plugin_eok2(cell_gram_means(spec, cells), w);
  return detail::make_estimate(v, EokMethod::plugin, weights ? WeightsSource::spec_given : WeightsSource::empirical,
                               static_cast<std::size_t>(cells[0].rows() + cells[1].rows()),
                               static_cast<std::size_t>(cells[2].rows() + cells[3].rows()));
}

// ---------------------------------------------------------------------------
// Gradient of the plugin statistic through a linear encoder Z = X W^T.
// ---------------------------------------------------------------------------

/// Per-row signed weights c_i with eok2 = sum_ij c_i c_j k(z_i, z_j):
/// c_i = +w_y / n_{0,y} for S=0 rows and -w_y / n_{1,y} for S=1 rows.
inline Vector plugin_row_weights(const LabeledDataset& data, const MixtureWeights& w) {
  const GroupStats g = group_stats(data);
  Vector c(static_cast<Eigen::Index>(data.size()));
  const std::array<double, 2> wy{w.w0, w.w1};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto s = data.s[i], y = data.y[i];
    require(g.counts[s][y] > 0, ErrorKind::empty_cell, "empty cell");
    c[static_cast<Eigen::Index>(i)] = (s == 0 ? 1.0 : -1.0) * wy[y] / static_cast<double>(g.counts[s][y]);
  }
  return c;
}

struct PluginValueGrad {
  double value = 0.0;
  Matrix grad_z;  // d value / d z_i, one row per sample
};

/// Value and per-row gradient of sum_ij c_i c_j k(z_i, z_j) with respect to Z.
inline PluginValueGrad plugin_value_grad_z(const KernelSpec& spec, const Matrix& Z, const Vector& c) {
  require(spec.differentiable(), ErrorKind::unsupported,
          "gradient not available for the " + to_string(spec.family) + " kernel");
  check_domain(spec, Z);
  const Eigen::Index n = Z.rows(), d = Z.cols();
  PluginValueGrad out;
  out.grad_z.resize(n, d);
  if (spec.family == KernelFamily::linear) {
    const Eigen::RowVectorXd m = c.transpose() * Z;  // mu_bar_0 - mu_bar_1
    out.value = m.squaredNorm();
    for (Eigen::Index i = 0; i < n; ++i) out.grad_z.row(i) = 2.0 * c[i] * m;
    return out;
  }
  const double inv_s2 = 1.0 / (spec.sigma * spec.sigma);
  std::vector<double> partial(static_cast<std::size_t>(n));
  Eigen::RowVectorXd acc(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double* zi = Z.data() + i * d;
    double ksum = 0.0;
    acc.setZero();
    for (Eigen::Index j = 0; j < n; ++j) {
      const double kij = c[j] * detail::eval_raw(spec, zi, Z.data() + j * d, d);
      ksum += kij;
      acc += kij * Z.row(j);
    }
    partial[static_cast<std::size_t>(i)] = c[i] * ksum;
    out.grad_z.row(i) = -2.0 * inv_s2 * c[i] * (ksum * Z.row(i) - acc);
  }
  out.value = pairwise_sum(partial);
  return out;
}

/// d eok2_plugin / d W for Z = X W^T, where X = data.z and W is (d_out x d_in).
inline Matrix eok_gradient_plugin(const KernelSpec& spec, const LabeledDataset& data, const Matrix& W,
                                  std::optional<MixtureWeights> weights = {}) {
  data.validate();
  require(W.cols() == data.dim(), ErrorKind::dimension, "encoder input dimension differs from data");
  require_all_cells(cell_index(data));
  const MixtureWeights w = weights.value_or(empirical_weights(data));
  const Matrix Z = data.z * W.transpose();
  const PluginValueGrad vg = plugin_value_grad_z(spec, Z, plugin_row_weights(data, w));
  return vg.grad_z.transpose() * data.z;
}

}  // namespace eokfair
