#pragma once

// Group-fairness metrics in expectation form. A classifier h maps z to [0, 1]
// and the prediction is Yhat ~ Bernoulli(h(z)), so every conditional
// probability Pr(Yhat = 1 | ...) is the conditional mean of h.

#include "eokfair/dataset.hpp"
#include "eokfair/error.hpp"
#include "eokfair/kernels.hpp"
#include "eokfair/linalg.hpp"
#include "eokfair/mmd.hpp"
#include "eokfair/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <variant>

namespace eokfair {

struct GroupStats {
  std::array<std::array<std::size_t, 2>, 2> counts{};      // counts[s][y]
  std::array<std::array<double, 2>, 2> p_y_given_s{};      // p_y_given_s[s][y]
  std::size_t n = 0;

  double p(int y, int s) const { return p_y_given_s[static_cast<std::size_t>(s)][static_cast<std::size_t>(y)]; }
  /// |p_{0|0} - p_{0|1}|, the label-bias level.
  double bias() const { return std::abs(p(0, 0) - p(0, 1)); }
};

inline GroupStats group_stats(const LabeledDataset& data) {
  data.validate();
  GroupStats g;
  g.n = data.size();
  for (std::size_t i = 0; i < data.size(); ++i) ++g.counts[data.s[i]][data.y[i]];
  for (std::size_t s = 0; s < 2; ++s) {
    const std::size_t ns = g.counts[s][0] + g.counts[s][1];
    require(ns > 0, ErrorKind::stratification, "group S=" + std::to_string(s) + " is empty");
    g.p_y_given_s[s][0] = static_cast<double>(g.counts[s][0]) / static_cast<double>(ns);
    g.p_y_given_s[s][1] = static_cast<double>(g.counts[s][1]) / static_cast<double>(ns);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Classifiers
// ---------------------------------------------------------------------------

struct ConstantClassifier {
  double c = 0.5;
};

/// h(z) = (clip(h_k(z), -1, 1) + 1) / 2 with h_k(z) = sum_j coeffs_j k(z, centers_j)
/// and ||h_k||_H <= nu^{-1/2}. Members of the affine RKHS-ball family.
struct RkhsClassifier {
  KernelSpec kernel;
  Matrix centers;
  Vector coeffs;
  double rkhs_norm = 0.0;  // ||h_k||_H, computed from the coefficient Gram form
};

struct LogisticHead {
  Vector weights;
  double bias = 0.0;
};

/// Scores supplied per dataset row.
struct ExternalScores {
  Vector scores;
};

enum class ClassifierKind { rkhs_witness, constant, logistic_head, external_scores };

struct Classifier {
  std::variant<RkhsClassifier, ConstantClassifier, LogisticHead, ExternalScores> payload;

  ClassifierKind kind() const { return static_cast<ClassifierKind>(payload.index()); }
};

inline double sigmoid(double t) {
  return t >= 0.0 ? 1.0 / (1.0 + std::exp(-t)) : std::exp(t) / (1.0 + std::exp(t));
}

inline Classifier constant_classifier(double c) {
  require(c >= 0.0 && c <= 1.0, ErrorKind::parameter, "constant classifier output must lie in [0, 1]");
  return {ConstantClassifier{c}};
}

inline Classifier external_scores(Vector scores) {
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    require(scores[i] >= 0.0 && scores[i] <= 1.0, ErrorKind::validation, "external scores must lie in [0, 1]");
  return {ExternalScores{std::move(scores)}};
}

inline Classifier logistic_head(Vector weights, double bias) { return {LogisticHead{std::move(weights), bias}}; }

/// ||sum_j c_j k(., x_j)||_H = sqrt(c^T K c).
inline double expansion_norm(const KernelSpec& spec, const Matrix& centers, const Vector& coeffs) {
  const Matrix K = gram(spec, centers, centers).values;
  return std::sqrt(std::max(0.0, coeffs.dot(K * coeffs)));
}

/// Witness classifier separating `positive` (high scores) from `negative`:
/// h_k = nu^{-1/2} (mu_pos - mu_neg) / ||mu_pos - mu_neg||.
inline Classifier witness_classifier(const KernelSpec& spec, const Matrix& positive, const Matrix& negative) {
  Witness w = make_witness(spec, positive, negative);
  const double scale = 1.0 / std::sqrt(spec.nu);
  return {RkhsClassifier{spec, std::move(w.centers), w.coeffs * scale, scale}};
}

/// Random member of the ball: Gaussian coefficients on the anchors, rescaled
/// so that ||h_k||_H = radius * nu^{-1/2} exactly.
inline Classifier random_ball_classifier(const KernelSpec& spec, const Matrix& anchors, CounterRng& rng,
                                         double radius = 1.0) {
  require(radius > 0.0 && radius <= 1.0, ErrorKind::parameter, "ball radius must lie in (0, 1]");
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector c(anchors.rows());
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = normal(rng);
  const double norm = expansion_norm(spec, anchors, c);
  require(norm > 1e-12, ErrorKind::normalization, "random expansion has zero norm");
  const double target = radius / std::sqrt(spec.nu);
  return {RkhsClassifier{spec, anchors, c * (target / norm), target}};
}

/// Raw RKHS output h_k at each row of z (before clipping).
inline Vector rkhs_raw(const RkhsClassifier& h, const Matrix& z) { return kernel_apply(h.kernel, z, h.centers, h.coeffs); }

/// Classifier outputs on every dataset row.
inline Vector scores(const Classifier& h, const LabeledDataset& data) {
  const auto n = static_cast<Eigen::Index>(data.size());
  return std::visit(
      [&](const auto& c) -> Vector {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, ConstantClassifier>) {
          return Vector::Constant(n, c.c);
        } else if constexpr (std::is_same_v<T, RkhsClassifier>) {
          require(c.centers.cols() == data.dim(), ErrorKind::dimension, "classifier and data dimensions differ");
          return ((rkhs_raw(c, data.z).array().max(-1.0).min(1.0)) + 1.0) / 2.0;
        } else if constexpr (std::is_same_v<T, LogisticHead>) {
          require(c.weights.size() == data.dim(), ErrorKind::dimension, "head and data dimensions differ");
          Vector t = data.z * c.weights;
          for (Eigen::Index i = 0; i < n; ++i) t[i] = sigmoid(t[i] + c.bias);
          return t;
        } else {
          require(c.scores.size() == n, ErrorKind::dimension, "external score count differs from dataset rows");
          return c.scores;
        }
      },
      h.payload);
}

/// Single-point evaluation; external scores have no point semantics.
inline double evaluate(const Classifier& h, const Vector& z) {
  LabeledDataset one;
  one.z = z.transpose();
  one.s = {0};
  one.y = {0};
  require(h.kind() != ClassifierKind::external_scores, ErrorKind::unsupported,
          "external_scores classifiers are defined per dataset row only");
  return scores(h, one)[0];
}

/// Number of rows whose raw RKHS output left [-1, 1] and was clipped.
inline std::size_t clipped_count(const Classifier& h, const LabeledDataset& data) {
  const auto* c = std::get_if<RkhsClassifier>(&h.payload);
  if (!c) return 0;
  const Vector raw = rkhs_raw(*c, data.z);
  return static_cast<std::size_t>((raw.array().abs() > 1.0).count());
}

// ---------------------------------------------------------------------------
// Metrics on score vectors
// ---------------------------------------------------------------------------

namespace detail {

inline double masked_mean(const Vector& t, const LabeledDataset& data, int s, int y, const char* what) {
  double sum = 0.0;
  std::size_t cnt = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if ((s < 0 || data.s[i] == s) && (y < 0 || data.y[i] == y)) {
      sum += t[static_cast<Eigen::Index>(i)];
      ++cnt;
    }
  if (cnt == 0) {
    const bool cell = s >= 0 && y >= 0;
    throw Error(cell ? ErrorKind::empty_cell : ErrorKind::stratification,
                std::string(what) + ": group (s=" + std::to_string(s) + ", y=" + std::to_string(y) + ") is empty");
  }
  return sum / static_cast<double>(cnt);
}

inline void check_scores(const Vector& t, const LabeledDataset& data) {
  data.validate();
  require(t.size() == static_cast<Eigen::Index>(data.size()), ErrorKind::dimension, "one score per row required");
}

}  // namespace detail

inline double dp(const Vector& t, const LabeledDataset& data) {
  detail::check_scores(t, data);
  return std::abs(detail::masked_mean(t, data, 1, -1, "dp") - detail::masked_mean(t, data, 0, -1, "dp"));
}

inline double dopp(const Vector& t, const LabeledDataset& data) {
  detail::check_scores(t, data);
  return std::abs(detail::masked_mean(t, data, 1, 1, "dopp") - detail::masked_mean(t, data, 0, 1, "dopp"));
}

inline double dr(const Vector& t, const LabeledDataset& data) {
  detail::check_scores(t, data);
  return std::abs(detail::masked_mean(t, data, 1, 0, "dr") - detail::masked_mean(t, data, 0, 0, "dr"));
}

inline double dodds(const Vector& t, const LabeledDataset& data) { return 0.5 * (dopp(t, data) + dr(t, data)); }

struct CalibrationGap {
  double dpc = 0.0;
  double dnc = 0.0;
  double dc = 0.0;
};

/// Scores are grouped into atoms: exact observed values, or `bins`
/// equal-width bins on [0, 1] when given.
inline CalibrationGap calibration_gap(const Vector& t, const LabeledDataset& data, std::optional<int> bins = {}) {
  detail::check_scores(t, data);
  require(!bins || *bins >= 1, ErrorKind::parameter, "bins must be >= 1");
  std::array<std::size_t, 2> ns{};
  for (auto s : data.s) ++ns[s];
  require(ns[0] > 0 && ns[1] > 0, ErrorKind::stratification, "calibration: an S-group is empty");
  // atom -> [y][s] counts
  std::map<double, std::array<std::array<std::size_t, 2>, 2>> atoms;
  for (std::size_t i = 0; i < data.size(); ++i) {
    double key = t[static_cast<Eigen::Index>(i)];
    if (bins) key = std::min(std::floor(key * *bins), static_cast<double>(*bins - 1));
    ++atoms[key][data.y[i]][data.s[i]];
  }
  std::array<double, 2> gap{};  // gap[y] = sum_t |P(Y=y, t | S=1) - P(Y=y, t | S=0)|
  for (const auto& [key, c] : atoms)
    for (int y = 0; y < 2; ++y)
      gap[static_cast<std::size_t>(y)] += std::abs(static_cast<double>(c[y][1]) / static_cast<double>(ns[1]) -
                                                   static_cast<double>(c[y][0]) / static_cast<double>(ns[0]));
  CalibrationGap g;
  g.dpc = 0.5 * gap[1];
  g.dnc = 0.5 * gap[0];
  g.dc = 0.5 * (g.dpc + g.dnc);
  return g;
}

inline double dpc(const Vector& t, const LabeledDataset& data, std::optional<int> bins = {}) {
  return calibration_gap(t, data, bins).dpc;
}
inline double dnc(const Vector& t, const LabeledDataset& data, std::optional<int> bins = {}) {
  return calibration_gap(t, data, bins).dnc;
}
inline double dc(const Vector& t, const LabeledDataset& data, std::optional<int> bins = {}) {
  return calibration_gap(t, data, bins).dc;
}

enum class LabelOf { s, y };

/// 1/2 (E[1 - h | label = 0] + E[h | label = 1]).
inline double balanced_accuracy(const Vector& t, const LabeledDataset& data, LabelOf label) {
  detail::check_scores(t, data);
  const auto& lab = label == LabelOf::s ? data.s : data.y;
  std::array<double, 2> sum{};
  std::array<std::size_t, 2> cnt{};
  for (std::size_t i = 0; i < data.size(); ++i) {
    sum[lab[i]] += t[static_cast<Eigen::Index>(i)];
    ++cnt[lab[i]];
  }
  require(cnt[0] > 0 && cnt[1] > 0, ErrorKind::stratification, "balanced accuracy: a label group is empty");
  return 0.5 * ((1.0 - sum[0] / static_cast<double>(cnt[0])) + sum[1] / static_cast<double>(cnt[1]));
}

// Classifier overloads.
inline double dp(const Classifier& h, const LabeledDataset& data) { return dp(scores(h, data), data); }
inline double dopp(const Classifier& h, const LabeledDataset& data) { return dopp(scores(h, data), data); }
inline double dr(const Classifier& h, const LabeledDataset& data) { return dr(scores(h, data), data); }
inline double dodds(const Classifier& h, const LabeledDataset& data) { return dodds(scores(h, data), data); }
inline double dpc(const Classifier& h, const LabeledDataset& data, std::optional<int> bins = {}) {
  return dpc(scores(h, data), data, bins);
}
inline double dnc(const Classifier& h, const LabeledDataset& data, std::optional<int> bins = {}) {
  return dnc(scores(h, data), data, bins);
}
inline double dc(const Classifier& h, const LabeledDataset& data, std::optional<int> bins = {}) {
  return dc(scores(h, data), data, bins);
}
inline double balanced_accuracy(const Classifier& h, const LabeledDataset& data, LabelOf label) {
  return balanced_accuracy(scores(h, data), data, label);
}

// ---------------------------------------------------------------------------
// Suprema over the affine RKHS ball
// ---------------------------------------------------------------------------

/// Rows of z grouped by a binary label.
inline std::array<Matrix, 2> split_by(const LabeledDataset& data, LabelOf label) {
  const auto& lab = label == LabelOf::s ? data.s : data.y;
  return {select_rows(data.z, rows_where(lab, 0)), select_rows(data.z, rows_where(lab, 1))};
}

/// sup_{h in ball} DP = (2 sqrt(nu))^{-1} gamma_k(Z_0, Z_1), with gamma_k
/// estimated by the clipped unbiased statistic.
inline double sup_dp(const KernelSpec& spec, const LabeledDataset& data) {
  data.validate();
  const auto groups = split_by(data, LabelOf::s);
  require(groups[0].rows() >= 2 && groups[1].rows() >= 2, ErrorKind::size, "sup_dp needs at least 2 rows per S-group");
  return mmd2_unbiased(spec, groups[0], groups[1]).mmd / (2.0 * std::sqrt(spec.nu));
}

/// Witness classifier for predicting `label` (high output on label = 1).
inline Classifier label_witness(const KernelSpec& spec, const LabeledDataset& data, LabelOf label) {
  const auto groups = split_by(data, label);
  require(groups[0].rows() >= 1 && groups[1].rows() >= 1, ErrorKind::stratification, "witness: a label group is empty");
  return witness_classifier(spec, groups[1], groups[0]);
}

}  // namespace eokfair
