#pragma once

// Numerical verifiers for the trade-off inequalities between independence,
// separation and calibration over the affine RKHS-ball classifier family.
// Each check returns a BoundReport in "lhs >= rhs" or "lhs == rhs" form.

#include "eokfair/digest.hpp"
#include "eokfair/eok.hpp"
#include "eokfair/fairness.hpp"
#include "eokfair/mmd.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace eokfair {

enum class ClauseKind { inequality, equality };

inline std::string to_string(ClauseKind c) { return c == ClauseKind::inequality ? "inequality" : "equality"; }

struct BoundReport {
  std::string name;
  ClauseKind kind = ClauseKind::inequality;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // lhs - rhs
  double tolerance = 0.0;
  bool holds = false;
  std::string inputs_digest;
  std::map<std::string, double> constants;  // clause-specific inputs, recorded for audit
};

inline BoundReport make_report(std::string name, ClauseKind kind, double lhs, double rhs, double tol,
                               std::string digest, std::map<std::string, double> constants = {}) {
  require(tol >= 0.0, ErrorKind::parameter, "tolerance must be nonnegative");
  BoundReport r;
  r.name = std::move(name);
  r.kind = kind;
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = lhs - rhs;
  r.tolerance = tol;
  r.holds = kind == ClauseKind::inequality ? r.slack >= -tol : std::abs(r.slack) <= tol;
  r.inputs_digest = std::move(digest);
  r.constants = std::move(constants);
  return r;
}

/// Digest of the dataset plus a textual configuration.
inline std::string inputs_digest(const LabeledDataset& data, const std::string& config) {
  return hex64(fnv1a64(config, fnv1a64(dataset_digest(data))));
}

/// Balanced-accuracy level (2 + nu^{-1/2} gamma) / 4.
inline double ba_bound(double nu, double gamma) { return (2.0 + gamma / std::sqrt(nu)) / 4.0; }

namespace detail {

inline double biased_gamma(const KernelSpec& spec, const Matrix& A, const Matrix& B) {
  return mmd2_biased(spec, A, B).mmd;
}

inline std::string tol_text(double tol) { return ";tol=" + format_real(tol); }

/// Label witness, or h_k = 0 (output 1/2) when the two groups have identical embeddings.
inline Classifier witness_or_zero(const KernelSpec& spec, const LabeledDataset& data, LabelOf label) {
  try {
    return label_witness(spec, data, label);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::normalization) throw;
    return constant_classifier(0.5);
  }
}

}  // namespace detail

/// Unbiased regime: sup DP equals (2 sqrt(nu))^{-1} EO_k.
inline BoundReport check_unbiased_equality(const KernelSpec& spec, const LabeledDataset& data, double tol,
                                           double unbiased_threshold = 0.02) {
  const GroupStats g = group_stats(data);
  require(g.bias() <= unbiased_threshold, ErrorKind::inapplicable,
          "label rates differ across groups by " + format_real(g.bias()) + " > threshold " +
              format_real(unbiased_threshold));
  const double lhs = sup_dp(spec, data);
  const double eok = eok_hat_plugin(spec, data).eok;
  const double rhs = eok / (2.0 * std::sqrt(spec.nu));
  return make_report("unbiased_equality", ClauseKind::equality, lhs, rhs, tol,
                     inputs_digest(data, "unbiased_equality;" + describe(spec) + detail::tol_text(tol)),
                     {{"nu", spec.nu}, {"label_bias", g.bias()}, {"eok", eok}, {"threshold", unbiased_threshold}});
}

/// Biased regime: sup DP >= (2 sqrt(nu))^{-1} | |p00 - p01| beta - EO_k |, with
/// beta the discrepancy between cells (1,0) and (1,1).
inline BoundReport check_biased_lower_bound(const KernelSpec& spec, const LabeledDataset& data, double tol) {
  const GroupStats g = group_stats(data);
  const auto cells = cell_matrices(data);
  const double beta = detail::biased_gamma(spec, cells[2], cells[3]);
  const double eok = eok_hat_plugin(spec, data).eok;
  const double lhs = sup_dp(spec, data);
  const double rhs = std::abs(g.bias() * beta - eok) / (2.0 * std::sqrt(spec.nu));
  return make_report("biased_lower_bound", ClauseKind::inequality, lhs, rhs, tol,
                     inputs_digest(data, "biased_lower_bound;" + describe(spec) + detail::tol_text(tol)),
                     {{"nu", spec.nu}, {"label_bias", g.bias()}, {"beta", beta}, {"eok", eok}});
}

/// Upper clause: the bound dominates BA(., S) of the S-witness and of `trials`
/// random unit-ball classifiers. Lower clause: the Y-witness reaches the bound.
inline std::pair<BoundReport, BoundReport> check_ba_bounds(const KernelSpec& spec, const LabeledDataset& data,
                                                           std::size_t trials, double tol, std::uint64_t seed = 0) {
  data.validate();
  const auto by_s = split_by(data, LabelOf::s);
  const auto by_y = split_by(data, LabelOf::y);
  require(by_s[0].rows() > 0 && by_s[1].rows() > 0, ErrorKind::stratification, "ba bounds: an S-group is empty");
  require(by_y[0].rows() > 0 && by_y[1].rows() > 0, ErrorKind::stratification, "ba bounds: a Y-group is empty");
  const std::string cfg = describe(spec) + ";trials=" + std::to_string(trials) + ";seed=" + std::to_string(seed) +
                          detail::tol_text(tol);

  const double alpha = detail::biased_gamma(spec, by_s[0], by_s[1]);
  double best = balanced_accuracy(detail::witness_or_zero(spec, data, LabelOf::s), data, LabelOf::s);
  CounterRng rng(seed, 200);
  const std::size_t n_anchor = std::min<std::size_t>(32, data.size());
  for (std::size_t t = 0; t < trials; ++t) {
    std::vector<std::size_t> idx(n_anchor);
    std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
    for (auto& i : idx) i = pick(rng);
    const Classifier h = random_ball_classifier(spec, select_rows(data.z, idx), rng);
    best = std::max(best, balanced_accuracy(h, data, LabelOf::s));
  }
  BoundReport upper = make_report("ba_upper", ClauseKind::inequality, ba_bound(spec.nu, alpha), best, tol,
                                  inputs_digest(data, "ba_upper;" + cfg),
                                  {{"nu", spec.nu}, {"alpha", alpha}, {"trials", static_cast<double>(trials)}});

  const double beta = detail::biased_gamma(spec, by_y[0], by_y[1]);
  const double ba_y = balanced_accuracy(detail::witness_or_zero(spec, data, LabelOf::y), data, LabelOf::y);
  BoundReport lower = make_report("ba_lower", ClauseKind::inequality, ba_y, ba_bound(spec.nu, beta), tol,
                                  inputs_digest(data, "ba_lower;" + cfg), {{"nu", spec.nu}, {"beta", beta}});
  return {std::move(upper), std::move(lower)};
}

/// ||1||_H for a kernel on {0, 1}: sqrt((1,1) K^{-1} (1,1)^T).
inline double constant_one_norm(const KernelSpec& spec_y) {
  const double k00 = eval_kernel(spec_y, Vector::Constant(1, 0.0), Vector::Constant(1, 0.0));
  const double k11 = eval_kernel(spec_y, Vector::Constant(1, 1.0), Vector::Constant(1, 1.0));
  const double k01 = eval_kernel(spec_y, Vector::Constant(1, 0.0), Vector::Constant(1, 1.0));
  const double det = k00 * k11 - k01 * k01;
  require(det > 1e-12, ErrorKind::config, "label kernel Gram on {0, 1} is singular; constants are not in its space");
  return std::sqrt((k00 + k11 - 2.0 * k01) / det);
}

/// True when the score kernel is u*u' (+ another kernel), so id lies in its
/// space with norm at most 1.
inline bool contains_identity(const KernelSpec& spec_u) {
  const auto is_unit_linear = [](const KernelSpec& k) { return k.family == KernelFamily::linear && k.radius >= 1.0; };
  if (is_unit_linear(spec_u)) return true;
  return spec_u.family == KernelFamily::sum && (is_unit_linear(*spec_u.first) || is_unit_linear(*spec_u.second));
}

/// Tensor discrepancy between the (score, Y) laws of the two S-groups.
inline double tensor_gamma(const KernelSpec& spec_u, const KernelSpec& spec_y, const Vector& t,
                           const LabeledDataset& data) {
  const KernelSpec tensor = KernelSpec::product(spec_u, spec_y, 1);
  std::array<std::vector<std::size_t>, 2> idx;
  for (std::size_t i = 0; i < data.size(); ++i) idx[data.s[i]].push_back(i);
  require(!idx[0].empty() && !idx[1].empty(), ErrorKind::stratification, "calibration chain: an S-group is empty");
  std::array<Matrix, 2> pts;
  for (int s = 0; s < 2; ++s) {
    auto& p = pts[static_cast<std::size_t>(s)];
    const auto& rows = idx[static_cast<std::size_t>(s)];
    p.resize(static_cast<Eigen::Index>(rows.size()), 2);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      p(static_cast<Eigen::Index>(r), 0) = t[static_cast<Eigen::Index>(rows[r])];
      p(static_cast<Eigen::Index>(r), 1) = data.y[rows[r]];
    }
  }
  return detail::biased_gamma(tensor, pts[0], pts[1]);
}

/// Clause A: DC(h) >= gamma_tensor(h) / (4 sqrt(nu_u nu_y)).
/// Clause B: gamma_tensor(h*) / (4 sqrt(nu_u nu_y)) >= sup DP / (4 sqrt(nu_u nu_y) ||id|| ||1||),
/// with h* the S-witness for spec_z and ||id|| <= 1 certified by the linear part of spec_u.
inline std::pair<BoundReport, BoundReport> check_calibration_chain(const KernelSpec& spec_z, const KernelSpec& spec_u,
                                                                   const KernelSpec& spec_y,
                                                                   const LabeledDataset& data, const Classifier& h,
                                                                   double tol) {
  require(contains_identity(spec_u), ErrorKind::config,
          "score kernel must contain the identity (linear part with radius >= 1, alone or in a sum)");
  data.validate();
  const double one_norm = constant_one_norm(spec_y);
  const double id_norm = 1.0;
  const double scale = 4.0 * std::sqrt(spec_u.nu * spec_y.nu);
  const std::string cfg = describe(spec_z) + ";" + describe(spec_u) + ";" + describe(spec_y) + detail::tol_text(tol);

  const Vector t = scores(h, data);
  const double dc_h = dc(t, data);
  const double gamma_h = tensor_gamma(spec_u, spec_y, t, data);
  BoundReport a = make_report("calibration_tensor", ClauseKind::inequality, dc_h, gamma_h / scale, tol,
                              inputs_digest(data, "calibration_tensor;" + cfg),
                              {{"nu_u", spec_u.nu}, {"nu_y", spec_y.nu}, {"gamma_tensor", gamma_h}});

  const Classifier witness = detail::witness_or_zero(spec_z, data, LabelOf::s);
  const double gamma_star = tensor_gamma(spec_u, spec_y, scores(witness, data), data);
  const double sdp = sup_dp(spec_z, data);
  BoundReport b = make_report("tensor_dp", ClauseKind::inequality, gamma_star / scale,
                              sdp / (scale * id_norm * one_norm), tol, inputs_digest(data, "tensor_dp;" + cfg),
                              {{"nu_u", spec_u.nu},
                               {"nu_y", spec_y.nu},
                               {"id_norm_bound", id_norm},
                               {"one_norm", one_norm},
                               {"gamma_tensor_witness", gamma_star},
                               {"sup_dp", sdp}});
  return {std::move(a), std::move(b)};
}

inline constexpr std::size_t kMaxTvdAtoms = 64;

/// Exact total-variation distance between the empirical laws of the S-groups.
inline double empirical_tvd(const LabeledDataset& data, std::size_t max_atoms = kMaxTvdAtoms) {
  data.validate();
  std::array<double, 2> ns{};
  for (auto s : data.s) ns[s] += 1.0;
  require(ns[0] > 0 && ns[1] > 0, ErrorKind::stratification, "tvd: an S-group is empty");
  std::map<std::vector<double>, std::array<double, 2>> atoms;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto r = data.z.row(static_cast<Eigen::Index>(i));
    atoms[std::vector<double>(r.begin(), r.end())][data.s[i]] += 1.0 / ns[data.s[i]];
    require(atoms.size() <= max_atoms, ErrorKind::inapplicable,
            "support exceeds " + std::to_string(max_atoms) + " atoms; exact TVD not attempted");
  }
  double sum = 0.0;
  for (const auto& [key, p] : atoms) sum += std::abs(p[1] - p[0]);
  return 0.5 * sum;
}

/// 2 sqrt(nu) TVD(Z_0, Z_1) >= gamma_k(Z_0, Z_1) on a small discrete support.
inline BoundReport check_tvd_dominance(const KernelSpec& spec, const LabeledDataset& data, double tol) {
  const double tvd = empirical_tvd(data);
  const auto groups = split_by(data, LabelOf::s);
  const double gamma = detail::biased_gamma(spec, groups[0], groups[1]);
  return make_report("tvd_dominance", ClauseKind::inequality, 2.0 * std::sqrt(spec.nu) * tvd, gamma, tol,
                     inputs_digest(data, "tvd_dominance;" + describe(spec) + detail::tol_text(tol)),
                     {{"nu", spec.nu}, {"tvd", tvd}});
}

}  // namespace eokfair
