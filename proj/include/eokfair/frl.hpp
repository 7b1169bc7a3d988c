#pragma once

// Penalized representation learning: a linear encoder Z = X W^T and a
// logistic head trained by plain gradient descent on
//   mean cross-entropy + lambda * plug-in EO_k^2(Z),
// with the mixture weights frozen from the full training set.

#include "eokfair/eok.hpp"
#include "eokfair/fairness.hpp"
#include "eokfair/rng.hpp"
#include "eokfair/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace eokfair {

struct TrainConfig {
  double lambda = 0.0;
  std::size_t steps = 200;
  double step_size = 0.1;
  std::size_t batch = 0;  // 0 selects full-batch descent
  std::uint64_t seed = 0;
  KernelSpec kernel = KernelSpec::rbf(1.0);
  Eigen::Index encoder_dim = 2;
  double init_scale = 0.5;

  void validate() const {
    require(std::isfinite(lambda) && lambda >= 0.0, ErrorKind::config, "train.lambda must be >= 0");
    require(steps >= 1, ErrorKind::config, "train.steps must be >= 1");
    require(std::isfinite(step_size) && step_size > 0.0, ErrorKind::config, "train.step_size must be positive");
    require(encoder_dim >= 1, ErrorKind::config, "train.encoder_dim must be >= 1");
    require(init_scale >= 0.0, ErrorKind::config, "train.init_scale must be >= 0");
    require(kernel.differentiable(), ErrorKind::unsupported,
            "training needs a differentiable kernel (rbf or linear), got " + to_string(kernel.family));
  }
};

struct LogisticParams {
  Vector weights;
  double bias = 0.0;
};

struct TraceRecord {
  std::size_t step = 0;
  double supervised = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

struct TrainTrace {
  std::vector<TraceRecord> records;  // one per step (before its update), then the final state
  Matrix W;
  LogisticParams head;
  MixtureWeights weights;
  double lambda = 0.0;
};

struct ObjectiveGradient {
  double supervised = 0.0;
  double penalty = 0.0;
  double total = 0.0;
  Matrix grad_W;          // total
  Matrix penalty_grad_W;  // lambda * d penalty / dW; exactly zero when lambda = 0
  Vector grad_head;
  double grad_bias = 0.0;
};

/// Head outputs sigmoid(a . z + b) on encoded rows.
inline Vector head_scores(const Matrix& Z, const LogisticParams& head) {
  Vector t = Z * head.weights;
  for (auto& v : t) v = sigmoid(v + head.bias);
  return t;
}

/// Numerically stable log(1 + exp(t)).
inline double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

/// Objective value and analytic gradients with respect to W and the head.
inline ObjectiveGradient objective_gradient(const LabeledDataset& data, const Matrix& W, const LogisticParams& head,
                                            const TrainConfig& cfg, std::optional<MixtureWeights> weights = {}) {
  data.validate();
  require(W.cols() == data.dim(), ErrorKind::dimension, "encoder input dimension differs from data");
  require(head.weights.size() == W.rows(), ErrorKind::dimension, "head width differs from encoder output");
  require(cfg.kernel.differentiable(), ErrorKind::unsupported,
          "gradient not available for the " + to_string(cfg.kernel.family) + " kernel");
  const MixtureWeights w = weights.value_or(empirical_weights(data));
  const auto n = static_cast<double>(data.size());
  const Matrix Z = data.z * W.transpose();

  // Cross-entropy with logits u_i = a . z_i + b: loss_i = softplus(u_i) - y_i u_i.
  const Vector u = (Z * head.weights).array() + head.bias;
  Vector r(u.size());
  std::vector<double> losses(static_cast<std::size_t>(u.size()));
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double y = data.y[static_cast<std::size_t>(i)];
    losses[static_cast<std::size_t>(i)] = softplus(u[i]) - y * u[i];
    r[i] = sigmoid(u[i]) - y;
  }
  ObjectiveGradient g;
  g.supervised = pairwise_sum(losses) / n;
  g.grad_head = Z.transpose() * r / n;
  g.grad_bias = r.sum() / n;
  const Eigen::RowVectorXd rx = r.transpose() * data.z / n;
  g.grad_W = head.weights * rx;

  const PluginValueGrad vg = plugin_value_grad_z(cfg.kernel, Z, plugin_row_weights(data, w));
  g.penalty = vg.value;
  g.penalty_grad_W = Matrix::Zero(W.rows(), W.cols());
  if (cfg.lambda > 0.0) {
    g.penalty_grad_W = cfg.lambda * (vg.grad_z.transpose() * data.z);
    g.grad_W += g.penalty_grad_W;
  }
  g.total = g.supervised + cfg.lambda * g.penalty;
  return g;
}

namespace detail {

/// Stratified mini-batch: each (s, y) cell contributes in proportion to its
/// size, at least one row.
inline LabeledDataset stratified_batch(const LabeledDataset& data, const CellIndex& cells, std::size_t batch,
                                       CounterRng& rng) {
  std::vector<std::size_t> rows;
  const double frac = static_cast<double>(batch) / static_cast<double>(data.size());
  for (const auto& row : cells)
    for (const auto& cell : row) {
      std::vector<std::size_t> idx = cell;
      std::shuffle(idx.begin(), idx.end(), rng);
      const auto take = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::llround(frac * static_cast<double>(cell.size()))), 1, cell.size());
      rows.insert(rows.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take));
    }
  std::sort(rows.begin(), rows.end());
  LabeledDataset out;
  out.z = select_rows(data.z, rows);
  for (auto i : rows) {
    out.s.push_back(data.s[i]);
    out.y.push_back(data.y[i]);
  }
  return out;
}

}  // namespace detail

/// Seeded random starting point.
inline std::pair<Matrix, LogisticParams> initial_parameters(const TrainConfig& cfg, Eigen::Index input_dim) {
  CounterRng init(cfg.seed, 400);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix W(cfg.encoder_dim, input_dim);
  for (Eigen::Index i = 0; i < W.rows(); ++i)
    for (Eigen::Index j = 0; j < W.cols(); ++j) W(i, j) = cfg.init_scale * normal(init);
  LogisticParams head;
  head.weights.resize(cfg.encoder_dim);
  for (auto& v : head.weights) v = cfg.init_scale * normal(init);
  return {std::move(W), std::move(head)};
}

/// Gradient descent from the given parameters. Deterministic given (data, cfg, start).
inline TrainTrace train(const LabeledDataset& data, const TrainConfig& cfg, const Matrix& W0,
                        const LogisticParams& head0) {
  cfg.validate();
  data.validate();
  const CellIndex cells = cell_index(data);
  require_all_cells(cells);
  require(W0.rows() == cfg.encoder_dim && W0.cols() == data.dim() && head0.weights.size() == cfg.encoder_dim,
          ErrorKind::dimension, "starting parameters do not match encoder_dim and data dimension");

  TrainTrace trace;
  trace.lambda = cfg.lambda;
  trace.weights = empirical_weights(data);
  trace.W = W0;
  trace.head = head0;

  const bool full = cfg.batch == 0 || cfg.batch >= data.size();
  const auto record = [&](std::size_t step, const ObjectiveGradient& g) {
    if (!std::isfinite(g.total))
      throw Error(ErrorKind::training, "objective is not finite at step " + std::to_string(step));
    trace.records.push_back({step, g.supervised, g.penalty, g.supervised + cfg.lambda * g.penalty});
  };

  for (std::size_t step = 0; step < cfg.steps; ++step) {
    ObjectiveGradient g;
    if (full) {
      g = objective_gradient(data, trace.W, trace.head, cfg, trace.weights);
    } else {
      CounterRng rng(cfg.seed, 500 + step);
      g = objective_gradient(detail::stratified_batch(data, cells, cfg.batch, rng), trace.W, trace.head, cfg,
                             trace.weights);
    }
    record(step, g);
    trace.W -= cfg.step_size * g.grad_W;
    trace.head.weights -= cfg.step_size * g.grad_head;
    trace.head.bias -= cfg.step_size * g.grad_bias;
    if (!trace.W.allFinite() || !trace.head.weights.allFinite() || !std::isfinite(trace.head.bias))
      throw Error(ErrorKind::training, "parameters are not finite after step " + std::to_string(step));
  }
  record(cfg.steps, objective_gradient(data, trace.W, trace.head, cfg, trace.weights));
  return trace;
}

/// Gradient descent from the seeded random start.
inline TrainTrace train(const LabeledDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  const auto [W0, head0] = initial_parameters(cfg, data.dim());
  return train(data, cfg, W0, head0);
}

/// Spearman rank correlation (average ranks for ties).
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::size, "spearman needs two equal-length samples");
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
      std::size_t j = i;
      while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(rx.size());
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(ry.size());
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  require(sxx > 0.0 && syy > 0.0, ErrorKind::domain, "spearman undefined for a constant sample");
  return sxy / std::sqrt(sxx * syy);
}

struct SweepRow {
  double lambda = 0.0;
  double accuracy = 0.0;
  double balanced_accuracy = 0.0;
  double dp = 0.0;
  double dodds = 0.0;
  double dc = 0.0;
  double eok2 = 0.0;
  double sup_dp = 0.0;
  double beta = 0.0;        // gamma between encoded cells (1,0) and (1,1)
  double label_bias = 0.0;  // |p_{0|0} - p_{0|1}|
  double dp_floor = 0.0;    // (2 sqrt(nu))^{-1} label_bias * beta
  double final_objective = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  double spearman_lambda_eok2 = 0.0;
  std::size_t n = 0;
};

inline constexpr int kSweepCalibrationBins = 10;

/// Metrics of a trained model on `data`, evaluated through its encoder.
inline SweepRow evaluate_model(const LabeledDataset& data, const TrainTrace& trace, const KernelSpec& kernel) {
  LabeledDataset enc = data;
  enc.z = data.z * trace.W.transpose();
  const Vector t = head_scores(enc.z, trace.head);
  SweepRow row;
  row.lambda = trace.lambda;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    correct += static_cast<std::size_t>((t[static_cast<Eigen::Index>(i)] >= 0.5) == (data.y[i] == 1));
  row.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  row.balanced_accuracy = balanced_accuracy(t, enc, LabelOf::y);
  row.dp = dp(t, enc);
  row.dodds = dodds(t, enc);
  row.dc = dc(t, enc, kSweepCalibrationBins);
  row.eok2 = eok_hat_plugin(kernel, enc, trace.weights).eok2;
  row.sup_dp = sup_dp(kernel, enc);
  const auto cells = cell_matrices(enc);
  row.beta = mmd2_biased(kernel, cells[2], cells[3]).mmd;
  row.label_bias = group_stats(enc).bias();
  row.dp_floor = row.label_bias * row.beta / (2.0 * std::sqrt(kernel.nu));
  row.final_objective = trace.records.back().total;
  return row;
}

/// Trains one model per lambda on a single sample of `n` rows and records the frontier.
inline SweepReport lambda_sweep(const PopulationSpec& population, const std::vector<double>& lambdas,
                                const TrainConfig& cfg_base, std::uint64_t seed, std::size_t n) {
  require(lambdas.size() >= 2, ErrorKind::config, "sweep needs at least two lambda values");
  const LabeledDataset data = sample_population(population, n, seed);
  SweepReport rep;
  rep.n = n;
  std::vector<double> ls, es;
  cfg_base.validate();
  auto [W, head] = initial_parameters(cfg_base, data.dim());
  for (double lambda : lambdas) {
    TrainConfig cfg = cfg_base;
    cfg.lambda = lambda;
    cfg.step_size = cfg_base.step_size / (1.0 + lambda);
    const TrainTrace trace = train(data, cfg, W, head);
    W = trace.W;
    head = trace.head;
    rep.rows.push_back(evaluate_model(data, trace, cfg.kernel));
    ls.push_back(lambda);
    es.push_back(rep.rows.back().eok2);
  }
  rep.spearman_lambda_eok2 = spearman(ls, es);
  return rep;
}

}  // namespace eokfair
