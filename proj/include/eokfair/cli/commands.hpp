#pragma once

// Subcommand implementations. Each returns a JSON report plus auxiliary files;
// the caller decides where they go. Reports share one envelope:
//   schema, schema_version, command, seed, config_digest, data, versions, result, timestamp
// and everything outside "timestamp" is a pure function of (config, seed).

#include "eokfair/bounds.hpp"
#include "eokfair/cli/config.hpp"
#include "eokfair/complexity.hpp"
#include "eokfair/digest.hpp"
#include "eokfair/eok.hpp"
#include "eokfair/fairness.hpp"
#include "eokfair/frl.hpp"
#include "eokfair/version.hpp"

#include <chrono>
#include <ctime>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace eokfair::cli {

using ojson = nlohmann::ordered_json;

inline constexpr int kReportSchemaVersion = 1;

struct OutputFile {
  std::string name;
  std::string content;
};

struct CommandResult {
  ojson report;
  std::vector<OutputFile> files;
  int status = 0;  // 0, or 1 when a bounds clause fails
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"generate", "metrics", "eok", "bounds", "concentration", "train", "sweep"};
  return names;
}

namespace detail {

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string config_digest(const Config& cfg) { return digest_hex(cfg.raw.dump()); }

inline ojson versions() {
  ojson v;
  v["library"] = kLibraryVersion;
  for (const auto& [k, ver] : module_versions()) v[k] = ver;
  return v;
}

inline ojson to_json(const Matrix& m) {
  ojson rows = ojson::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    ojson row = ojson::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline ojson to_json(const Vector& v) {
  ojson out = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline ojson to_json(const GroupStats& g) {
  ojson j;
  j["n"] = g.n;
  j["counts"] = {{g.counts[0][0], g.counts[0][1]}, {g.counts[1][0], g.counts[1][1]}};
  j["p_y_given_s"] = {{g.p_y_given_s[0][0], g.p_y_given_s[0][1]}, {g.p_y_given_s[1][0], g.p_y_given_s[1][1]}};
  j["label_bias"] = g.bias();
  return j;
}

inline ojson to_json(const EokEstimate& e) {
  return {{"method", to_string(e.method)}, {"weights", to_string(e.weights_source)}, {"eok2", e.eok2},
          {"eok", e.eok},                  {"clipped", e.eok2 < 0.0},                {"n0", e.n0},
          {"n1", e.n1}};
}

inline ojson to_json(const BoundReport& r) {
  ojson constants = ojson::object();
  for (const auto& [k, v] : r.constants) constants[k] = v;
  return {{"name", r.name},         {"kind", to_string(r.kind)}, {"lhs", r.lhs},
          {"rhs", r.rhs},           {"slack", r.slack},          {"tolerance", r.tolerance},
          {"holds", r.holds},       {"inputs_digest", r.inputs_digest}, {"constants", constants}};
}

inline ojson to_json(const SweepRow& r) {
  return {{"lambda", r.lambda},   {"accuracy", r.accuracy}, {"balanced_accuracy", r.balanced_accuracy},
          {"dp", r.dp},           {"dodds", r.dodds},       {"dc", r.dc},
          {"eok2", r.eok2},       {"sup_dp", r.sup_dp},     {"beta", r.beta},
          {"label_bias", r.label_bias}, {"dp_floor", r.dp_floor}, {"final_objective", r.final_objective}};
}

/// CSV text for an array of flat JSON objects sharing one key set.
inline std::string rows_csv(const ojson& rows) {
  std::ostringstream os;
  if (rows.empty()) return "";
  bool first = true;
  for (const auto& [k, v] : rows.front().items()) {
    os << (first ? "" : ",") << k;
    first = false;
  }
  os << '\n';
  for (const auto& row : rows) {
    first = true;
    for (const auto& [k, v] : row.items()) {
      os << (first ? "" : ",");
      if (v.is_number_float()) os << format_real(v.get<double>());
      else if (v.is_string()) os << v.get<std::string>();
      else os << v.dump();
      first = false;
    }
    os << '\n';
  }
  return os.str();
}

struct LoadedData {
  LabeledDataset data;
  std::optional<Vector> scores;
  ojson info;
};

inline LoadedData load_data(const Config& cfg) {
  LoadedData out;
  if (cfg.data.population) {
    out.data = sample_population(*cfg.data.population, cfg.data.n, cfg.seed);
    out.info["source"] = "population";
  } else {
    std::vector<double> extra;
    out.data = read_csv_file(cfg.data.path, cfg.data.score_column, &extra);
    if (!cfg.data.score_column.empty())
      out.scores = Eigen::Map<const Vector>(extra.data(), static_cast<Eigen::Index>(extra.size()));
    out.info["source"] = "csv";
    out.info["path"] = cfg.data.path;
  }
  out.info["n"] = out.data.size();
  out.info["dim"] = out.data.dim();
  out.info["digest"] = dataset_digest(out.data);
  return out;
}

inline const PopulationSpec& require_population(const Config& cfg, const std::string& command) {
  if (!cfg.data.population)
    throw Error(ErrorKind::validation, "data.population: " + command + " needs an inline population");
  return *cfg.data.population;
}

inline ojson envelope(const std::string& command, const Config& cfg, ojson data_info) {
  ojson r;
  r["schema"] = "eokfair/report/" + command;
  r["schema_version"] = kReportSchemaVersion;
  r["command"] = command;
  r["seed"] = cfg.seed;
  r["config_digest"] = config_digest(cfg);
  r["data"] = std::move(data_info);
  r["versions"] = versions();
  return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline CommandResult cmd_generate(const Config& cfg) {
  const PopulationSpec& pop = detail::require_population(cfg, "generate");
  const LabeledDataset data = sample_population(pop, cfg.data.n, cfg.seed);
  std::ostringstream csv;
  write_csv(csv, data);
  CommandResult out;
  ojson info{{"source", "population"}, {"n", data.size()}, {"dim", data.dim()}, {"digest", digest_hex(csv.str())}};
  out.report = detail::envelope("generate", cfg, info);
  out.report["result"] = {{"csv", "data.csv"},
                          {"population", cfg.raw["data"]["population"]},
                          {"group_stats", detail::to_json(group_stats(data))}};
  out.files.push_back({"data.csv", csv.str()});
  return out;
}

inline CommandResult cmd_metrics(const Config& cfg) {
  auto loaded = detail::load_data(cfg);
  LabeledDataset data = loaded.data;
  Classifier h = constant_classifier(0.5);
  const auto& m = cfg.metrics;
  ojson classifier{{"kind", m.classifier}};
  if (m.classifier == "witness") {
    h = eokfair::detail::witness_or_zero(cfg.kernel, data, LabelOf::y);
  } else if (m.classifier == "constant") {
    h = constant_classifier(m.constant);
    classifier["constant"] = m.constant;
  } else if (m.classifier == "scores") {
    if (!loaded.scores) throw Error(ErrorKind::validation, "data.score_column: required for classifier scores");
    h = external_scores(*loaded.scores);
    classifier["column"] = cfg.data.score_column;
  } else {
    const json tr = read_json_file(m.head_report);
    try {
      const auto& res = tr.at("result");
      const Matrix W = detail::matrix(res.at("W"), "W");
      const auto w = detail::reals(res.at("head").at("weights"), "head.weights");
      const double b = res.at("head").at("bias").get<double>();
      if (W.cols() != data.dim()) throw Error(ErrorKind::dimension, "encoder input dimension differs from the data");
      if (static_cast<Eigen::Index>(w.size()) != W.rows()) throw Error(ErrorKind::dimension, "head width differs from W");
      data.z = data.z * W.transpose();
      h = logistic_head(Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())), b);
    } catch (const json::exception& e) {
      throw Error(ErrorKind::validation, "metrics.head_report: not a train report: " + std::string(e.what()));
    }
    classifier["head_report"] = m.head_report;
  }

  const Vector t = scores(h, data);
  const auto bins = std::optional<int>(m.bins);
  CommandResult out;
  out.report = detail::envelope("metrics", cfg, loaded.info);
  ojson table1{{"dp", dp(t, data)},           {"dopp", dopp(t, data)},       {"dr", dr(t, data)},
               {"dodds", dodds(t, data)},     {"dpc", dpc(t, data, bins)},   {"dnc", dnc(t, data, bins)},
               {"dc", dc(t, data, bins)}};
  ojson result;
  result["classifier"] = classifier;
  result["calibration_bins"] = m.bins;
  result["group_stats"] = detail::to_json(group_stats(data));
  result["fairness"] = table1;
  result["balanced_accuracy"] = {{"s", balanced_accuracy(t, data, LabelOf::s)}, {"y", balanced_accuracy(t, data, LabelOf::y)}};
  result["clipped_outputs"] = clipped_count(h, data);
  result["sup_dp"] = sup_dp(cfg.kernel, data);
  result["kernel"] = describe(cfg.kernel);
  result["eok"] = {detail::to_json(eok_hat_plugin(cfg.kernel, data, cfg.eok.weights)),
                   detail::to_json(eok_hat_bootstrap(cfg.kernel, data, cfg.eok.m0, cfg.eok.m1, cfg.seed, cfg.eok.weights))};
  out.report["result"] = result;
  return out;
}

inline CommandResult cmd_eok(const Config& cfg) {
  const auto loaded = detail::load_data(cfg);
  const auto& data = loaded.data;
  const MixtureWeights w = cfg.eok.weights.value_or(empirical_weights(data));
  const EokEstimate plugin = eok_hat_plugin(cfg.kernel, data, cfg.eok.weights);
  CommandResult out;
  out.report = detail::envelope("eok", cfg, loaded.info);
  out.report["result"] = {
      {"kernel", describe(cfg.kernel)},
      {"nu", cfg.kernel.nu},
      {"mixture_weights", {w.w0, w.w1}},
      {"group_stats", detail::to_json(group_stats(data))},
      {"estimates",
       {detail::to_json(plugin),
        detail::to_json(eok_hat_bootstrap(cfg.kernel, data, cfg.eok.m0, cfg.eok.m1, cfg.seed, cfg.eok.weights))}},
      {"sup_dp", sup_dp(cfg.kernel, data)}};
  return out;
}

inline CommandResult cmd_bounds(const Config& cfg) {
  const auto loaded = detail::load_data(cfg);
  const auto& data = loaded.data;
  const auto& b = cfg.bounds;
  const bool automatic = b.clauses.empty();
  const auto& wanted = automatic ? all_clauses() : b.clauses;

  ojson clauses = ojson::array();
  ojson skipped = ojson::array();
  bool all_hold = true;
  const auto add = [&](const BoundReport& r) {
    all_hold = all_hold && r.holds;
    clauses.push_back(detail::to_json(r));
  };
  for (const auto& name : wanted) {
    const std::function<void()> run = [&] {
      if (name == "unbiased_equality") {
        add(check_unbiased_equality(cfg.kernel, data, b.tol.unbiased_equality, b.unbiased_threshold));
      } else if (name == "biased_lower") {
        add(check_biased_lower_bound(cfg.kernel, data, b.tol.biased_lower));
      } else if (name == "ba") {
        const auto [upper, lower] = check_ba_bounds(cfg.kernel, data, b.ba_trials, b.tol.ba, cfg.seed);
        add(upper);
        add(lower);
      } else if (name == "calibration") {
        const Classifier h = eokfair::detail::witness_or_zero(cfg.kernel, data, LabelOf::s);
        const auto [a, c] = check_calibration_chain(cfg.kernel, b.score_kernel, b.label_kernel, data, h, b.tol.calibration);
        add(a);
        add(c);
      } else {
        add(check_tvd_dominance(cfg.kernel, data, b.tol.tvd));
      }
    };
    if (!automatic) {
      run();
      continue;
    }
    try {
      run();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::inapplicable) throw;
      skipped.push_back({{"clause", name}, {"reason", e.what()}});
    }
  }
  if (clauses.empty()) throw Error(ErrorKind::inapplicable, "no bounds clause applies to this data");

  CommandResult out;
  out.report = detail::envelope("bounds", cfg, loaded.info);
  out.report["result"] = {{"kernel", describe(cfg.kernel)}, {"clauses", clauses}, {"skipped", skipped}, {"all_hold", all_hold}};
  out.status = all_hold ? 0 : 1;
  return out;
}

inline CommandResult cmd_concentration(const Config& cfg) {
  const PopulationSpec& pop = detail::require_population(cfg, "concentration");
  const auto& c = cfg.concentration;
  EncoderFamily family;
  family.kind = EncoderKind::finite_grid;
  family.grid = c.encoder_grid;
  if (family.grid.empty()) family.grid.push_back(Matrix::Identity(pop.dim, pop.dim));
  const ConcentrationReport rep =
      concentration_check(family, cfg.kernel, pop, c.n_grid, c.trials, c.delta, cfg.seed, c.complexity_trials);
  ojson rows = ojson::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"n", r.n},
                    {"mean_dev", r.mean_dev},
                    {"quantile_dev", r.quantile_dev},
                    {"bound", r.bound},
                    {"within_bound", r.quantile_dev <= r.bound},
                    {"gaussian_complexity", r.g_mean},
                    {"gaussian_complexity_se", r.g_std_error}});
  CommandResult out;
  out.report = detail::envelope("concentration", cfg, {{"source", "population"}, {"dim", pop.dim}});
  out.report["result"] = {{"kernel", describe(cfg.kernel)},
                          {"encoder_grid_size", family.grid.size()},
                          {"trials", rep.trials},
                          {"delta", rep.delta},
                          {"rows", rows},
                          {"loglog_slope", rep.slope},
                          {"within_bound", rep.within_bound}};
  out.files.push_back({"concentration.csv", detail::rows_csv(rows)});
  return out;
}

inline CommandResult cmd_train(const Config& cfg) {
  const auto loaded = detail::load_data(cfg);
  const TrainTrace trace = train(loaded.data, cfg.train);
  ojson records = ojson::array();
  for (const auto& r : trace.records)
    records.push_back({{"step", r.step}, {"supervised", r.supervised}, {"penalty", r.penalty}, {"total", r.total}});
  const auto& last = trace.records.back();
  CommandResult out;
  out.report = detail::envelope("train", cfg, loaded.info);
  out.report["result"] = {
      {"kernel", describe(cfg.train.kernel)},
      {"lambda", trace.lambda},
      {"steps", cfg.train.steps},
      {"step_size", cfg.train.step_size},
      {"batch", cfg.train.batch},
      {"final", {{"supervised", last.supervised}, {"penalty", last.penalty}, {"total", last.total}}},
      {"mixture_weights", {trace.weights.w0, trace.weights.w1}},
      {"W", detail::to_json(trace.W)},
      {"head", {{"weights", detail::to_json(trace.head.weights)}, {"bias", trace.head.bias}}},
      {"evaluation", detail::to_json(evaluate_model(loaded.data, trace, cfg.train.kernel))},
      {"trace_csv", "trace.csv"}};
  out.files.push_back({"trace.csv", detail::rows_csv(records)});
  return out;
}

inline CommandResult cmd_sweep(const Config& cfg) {
  const PopulationSpec& pop = detail::require_population(cfg, "sweep");
  const SweepReport rep = lambda_sweep(pop, cfg.sweep.lambdas, cfg.train, cfg.seed, cfg.data.n);
  ojson rows = ojson::array();
  for (const auto& r : rep.rows) rows.push_back(detail::to_json(r));
  const auto& last = rep.rows.back();
  CommandResult out;
  out.report = detail::envelope("sweep", cfg, {{"source", "population"}, {"n", rep.n}, {"dim", pop.dim}});
  out.report["result"] = {{"kernel", describe(cfg.train.kernel)},
                          {"rows", rows},
                          {"spearman_lambda_eok2", rep.spearman_lambda_eok2},
                          {"largest_lambda_floor_slack", last.sup_dp - last.dp_floor},
                          {"frontier_csv", "frontier.csv"}};
  out.files.push_back({"frontier.csv", detail::rows_csv(rows)});
  return out;
}

/// Runs `command`, then stamps the report's single time-dependent key.
inline CommandResult run_command(const std::string& command, const Config& cfg) {
  static const std::map<std::string, CommandResult (*)(const Config&)> table{
      {"generate", cmd_generate}, {"metrics", cmd_metrics}, {"eok", cmd_eok},     {"bounds", cmd_bounds},
      {"concentration", cmd_concentration}, {"train", cmd_train}, {"sweep", cmd_sweep}};
  const auto it = table.find(command);
  require(it != table.end(), ErrorKind::validation, "unknown command '" + command + "'");
  const std::string started = detail::utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  CommandResult out;
  try {
    out = it->second(cfg);
  } catch (const Error& e) {
    std::string msg = e.what();
    const auto colon = msg.find(" error: ");
    if (colon != std::string::npos) msg = msg.substr(colon + 8);
    throw Error(e.kind(), command + ": " + msg);
  }
  out.report["timestamp"] = {
      {"started_utc", started},
      {"wall_clock_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()}};
  return out;
}

/// Plain-text rendering: one "path value" line per scalar leaf.
inline std::string render_table(const ojson& report) {
  std::ostringstream os;
  const std::function<void(const std::string&, const ojson&)> walk = [&](const std::string& path, const ojson& v) {
    if (v.is_object()) {
      for (const auto& [k, x] : v.items()) walk(path.empty() ? k : path + "." + k, x);
    } else if (v.is_array() && !v.empty() && (v.front().is_object() || v.front().is_array())) {
      for (std::size_t i = 0; i < v.size(); ++i) walk(path + "[" + std::to_string(i) + "]", v[i]);
    } else {
      std::string text = v.is_string() ? v.get<std::string>() : v.dump();
      if (v.is_number_float()) text = format_real(v.get<double>());
      os << path << std::string(path.size() < 44 ? 44 - path.size() : 1, ' ') << text << '\n';
    }
  };
  walk("", report);
  return os.str();
}

}  // namespace eokfair::cli
