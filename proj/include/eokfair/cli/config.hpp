#pragma once

// JSON experiment configuration. Every field is addressed by a dotted path so
// that validation errors name the offending entry, e.g.
//   validation error: data.population.p_y_given_s[1]: row does not sum to 1

#include "eokfair/complexity.hpp"
#include "eokfair/error.hpp"
#include "eokfair/frl.hpp"
#include "eokfair/kernels.hpp"
#include "eokfair/synth.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace eokfair::cli {

using json = nlohmann::json;

inline constexpr int kConfigVersion = 1;

namespace detail {

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorKind::validation, path + ": " + what);
}

inline std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
inline std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline const json* find(const json& obj, const std::string& key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

inline void expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
}

/// Rejects keys outside `allowed`, catching typos that would otherwise be ignored.
inline void only_keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
  expect_object(j, path);
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) fail(join(path, k), "unknown key");
}

inline double real(const json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(path, "must be finite");
  return v;
}

inline double real(const json& obj, const std::string& path, const std::string& key, double fallback) {
  const json* v = find(obj, key);
  return v ? real(*v, join(path, key)) : fallback;
}

inline std::uint64_t count(const json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) fail(path, "expected a nonnegative integer");
  return j.get<std::uint64_t>();
}

inline std::uint64_t count(const json& obj, const std::string& path, const std::string& key, std::uint64_t fallback) {
  const json* v = find(obj, key);
  return v ? count(*v, join(path, key)) : fallback;
}

inline std::string text(const json& obj, const std::string& path, const std::string& key, const std::string& fallback) {
  const json* v = find(obj, key);
  if (!v) return fallback;
  if (!v->is_string()) fail(join(path, key), "expected a string");
  return v->get<std::string>();
}

inline std::vector<double> reals(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(real(j[i], index(path, i)));
  return out;
}

inline Matrix matrix(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of rows");
  const auto first = reals(j[0], index(path, 0));
  Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(first.size()));
  for (std::size_t r = 0; r < j.size(); ++r) {
    const auto row = reals(j[r], index(path, r));
    if (row.size() != first.size()) fail(index(path, r), "rows must have equal length");
    for (std::size_t c = 0; c < row.size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
  }
  return m;
}

/// Rethrows library errors with the config path prefixed.
template <class F>
auto at_path(const std::string& path, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    std::string msg = e.what();
    const auto colon = msg.find(" error: ");
    if (colon != std::string::npos) msg = msg.substr(colon + 8);
    throw Error(e.kind() == ErrorKind::parameter ? ErrorKind::validation : e.kind(), path + ": " + msg);
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sections

/// {"family": "rbf", "sigma": 1} | {"family": "laplacian", "sigma": 1, "dim": 2}
/// | {"family": "linear", "radius": 1} | {"family": "product", "split": 1, "first": {...}, "second": {...}}
/// | {"family": "sum", "first": {...}, "second": {...}}
inline KernelSpec parse_kernel(const json& j, const std::string& path) {
  using namespace detail;
  expect_object(j, path);
  const std::string family = text(j, path, "family", "");
  if (family == "rbf") {
    only_keys(j, path, {"family", "sigma"});
    return at_path(join(path, "sigma"), [&] { return KernelSpec::rbf(real(j, path, "sigma", 1.0)); });
  }
  if (family == "laplacian") {
    only_keys(j, path, {"family", "sigma", "dim"});
    const double sigma = real(j, path, "sigma", 1.0);
    const auto dim = static_cast<Eigen::Index>(count(j, path, "dim", 1));
    return at_path(path, [&] { return KernelSpec::laplacian(sigma, dim); });
  }
  if (family == "linear") {
    only_keys(j, path, {"family", "radius"});
    const json* r = find(j, "radius");
    if (!r) fail(join(path, "radius"), "required for the linear kernel");
    return at_path(join(path, "radius"), [&] { return KernelSpec::linear(real(*r, join(path, "radius"))); });
  }
  if (family == "product" || family == "sum") {
    if (family == "product") only_keys(j, path, {"family", "split", "first", "second"});
    else only_keys(j, path, {"family", "first", "second"});
    const json* a = find(j, "first");
    const json* b = find(j, "second");
    if (!a) fail(join(path, "first"), "required");
    if (!b) fail(join(path, "second"), "required");
    const KernelSpec ka = parse_kernel(*a, join(path, "first"));
    const KernelSpec kb = parse_kernel(*b, join(path, "second"));
    if (family == "sum") return KernelSpec::sum(ka, kb);
    const auto split = static_cast<Eigen::Index>(count(j, path, "split", 0));
    return at_path(join(path, "split"), [&] { return KernelSpec::product(ka, kb, split); });
  }
  fail(join(path, "family"), "expected one of rbf, laplacian, linear, product, sum");
}

/// {"pi_s": 0.5, "p_y_given_s": [[p00, p10], [p01, p11]],
///  "cells": {"s0y0": {"mean": [...], "cov": [[...]] | "var": v}, "s0y1": ..., "s1y0": ..., "s1y1": ...}}
/// Row s of p_y_given_s lists Pr(Y=0|S=s), Pr(Y=1|S=s).
inline PopulationSpec parse_population(const json& j, const std::string& path) {
  using namespace detail;
  only_keys(j, path, {"pi_s", "p_y_given_s", "cells"});
  PopulationSpec spec;
  spec.pi_s = real(j, path, "pi_s", 0.5);
  if (!(spec.pi_s > 0.0 && spec.pi_s < 1.0)) fail(join(path, "pi_s"), "must lie in (0, 1)");

  const std::string ppath = join(path, "p_y_given_s");
  const json* p = find(j, "p_y_given_s");
  if (!p) fail(ppath, "required");
  if (!p->is_array() || p->size() != 2) fail(ppath, "expected two rows");
  for (std::size_t s = 0; s < 2; ++s) {
    const auto row = reals((*p)[s], index(ppath, s));
    if (row.size() != 2) fail(index(ppath, s), "expected two entries");
    if (row[0] < 0.0 || row[1] < 0.0) fail(index(ppath, s), "entries must be nonnegative");
    if (std::abs(row[0] + row[1] - 1.0) > 1e-12) fail(index(ppath, s), "row does not sum to 1");
    spec.p_y_given_s[s] = {row[0], row[1]};
  }

  const std::string cpath = join(path, "cells");
  const json* cells = find(j, "cells");
  if (!cells) fail(cpath, "required");
  only_keys(*cells, cpath, {"s0y0", "s0y1", "s1y0", "s1y1"});
  std::optional<Eigen::Index> dim;
  for (int s = 0; s < 2; ++s)
    for (int y = 0; y < 2; ++y) {
      const std::string key = "s" + std::to_string(s) + "y" + std::to_string(y);
      const std::string cp = join(cpath, key);
      const json* c = find(*cells, key);
      if (!c) fail(cp, "required");
      only_keys(*c, cp, {"mean", "cov", "var"});
      CellGaussian g;
      const json* mean = find(*c, "mean");
      if (!mean) fail(join(cp, "mean"), "required");
      const auto m = reals(*mean, join(cp, "mean"));
      g.mean = Eigen::Map<const Vector>(m.data(), static_cast<Eigen::Index>(m.size()));
      const json* cov = find(*c, "cov");
      const json* var = find(*c, "var");
      if ((cov != nullptr) == (var != nullptr)) fail(cp, "give exactly one of cov, var");
      if (cov) {
        g.cov = matrix(*cov, join(cp, "cov"));
      } else {
        const double v = real(*var, join(cp, "var"));
        if (!(v > 0.0)) fail(join(cp, "var"), "must be positive");
        g.cov = v * DenseMatrix::Identity(g.mean.size(), g.mean.size());
      }
      if (dim && *dim != g.mean.size()) fail(join(cp, "mean"), "dimension differs from the other cells");
      dim = g.mean.size();
      at_path(cp, [&] { g.validate(); });
      spec.cells[static_cast<std::size_t>(s)][static_cast<std::size_t>(y)] = std::move(g);
    }
  spec.dim = *dim;
  spec.validate();
  return spec;
}

/// Exactly one data source: an inline population sampled with the run seed, or a CSV file.
struct DataSection {
  std::optional<PopulationSpec> population;
  std::size_t n = 0;
  std::string path;
  std::string score_column;  // optional extra CSV column with classifier scores
};

inline DataSection parse_data(const json& j, const std::string& path) {
  using namespace detail;
  only_keys(j, path, {"population", "n", "path", "score_column"});
  DataSection d;
  const json* pop = find(j, "population");
  const json* file = find(j, "path");
  if ((pop != nullptr) == (file != nullptr)) fail(path, "give exactly one of population, path");
  if (pop) {
    d.population = parse_population(*pop, join(path, "population"));
    d.n = count(j, path, "n", 0);
    if (d.n < 4) fail(join(path, "n"), "required with population and must be >= 4");
    if (find(j, "score_column")) fail(join(path, "score_column"), "only valid with path");
  } else {
    d.path = text(j, path, "path", "");
    if (d.path.empty()) fail(join(path, "path"), "must be a nonempty string");
    if (find(j, "n")) fail(join(path, "n"), "only valid with population");
    d.score_column = text(j, path, "score_column", "");
  }
  return d;
}

struct MetricsSection {
  std::string classifier = "witness";  // witness | constant | scores | head
  double constant = 0.5;
  std::string head_report;  // train report providing W and the logistic head
  int bins = 10;
};

struct EokSection {
  std::size_t m0 = 0;  // bootstrap draws per group; 0 selects n_s
  std::size_t m1 = 0;
  std::optional<MixtureWeights> weights;  // spec-given (p_{0|0}, p_{1|0}); empirical when absent
};

struct Tolerances {
  double unbiased_equality = 0.02;
  double biased_lower = 0.03;
  double ba = 0.01;
  double calibration = 0.05;
  double tvd = 1e-9;
};

inline const std::vector<std::string>& all_clauses() {
  static const std::vector<std::string> names{"unbiased_equality", "biased_lower", "ba", "calibration", "tvd"};
  return names;
}

struct BoundsSection {
  std::vector<std::string> clauses;  // empty: every clause whose precondition the data meets
  Tolerances tol;
  std::size_t ba_trials = 50;
  double unbiased_threshold = 0.02;
  KernelSpec score_kernel = KernelSpec::sum(KernelSpec::linear(1.0), KernelSpec::rbf(0.5));
  KernelSpec label_kernel = KernelSpec::rbf(1.0);
};

struct ConcentrationSection {
  std::vector<std::size_t> n_grid{100, 200, 400, 800, 1600, 3200, 6400};
  std::size_t trials = 60;
  double delta = 0.05;
  std::size_t complexity_trials = kMinComplexityTrials;
  std::vector<Matrix> encoder_grid;  // empty: the identity map
};

struct SweepSection {
  std::vector<double> lambdas{0.0, 0.1, 1.0, 10.0, 100.0};
};

struct Config {
  int version = kConfigVersion;
  std::uint64_t seed = 0;
  DataSection data;
  KernelSpec kernel = KernelSpec::rbf(1.0);
  MetricsSection metrics;
  EokSection eok;
  BoundsSection bounds;
  ConcentrationSection concentration;
  TrainConfig train;
  SweepSection sweep;
  json raw;  // parsed document with the effective seed, for digests and provenance
};

inline MetricsSection parse_metrics(const json& j, const std::string& path) {
  using namespace detail;
  only_keys(j, path, {"classifier", "constant", "head_report", "bins"});
  MetricsSection m;
  m.classifier = text(j, path, "classifier", m.classifier);
  if (m.classifier != "witness" && m.classifier != "constant" && m.classifier != "scores" && m.classifier != "head")
    fail(join(path, "classifier"), "expected one of witness, constant, scores, head");
  m.constant = real(j, path, "constant", m.constant);
  if (m.constant < 0.0 || m.constant > 1.0) fail(join(path, "constant"), "must lie in [0, 1]");
  m.head_report = text(j, path, "head_report", "");
  if (m.classifier == "head" && m.head_report.empty()) fail(join(path, "head_report"), "required for classifier head");
  m.bins = static_cast<int>(count(j, path, "bins", 10));
  if (m.bins < 1) fail(join(path, "bins"), "must be >= 1");
  return m;
}

inline EokSection parse_eok(const json& j, const std::string& path) {
  using namespace detail;
  only_keys(j, path, {"m0", "m1", "weights"});
  EokSection e;
  e.m0 = count(j, path, "m0", 0);
  e.m1 = count(j, path, "m1", 0);
  if (const json* w = find(j, "weights")) {
    const auto v = reals(*w, join(path, "weights"));
    if (v.size() != 2) fail(join(path, "weights"), "expected [p_{0|0}, p_{1|0}]");
    MixtureWeights mw{v[0], v[1]};
    at_path(join(path, "weights"), [&] { mw.validate(); });
    e.weights = mw;
  }
  return e;
}

inline BoundsSection parse_bounds(const json& j, const std::string& path) {
  using namespace detail;
  only_keys(j, path, {"clauses", "tolerances", "ba_trials", "unbiased_threshold", "score_kernel", "label_kernel"});
  BoundsSection b;
  if (const json* c = find(j, "clauses")) {
    if (!c->is_array()) fail(join(path, "clauses"), "expected an array of clause names");
    for (std::size_t i = 0; i < c->size(); ++i) {
      const auto& v = (*c)[i];
      const auto& names = all_clauses();
      if (!v.is_string() || std::find(names.begin(), names.end(), v.get<std::string>()) == names.end())
        fail(index(join(path, "clauses"), i), "expected one of unbiased_equality, biased_lower, ba, calibration, tvd");
      b.clauses.push_back(v.get<std::string>());
    }
  }
  if (const json* t = find(j, "tolerances")) {
    const std::string tp = join(path, "tolerances");
    only_keys(*t, tp, {"unbiased_equality", "biased_lower", "ba", "calibration", "tvd"});
    for (auto [key, slot] : {std::pair{"unbiased_equality", &b.tol.unbiased_equality}, std::pair{"biased_lower", &b.tol.biased_lower},
                             std::pair{"ba", &b.tol.ba}, std::pair{"calibration", &b.tol.calibration}, std::pair{"tvd", &b.tol.tvd}}) {
      *slot = real(*t, tp, key, *slot);
      if (*slot < 0.0) fail(join(tp, key), "must be >= 0");
    }
  }
  b.ba_trials = count(j, path, "ba_trials", b.ba_trials);
  b.unbiased_threshold = real(j, path, "unbiased_threshold", b.unbiased_threshold);
  if (b.unbiased_threshold < 0.0) fail(join(path, "unbiased_threshold"), "must be >= 0");
  if (const json* k = find(j, "score_kernel")) b.score_kernel = parse_kernel(*k, join(path, "score_kernel"));
  if (const json* k = find(j, "label_kernel")) b.label_kernel = parse_kernel(*k, join(path, "label_kernel"));
  return b;
}

inline ConcentrationSection parse_concentration(const json& j, const std::string& path) {
  using namespace detail;
  only_keys(j, path, {"n_grid", "trials", "delta", "complexity_trials", "encoder_grid"});
  ConcentrationSection c;
  if (const json* g = find(j, "n_grid")) {
    if (!g->is_array() || g->empty()) fail(join(path, "n_grid"), "expected a nonempty array of sample sizes");
    c.n_grid.clear();
    for (std::size_t i = 0; i < g->size(); ++i) {
      const auto n = count((*g)[i], index(join(path, "n_grid"), i));
      if (n < 4) fail(index(join(path, "n_grid"), i), "must be >= 4");
      c.n_grid.push_back(n);
    }
  }
  c.trials = count(j, path, "trials", c.trials);
  if (c.trials < 2) fail(join(path, "trials"), "must be >= 2");
  c.delta = real(j, path, "delta", c.delta);
  if (!(c.delta > 0.0 && c.delta < 1.0)) fail(join(path, "delta"), "must lie in (0, 1)");
  c.complexity_trials = count(j, path, "complexity_trials", c.complexity_trials);
  if (c.complexity_trials < kMinComplexityTrials)
    fail(join(path, "complexity_trials"), "must be >= " + std::to_string(kMinComplexityTrials));
  if (const json* g = find(j, "encoder_grid")) {
    if (!g->is_array() || g->empty()) fail(join(path, "encoder_grid"), "expected a nonempty array of matrices");
    for (std::size_t i = 0; i < g->size(); ++i) c.encoder_grid.push_back(matrix((*g)[i], index(join(path, "encoder_grid"), i)));
  }
  return c;
}

inline TrainConfig parse_train(const json& j, const std::string& path, const KernelSpec& kernel) {
  using namespace detail;
  only_keys(j, path, {"lambda", "steps", "step_size", "batch", "encoder_dim", "init_scale"});
  TrainConfig t;
  t.kernel = kernel;
  t.lambda = real(j, path, "lambda", t.lambda);
  t.steps = count(j, path, "steps", t.steps);
  t.step_size = real(j, path, "step_size", t.step_size);
  t.batch = count(j, path, "batch", t.batch);
  t.encoder_dim = static_cast<Eigen::Index>(count(j, path, "encoder_dim", static_cast<std::uint64_t>(t.encoder_dim)));
  t.init_scale = real(j, path, "init_scale", t.init_scale);
  return t;
}

inline SweepSection parse_sweep(const json& j, const std::string& path) {
  using namespace detail;
  only_keys(j, path, {"lambdas"});
  SweepSection s;
  if (const json* l = find(j, "lambdas")) {
    s.lambdas = reals(*l, join(path, "lambdas"));
    if (s.lambdas.size() < 2) fail(join(path, "lambdas"), "need at least two values");
    for (std::size_t i = 0; i < s.lambdas.size(); ++i)
      if (s.lambdas[i] < 0.0) fail(index(join(path, "lambdas"), i), "must be >= 0");
  }
  return s;
}

/// Parses a config document. `seed_override` (from --seed) replaces the
/// document's seed and is recorded in `raw`.
inline Config parse_config(const json& doc, std::optional<std::uint64_t> seed_override = {}) {
  using namespace detail;
  only_keys(doc, "", {"version", "seed", "data", "kernel", "metrics", "eok", "bounds", "concentration", "train", "sweep"});
  Config c;
  c.version = static_cast<int>(count(doc, "", "version", kConfigVersion));
  if (c.version != kConfigVersion) fail("version", "unsupported config version " + std::to_string(c.version));
  c.seed = seed_override ? *seed_override : count(doc, "", "seed", 0);
  const json* data = find(doc, "data");
  if (!data) fail("data", "required");
  c.data = parse_data(*data, "data");
  if (const json* k = find(doc, "kernel")) c.kernel = parse_kernel(*k, "kernel");
  if (const json* m = find(doc, "metrics")) c.metrics = parse_metrics(*m, "metrics");
  if (const json* e = find(doc, "eok")) c.eok = parse_eok(*e, "eok");
  if (const json* b = find(doc, "bounds")) c.bounds = parse_bounds(*b, "bounds");
  if (const json* k = find(doc, "concentration")) c.concentration = parse_concentration(*k, "concentration");
  c.train = parse_train(doc.value("train", json::object()), "train", c.kernel);
  c.train.seed = c.seed;
  if (const json* s = find(doc, "sweep")) c.sweep = parse_sweep(*s, "sweep");
  c.raw = doc;
  c.raw["seed"] = c.seed;
  c.raw["version"] = c.version;
  return c;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::validation, path + ": invalid JSON: " + e.what());
  }
}

/// Relative data paths are resolved against the config file's directory.
inline Config load_config(const std::string& path, std::optional<std::uint64_t> seed_override = {}) {
  Config c = parse_config(read_json_file(path), seed_override);
  if (!c.data.path.empty() && std::filesystem::path(c.data.path).is_relative())
    c.data.path = (std::filesystem::path(path).parent_path() / c.data.path).string();
  return c;
}

}  // namespace eokfair::cli
