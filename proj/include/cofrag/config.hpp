// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cofrag/bounds.hpp"
#include "cofrag/dislocation.hpp"
#include "cofrag/error.hpp"
#include "cofrag/kernels.hpp"
#include "cofrag/mass_sequence.hpp"
#include "cofrag/simulator.hpp"

namespace cofrag {

using Json = nlohmann::ordered_json;

enum class Mode { kSimulate, kCouple, kVerify, kOracle, kBounds };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::kSimulate: return "simulate";
    case Mode::kCouple: return "couple";
    case Mode::kVerify: return "verify";
    case Mode::kOracle: return "oracle";
    case Mode::kBounds: return "bounds";
  }
  return "unknown";
}

/// Accepts both the CLI verbs and the long mode names.
inline std::optional<Mode> parse_mode(const std::string& s) {
  if (s == "simulate") return Mode::kSimulate;
  if (s == "couple") return Mode::kCouple;
  if (s == "verify" || s == "verify-inequalities") return Mode::kVerify;
  if (s == "oracle" || s == "oracle-compare") return Mode::kOracle;
  if (s == "bounds" || s == "bounds-report") return Mode::kBounds;
  return std::nullopt;
}

struct CouplingOptions {
  std::size_t level_first = 0;   // 0 = full measure
  std::size_t level_second = 0;
  std::size_t perturb_index = 1;  // 1-based
  double perturb_delta = 0.0;
  bool truncate_initial = false;  // start the members from m^p and m^q
};

struct OracleOptions {
  std::size_t max_jumps = 8;
  std::string observable = "count_coalesced";
  double tolerance = 0.02;
};

struct VerifyOptions {
  std::uint64_t cases = 10000;
  int permutations = 100;
};

struct OutputOptions {
  std::string dir = "cofrag-out";
  std::string format = "csv";
  bool record_events = true;
};

struct ExperimentSpec {
  Mode mode = Mode::kSimulate;
  SimConfig sim;
  CouplingOptions coupling;
  OracleOptions oracle;
  VerifyOptions verify;
  OutputOptions output;
  Json normalized;  // full spec with defaults and derived constants
};

/// Thrown by parse_spec with every problem found, each prefixed by its
/// config path.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> issues)
      : Error(ErrorKind::kConfiguration, join(issues)), issues_(std::move(issues)) {}
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string s = std::to_string(v.size()) + " problem(s)";
    for (const auto& x : v) s += "\n  " + x;
    return s;
  }
  std::vector<std::string> issues_;
};

namespace detail {

class IssueList {
 public:
  void add(const std::string& path, const std::string& msg) { issues_.push_back(path + ": " + msg); }
  bool empty() const { return issues_.empty(); }
  std::vector<std::string> take() { return std::move(issues_); }

  /// Runs fn, recording any exception under `path`. Returns false on failure.
  template <class Fn>
  bool guard(const std::string& path, Fn&& fn) {
    try {
      fn();
      return true;
    } catch (const Error& e) {
      add(path, e.what());
    } catch (const nlohmann::json::exception& e) {
      add(path, e.what());
    }
    return false;
  }

 private:
  std::vector<std::string> issues_;
};

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& path,
                       IssueList& issues) {
  if (!j.is_object()) {
    issues.add(path, "expected an object");
    return;
  }
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) issues.add(path + "/" + k, "unknown key");
}

inline double get_number(const Json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  require(v.is_number(), ErrorKind::kConfiguration, "'" + key + "' must be a number");
  return v.get<double>();
}

inline double need_number(const Json& j, const std::string& key) {
  require(j.contains(key), ErrorKind::kConfiguration, "missing '" + key + "'");
  return get_number(j, key, 0.0);
}

inline std::uint64_t get_count(const Json& j, const std::string& key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  require(v.is_number_integer() && v.get<long long>() >= 0, ErrorKind::kConfiguration,
          "'" + key + "' must be a non-negative integer");
  return v.get<std::uint64_t>();
}

inline MassSequence parse_initial(const Json& j, IssueList& issues) {
  const std::string path = "/initial";
  check_keys(j, {"masses", "uniform", "geometric"}, path, issues);
  MassSequence m;
  const int forms = static_cast<int>(j.contains("masses")) + static_cast<int>(j.contains("uniform")) +
                    static_cast<int>(j.contains("geometric"));
  if (forms != 1) {
    issues.add(path, "give exactly one of 'masses', 'uniform', 'geometric'");
    return m;
  }
  issues.guard(path, [&] {
    if (j.contains("masses")) {
      m = MassSequence::reorder(j.at("masses").get<std::vector<double>>());
    } else if (j.contains("uniform")) {
      const auto& u = j.at("uniform");
      const double mass = get_number(u, "mass", 1.0);
      require(mass > 0.0, ErrorKind::kInvalidMass, "uniform mass must be > 0");
      m = MassSequence::uniform(get_count(u, "count", 1), mass);
    } else {
      const auto& g = j.at("geometric");
      const auto count = get_count(g, "count", 1);
      const double first = get_number(g, "first", 1.0);
      const double ratio = get_number(g, "ratio", 0.5);
      require(first > 0.0 && ratio > 0.0 && ratio <= 1.0, ErrorKind::kInvalidMass,
              "geometric masses need first > 0 and ratio in (0, 1]");
      std::vector<double> xs;
      for (std::uint64_t k = 0; k < count; ++k) xs.push_back(first * std::pow(ratio, static_cast<double>(k)));
      m = MassSequence::reorder(xs);
    }
  });
  return m;
}

inline std::optional<CoagulationKernel> parse_coag(const Json& j, IssueList& issues) {
  const std::string path = "/coagulation";
  std::optional<CoagulationKernel> k;
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    issues.add(path, "needs a string 'kind'");
    return k;
  }
  const auto kind = j.at("kind").get<std::string>();
  issues.guard(path, [&] {
    if (kind == "constant") {
      check_keys(j, {"kind", "value"}, path, issues);
      k = CoagulationKernel::constant(get_number(j, "value", 1.0));
    } else if (kind == "sum_power") {
      check_keys(j, {"kind", "alpha", "beta", "scale"}, path, issues);
      k = CoagulationKernel::sum_power(need_number(j, "alpha"), need_number(j, "beta"), get_number(j, "scale", 1.0));
    } else if (kind == "cross_power") {
      check_keys(j, {"kind", "alpha", "beta", "scale"}, path, issues);
      k = CoagulationKernel::cross_power(need_number(j, "alpha"), need_number(j, "beta"), get_number(j, "scale", 1.0));
    } else if (kind == "product_sum") {
      check_keys(j, {"kind", "alpha", "beta", "scale"}, path, issues);
      k = CoagulationKernel::product_sum(need_number(j, "alpha"), need_number(j, "beta"), get_number(j, "scale", 1.0));
    } else if (kind == "sum_power_diff") {
      check_keys(j, {"kind", "alpha", "beta", "gamma", "scale"}, path, issues);
      k = CoagulationKernel::sum_power_diff(need_number(j, "alpha"), need_number(j, "beta"),
                                            need_number(j, "gamma"), get_number(j, "scale", 1.0));
    } else if (kind == "exp_sum") {
      check_keys(j, {"kind", "lambda", "alpha", "beta", "scale"}, path, issues);
      k = CoagulationKernel::exp_sum(need_number(j, "lambda"), need_number(j, "alpha"), need_number(j, "beta"),
                                     get_number(j, "scale", 1.0));
    } else {
      throw Error(ErrorKind::kConfiguration, "unknown coagulation kernel '" + kind +
                                                 "' (constant, sum_power, cross_power, product_sum, "
                                                 "sum_power_diff, exp_sum)");
    }
  });
  return k;
}

inline std::optional<FragmentationKernel> parse_frag(const Json& j, IssueList& issues) {
  const std::string path = "/fragmentation";
  std::optional<FragmentationKernel> f;
  if (!j.is_object() || !j.contains("kind") || !j.at("kind").is_string()) {
    issues.add(path, "needs a string 'kind'");
    return f;
  }
  const auto kind = j.at("kind").get<std::string>();
  issues.guard(path, [&] {
    if (kind == "constant") {
      check_keys(j, {"kind", "value"}, path, issues);
      f = FragmentationKernel::constant(get_number(j, "value", 1.0));
    } else if (kind == "power") {
      check_keys(j, {"kind", "alpha", "scale"}, path, issues);
      f = FragmentationKernel::power(need_number(j, "alpha"), get_number(j, "scale", 1.0));
    } else {
      throw Error(ErrorKind::kConfiguration,
                  "unknown fragmentation kernel '" + kind + "' (constant, power)");
    }
  });
  return f;
}

inline std::optional<DislocationMeasure> parse_beta(const Json& j, IssueList& issues) {
  const std::string path = "/dislocation";
  std::optional<DislocationMeasure> b;
  check_keys(j, {"preset", "atoms"}, path, issues);
  if (j.contains("preset") == j.contains("atoms")) {
    issues.add(path, "give exactly one of 'preset', 'atoms'");
    return b;
  }
  if (j.contains("preset")) {
    issues.guard(path + "/preset", [&] { b = DislocationMeasure::preset(j.at("preset").get<std::string>()); });
    return b;
  }
  const auto& atoms = j.at("atoms");
  if (!atoms.is_array()) {
    issues.add(path + "/atoms", "expected a list");
    return b;
  }
  std::vector<DislocationAtom> list;
  bool ok = true;
  for (std::size_t k = 0; k < atoms.size(); ++k) {
    const std::string apath = path + "/atoms/" + std::to_string(k);
    check_keys(atoms[k], {"ratios", "weight"}, apath, issues);
    ok = issues.guard(apath, [&] {
      list.push_back(DislocationAtom::make(atoms[k].at("ratios").get<std::vector<double>>(),
                                           get_number(atoms[k], "weight", 1.0)));
    }) && ok;
  }
  if (ok) b = DislocationMeasure(std::move(list));
  return b;
}

inline Json kernel_json(const std::string& kind, const ParameterList& params) {
  Json j;
  j["kind"] = kind;
  for (const auto& [k, v] : params) j[k] = v;
  return j;
}

}  // namespace detail

/// Parses and validates a JSON experiment description. Every problem is
/// collected before failing. `mode_override` is the CLI verb, if any.
inline ExperimentSpec parse_spec(const Json& raw, std::optional<Mode> mode_override = std::nullopt) {
  detail::IssueList issues;
  ExperimentSpec spec;
  if (!raw.is_object()) throw ValidationError({"/: the configuration must be a JSON object"});
  detail::check_keys(raw,
                     {"mode", "seed", "replicas", "horizon", "lambda", "stop_norm", "initial", "coagulation",
                      "fragmentation", "dislocation", "coupling", "oracle", "verify", "output", "comment"},
                     "", issues);

  if (raw.contains("mode")) {
    const auto m = raw.at("mode").is_string() ? parse_mode(raw.at("mode").get<std::string>()) : std::nullopt;
    if (!m)
      issues.add("/mode", "unknown mode (simulate, couple, verify, oracle, bounds)");
    else if (mode_override && *mode_override != *m)
      issues.add("/mode", std::string("config is for '") + to_string(*m) + "' but the verb is '" +
                              to_string(*mode_override) + "'");
    else
      spec.mode = *m;
  } else if (!mode_override) {
    issues.add("/mode", "missing (or give a CLI verb)");
  }
  if (mode_override) spec.mode = *mode_override;

  auto& sim = spec.sim;
  if (!raw.contains("seed"))
    issues.add("/seed", "missing: the seed must be explicit");
  else
    issues.guard("/seed", [&] { sim.seed = detail::get_count(raw, "seed", 0); });
  issues.guard("/replicas", [&] {
    sim.replicas = detail::get_count(raw, "replicas", 1);
    detail::require(sim.replicas >= 1, ErrorKind::kConfiguration, "must be >= 1");
  });
  issues.guard("/horizon", [&] {
    sim.horizon = detail::get_number(raw, "horizon", 1.0);
    detail::require(std::isfinite(sim.horizon) && sim.horizon >= 0.0, ErrorKind::kConfiguration,
                    "must be finite and >= 0");
  });
  bool lambda_ok = issues.guard("/lambda", [&] {
    sim.lambda = detail::get_number(raw, "lambda", 1.0);
    detail::require(sim.lambda > 0.0 && sim.lambda <= 1.0, ErrorKind::kConfiguration,
                    "lambda must lie in (0, 1], got " + std::to_string(sim.lambda));
  });
  if (raw.contains("stop_norm"))
    issues.guard("/stop_norm", [&] { sim.stop_norm = detail::get_number(raw, "stop_norm", 0.0); });

  const bool needs_system = spec.mode != Mode::kVerify;
  std::optional<CoagulationKernel> coag;
  std::optional<FragmentationKernel> frag;
  std::optional<DislocationMeasure> beta;
  if (needs_system) {
    if (!raw.contains("initial"))
      issues.add("/initial", "missing");
    else
      sim.initial = detail::parse_initial(raw.at("initial"), issues);
    coag = raw.contains("coagulation") ? detail::parse_coag(raw.at("coagulation"), issues)
                                       : CoagulationKernel::constant(0.0);
    frag = raw.contains("fragmentation") ? detail::parse_frag(raw.at("fragmentation"), issues)
                                         : FragmentationKernel::constant(0.0);
    beta = raw.contains("dislocation") ? detail::parse_beta(raw.at("dislocation"), issues) : DislocationMeasure();
    if (coag) sim.coag = *coag;
    if (frag) sim.frag = *frag;
    if (beta) sim.beta = *beta;

    if (coag && lambda_ok && sim.lambda > coag->holder_index() * (1 + 1e-12))
      issues.add("/lambda", "lambda " + std::to_string(sim.lambda) +
                                " exceeds the Hölder index " + std::to_string(coag->holder_index()) +
                                " of the coagulation kernel");
    if (beta && lambda_ok) {
      const auto b = beta->bounds(sim.lambda);
      if (!b.pointwise_ok || !b.integrals_ok)
        issues.add("/dislocation", "moment inequalities of the dislocation measure fail numerically");
    }
    if (sim.stop_norm && lambda_ok) {
      const double n0 = norm(sim.initial, sim.lambda);
      if (!(*sim.stop_norm > n0))
        issues.add("/stop_norm", "must exceed the initial lambda-norm " + std::to_string(n0));
    }
  }

  if (raw.contains("coupling")) {
    const auto& c = raw.at("coupling");
    detail::check_keys(c, {"levels", "perturb", "truncate_initial"}, "/coupling", issues);
    issues.guard("/coupling", [&] {
      if (c.contains("levels")) {
        const auto lv = c.at("levels").get<std::vector<std::size_t>>();
        detail::require(lv.size() == 2, ErrorKind::kConfiguration, "'levels' must be [p, q]");
        spec.coupling.level_first = lv[0];
        spec.coupling.level_second = lv[1];
      }
      if (c.contains("perturb")) {
        const auto& p = c.at("perturb");
        spec.coupling.perturb_index = detail::get_count(p, "index", 1);
        spec.coupling.perturb_delta = detail::get_number(p, "delta", 0.0);
      }
      if (c.contains("truncate_initial")) spec.coupling.truncate_initial = c.at("truncate_initial").get<bool>();
    });
  }
  if (spec.mode == Mode::kCouple) {
    const auto& c = spec.coupling;
    const bool p0 = c.level_first == 0, q0 = c.level_second == 0;
    if (!q0 && (p0 || c.level_first > c.level_second))
      issues.add("/coupling/levels", "need p <= q (0 means the full measure and counts as infinite)");
    if (c.perturb_index < 1 || (needs_system && c.perturb_index > std::max<std::size_t>(sim.initial.size(), 1)))
      issues.add("/coupling/perturb/index", "must address an existing particle (1-based)");
    if (needs_system && c.perturb_index >= 1 && c.perturb_index <= sim.initial.size() &&
        !(sim.initial.at(c.perturb_index) + c.perturb_delta > 0.0))
      issues.add("/coupling/perturb/delta", "perturbed mass must stay > 0");
    if (c.truncate_initial && (p0 || q0))
      issues.add("/coupling/truncate_initial", "needs explicit levels p and q");
    if (!sim.stop_norm && p0 && q0)
      issues.add("/stop_norm", "couple mode needs stop_norm (the localisation level x of the bound)");
  }
  if (raw.contains("oracle")) {
    const auto& o = raw.at("oracle");
    detail::check_keys(o, {"max_jumps", "observable", "tolerance"}, "/oracle", issues);
    issues.guard("/oracle", [&] {
      spec.oracle.max_jumps = detail::get_count(o, "max_jumps", 8);
      if (o.contains("observable")) spec.oracle.observable = o.at("observable").get<std::string>();
      spec.oracle.tolerance = detail::get_number(o, "tolerance", 0.02);
    });
    const auto& ob = spec.oracle.observable;
    if (ob != "count" && ob != "count_coalesced" && ob != "state")
      issues.add("/oracle/observable", "unknown observable '" + ob + "' (count, count_coalesced, state)");
  }
  if (raw.contains("verify")) {
    const auto& v = raw.at("verify");
    detail::check_keys(v, {"cases", "permutations"}, "/verify", issues);
    issues.guard("/verify", [&] {
      spec.verify.cases = detail::get_count(v, "cases", 10000);
      spec.verify.permutations = static_cast<int>(detail::get_count(v, "permutations", 100));
    });
  }
  if (raw.contains("output")) {
    const auto& o = raw.at("output");
    detail::check_keys(o, {"dir", "format", "record_events"}, "/output", issues);
    issues.guard("/output", [&] {
      if (o.contains("dir")) spec.output.dir = o.at("dir").get<std::string>();
      if (o.contains("format")) spec.output.format = o.at("format").get<std::string>();
      if (o.contains("record_events")) spec.output.record_events = o.at("record_events").get<bool>();
    });
    if (spec.output.format != "csv" && spec.output.format != "json-lines")
      issues.add("/output/format", "must be 'csv' or 'json-lines'");
  }

  if (!issues.empty()) throw ValidationError(issues.take());
  return spec;
}

/// Builds the normalized spec (defaults filled in, derived constants added).
/// Call after any CLI overrides have been applied.
inline void normalize(ExperimentSpec& spec) {
  const auto& sim = spec.sim;
  Json j;
  j["mode"] = to_string(spec.mode);
  j["seed"] = sim.seed;
  j["replicas"] = sim.replicas;
  j["horizon"] = sim.horizon;
  j["lambda"] = sim.lambda;
  j["stop_norm"] = sim.stop_norm ? Json(*sim.stop_norm) : Json(nullptr);
  j["initial"]["masses"] = std::vector<double>(sim.initial.begin(), sim.initial.end());
  j["coagulation"] = detail::kernel_json(sim.coag.kind(), sim.coag.parameters());
  j["fragmentation"] = detail::kernel_json(sim.frag.kind(), sim.frag.parameters());
  Json atoms = Json::array();
  for (const auto& a : sim.beta.atoms())
    atoms.push_back({{"ratios", std::vector<double>(a.ratios().begin(), a.ratios().end())}, {"weight", a.weight()}});
  j["dislocation"]["atoms"] = atoms;
  j["coupling"] = {{"levels", {spec.coupling.level_first, spec.coupling.level_second}},
                   {"perturb", {{"index", spec.coupling.perturb_index}, {"delta", spec.coupling.perturb_delta}}},
                   {"truncate_initial", spec.coupling.truncate_initial}};
  j["oracle"] = {{"max_jumps", spec.oracle.max_jumps},
                 {"observable", spec.oracle.observable},
                 {"tolerance", spec.oracle.tolerance}};
  j["verify"] = {{"cases", spec.verify.cases}, {"permutations", spec.verify.permutations}};
  j["output"] = {{"format", spec.output.format}, {"record_events", spec.output.record_events}};

  if (spec.mode != Mode::kVerify) {
    Json d;
    const double mass = norm(sim.initial, 1.0);
    d["beta_total"] = sim.beta.total_mass();
    d["c_beta_lambda"] = sim.beta.c_beta_lambda(sim.lambda);
    d["max_fragments"] = sim.beta.max_fragments();
    d["support_level"] = sim.beta.empty() ? 1 : sim.beta.support_level();
    d["initial_mass"] = mass;
    d["initial_norm_lambda"] = norm(sim.initial, sim.lambda);
    d["coag_holder_index"] = sim.coag.holder_index();
    d["coag_catalog_lambda"] = sim.coag.catalog_lambda();
    d["frag_holder_index"] = sim.frag.holder_index();
    if (mass > 0.0) {
      d["k_bar"] = sim.coag.sup_box(mass);
      d["f_bar"] = sim.frag.sup_box(mass);
      d["kappa_a"] = sim.coag.holder_constant(mass, sim.lambda);
      d["mu_a"] = sim.frag.holder_constant(mass);
      d["holder_constants_fitted"] = sim.coag.fitted();
    }
    Json tails = Json::array();
    const std::size_t top = sim.beta.empty() ? 1 : sim.beta.support_level();
    for (std::size_t n = 1; n <= top; ++n) {
      const auto [a, b] = sim.beta.truncation_tails(n, sim.lambda);
      tails.push_back({{"level", n}, {"A", a}, {"B", b}});
    }
    d["truncation_tails"] = tails;
    j["derived"] = d;
  }
  spec.normalized = j;
}

inline ExperimentSpec load_spec_file(const std::string& path, std::optional<Mode> mode_override = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ValidationError({path + ": cannot open configuration file"});
  Json raw;
  try {
    raw = Json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError({path + ": " + e.what()});
  }
  return parse_spec(raw, mode_override);
}

}  // namespace cofrag
