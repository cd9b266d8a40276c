// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "cofrag/bounds.hpp"
#include "cofrag/config.hpp"
#include "cofrag/metrics.hpp"
#include "cofrag/oracle.hpp"
#include "cofrag/parallel.hpp"
#include "cofrag/simulator.hpp"
#include "cofrag/stats.hpp"

namespace cofrag {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitVerdict = 4;

inline int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kNumeric:
    case ErrorKind::kTruncation:
    case ErrorKind::kCannotSample:
      return kExitNumeric;
    default:
      return kExitValidation;
  }
}

struct Verdict {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool pass = true;
  bool gating = true;  // informative lines do not change the exit code
};

struct RunOutcome {
  int exit_code = kExitOk;
  std::vector<Verdict> verdicts;
  std::vector<std::string> files;  // paths written, relative to the output dir
};

namespace detail {

inline std::string hex64(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline void write_event_header(std::ostream& os, const std::string& format) {
  if (format == "csv") os << "replica,time,kind,i,j_or_atom,post_count,post_mass,post_norm_lambda,stopped\n";
}

inline void write_events(std::ostream& os, const Trajectory& tr, const std::string& format) {
  for (const auto& e : tr.events) {
    if (format == "csv") {
      os << tr.replica << ',' << fmt17(e.time) << ',' << to_string(e.kind) << ',' << e.i << ',' << e.j_or_atom
         << ',' << e.post_count << ',' << fmt17(e.post_mass) << ',' << fmt17(e.post_norm_lambda) << ','
         << (e.stopped ? 1 : 0) << '\n';
    } else {
      os << "{\"replica\":" << tr.replica << ",\"time\":" << fmt17(e.time) << ",\"kind\":\"" << to_string(e.kind)
         << "\",\"i\":" << e.i << ",\"j_or_atom\":" << e.j_or_atom << ",\"post_count\":" << e.post_count
         << ",\"post_mass\":" << fmt17(e.post_mass) << ",\"post_norm_lambda\":" << fmt17(e.post_norm_lambda)
         << ",\"stopped\":" << (e.stopped ? "true" : "false") << "}\n";
    }
  }
}

inline std::string events_name(const std::string& stem, const std::string& format) {
  return stem + (format == "csv" ? ".csv" : ".jsonl");
}

class Report {
 public:
  Report(const ExperimentSpec& spec, std::uint64_t hash) {
    os_ << "# cofrag report\n";
    os_ << "# mode " << to_string(spec.mode) << "\n";
    os_ << "# config_hash " << hex64(hash) << "\n";
    os_ << "# seed " << spec.sim.seed << "\n";
    os_ << "# replicas " << spec.sim.replicas << "\n";
    std::istringstream lines(spec.normalized.dump(2));
    for (std::string line; std::getline(lines, line);) os_ << "# spec " << line << "\n";
  }

  void value(const std::string& name, double v) { os_ << name << " " << fmt17(v) << "\n"; }
  void text(const std::string& line) { os_ << line << "\n"; }

  void verdict(RunOutcome& out, Verdict v) {
    os_ << "verdict " << v.name << " " << (v.pass ? "PASS" : "FAIL") << " value=" << fmt17(v.value)
        << " bound=" << fmt17(v.bound) << " margin=" << fmt17(v.bound - v.value)
        << (v.gating ? "" : " (informative)") << "\n";
    if (v.gating && !v.pass) out.exit_code = kExitVerdict;
    out.verdicts.push_back(std::move(v));
  }

  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

inline void write_file(const std::filesystem::path& dir, const std::string& name, const std::string& body,
                       RunOutcome& out) {
  std::ofstream f(dir / name, std::ios::binary);
  if (!f) throw Error(ErrorKind::kInput, "cannot write " + (dir / name).string());
  f << body;
  out.files.push_back(name);
}

/// The second initial state of couple mode: `initial` with one mass shifted.
inline MassSequence perturbed(const MassSequence& m, const CouplingOptions& c) {
  std::vector<double> xs(m.begin(), m.end());
  if (c.perturb_index >= 1 && c.perturb_index <= xs.size()) xs[c.perturb_index - 1] += c.perturb_delta;
  return MassSequence::reorder(xs);
}

inline Observable make_observable(const std::string& name, const MassSequence& initial, const StateGraph* g) {
  if (name == "count") return [](const MassSequence& m) { return static_cast<long>(m.size()); };
  if (name == "state")
    return [g](const MassSequence& m) {
      const auto s = g->find(m);
      return s ? static_cast<long>(*s) : -1L;
    };
  const double top = initial.empty() ? 0.0 : initial.at(1);
  return [top](const MassSequence& m) {
    const bool merged = !m.empty() && m.at(1) > top * (1.0 + 1e-12);
    return static_cast<long>(m.size()) * 2 + (merged ? 1 : 0);
  };
}

inline RunOutcome run_simulate(const ExperimentSpec& spec, std::size_t workers, const std::filesystem::path& dir) {
  RunOutcome out;
  const auto& cfg = spec.sim;
  SimOptions opt;
  opt.record_events = spec.output.record_events;
  const auto trs = simulate_replicas(cfg, workers, opt);
  Report rep(spec, config_hash(cfg));

  if (spec.output.record_events) {
    std::ostringstream ev;
    write_event_header(ev, spec.output.format);
    for (const auto& t : trs) write_events(ev, t, spec.output.format);
    write_file(dir, events_name("events", spec.output.format), ev.str(), out);
  }
  std::ostringstream per;
  per << "replica,final_time,final_count,final_mass,sup_norm_lambda,sup_count,coag_count,frag_count,"
         "compensator,stopped,absorbed\n";
  std::vector<double> sup_norm, sup_count, events, comp, final_count;
  double worst_mass_step = 0.0;
  long worst_excess = std::numeric_limits<long>::min();
  std::size_t stopped = 0;
  for (const auto& t : trs) {
    per << t.replica << ',' << fmt17(t.final_time) << ',' << t.final_state.size() << ','
        << fmt17(norm(t.final_state, 1.0)) << ',' << fmt17(t.sup_norm_lambda) << ',' << t.sup_count << ','
        << t.coag_count << ',' << t.frag_count << ',' << fmt17(t.compensator) << ',' << (t.stopped ? 1 : 0)
        << ',' << (t.absorbed ? 1 : 0) << '\n';
    sup_norm.push_back(t.sup_norm_lambda);
    sup_count.push_back(static_cast<double>(t.sup_count));
    events.push_back(static_cast<double>(t.coag_count + t.frag_count));
    comp.push_back(t.compensator);
    final_count.push_back(static_cast<double>(t.final_state.size()));
    for (const auto& e : t.events)
      worst_mass_step = std::max(worst_mass_step, (e.post_mass - e.pre_mass) / std::max(e.pre_mass, 1e-300));
    worst_excess = std::max(worst_excess, t.count_excess);
    stopped += t.stopped ? 1 : 0;
  }
  write_file(dir, "trajectories.csv", per.str(), out);

  const auto ns = stats::mean_stats(sup_norm);
  const auto cs = stats::mean_stats(sup_count);
  const auto es = stats::mean_stats(events);
  const auto ks = stats::mean_stats(comp);
  const auto fs = stats::mean_stats(final_count);
  rep.value("stopped_replicas", static_cast<double>(stopped));
  rep.value("mean_final_count", fs.mean);
  rep.value("sem_final_count", fs.sem);
  rep.value("mean_sup_norm_lambda", ns.mean);
  rep.value("sem_sup_norm_lambda", ns.sem);
  rep.value("mean_sup_count", cs.mean);
  rep.value("sem_sup_count", cs.sem);
  rep.value("mean_events", es.mean);
  rep.value("mean_compensator", ks.mean);

  if (spec.output.record_events)
    rep.verdict(out, {"mass_non_increasing", worst_mass_step, 1e-12, worst_mass_step <= 1e-12});
  const double mb = moment_bound(cfg.initial, cfg.lambda, cfg.frag, cfg.beta, cfg.horizon);
  rep.verdict(out, {"moment_bound", ns.mean + 3.0 * ns.sem, mb, ns.mean + 3.0 * ns.sem <= mb});
  if (worst_excess != std::numeric_limits<long>::min())
    rep.verdict(out, {"count_pathwise", static_cast<double>(worst_excess), 0.0, worst_excess <= 0});
  const double cb = count_bound(cfg.initial, cfg.frag, cfg.beta, cfg.horizon);
  const double rel = cs.mean > 0.0 ? cs.sem / cs.mean : 0.0;
  rep.verdict(out, {"count_bound", cs.mean, cb * (1.0 + 3.0 * rel), cs.mean <= cb * (1.0 + 3.0 * rel)});
  // E[#events] = E[compensator]; informative only.
  std::vector<double> diff(events.size());
  for (std::size_t r = 0; r < diff.size(); ++r) diff[r] = events[r] - comp[r];
  const auto ds = stats::mean_stats(diff);
  rep.verdict(out, {"compensator_match", std::abs(ds.mean), 4.0 * ds.sem, std::abs(ds.mean) <= 4.0 * ds.sem, false});

  write_file(dir, "summary.txt", rep.str(), out);
  return out;
}

inline RunOutcome run_couple(const ExperimentSpec& spec, std::size_t workers, const std::filesystem::path& dir) {
  RunOutcome out;
  const auto& cfg = spec.sim;
  const auto& c = spec.coupling;
  MassSequence m = cfg.initial;
  MassSequence mt = perturbed(cfg.initial, c);
  if (c.truncate_initial) {
    m = m.prefix(c.level_first);
    mt = mt.prefix(c.level_second);
  }
  const bool record = spec.output.record_events;
  std::vector<CoupledResult> res(cfg.replicas);
  parallel_for(cfg.replicas, workers, [&](std::size_t r) {
    res[r] = simulate_coupled(m, mt, c.level_first, c.level_second, cfg, r, record);
  });
  Report rep(spec, config_hash(cfg));
  if (record) {
    std::ostringstream a, b;
    write_event_header(a, spec.output.format);
    write_event_header(b, spec.output.format);
    for (const auto& r : res) {
      write_events(a, r.first, spec.output.format);
      write_events(b, r.second, spec.output.format);
    }
    write_file(dir, events_name("events_first", spec.output.format), a.str(), out);
    write_file(dir, events_name("events_second", spec.output.format), b.str(), out);
  }
  std::ostringstream per;
  per << "replica,initial_delta,sup_delta,end_time,stopped,candidates\n";
  std::vector<double> sup;
  std::size_t stopped = 0;
  for (std::size_t r = 0; r < res.size(); ++r) {
    per << r << ',' << fmt17(res[r].initial_delta) << ',' << fmt17(res[r].sup_delta) << ','
        << fmt17(res[r].end_time) << ',' << (res[r].stopped ? 1 : 0) << ',' << res[r].candidates << '\n';
    sup.push_back(res[r].sup_delta);
    stopped += res[r].stopped ? 1 : 0;
  }
  write_file(dir, "coupled.csv", per.str(), out);

  const double d0 = dist_delta(m, mt, cfg.lambda);
  const auto s = stats::mean_stats(sup);
  rep.value("initial_delta", d0);
  rep.value("mean_sup_delta", s.mean);
  rep.value("sem_sup_delta", s.sem);
  rep.value("median_sup_delta", stats::median(sup));
  rep.value("stopped_replicas", static_cast<double>(stopped));
  if (d0 > 0.0) rep.value("amplification", s.mean / d0);
  const double rel = s.mean > 0.0 ? s.sem / s.mean : 0.0;
  if (c.level_first == c.level_second && cfg.stop_norm) {
    const double x = *cfg.stop_norm;
    const auto k = coupling_constants(m, mt, x, cfg.lambda, cfg.coag, cfg.frag, cfg.beta);
    rep.value("c_hat", k.c_hat);
    rep.value("kappa_a", k.kappa);
    rep.value("mu_a", k.mu);
    rep.value("power_gap_constant", k.power_gap);
    const double bound = coupling_bound(d0, k, x, cfg.horizon);
    rep.verdict(out, {"coupling_bound", s.mean, bound * (1.0 + 3.0 * rel), s.mean <= bound * (1.0 + 3.0 * rel)});
  } else if (c.level_first >= 1 && c.level_second >= c.level_first) {
    const auto line = truncation_line(cfg.initial, c.level_first, c.level_second, cfg.lambda, cfg.frag,
                                      cfg.beta, cfg.horizon);
    rep.value("tail_A", line.a_tail);
    rep.value("tail_B", line.b_tail);
    rep.value("d1", line.d1);
    rep.verdict(out, {"truncation_line", s.mean, line.value, s.mean <= line.value, false});
  }
  write_file(dir, "summary.txt", rep.str(), out);
  return out;
}

inline RunOutcome run_verify(const ExperimentSpec& spec, const std::filesystem::path& dir) {
  RunOutcome out;
  const auto sum = run_inequality_suite(spec.sim.seed, spec.verify.cases, spec.verify.permutations);
  Report rep(spec, config_hash(spec.sim));
  rep.value("cases", static_cast<double>(sum.cases));
  rep.value("coalesce_equality_cases", static_cast<double>(sum.coalesce_equality_cases));
  rep.text("# inequality min_relative_slack failures");
  for (const auto& [name, slack] : sum.min_relative_slack) {
    const auto it = sum.failures_by_check.find(name);
    const std::size_t f = it == sum.failures_by_check.end() ? 0 : it->second;
    rep.text("inequality " + name + " " + fmt17(slack) + " " + std::to_string(f));
  }
  rep.verdict(out, {"all_inequalities", static_cast<double>(sum.failures), 0.0, sum.failures == 0});
  if (!sum.failed_reports.empty()) {
    std::ostringstream f;
    for (const auto& r : sum.failed_reports)
      for (const auto& ch : r.checks)
        if (!ch.pass) f << r.case_id << ',' << ch.name << ',' << fmt17(ch.lhs) << ',' << fmt17(ch.rhs) << '\n';
    write_file(dir, "failures.csv", f.str(), out);
  }
  write_file(dir, "summary.txt", rep.str(), out);
  return out;
}

inline RunOutcome run_oracle(const ExperimentSpec& spec, std::size_t workers, const std::filesystem::path& dir) {
  RunOutcome out;
  const auto& cfg = spec.sim;
  const auto g = enumerate_states(cfg.initial, cfg.coag, cfg.frag, cfg.beta, spec.oracle.max_jumps);
  const auto r = master_equation_solve(g, cfg.horizon);
  const auto obs = make_observable(spec.oracle.observable, cfg.initial, &g);
  const auto dist = oracle_distribution(g, r, obs);
  const auto samples = sample_observable(g, cfg, obs, cfg.replicas, workers);
  const auto cmp = compare_empirical(dist, samples, spec.oracle.tolerance, r.truncation_error_bound);

  std::ostringstream d;
  write_distribution(d, g, r);
  write_file(dir, "oracle_states.tsv", d.str(), out);
  std::ostringstream o;
  o << "value\toracle\tempirical\n";
  std::map<long, std::pair<double, double>> joint;
  for (const auto& [k, p] : dist) joint[k].first = p;
  for (const auto& [k, p] : cmp.empirical) joint[k].second = p;
  for (const auto& [k, pq] : joint)
    o << (k == kEscaped ? std::string("escaped") : std::to_string(k)) << '\t' << fmt17(pq.first) << '\t'
      << fmt17(pq.second) << '\n';
  write_file(dir, "observable.tsv", o.str(), out);

  Report rep(spec, config_hash(cfg));
  rep.value("states", static_cast<double>(g.states.size()));
  rep.value("transitions", static_cast<double>(g.transitions.size()));
  rep.value("lambda_max", g.lambda_max);
  rep.value("exit_mass", r.exit_mass);
  rep.value("poisson_tail", r.poisson_tail);
  rep.value("integration_error", r.integration_error);
  rep.value("truncation_error_bound", r.truncation_error_bound);
  rep.value("confidence_width", cmp.width);
  rep.verdict(out, {"oracle_tv", cmp.tv, cmp.tolerance + cmp.truncation + cmp.width, cmp.pass});
  write_file(dir, "summary.txt", rep.str(), out);
  return out;
}

inline RunOutcome run_bounds(const ExperimentSpec& spec, const std::filesystem::path& dir) {
  RunOutcome out;
  const auto& cfg = spec.sim;
  Report rep(spec, config_hash(cfg));
  const double t = cfg.horizon;
  rep.value("moment_bound", moment_bound(cfg.initial, cfg.lambda, cfg.frag, cfg.beta, t));
  rep.value("count_bound", count_bound(cfg.initial, cfg.frag, cfg.beta, t));
  const double c = cfg.stop_norm ? *cfg.stop_norm : norm(cfg.initial, cfg.lambda);
  if (c > 0.0) rep.value("generator_bound_unit_phi", generator_bound(1.0, c, cfg.lambda, cfg.coag, cfg.frag, cfg.beta));
  if (cfg.stop_norm && !cfg.initial.empty()) {
    const auto k = coupling_constants(cfg.initial, cfg.initial, *cfg.stop_norm, cfg.lambda, cfg.coag, cfg.frag,
                                      cfg.beta);
    rep.value("c_hat", k.c_hat);
    rep.value("coupling_growth_factor", std::exp(k.c_hat * (*cfg.stop_norm + 1.0) * t));
  }
  const std::size_t n = cfg.initial.size();
  if (n >= 1 && !cfg.beta.empty()) {
    rep.text("# level A B d1 line(p, n)");
    for (std::size_t p = 1; p <= n; ++p) {
      const auto line = truncation_line(cfg.initial, p, n, cfg.lambda, cfg.frag, cfg.beta, t);
      rep.text("truncation " + std::to_string(p) + " " + fmt17(line.a_tail) + " " + fmt17(line.b_tail) + " " +
               fmt17(line.d1) + " " + fmt17(line.value));
    }
  }
  write_file(dir, "summary.txt", rep.str(), out);
  return out;
}

}  // namespace detail

/// Runs one experiment and writes its artifacts under spec.output.dir.
/// Library errors propagate; map them with exit_code_for.
inline RunOutcome run(ExperimentSpec spec, std::size_t workers = default_workers()) {
  if (spec.normalized.is_null()) normalize(spec);
  const std::filesystem::path dir(spec.output.dir);
  std::filesystem::create_directories(dir);
  switch (spec.mode) {
    case Mode::kSimulate: return detail::run_simulate(spec, workers, dir);
    case Mode::kCouple: return detail::run_couple(spec, workers, dir);
    case Mode::kVerify: return detail::run_verify(spec, dir);
    case Mode::kOracle: return detail::run_oracle(spec, workers, dir);
    case Mode::kBounds: return detail::run_bounds(spec, dir);
  }
  return {};
}

}  // namespace cofrag
