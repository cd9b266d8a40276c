// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "cofrag/dislocation.hpp"
#include "cofrag/error.hpp"
#include "cofrag/kernels.hpp"
#include "cofrag/mass_sequence.hpp"
#include "cofrag/parallel.hpp"
#include "cofrag/simulator.hpp"
#include "cofrag/stats.hpp"

namespace cofrag {

/// Canonical key of a state: masses in descending order, each rounded to 12
/// significant digits.
inline std::string canonical_key(const MassSequence& m) {
  std::string key;
  char buf[32];
  for (double x : m) {
    std::snprintf(buf, sizeof buf, "%.11e;", x);
    key += buf;
  }
  return key;
}

struct OracleTransition {
  std::size_t from = 0;
  std::size_t to = 0;
  double rate = 0.0;
  EventKind kind = EventKind::kCoalescence;
};

/// States reachable from the initial state within `max_jumps` jumps, with
/// aggregated transition rates between them. Jumps out of the deepest layer
/// to states not in the graph are collected per state in `exit_rate`; they
/// lead to a single absorbing exit state.
struct StateGraph {
  std::vector<MassSequence> states;  // states[0] is the initial state
  std::vector<std::size_t> depth;
  std::vector<OracleTransition> transitions;
  std::vector<double> exit_rate;
  std::size_t max_jumps = 0;
  double lambda_max = 0.0;  // largest total outgoing rate of a state
  std::unordered_map<std::string, std::size_t> index;

  std::optional<std::size_t> find(const MassSequence& m) const {
    const auto it = index.find(canonical_key(m));
    if (it == index.end()) return std::nullopt;
    return it->second;
  }
};

inline StateGraph enumerate_states(const MassSequence& initial, const CoagulationKernel& coag,
                                   const FragmentationKernel& frag, const DislocationMeasure& beta,
                                   std::size_t max_jumps, std::size_t max_states = 1000000) {
  StateGraph g;
  g.max_jumps = max_jumps;
  g.states.push_back(initial);
  g.depth.push_back(0);
  g.index.emplace(canonical_key(initial), 0);
  constexpr auto kExit = std::numeric_limits<std::size_t>::max();
  for (std::size_t s = 0; s < g.states.size(); ++s) {
    const MassSequence cur = g.states[s];
    const std::size_t d = g.depth[s];
    // Coalescence lowers the count and fragmentation never does, so the
    // target determines the kind.
    std::map<std::size_t, std::pair<double, EventKind>> agg;
    const auto target = [&](const MassSequence& next, double rate, EventKind kind) {
      if (!(rate > 0.0)) return;
      const auto key = canonical_key(next);
      auto it = g.index.find(key);
      std::size_t to;
      if (it != g.index.end()) {
        to = it->second;
      } else if (d < max_jumps) {
        to = g.states.size();
        if (to >= max_states)
          throw Error(ErrorKind::kTruncation,
                      "state graph exceeds " + std::to_string(max_states) + " states at depth " +
                          std::to_string(d + 1) + " of " + std::to_string(max_jumps));
        g.states.push_back(next);
        g.depth.push_back(d + 1);
        g.index.emplace(key, to);
      } else {
        to = kExit;
      }
      auto& slot = agg[to];
      slot.first += rate;
      slot.second = kind;
    };
    const std::size_t n = cur.size();
    for (std::size_t i = 1; i <= n; ++i) {
      for (std::size_t j = i + 1; j <= n; ++j)
        target(coalesce(cur, i, j), coag.eval_positive(cur.at(i), cur.at(j)), EventKind::kCoalescence);
      const double f = frag.eval_positive(cur.at(i));
      if (f == 0.0) continue;
      for (const auto& a : beta.atoms())
        target(fragment(cur, i, a.ratios()), f * a.weight(), EventKind::kFragmentation);
    }
    double total = 0.0, exit = 0.0;
    for (const auto& [to, slot] : agg) {
      if (to == s) continue;  // self-loops do not change the law
      if (to == kExit)
        exit += slot.first;
      else
        g.transitions.push_back({s, to, slot.first, slot.second});
      total += slot.first;
    }
    g.exit_rate.push_back(exit);
    g.lambda_max = std::max(g.lambda_max, total);
  }
  return g;
}

struct OracleResult {
  std::vector<double> probabilities;  // per state of the graph
  double exit_mass = 0.0;             // probability of having left the graph by T
  double poisson_tail = 0.0;          // P(Poisson(Lambda T) > J)
  double integration_error = 0.0;     // dropped uniformization mass
  double truncation_error_bound = 0.0;
  double horizon = 0.0;
};

/// Forward equation of the finite chain by uniformization: the horizon is cut
/// into pieces with Lambda h <= 50 and each piece is expanded in Poisson
/// weights until the dropped weight is below 1e-16.
inline OracleResult master_equation_solve(const StateGraph& g, double horizon) {
  detail::require(std::isfinite(horizon) && horizon >= 0.0, ErrorKind::kParameter,
                  "oracle horizon must be finite and >= 0");
  const std::size_t n = g.states.size() + 1;
  OracleResult res;
  res.horizon = horizon;
  std::vector<double> v(n, 0.0);
  v[0] = 1.0;
  const double lam = g.lambda_max;
  if (lam > 0.0 && horizon > 0.0) {
    const std::size_t exit = n - 1;
    std::vector<double> out(n, 0.0);
    for (const auto& t : g.transitions) out[t.from] += t.rate;
    for (std::size_t s = 0; s < exit; ++s) out[s] += g.exit_rate[s];
    const auto pieces = static_cast<std::size_t>(std::ceil(lam * horizon / 50.0));
    const double h = horizon / static_cast<double>(pieces);
    const double mean = lam * h;
    std::vector<double> term(n), next(n), acc(n);
    for (std::size_t piece = 0; piece < pieces; ++piece) {
      term = v;
      double w = std::exp(-mean);
      double wsum = w;
      for (std::size_t s = 0; s < n; ++s) acc[s] = w * term[s];
      for (std::size_t k = 1; 1.0 - wsum > 1e-16 && k < 100000; ++k) {
        // term <- term * P with P = I + Q / Lambda.
        for (std::size_t s = 0; s < n; ++s) next[s] = term[s] * (1.0 - out[s] / lam);
        for (const auto& t : g.transitions) next[t.to] += term[t.from] * t.rate / lam;
        for (std::size_t s = 0; s < exit; ++s) next[exit] += term[s] * g.exit_rate[s] / lam;
        term.swap(next);
        w *= mean / static_cast<double>(k);
        wsum += w;
        for (std::size_t s = 0; s < n; ++s) acc[s] += w * term[s];
      }
      res.integration_error += std::max(0.0, 1.0 - wsum);
      v = acc;
    }
  }
  double total = 0.0;
  for (double p : v) total += p;
  if (std::abs(total - 1.0) > 1e-9 + res.integration_error)
    throw Error(ErrorKind::kNumeric, "oracle probabilities sum to " + std::to_string(total) +
                                         " (integration error " + std::to_string(res.integration_error) + ")");
  for (auto& p : v) p = std::max(p, 0.0);
  res.exit_mass = v.back();
  v.pop_back();
  res.probabilities = std::move(v);
  res.poisson_tail = stats::poisson_tail_above(lam * horizon, g.max_jumps);
  res.truncation_error_bound = std::min(res.poisson_tail, res.exit_mass + res.integration_error);
  return res;
}

/// Marker for paths that left the enumerated graph.
inline constexpr long kEscaped = std::numeric_limits<long>::min();

using Observable = std::function<long(const MassSequence&)>;

/// Law of an observable of the final state under the oracle; escaped mass is
/// reported under kEscaped.
inline std::map<long, double> oracle_distribution(const StateGraph& g, const OracleResult& r,
                                                  const Observable& obs) {
  std::map<long, double> dist;
  for (std::size_t s = 0; s < g.states.size(); ++s) dist[obs(g.states[s])] += r.probabilities[s];
  if (r.exit_mass > 0.0) dist[kEscaped] += r.exit_mass;
  return dist;
}

/// Simulated observable samples; a path that visits a state outside the graph
/// is reported as kEscaped.
inline std::vector<long> sample_observable(const StateGraph& g, const SimConfig& cfg, const Observable& obs,
                                           std::size_t replicas, std::size_t workers = 1) {
  std::vector<long> out(replicas, 0);
  parallel_for(replicas, workers, [&](std::size_t r) {
    SimOptions opt;
    opt.record_events = false;
    SsaEngine eng(cfg, r, opt);
    bool escaped = false;
    while (eng.step()) {
      if (!g.find(eng.state())) {
        escaped = true;
        break;
      }
    }
    out[r] = escaped ? kEscaped : obs(eng.state());
  });
  return out;
}

struct Comparison {
  double tv = 0.0;
  double width = 0.0;  // binomial confidence width
  double tolerance = 0.0;
  double truncation = 0.0;
  bool pass = false;
  std::map<long, double> empirical;
};

/// Total-variation distance between an oracle law and an empirical sample.
/// Passes iff tv <= tolerance + truncation + 0.5 sum_k 3 sqrt(p_k (1-p_k) / n).
inline Comparison compare_empirical(const std::map<long, double>& dist, const std::vector<long>& samples,
                                    double tolerance, double truncation) {
  detail::require(!samples.empty(), ErrorKind::kInput, "no simulator samples to compare");
  Comparison c;
  c.tolerance = tolerance;
  c.truncation = truncation;
  const double n = static_cast<double>(samples.size());
  for (long s : samples) c.empirical[s] += 1.0 / n;
  std::map<long, std::pair<double, double>> joint;
  for (const auto& [k, p] : dist) joint[k].first = p;
  for (const auto& [k, p] : c.empirical) joint[k].second = p;
  for (const auto& [k, pq] : joint) {
    c.tv += 0.5 * std::abs(pq.first - pq.second);
    c.width += 0.5 * 3.0 * std::sqrt(std::max(pq.first * (1.0 - pq.first), 0.0) / n);
  }
  c.pass = c.tv <= tolerance + truncation + c.width;
  return c;
}

/// Writes "probability<TAB>masses" lines, one per state, then the exit mass.
inline void write_distribution(std::ostream& os, const StateGraph& g, const OracleResult& r) {
  char buf[64];
  for (std::size_t s = 0; s < g.states.size(); ++s) {
    std::snprintf(buf, sizeof buf, "%.17g", r.probabilities[s]);
    os << buf << '\t';
    bool first = true;
    for (double x : g.states[s]) {
      std::snprintf(buf, sizeof buf, "%.17g", x);
      os << (first ? "" : " ") << buf;
      first = false;
    }
    os << '\n';
  }
  std::snprintf(buf, sizeof buf, "%.17g", r.exit_mass);
  os << buf << "\t<exit>\n";
}

}  // namespace cofrag
