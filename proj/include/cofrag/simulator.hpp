// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cofrag/dislocation.hpp"
#include "cofrag/error.hpp"
#include "cofrag/kernels.hpp"
#include "cofrag/mass_sequence.hpp"
#include "cofrag/metrics.hpp"
#include "cofrag/parallel.hpp"
#include "cofrag/rng.hpp"
#include "cofrag/stats.hpp"

namespace cofrag {

struct SimConfig {
  MassSequence initial;
  CoagulationKernel coag = CoagulationKernel::constant(1.0);
  FragmentationKernel frag = FragmentationKernel::constant(0.0);
  DislocationMeasure beta;
  double horizon = 1.0;
  std::uint64_t seed = 0;
  double lambda = 1.0;
  std::optional<double> stop_norm;
  std::uint64_t replicas = 1;
};

inline void validate(const SimConfig& c) {
  detail::require(std::isfinite(c.horizon) && c.horizon >= 0.0, ErrorKind::kConfiguration,
                  "horizon must be finite and >= 0");
  detail::require(c.lambda > 0.0 && c.lambda <= 1.0, ErrorKind::kConfiguration,
                  "lambda must lie in (0, 1], got " + std::to_string(c.lambda));
  detail::require(c.replicas >= 1, ErrorKind::kConfiguration, "replicas must be >= 1");
  if (c.stop_norm) {
    const double n0 = norm(c.initial, c.lambda);
    detail::require(*c.stop_norm > n0, ErrorKind::kConfiguration,
                    "stop_norm " + std::to_string(*c.stop_norm) +
                        " must exceed the initial lambda-norm " + std::to_string(n0));
  }
}

namespace detail {

inline void fnv1a(std::uint64_t& h, const std::string& s) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
}

inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace detail

/// Canonical one-line description of everything that determines the law of a
/// run (plus its seed). Used for the config hash and report headers.
inline std::string canonical_string(const SimConfig& c) {
  using detail::fmt17;
  std::string s = "initial=[";
  for (double x : c.initial) s += fmt17(x) + ",";
  s += "];coag=" + c.coag.kind() + "(";
  for (const auto& [k, v] : c.coag.parameters()) s += k + "=" + fmt17(v) + ",";
  s += ");frag=" + c.frag.kind() + "(";
  for (const auto& [k, v] : c.frag.parameters()) s += k + "=" + fmt17(v) + ",";
  s += ");beta=[";
  for (const auto& a : c.beta.atoms()) {
    s += "{";
    for (double r : a.ratios()) s += fmt17(r) + ",";
    s += "w=" + fmt17(a.weight()) + "}";
  }
  s += "];T=" + fmt17(c.horizon) + ";lambda=" + fmt17(c.lambda) +
       ";stop=" + (c.stop_norm ? fmt17(*c.stop_norm) : std::string("none")) +
       ";seed=" + std::to_string(c.seed) + ";replicas=" + std::to_string(c.replicas);
  return s;
}

inline std::uint64_t config_hash(const SimConfig& c) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  detail::fnv1a(h, canonical_string(c));
  return h;
}

enum class EventKind { kCoalescence, kFragmentation };

inline const char* to_string(EventKind k) {
  return k == EventKind::kCoalescence ? "coalescence" : "fragmentation";
}

struct EventRecord {
  double time = 0.0;
  EventKind kind = EventKind::kCoalescence;
  std::size_t i = 0;          // 1-based particle index
  std::size_t j_or_atom = 0;  // 1-based partner (coalescence) or atom (fragmentation)
  std::size_t pre_count = 0;
  std::size_t post_count = 0;
  double pre_mass = 0.0;
  double post_mass = 0.0;
  double post_norm_lambda = 0.0;
  bool stopped = false;  // this event carried the lambda-norm to stop_norm
};

struct Trajectory {
  std::uint64_t config_hash = 0;
  std::uint64_t replica = 0;
  std::vector<EventRecord> events;  // filled when recording is enabled
  MassSequence final_state;
  double final_time = 0.0;  // horizon, or the stopping time when stopped
  double sup_norm_lambda = 0.0;
  std::size_t sup_count = 0;
  std::size_t coag_count = 0;
  std::size_t frag_count = 0;
  double first_event_time = std::numeric_limits<double>::infinity();
  double compensator = 0.0;  // integral of rho_c + rho_f over [0, final_time]
  bool stopped = false;
  bool absorbed = false;
  // sup over events of N_t - N_0 - (k-1) L^f(t); <= 0 on every valid path.
  long count_excess = std::numeric_limits<long>::min();
};

struct Rates {
  double coag = 0.0;
  double frag = 0.0;
  double total() const { return coag + frag; }
};

/// rho_c = sum_{i<j} K(m_i, m_j), rho_f = beta(Theta) sum_i F(m_i).
inline Rates total_rates(const MassSequence& m, const CoagulationKernel& coag,
                         const FragmentationKernel& frag, const DislocationMeasure& beta) {
  Rates r;
  const auto xs = m.masses();
  for (std::size_t a = 0; a < xs.size(); ++a) {
    for (std::size_t b = a + 1; b < xs.size(); ++b) r.coag += coag.eval_positive(xs[a], xs[b]);
    r.frag += frag.eval_positive(xs[a]);
  }
  r.frag *= beta.total_mass();
  return r;
}

struct SimOptions {
  bool record_events = true;
  bool debug_rates = false;              // compare incremental and full rates after every event
  std::uint64_t refresh_interval = 1u << 16;  // full recompute period
};

/// Exact event-driven sampler (direct SSA) for one trajectory. Randomness is
/// read from stream (seed, replica) in a fixed order per event: waiting time,
/// event type, first index, second index or atom.
class SsaEngine {
 public:
  SsaEngine(const SimConfig& cfg, std::uint64_t replica, SimOptions opt = {})
      : cfg_(&cfg), opt_(opt), rng_(cfg.seed, static_cast<std::uint32_t>(replica)) {
    validate(cfg);
    beta_total_ = cfg.beta.total_mass();
    max_fragments_ = cfg.beta.max_fragments();
    particles_.reserve(cfg.initial.size());
    for (double x : cfg.initial) particles_.push_back(make_particle(x));
    n0_ = particles_.size();
    full_refresh();
    sup_norm_ = norm_lambda_;
    sup_count_ = particles_.size();
    if (cfg.horizon == 0.0) done_ = true;
  }

  bool done() const { return done_; }
  bool stopped() const { return stopped_; }
  bool absorbed() const { return absorbed_; }
  double time() const { return time_; }
  std::size_t count() const { return particles_.size(); }
  double mass() const { return mass_; }
  double norm_lambda() const { return norm_lambda_; }
  double sup_norm_lambda() const { return sup_norm_; }
  std::size_t sup_count() const { return sup_count_; }
  std::size_t frag_count() const { return frag_events_; }
  double compensator() const { return compensator_; }
  Rates rates() const { return {0.5 * row_total_, beta_total_ * frag_total_}; }

  MassSequence state() const {
    std::vector<double> xs;
    xs.reserve(particles_.size());
    for (const auto& p : particles_) xs.push_back(p.mass);
    return MassSequence::reorder(xs);
  }

  /// Advances to the next event. Returns nothing once the horizon is reached,
  /// the state is absorbed, or the previous event hit stop_norm.
  std::optional<EventRecord> step() {
    if (done_) return std::nullopt;
    const Rates r = rates();
    const double total = r.total();
    if (!(total > 0.0)) {
      time_ = cfg_->horizon;
      absorbed_ = true;
      done_ = true;
      return std::nullopt;
    }
    const double wait = rng_.exponential(total);
    const double u_kind = rng_.uniform();
    const double u_first = rng_.uniform();
    const double u_second = rng_.uniform();
    if (time_ + wait > cfg_->horizon) {
      compensator_ += total * (cfg_->horizon - time_);
      time_ = cfg_->horizon;
      done_ = true;
      return std::nullopt;
    }
    compensator_ += total * wait;
    time_ += wait;

    EventRecord ev;
    ev.time = time_;
    ev.pre_count = particles_.size();
    ev.pre_mass = mass_;
    if (u_kind * total < r.coag) {
      auto [a, b] = pick_pair(u_first, u_second);
      ev.kind = EventKind::kCoalescence;
      ev.i = a + 1;
      ev.j_or_atom = b + 1;
      apply_coalescence(a, b);
    } else {
      const std::size_t a = pick_fragmenting(u_first);
      const std::size_t atom = cfg_->beta.sample_atom(u_second);
      ev.kind = EventKind::kFragmentation;
      ev.i = a + 1;
      ev.j_or_atom = atom;
      apply_fragmentation(a, cfg_->beta.atom(atom).ratios());
      ++frag_events_;
    }
    ++events_;
    if (events_ % opt_.refresh_interval == 0) {
      full_refresh();
    } else {
      if (opt_.debug_rates) check_rows();
      refresh_totals();
    }
    ev.post_count = particles_.size();
    ev.post_mass = mass_;
    ev.post_norm_lambda = norm_lambda_;
    detail::require(ev.post_mass <= ev.pre_mass * (1.0 + 1e-12) + 1e-300, ErrorKind::kNumeric,
                    "total mass increased at an event");
    sup_norm_ = std::max(sup_norm_, norm_lambda_);
    sup_count_ = std::max(sup_count_, particles_.size());
    const long excess = static_cast<long>(particles_.size()) - static_cast<long>(n0_) -
                        (static_cast<long>(max_fragments_) - 1) * static_cast<long>(frag_events_);
    count_excess_ = std::max(count_excess_, excess);
    if (cfg_->stop_norm && norm_lambda_ >= *cfg_->stop_norm) {
      ev.stopped = true;
      stopped_ = true;
      done_ = true;
    }
    return ev;
  }

  Trajectory run(std::uint64_t replica) {
    Trajectory t;
    t.config_hash = config_hash(*cfg_);
    t.replica = replica;
    while (auto ev = step()) {
      if (t.first_event_time == std::numeric_limits<double>::infinity()) t.first_event_time = ev->time;
      if (ev->kind == EventKind::kCoalescence)
        ++t.coag_count;
      else
        ++t.frag_count;
      if (opt_.record_events) t.events.push_back(*ev);
    }
    t.final_state = state();
    t.final_time = time_;
    t.sup_norm_lambda = sup_norm_;
    t.sup_count = sup_count_;
    t.compensator = compensator_;
    t.stopped = stopped_;
    t.absorbed = absorbed_;
    t.count_excess = count_excess_;
    return t;
  }

 private:
  struct Particle {
    double mass;
    double pow_l;  // mass^lambda
    double frag;   // F(mass)
    double row;    // sum over other particles of K(mass, other)
  };

  Particle make_particle(double x) const {
    return {x, cfg_->lambda == 1.0 ? x : std::pow(x, cfg_->lambda), cfg_->frag.eval_positive(x), 0.0};
  }

  double kern(double x, double y) const { return cfg_->coag.eval_positive(x, y); }

  void full_refresh() {
    for (auto& p : particles_) p.row = 0.0;
    for (std::size_t a = 0; a < particles_.size(); ++a)
      for (std::size_t b = a + 1; b < particles_.size(); ++b) {
        const double k = kern(particles_[a].mass, particles_[b].mass);
        particles_[a].row += k;
        particles_[b].row += k;
      }
    refresh_totals();
  }

  void refresh_totals() {
    row_total_ = frag_total_ = norm_lambda_ = mass_ = 0.0;
    for (const auto& p : particles_) {
      row_total_ += p.row;
      frag_total_ += p.frag;
      norm_lambda_ += p.pow_l;
      mass_ += p.mass;
    }
  }

  void check_rows() const {
    for (std::size_t a = 0; a < particles_.size(); ++a) {
      double row = 0.0;
      for (std::size_t b = 0; b < particles_.size(); ++b)
        if (b != a) row += kern(particles_[a].mass, particles_[b].mass);
      detail::require(std::abs(row - particles_[a].row) <= 1e-9 * std::max(1.0, std::abs(row)),
                      ErrorKind::kNumeric,
                      "incremental coagulation rate drifted: " + std::to_string(particles_[a].row) +
                          " vs " + std::to_string(row));
    }
  }

  std::pair<std::size_t, std::size_t> pick_pair(double u_first, double u_second) {
    const std::size_t n = particles_.size();
    double target = u_first * row_total_;
    std::size_t a = 0;
    for (; a + 1 < n; ++a) {
      if (target < particles_[a].row) break;
      target -= particles_[a].row;
    }
    while (particles_[a].row <= 0.0 && a > 0) --a;
    scratch_.assign(n, 0.0);
    double row = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a) continue;
      scratch_[b] = kern(particles_[a].mass, particles_[b].mass);
      row += scratch_[b];
    }
    double t2 = u_second * row;
    std::size_t b = n;
    std::size_t last_positive = n;
    for (std::size_t c = 0; c < n; ++c) {
      if (c == a || scratch_[c] <= 0.0) continue;
      last_positive = c;
      if (t2 < scratch_[c]) {
        b = c;
        break;
      }
      t2 -= scratch_[c];
    }
    if (b == n) b = last_positive;
    detail::require(b < n, ErrorKind::kNumeric, "no coalescence partner with positive rate");
    return {std::min(a, b), std::max(a, b)};
  }

  std::size_t pick_fragmenting(double u) const {
    double target = u * frag_total_;
    std::size_t last_positive = 0;
    for (std::size_t a = 0; a < particles_.size(); ++a) {
      if (particles_[a].frag <= 0.0) continue;
      last_positive = a;
      if (target < particles_[a].frag) return a;
      target -= particles_[a].frag;
    }
    return last_positive;
  }

  void apply_coalescence(std::size_t a, std::size_t b) {
    const double xa = particles_[a].mass;
    const double xb = particles_[b].mass;
    Particle merged = make_particle(xa + xb);
    for (std::size_t k = 0; k < particles_.size(); ++k) {
      if (k == a || k == b) continue;
      const double xk = particles_[k].mass;
      const double kk = kern(xk, merged.mass);
      particles_[k].row = std::max(0.0, particles_[k].row - kern(xk, xa) - kern(xk, xb) + kk);
      merged.row += kk;
    }
    detail::coalesce_in_place(particles_, a, b, merged, [](const Particle& p) { return p.mass; });
  }

  void apply_fragmentation(std::size_t a, std::span<const double> ratios) {
    const double parent = particles_[a].mass;
    pieces_.clear();
    for (double r : ratios)
      if (r > 0.0 && r * parent > 0.0) pieces_.push_back(make_particle(r * parent));
    for (std::size_t k = 0; k < particles_.size(); ++k) {
      if (k == a) continue;
      const double xk = particles_[k].mass;
      double delta = -kern(xk, parent);
      for (auto& q : pieces_) {
        const double kk = kern(xk, q.mass);
        delta += kk;
        q.row += kk;
      }
      particles_[k].row = std::max(0.0, particles_[k].row + delta);
    }
    for (std::size_t p = 0; p < pieces_.size(); ++p)
      for (std::size_t q = p + 1; q < pieces_.size(); ++q) {
        const double kk = kern(pieces_[p].mass, pieces_[q].mass);
        pieces_[p].row += kk;
        pieces_[q].row += kk;
      }
    detail::fragment_in_place(particles_, a, std::span<const Particle>(pieces_),
                              [](const Particle& p) { return p.mass; });
  }

  const SimConfig* cfg_;
  SimOptions opt_;
  RngStream rng_;
  std::vector<Particle> particles_;
  std::vector<Particle> pieces_;
  std::vector<double> scratch_;
  double beta_total_ = 0.0;
  std::size_t max_fragments_ = 0;
  std::size_t n0_ = 0;
  double time_ = 0.0;
  double row_total_ = 0.0;
  double frag_total_ = 0.0;
  double norm_lambda_ = 0.0;
  double mass_ = 0.0;
  double sup_norm_ = 0.0;
  std::size_t sup_count_ = 0;
  std::size_t frag_events_ = 0;
  std::uint64_t events_ = 0;
  double compensator_ = 0.0;
  long count_excess_ = std::numeric_limits<long>::min();
  bool done_ = false;
  bool stopped_ = false;
  bool absorbed_ = false;
};

/// One trajectory of replica `replica`, reproducible from (config, replica).
inline Trajectory simulate(const SimConfig& cfg, std::uint64_t replica = 0, SimOptions opt = {}) {
  SsaEngine engine(cfg, replica, opt);
  return engine.run(replica);
}

/// All replicas, indexed by replica number; independent of `workers`.
inline std::vector<Trajectory> simulate_replicas(const SimConfig& cfg, std::size_t workers,
                                                 SimOptions opt = {}) {
  validate(cfg);
  std::vector<Trajectory> out(cfg.replicas);
  parallel_for(cfg.replicas, workers, [&](std::size_t r) { out[r] = simulate(cfg, r, opt); });
  return out;
}

// ---------------------------------------------------------------------------
// Coupled pairs
// ---------------------------------------------------------------------------

struct CoupledResult {
  Trajectory first;
  Trajectory second;
  double initial_delta = 0.0;
  double sup_delta = 0.0;  // over t = 0 and every event time up to the end
  double end_time = 0.0;
  bool stopped = false;  // either member reached stop_norm; both are censored there
  std::uint64_t candidates = 0;
};

namespace detail {

/// Member of a coupled pair: masses in descending order and its truncation
/// level (0 = full measure).
struct CoupledMember {
  std::vector<double> m;
  std::size_t level = 0;
  Trajectory traj;
  double norm_l = 0.0;
  double mass = 0.0;
  std::size_t n0 = 0;
  long max_fragments = 0;

  void refresh(double lambda) {
    norm_l = 0.0;
    mass = 0.0;
    for (double x : m) {
      norm_l += lambda == 1.0 ? x : std::pow(x, lambda);
      mass += x;
    }
  }
};

}  // namespace detail

/// Couples X started at m (measure beta_p) with Y started at mt (measure
/// beta_q) through one shared stream of candidate events, accepted by each
/// member through its own rate indicator. Levels of 0 use the full measure.
/// Kernels, measure, horizon, lambda, stop_norm and seed come from `cfg`
/// (its `initial` is ignored).
inline CoupledResult simulate_coupled(const MassSequence& m, const MassSequence& mt, std::size_t p,
                                      std::size_t q, const SimConfig& cfg, std::uint64_t replica = 0,
                                      bool record_events = false) {
  detail::require(cfg.lambda > 0.0 && cfg.lambda <= 1.0, ErrorKind::kConfiguration,
                  "lambda must lie in (0, 1]");
  detail::require(std::isfinite(cfg.horizon) && cfg.horizon >= 0.0, ErrorKind::kConfiguration,
                  "horizon must be finite and >= 0");
  const double lambda = cfg.lambda;
  const double box = std::max(norm(m, 1.0), norm(mt, 1.0));
  const double kbar = box > 0.0 ? cfg.coag.sup_box(box) : 0.0;
  const double fbar = box > 0.0 ? cfg.frag.sup_box(box) : 0.0;
  const double btot = cfg.beta.total_mass();
  detail::require(std::isfinite(kbar) && std::isfinite(fbar), ErrorKind::kConfiguration,
                  "kernel majorants must be finite");

  std::array<detail::CoupledMember, 2> mem;
  mem[0].m.assign(m.begin(), m.end());
  mem[1].m.assign(mt.begin(), mt.end());
  mem[0].level = p;
  mem[1].level = q;
  const auto hash = config_hash(cfg);
  for (auto& x : mem) {
    x.refresh(lambda);
    x.n0 = x.m.size();
    x.traj.config_hash = hash;
    x.traj.replica = replica;
    x.traj.sup_norm_lambda = x.norm_l;
    x.traj.sup_count = x.m.size();
    x.max_fragments = static_cast<long>(x.level == 0 ? cfg.beta.max_fragments()
                                                     : std::min(cfg.beta.max_fragments(), x.level));
  }
  const auto as_seq = [](const std::vector<double>& v) { return MassSequence::reorder(v); };
  const auto delta_now = [&] {
    const std::size_t n = std::max(mem[0].m.size(), mem[1].m.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double a = k < mem[0].m.size() ? mem[0].m[k] : 0.0;
      const double b = k < mem[1].m.size() ? mem[1].m[k] : 0.0;
      acc += std::abs(std::pow(a, lambda) - std::pow(b, lambda));
    }
    return acc;
  };

  CoupledResult res;
  res.initial_delta = delta_now();
  res.sup_delta = res.initial_delta;
  RngStream rng(cfg.seed, static_cast<std::uint32_t>(replica));
  double t = 0.0;
  const auto id = [](double x) { return x; };
  std::vector<double> pieces;

  while (true) {
    const std::size_t pmax = std::max(mem[0].m.size(), mem[1].m.size());
    const double rate_c = kbar * static_cast<double>(pmax) * static_cast<double>(pmax > 0 ? pmax - 1 : 0) / 2.0;
    const double rate_f = fbar * btot * static_cast<double>(pmax);
    const double total = rate_c + rate_f;
    if (!(total > 0.0)) {
      t = cfg.horizon;
      break;
    }
    const double wait = rng.exponential(total);
    if (t + wait > cfg.horizon) {
      t = cfg.horizon;
      break;
    }
    t += wait;
    ++res.candidates;
    bool any = false;
    if (rng.uniform() * total < rate_c) {
      const std::size_t a = rng.below(pmax);
      std::size_t b = rng.below(pmax - 1);
      if (b >= a) ++b;
      const std::size_t i = std::min(a, b), j = std::max(a, b);
      const double z = kbar * rng.uniform();
      for (auto& x : mem) {
        if (j >= x.m.size()) continue;
        const double pre_mass = x.mass;
        const std::size_t pre_count = x.m.size();
        if (!(z < cfg.coag.eval_positive(x.m[i], x.m[j]))) continue;
        detail::coalesce_in_place(x.m, i, j, x.m[i] + x.m[j], id);
        x.refresh(lambda);
        ++x.traj.coag_count;
        any = true;
        if (x.traj.first_event_time == std::numeric_limits<double>::infinity()) x.traj.first_event_time = t;
        if (record_events)
          x.traj.events.push_back({t, EventKind::kCoalescence, i + 1, j + 1, pre_count, x.m.size(),
                                   pre_mass, x.mass, x.norm_l, false});
      }
    } else {
      const std::size_t i = rng.below(pmax);
      const std::size_t atom_idx = cfg.beta.sample_atom(rng.uniform());
      const double z = fbar * rng.uniform();
      const auto& atom = cfg.beta.atom(atom_idx);
      for (auto& x : mem) {
        if (i >= x.m.size() || !in_level(atom, x.level)) continue;
        if (!(z < cfg.frag.eval_positive(x.m[i]))) continue;
        const double pre_mass = x.mass;
        const std::size_t pre_count = x.m.size();
        const double parent = x.m[i];
        const auto ratios = atom.ratios();
        const std::size_t keep = x.level == 0 ? ratios.size() : std::min(ratios.size(), x.level);
        pieces.clear();
        for (std::size_t k = 0; k < keep; ++k)
          if (ratios[k] > 0.0 && ratios[k] * parent > 0.0) pieces.push_back(ratios[k] * parent);
        detail::fragment_in_place(x.m, i, std::span<const double>(pieces), id);
        x.refresh(lambda);
        ++x.traj.frag_count;
        any = true;
        if (x.traj.first_event_time == std::numeric_limits<double>::infinity()) x.traj.first_event_time = t;
        if (record_events)
          x.traj.events.push_back({t, EventKind::kFragmentation, i + 1, atom_idx, pre_count, x.m.size(),
                                   pre_mass, x.mass, x.norm_l, false});
      }
    }
    if (!any) continue;
    res.sup_delta = std::max(res.sup_delta, delta_now());
    bool stop = false;
    for (auto& x : mem) {
      x.traj.sup_norm_lambda = std::max(x.traj.sup_norm_lambda, x.norm_l);
      x.traj.sup_count = std::max(x.traj.sup_count, x.m.size());
      const long excess = static_cast<long>(x.m.size()) - static_cast<long>(x.n0) -
                          (x.max_fragments - 1) * static_cast<long>(x.traj.frag_count);
      x.traj.count_excess = std::max(x.traj.count_excess, excess);
      if (cfg.stop_norm && x.norm_l >= *cfg.stop_norm) stop = true;
    }
    if (stop) {
      res.stopped = true;
      for (auto& x : mem) {
        x.traj.stopped = true;
        if (record_events && !x.traj.events.empty() && x.traj.events.back().time == t)
          x.traj.events.back().stopped = true;
      }
      break;
    }
  }
  res.end_time = t;
  for (auto& x : mem) {
    x.traj.final_state = as_seq(x.m);
    x.traj.final_time = t;
  }
  res.first = std::move(mem[0].traj);
  res.second = std::move(mem[1].traj);
  return res;
}

// ---------------------------------------------------------------------------
// Generator and martingale diagnostics
// ---------------------------------------------------------------------------

/// L Phi(m) = sum_{i<j} K(m_i,m_j)[Phi(c_ij m) - Phi(m)]
///          + sum_i F(m_i) sum_atoms w [Phi(f_i theta m) - Phi(m)].
template <class Phi>
double generator_apply(Phi&& phi, const MassSequence& m, const CoagulationKernel& coag,
                       const FragmentationKernel& frag, const DislocationMeasure& beta) {
  const double base = phi(m);
  double acc = 0.0;
  const std::size_t n = m.size();
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = i + 1; j <= n; ++j) {
      const double k = coag.eval_positive(m.at(i), m.at(j));
      if (k != 0.0) acc += k * (phi(coalesce(m, i, j)) - base);
    }
    const double f = frag.eval_positive(m.at(i));
    if (f == 0.0) continue;
    for (const auto& a : beta.atoms()) acc += f * a.weight() * (phi(fragment(m, i, a.ratios())) - base);
  }
  return acc;
}

/// Bound on |L Phi| over {||m||_lambda <= c} for Phi bounded by `a` and
/// a-Lipschitz for d: (3/2 Kbar + 2 Fbar C_beta^lambda) a c^(1/lambda).
inline double generator_bound(double a, double c, double lambda, const CoagulationKernel& coag,
                              const FragmentationKernel& frag, const DislocationMeasure& beta) {
  detail::require_lambda(lambda);
  detail::require(c > 0 && a >= 0, ErrorKind::kParameter, "generator_bound needs c > 0, a >= 0");
  const double box = std::pow(c, 1.0 / lambda);
  return (1.5 * coag.sup_box(box) + 2.0 * frag.sup_box(box) * beta.c_beta_lambda(lambda)) * a * box;
}

struct ResidualResult {
  double mean = 0.0;
  double sem = 0.0;
  std::size_t replicas = 0;
  std::size_t stopped = 0;
  double max_abs_generator = 0.0;  // largest |L Phi| met along the paths
  std::vector<double> residuals;
};

/// Monte-Carlo estimate of E[Phi(M_{T^tau}) - Phi(m) - int_0^{T^tau} L Phi(M_s) ds].
template <class Phi>
ResidualResult martingale_residual(Phi&& phi, const SimConfig& cfg, std::size_t replicas,
                                   std::size_t workers = 1) {
  validate(cfg);
  std::vector<double> res(replicas, 0.0);
  std::vector<double> gmax(replicas, 0.0);
  std::vector<char> stopped(replicas, 0);
  const double phi0 = phi(cfg.initial);
  parallel_for(replicas, workers, [&](std::size_t r) {
    SimOptions opt;
    opt.record_events = false;
    SsaEngine eng(cfg, r, opt);
    MassSequence cur = cfg.initial;
    double integral = 0.0;
    double t_prev = 0.0;
    for (;;) {
      const auto ev = eng.step();
      const double lphi = generator_apply(phi, cur, cfg.coag, cfg.frag, cfg.beta);
      gmax[r] = std::max(gmax[r], std::abs(lphi));
      integral += lphi * (eng.time() - t_prev);
      t_prev = eng.time();
      if (!ev) break;
      cur = eng.state();
    }
    stopped[r] = eng.stopped() ? 1 : 0;
    res[r] = phi(cur) - phi0 - integral;
  });
  ResidualResult out;
  const auto ms = stats::mean_stats(res);
  out.mean = ms.mean;
  out.sem = ms.sem;
  out.replicas = replicas;
  for (std::size_t r = 0; r < replicas; ++r) {
    out.stopped += stopped[r];
    out.max_abs_generator = std::max(out.max_abs_generator, gmax[r]);
  }
  out.residuals = std::move(res);
  return out;
}

}  // namespace cofrag
