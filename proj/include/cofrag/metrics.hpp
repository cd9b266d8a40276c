// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "cofrag/dislocation.hpp"
#include "cofrag/error.hpp"
#include "cofrag/mass_sequence.hpp"
#include "cofrag/rng.hpp"

namespace cofrag {

/// d(m, m~) = sum_k 2^-k |m_k - m~_k|, shorter sequence padded with zeros.
inline double dist_d(const MassSequence& m, const MassSequence& mt) {
  const std::size_t n = std::max(m.size(), mt.size());
  double acc = 0.0;
  for (std::size_t k = 1; k <= n; ++k)
    acc += std::ldexp(std::abs(m.at(k) - mt.at(k)), -static_cast<int>(k));
  return acc;
}

/// delta_lambda(m, m~) = sum_k |m_k^lambda - m~_k^lambda|, zero padded.
inline double dist_delta(const MassSequence& m, const MassSequence& mt, double lambda) {
  detail::require_lambda(lambda);
  const std::size_t n = std::max(m.size(), mt.size());
  double acc = 0.0;
  for (std::size_t k = 1; k <= n; ++k)
    acc += std::abs(std::pow(m.at(k), lambda) - std::pow(mt.at(k), lambda));
  return acc;
}

// Event maps extended to zero slots: merging with or splitting a particle of
// mass 0 leaves the sequence unchanged.
inline MassSequence padded_coalesce(const MassSequence& m, std::size_t i, std::size_t j) {
  detail::require(i >= 1 && i < j, ErrorKind::kIndex, "coalescence needs 1 <= i < j");
  if (j > m.size()) return m;
  return coalesce(m, i, j);
}

inline MassSequence padded_fragment(const MassSequence& m, std::size_t i, const DislocationAtom& theta) {
  detail::require(i >= 1, ErrorKind::kIndex, "particle index must be >= 1");
  if (i > m.size()) return m;
  return fragment(m, i, theta.ratios());
}

/// Fitted constant C with 2|x^(a+b) - y^(a+b)| <= C (x^a + y^a)|x^b - y^b|.
/// By homogeneity only t = y/x in (0, 1) matters; the ratio tends to 2 at
/// t -> 0 and to (a+b)/b at t -> 1.
inline double power_gap_constant(double a, double b) {
  detail::require(a >= 0 && b > 0, ErrorKind::kParameter, "power_gap_constant needs a >= 0, b > 0");
  if (a == 0.0) return 1.0;
  const auto ratio = [&](double t) {
    return 2.0 * (1.0 - std::pow(t, a + b)) / ((1.0 + std::pow(t, a)) * (1.0 - std::pow(t, b)));
  };
  double best = std::max(2.0, (a + b) / b);
  for (int k = 0; k <= 400; ++k) {
    const double e = -12.0 + 12.0 * k / 400.0;
    best = std::max(best, ratio(std::pow(10.0, e)));
    best = std::max(best, ratio(1.0 - std::pow(10.0, -8.0 + 8.0 * k / 400.0) * (1.0 - 1e-3)));
  }
  return 1.05 * best;
}

struct InequalityCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;  // rhs - lhs
  bool pass = false;
};

inline bool within_slack(double lhs, double rhs) {
  return lhs <= rhs + 1e-9 * std::abs(rhs) + 1e-12;
}

struct InequalityReport {
  std::uint64_t case_id = 0;
  std::vector<InequalityCheck> checks;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.pass; });
  }

  void add(std::string name, double lhs, double rhs) {
    checks.push_back({std::move(name), lhs, rhs, rhs - lhs, within_slack(lhs, rhs)});
  }
};

/// One input of the inequality suite.
struct InequalityCase {
  std::uint64_t id = 0;
  MassSequence m;
  MassSequence mt;
  std::size_t i = 1;
  std::size_t j = 2;
  DislocationAtom theta = DislocationAtom::make({0.5, 0.5}, 1.0);
  double lambda = 1.0;
  std::size_t u = 1;
  std::size_t v = 2;
};

/// Evaluates every event-map, distance and permutation inequality for one
/// case. `perm_seed` drives the random permutations; `permutations` of them
/// are tried per case.
inline InequalityReport check_inequalities(const MassSequence& m, const MassSequence& mt, std::size_t i,
                                           std::size_t j, const DislocationAtom& theta, double lambda,
                                           std::size_t u, std::size_t v, std::uint64_t case_id = 0,
                                           std::uint64_t perm_seed = 0, int permutations = 100) {
  detail::require_lambda(lambda);
  detail::require_pair(i, j, m.size());
  detail::require(u >= 1 && u < v, ErrorKind::kIndex, "projection levels need 1 <= u < v");

  InequalityReport rep;
  rep.case_id = case_id;
  const double lam = lambda;
  const auto pw = [lam](double x) { return std::pow(x, lam); };
  const double mi = m.at(i), mj = m.at(j);
  const double mti = mt.at(i);
  const double norm_m = norm(m, lam);
  const double mass_m = norm(m, 1.0);
  const double mass_mt = norm(mt, 1.0);

  const auto cm = coalesce(m, i, j);
  const auto cmt = padded_coalesce(mt, i, j);
  const auto fm = padded_fragment(m, i, theta);
  const auto fmt = padded_fragment(mt, i, theta);
  const double sum_tl = theta.power_sum(lam);
  const double tail_tl = theta.power_sum(lam, 2);
  const double t1 = theta.theta(1);

  // Norm identities, each as two one-sided checks.
  const double c_norm = norm(cm, lam);
  const double c_pred = norm_m + pw(mi + mj) - pw(mi) - pw(mj);
  rep.add("coalesce_norm_identity_upper", c_norm, c_pred);
  rep.add("coalesce_norm_identity_lower", c_pred, c_norm);
  rep.add("coalesce_norm_decrease", c_norm, norm_m);
  const double f_norm = norm(fm, lam);
  const double f_pred = norm_m + pw(mi) * (sum_tl - 1.0);
  rep.add("fragment_norm_identity_upper", f_norm, f_pred);
  rep.add("fragment_norm_identity_lower", f_pred, f_norm);

  // Displacement and contraction under the event maps.
  rep.add("coalesce_displacement", dist_delta(cm, m, lam), 2.0 * pw(mj));
  rep.add("fragment_displacement", dist_delta(fm, m, lam), pw(mi) * (tail_tl + (1.0 - pw(t1))));
  const double delta_mmt = dist_delta(m, mt, lam);
  rep.add("coalesce_contraction", dist_delta(cm, cmt, lam), delta_mmt);
  rep.add("fragment_contraction", dist_delta(fm, fmt, lam),
          delta_mmt + std::abs(pw(mi) - pw(mti)) * (sum_tl - 1.0));

  // Projection gap between psi_u and psi_v of the same atom.
  const auto th_u = project_atom(theta, u);
  const auto th_v = project_atom(theta, v);
  double proj_tail = 0.0;
  for (std::size_t k = u + 1; k <= v; ++k) proj_tail += pw(theta.theta(k));
  rep.add("projection_gap", dist_delta(padded_fragment(m, i, th_u), padded_fragment(m, i, th_v), lam),
          proj_tail * pw(mi));

  // Estimates on d.
  const double cpow = power_gap_constant(1.0 - lam, lam);
  const double mass_factor = std::pow(std::max(mass_m, mass_mt), 1.0 - lam);
  const double d_mmt = dist_d(m, mt);
  const double delta1 = dist_delta(m, mt, 1.0);
  rep.add("d_le_delta1", d_mmt, delta1);
  rep.add("delta1_le_delta_lambda", delta1, cpow * mass_factor * delta_mmt);
  rep.add("d_coalesce_displacement", dist_d(cm, m), 1.5 * std::ldexp(mj, -static_cast<int>(i)));
  double pair_sum = 0.0;
  for (std::size_t k = 1; k <= m.size(); ++k)
    for (std::size_t l = k + 1; l <= m.size(); ++l) pair_sum += dist_d(coalesce(m, k, l), m);
  rep.add("d_coalesce_displacement_sum", pair_sum, 1.5 * mass_m);
  rep.add("d_coalesce_lipschitz", dist_d(cm, cmt),
          (std::ldexp(1.0, static_cast<int>(i)) + std::ldexp(1.0, static_cast<int>(j))) * d_mmt);
  rep.add("d_fragment_displacement", dist_d(fm, m), 2.0 * (1.0 - t1) * std::ldexp(mi, -static_cast<int>(i)));
  rep.add("d_fragment_lipschitz", dist_d(fm, fmt), cpow * mass_factor * delta_mmt);
  double lin_tail = 0.0;
  for (std::size_t k = u + 1; k <= theta.fragments(); ++k) lin_tail += theta.theta(k);
  rep.add("d_projection_gap", dist_d(fm, padded_fragment(m, i, th_u)), mi * lin_tail);

  // Two-sided power gap at (m_i, m~_i) and (m_1, m~_1) with exponents (1-lambda, lambda).
  const double a = 1.0 - lam, b = lam;
  const auto power_gap = [&](double x, double y, const std::string& at) {
    const double left = (std::pow(x, a) + std::pow(y, a)) * std::abs(std::pow(x, b) - std::pow(y, b));
    const double mid = 2.0 * std::abs(std::pow(x, a + b) - std::pow(y, a + b));
    rep.add("power_gap_lower@" + at, left, mid);
    rep.add("power_gap_upper@" + at, mid, cpow * left);
  };
  power_gap(mi, mti, "i");
  power_gap(m.at(1), mt.at(1), "1");

  // Ordered sums are minimal over finite permutations of the padded slots.
  const std::size_t len = std::max(m.size(), mt.size()) + 2;
  RngStream rng(perm_seed, static_cast<std::uint32_t>(case_id), 3);
  std::vector<std::size_t> sigma(len), sigma_t(len);
  double min_d = std::numeric_limits<double>::infinity();
  double min_delta = std::numeric_limits<double>::infinity();
  for (int p = 0; p < permutations; ++p) {
    std::iota(sigma.begin(), sigma.end(), std::size_t{1});
    std::iota(sigma_t.begin(), sigma_t.end(), std::size_t{1});
    for (std::size_t k = len - 1; k > 0; --k) {
      std::swap(sigma[k], sigma[rng.below(k + 1)]);
      std::swap(sigma_t[k], sigma_t[rng.below(k + 1)]);
    }
    double sd = 0.0, sl = 0.0;
    for (std::size_t k = 1; k <= len; ++k) {
      sd += std::ldexp(std::abs(m.at(k) - mt.at(sigma_t[k - 1])), -static_cast<int>(k));
      sl += std::abs(pw(m.at(sigma[k - 1])) - pw(mt.at(sigma_t[k - 1])));
    }
    min_d = std::min(min_d, sd);
    min_delta = std::min(min_delta, sl);
  }
  if (permutations > 0) {
    rep.add("permutation_d", d_mmt, min_d);
    rep.add("permutation_delta", delta_mmt, min_delta);
  }
  return rep;
}

inline InequalityReport check_inequalities(const InequalityCase& c, std::uint64_t perm_seed = 0,
                                           int permutations = 100) {
  return check_inequalities(c.m, c.mt, c.i, c.j, c.theta, c.lambda, c.u, c.v, c.id, perm_seed,
                            permutations);
}

namespace detail {

inline MassSequence random_masses(RngStream& rng, std::size_t len) {
  std::vector<double> raw(len);
  for (auto& x : raw) x = std::pow(10.0, -3.0 + 6.0 * rng.uniform());
  return MassSequence::reorder(raw);
}

inline DislocationAtom random_atom(RngStream& rng) {
  const std::size_t k = 1 + rng.below(6);
  std::vector<double> parts(k);
  double total = 0.0;
  for (auto& p : parts) {
    p = -std::log(rng.uniform_positive());
    total += p;
  }
  // Conservative about a third of the time (needs k >= 2 to keep theta_1 < 1).
  const double keep = (k >= 2 && rng.uniform() < 1.0 / 3.0) ? 1.0 : 0.999 * rng.uniform_positive();
  for (auto& p : parts) p = keep * p / total;
  std::sort(parts.begin(), parts.end(), std::greater<>());
  const double excess = std::accumulate(parts.begin(), parts.end(), 0.0) - 1.0;
  if (excess > 0) parts.front() -= excess;
  return DislocationAtom::make(std::move(parts), 1.0);
}

}  // namespace detail

/// Case 0 is the fixed tight case m = (3,2,1), i = 1, j = 2, lambda = 1;
/// later cases draw masses log-uniform in [1e-3, 1e3], lengths 2..12, a
/// random valid atom and lambda uniform in (0, 1].
inline InequalityCase random_inequality_case(std::uint64_t seed, std::uint64_t id) {
  InequalityCase c;
  c.id = id;
  if (id == 0) {
    c.m = MassSequence::reorder({3.0, 2.0, 1.0});
    c.mt = MassSequence::reorder({3.0, 1.5, 1.0});
    c.i = 1;
    c.j = 2;
    c.lambda = 1.0;
    c.u = 1;
    c.v = 2;
    return c;
  }
  RngStream rng(seed, static_cast<std::uint32_t>(id), 2);
  const std::size_t len = 2 + rng.below(11);
  c.m = detail::random_masses(rng, len);
  if (rng.uniform() < 0.5) {
    c.mt = detail::random_masses(rng, 1 + rng.below(12));
  } else {
    std::vector<double> raw(c.m.begin(), c.m.end());
    for (auto& x : raw) x *= std::exp(rng.uniform() - 0.5);
    if (rng.uniform() < 0.25) raw.pop_back();
    c.mt = MassSequence::reorder(raw);
  }
  c.i = 1 + rng.below(len - 1);
  c.j = c.i + 1 + rng.below(len - c.i);
  c.theta = detail::random_atom(rng);
  c.lambda = rng.uniform_positive();
  c.u = 1 + rng.below(6);
  c.v = c.u + 1 + rng.below(4);
  return c;
}

struct InequalitySummary {
  std::uint64_t cases = 0;
  std::uint64_t failures = 0;
  // Per check name: smallest slack relative to max(|rhs|, 1).
  std::map<std::string, double> min_relative_slack;
  std::map<std::string, std::uint64_t> failures_by_check;
  // Cases where the coalescence displacement bound is attained within 1e-9.
  std::uint64_t coalesce_equality_cases = 0;
  std::vector<InequalityReport> failed_reports;

  bool all_pass() const { return failures == 0; }
};

inline InequalitySummary run_inequality_suite(std::uint64_t seed, std::uint64_t cases,
                                              int permutations = 100) {
  InequalitySummary s;
  for (std::uint64_t id = 0; id < cases; ++id) {
    const auto rep = check_inequalities(random_inequality_case(seed, id), seed, permutations);
    ++s.cases;
    for (const auto& c : rep.checks) {
      const double rel = c.slack / std::max(std::abs(c.rhs), 1.0);
      auto [it, fresh] = s.min_relative_slack.emplace(c.name, rel);
      if (!fresh) it->second = std::min(it->second, rel);
      if (!c.pass) ++s.failures_by_check[c.name];
      if (c.name == "coalesce_displacement" &&
          std::abs(c.slack) <= 1e-9 * std::max(std::abs(c.rhs), 1e-300))
        ++s.coalesce_equality_cases;
    }
    if (!rep.all_pass()) {
      ++s.failures;
      if (s.failed_reports.size() < 10) s.failed_reports.push_back(rep);
    }
  }
  return s;
}

}  // namespace cofrag
