// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cofrag/error.hpp"

namespace cofrag {

/// One point mass of the dislocation measure: fragment ratios
/// 1 > theta_1 >= theta_2 >= ... > 0 summing to at most 1, and a weight.
class DislocationAtom {
 public:
  static DislocationAtom make(std::vector<double> ratios, double weight) {
    detail::require(std::isfinite(weight) && weight > 0.0, ErrorKind::kParameter,
                    "atom weight must be finite and > 0, got " + std::to_string(weight));
    double sum = 0.0;
    for (std::size_t k = 0; k < ratios.size(); ++k) {
      const double r = ratios[k];
      detail::require(std::isfinite(r) && r >= 0.0, ErrorKind::kParameter,
                      "atom ratios must be finite and >= 0, got " + std::to_string(r));
      detail::require(r < 1.0, ErrorKind::kParameter,
                      "degenerate dislocation excluded: ratio " + std::to_string(r) +
                          " >= 1 (theta_1 = 1 is not a dislocation)");
      detail::require(k == 0 || r <= ratios[k - 1], ErrorKind::kParameter,
                      "atom ratios must be listed in non-increasing order");
      sum += r;
    }
    detail::require(sum <= 1.0 + 1e-12, ErrorKind::kParameter,
                    "atom ratios sum to " + std::to_string(sum) +
                        " > 1: a dislocation may lose mass but never gain it");
    while (!ratios.empty() && ratios.back() == 0.0) ratios.pop_back();
    return DislocationAtom(std::move(ratios), weight);
  }

  static DislocationAtom make(std::initializer_list<double> ratios, double weight) {
    return make(std::vector<double>(ratios), weight);
  }

  std::span<const double> ratios() const { return ratios_; }
  double weight() const { return weight_; }

  /// theta_k for 1-based k, 0 past the stored ratios.
  double theta(std::size_t k) const { return (k >= 1 && k <= ratios_.size()) ? ratios_[k - 1] : 0.0; }
  std::size_t fragments() const { return ratios_.size(); }

  double sum() const {
    double s = 0.0;
    for (double r : ratios_) s += r;
    return s;
  }

  /// Sum of theta_k^lambda over k >= from (1-based).
  double power_sum(double lambda, std::size_t from = 1) const {
    double s = 0.0;
    for (std::size_t k = std::max<std::size_t>(from, 1); k <= ratios_.size(); ++k)
      s += std::pow(ratios_[k - 1], lambda);
    return s;
  }

  friend bool operator==(const DislocationAtom&, const DislocationAtom&) = default;

 private:
  DislocationAtom(std::vector<double> r, double w) : ratios_(std::move(r)), weight_(w) {}

  std::vector<double> ratios_;
  double weight_;
};

/// Membership theta in Theta(n) = {theta_1 <= 1 - 1/n}; level 0 means the
/// untruncated measure. Evaluated as n (1 - theta_1) >= 1 so that dyadic
/// boundary cases are decided exactly.
inline bool in_level(const DislocationAtom& a, std::size_t level) {
  if (level == 0) return true;
  return static_cast<double>(level) * (1.0 - a.theta(1)) >= 1.0 - 1e-12;
}

/// psi_n: keeps the first n ratios.
inline DislocationAtom project_atom(const DislocationAtom& a, std::size_t n) {
  detail::require(n >= 1, ErrorKind::kParameter, "projection level must be >= 1");
  const auto r = a.ratios();
  const auto keep = std::min(n, r.size());
  return DislocationAtom::make(std::vector<double>(r.begin(), r.begin() + keep), a.weight());
}

/// Derived integrals used as load-time sanity checks and by the bound lines.
struct BetaBounds {
  double lambda = 1.0;
  double c_beta = 0.0;          // C_beta^lambda
  double mass_loss = 0.0;       // int (1 - theta_1) d beta
  double c_theta = 0.0;         // int [sum_{k>=2} theta_k^lambda + (1 - theta_1^lambda)] d beta
  double positive_excess = 0.0; // int (sum theta_k^lambda - 1)^+ d beta
  bool pointwise_ok = true;     // the per-atom inequalities between these integrands
  bool integrals_ok = true;     // each integral above is <= c_beta
};

/// Finite dislocation measure. Atoms are kept in a fixed canonical order
/// (lexicographic on ratios, then weight) so that sampling is replayable.
class DislocationMeasure {
 public:
  DislocationMeasure() = default;

  explicit DislocationMeasure(std::vector<DislocationAtom> atoms) : atoms_(std::move(atoms)) {
    std::stable_sort(atoms_.begin(), atoms_.end(), [](const auto& a, const auto& b) {
      const auto ra = a.ratios();
      const auto rb = b.ratios();
      if (std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end())) return true;
      if (std::lexicographical_compare(rb.begin(), rb.end(), ra.begin(), ra.end())) return false;
      return a.weight() < b.weight();
    });
    cumulative_.reserve(atoms_.size());
    double acc = 0.0;
    for (const auto& a : atoms_) {
      acc += a.weight();
      cumulative_.push_back(acc);
    }
  }

  /// Named presets: "binary_half" = (1/2, 1/2) with weight 1,
  /// "ternary_third" = (1/3, 1/3, 1/3) with weight 1, "none" = empty.
  static DislocationMeasure preset(const std::string& name) {
    if (name == "binary_half") return DislocationMeasure({DislocationAtom::make({0.5, 0.5}, 1.0)});
    if (name == "ternary_third") {
      const double t = 1.0 / 3.0;
      return DislocationMeasure({DislocationAtom::make({t, t, t}, 1.0)});
    }
    if (name == "none") return DislocationMeasure();
    throw Error(ErrorKind::kConfiguration, "unknown dislocation preset '" + name + "'");
  }

  std::span<const DislocationAtom> atoms() const { return atoms_; }
  bool empty() const { return atoms_.empty(); }
  std::size_t size() const { return atoms_.size(); }

  /// 1-based atom access.
  const DislocationAtom& atom(std::size_t k) const {
    detail::require(k >= 1 && k <= atoms_.size(), ErrorKind::kIndex,
                    "atom index out of range: " + std::to_string(k));
    return atoms_[k - 1];
  }

  /// beta(Theta).
  double total_mass() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }

  std::size_t max_fragments() const {
    std::size_t k = 0;
    for (const auto& a : atoms_) k = std::max(k, a.fragments());
    return k;
  }

  double max_theta1() const {
    double t = 0.0;
    for (const auto& a : atoms_) t = std::max(t, a.theta(1));
    return t;
  }

  /// Smallest n >= 1 with restrict(n) == *this: every atom lies in Theta(n)
  /// and has at most n ratios. Truncation tails vanish from this level on.
  std::size_t support_level() const {
    std::size_t n = std::max<std::size_t>(1, max_fragments());
    while (!std::all_of(atoms_.begin(), atoms_.end(),
                        [&](const auto& a) { return in_level(a, n); }))
      ++n;
    return n;
  }

  double c_beta_lambda(double lambda) const {
    detail::require_lambda(lambda);
    double c = 0.0;
    for (const auto& a : atoms_)
      c += a.weight() * (a.power_sum(lambda, 2) + std::pow(1.0 - a.theta(1), lambda));
    return c;
  }

  /// beta_n: atoms outside Theta(n) dropped, survivors projected by psi_n.
  DislocationMeasure restrict(std::size_t n) const {
    detail::require(n >= 1, ErrorKind::kParameter, "truncation level must be >= 1");
    std::vector<DislocationAtom> kept;
    for (const auto& a : atoms_)
      if (in_level(a, n)) kept.push_back(project_atom(a, n));
    return DislocationMeasure(std::move(kept));
  }

  /// (A(n), B(n)): the mass beyond the n-th ratio and the C(theta) mass of
  /// atoms outside Theta(n).
  std::pair<double, double> truncation_tails(std::size_t n, double lambda) const {
    detail::require(n >= 1, ErrorKind::kParameter, "truncation level must be >= 1");
    detail::require_lambda(lambda);
    double a_tail = 0.0;
    double b_tail = 0.0;
    for (const auto& a : atoms_) {
      a_tail += a.weight() * a.power_sum(lambda, n + 1);
      if (!in_level(a, n))
        b_tail += a.weight() * (a.power_sum(lambda, 2) + (1.0 - std::pow(a.theta(1), lambda)));
    }
    return {a_tail, b_tail};
  }

  /// Inverse-CDF atom selection; returns a 1-based index.
  std::size_t sample_atom(double u) const {
    detail::require(!atoms_.empty(), ErrorKind::kCannotSample,
                    "cannot sample from an empty dislocation measure");
    const double target = u * total_mass();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    const auto k = static_cast<std::size_t>(it - cumulative_.begin());
    return std::min(k, atoms_.size() - 1) + 1;
  }

  BetaBounds bounds(double lambda) const {
    detail::require_lambda(lambda);
    BetaBounds b;
    b.lambda = lambda;
    b.c_beta = c_beta_lambda(lambda);
    constexpr double kSlack = 1e-12;
    for (const auto& a : atoms_) {
      const double t1 = a.theta(1);
      const double t1l = std::pow(t1, lambda);
      const double tail = a.power_sum(lambda, 2);
      const double excess = a.power_sum(lambda) - 1.0;
      b.pointwise_ok = b.pointwise_ok && (1.0 - t1l <= 1.0 - t1 + kSlack) &&
                       (1.0 - t1 <= std::pow(1.0 - t1, lambda) + kSlack) &&
                       (excess <= tail + kSlack);
      b.mass_loss += a.weight() * (1.0 - t1);
      b.c_theta += a.weight() * (tail + (1.0 - t1l));
      b.positive_excess += a.weight() * std::max(excess, 0.0);
    }
    const double tol = kSlack + 1e-12 * b.c_beta;
    b.integrals_ok = b.mass_loss <= b.c_beta + tol && b.c_theta <= b.c_beta + tol &&
                     b.positive_excess <= b.c_beta + tol;
    return b;
  }

  friend bool operator==(const DislocationMeasure& a, const DislocationMeasure& b) {
    return a.atoms_ == b.atoms_;
  }

 private:
  std::vector<DislocationAtom> atoms_;
  std::vector<double> cumulative_;
};

}  // namespace cofrag
