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

/// Ordered particle masses of a finite system: descending, strictly positive.
/// Empty slots (mass 0) are never stored; a shorter sequence is implicitly
/// padded with zeros wherever two sequences are compared.
///
/// Public particle indices are 1-based.
class MassSequence {
 public:
  MassSequence() = default;

  /// Drops zeros and sorts descending. Equal masses keep their input order.
  static MassSequence reorder(std::span<const double> raw) {
    std::vector<double> kept;
    kept.reserve(raw.size());
    for (double x : raw) {
      detail::require(std::isfinite(x) && x >= 0.0, ErrorKind::kInvalidMass,
                      "masses must be finite and non-negative, got " + std::to_string(x));
      if (x > 0.0) kept.push_back(x);
    }
    std::stable_sort(kept.begin(), kept.end(), std::greater<>());
    return MassSequence(std::move(kept));
  }

  static MassSequence reorder(std::initializer_list<double> raw) {
    return reorder(std::span<const double>(raw.begin(), raw.size()));
  }

  /// `count` particles of identical mass.
  static MassSequence uniform(std::size_t count, double mass) {
    return reorder(std::vector<double>(count, mass));
  }

  std::size_t size() const { return masses_.size(); }
  bool empty() const { return masses_.empty(); }

  /// 1-based access; slots past the end read as 0.
  double at(std::size_t k) const {
    return (k >= 1 && k <= masses_.size()) ? masses_[k - 1] : 0.0;
  }

  std::span<const double> masses() const { return masses_; }
  auto begin() const { return masses_.begin(); }
  auto end() const { return masses_.end(); }

  /// First `n` particles, i.e. the state (m_1, ..., m_n, 0, ...).
  MassSequence prefix(std::size_t n) const {
    const auto keep = std::min(n, masses_.size());
    return MassSequence(std::vector<double>(masses_.begin(), masses_.begin() + keep));
  }

  friend bool operator==(const MassSequence&, const MassSequence&) = default;

 private:
  explicit MassSequence(std::vector<double> sorted) : masses_(std::move(sorted)) {}

  std::vector<double> masses_;
};

/// Sum of m_k^lambda; lambda = 1 gives the total mass.
inline double norm(const MassSequence& m, double lambda) {
  detail::require_lambda(lambda);
  double acc = 0.0;
  if (lambda == 1.0) {
    for (double x : m) acc += x;
  } else {
    for (double x : m) acc += std::pow(x, lambda);
  }
  return acc;
}

namespace detail {

// Ordering primitives shared by MassSequence and the simulator's particle
// table, so both apply the same tie rule: among equal masses, pre-event
// relative order is kept.

/// Replaces slot i0 by `merged` (which must be at least as heavy as the old
/// occupant) and erases slot j0 > i0.
template <class T, class MassOf>
void coalesce_in_place(std::vector<T>& v, std::size_t i0, std::size_t j0, T merged, MassOf mass_of) {
  v.erase(v.begin() + static_cast<std::ptrdiff_t>(j0));
  v[i0] = std::move(merged);
  std::size_t k = i0;
  while (k > 0 && mass_of(v[k - 1]) < mass_of(v[k])) {
    std::swap(v[k - 1], v[k]);
    --k;
  }
}

/// Replaces slot i0 by `pieces` (in the given order) and restores the
/// descending order stably.
template <class T, class MassOf>
void fragment_in_place(std::vector<T>& v, std::size_t i0, std::span<const T> pieces, MassOf mass_of) {
  std::vector<T> out;
  out.reserve(v.size() + pieces.size());
  out.insert(out.end(), v.begin(), v.begin() + static_cast<std::ptrdiff_t>(i0));
  out.insert(out.end(), pieces.begin(), pieces.end());
  out.insert(out.end(), v.begin() + static_cast<std::ptrdiff_t>(i0) + 1, v.end());
  std::stable_sort(out.begin(), out.end(),
                   [&](const T& a, const T& b) { return mass_of(a) > mass_of(b); });
  v = std::move(out);
}

inline void require_pair(std::size_t i, std::size_t j, std::size_t n) {
  require(i >= 1 && i < j && j <= n, ErrorKind::kIndex,
          "coalescence needs 1 <= i < j <= " + std::to_string(n) + ", got (" + std::to_string(i) +
              ", " + std::to_string(j) + ")");
}

inline void require_particle(std::size_t i, std::size_t n) {
  require(i >= 1 && i <= n, ErrorKind::kIndex,
          "particle index must lie in [1, " + std::to_string(n) + "], got " + std::to_string(i));
}

}  // namespace detail

/// Merges particles i and j (1-based, i < j) into one of mass m_i + m_j.
inline MassSequence coalesce(const MassSequence& m, std::size_t i, std::size_t j) {
  detail::require_pair(i, j, m.size());
  std::vector<double> v(m.begin(), m.end());
  const double merged = v[i - 1] + v[j - 1];
  detail::coalesce_in_place(v, i - 1, j - 1, merged, [](double x) { return x; });
  return MassSequence::reorder(v);
}

/// Splits particle i (1-based) into pieces ratio_k * m_i. Zero ratios produce
/// no particle. The ratios are taken as given; validity (descending, in [0,1),
/// summing to at most 1) is the caller's contract, see DislocationAtom.
inline MassSequence fragment(const MassSequence& m, std::size_t i, std::span<const double> ratios) {
  detail::require_particle(i, m.size());
  std::vector<double> v(m.begin(), m.end());
  const double parent = v[i - 1];
  std::vector<double> pieces;
  pieces.reserve(ratios.size());
  for (double r : ratios) {
    if (r > 0.0) pieces.push_back(r * parent);
  }
  detail::fragment_in_place(v, i - 1, std::span<const double>(pieces), [](double x) { return x; });
  return MassSequence::reorder(v);
}

}  // namespace cofrag
