// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "cofrag/error.hpp"

namespace cofrag::stats {

struct MeanStats {
  double mean = 0.0;
  double sem = 0.0;
  std::size_t n = 0;
};

/// Sample mean and standard error of the mean (Welford).
inline MeanStats mean_stats(std::span<const double> xs) {
  MeanStats s;
  double m2 = 0.0;
  for (double x : xs) {
    ++s.n;
    const double d = x - s.mean;
    s.mean += d / static_cast<double>(s.n);
    m2 += d * (x - s.mean);
  }
  if (s.n > 1) s.sem = std::sqrt(m2 / static_cast<double>(s.n - 1) / static_cast<double>(s.n));
  return s;
}

inline double median(std::vector<double> xs) {
  detail::require(!xs.empty(), ErrorKind::kInput, "median of an empty sample");
  const auto mid = xs.size() / 2;
  std::nth_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid), xs.end());
  const double hi = xs[mid];
  if (xs.size() % 2 == 1) return hi;
  const double lo = *std::max_element(xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

/// Survival function of the Kolmogorov distribution,
/// Q(t) = 2 sum_{k>=1} (-1)^(k-1) exp(-2 k^2 t^2).
inline double kolmogorov_q(double t) {
  if (t < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    sum += (k % 2 == 1) ? term : -term;
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double dof = 0.0;
};

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value
/// (Stephens' small-sample correction).
inline TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  detail::require(!a.empty() && !b.empty(), ErrorKind::kInput, "KS test needs two non-empty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t ia = 0, ib = 0;
  double d = 0.0;
  while (ia < a.size() && ib < b.size()) {
    const double x = std::min(a[ia], b[ib]);
    while (ia < a.size() && a[ia] == x) ++ia;
    while (ib < b.size() && b[ib] == x) ++ib;
    d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
  }
  const double ne = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((ne + 0.12 + 0.11 / ne) * d), 0.0};
}

/// Chi-square test of homogeneity for two samples of a discrete variable.
/// Categories whose pooled count is below `min_pooled` are merged into one.
inline TestResult chi_square_two_sample(std::span<const long> a, std::span<const long> b,
                                        double min_pooled = 10.0) {
  detail::require(!a.empty() && !b.empty(), ErrorKind::kInput,
                  "chi-square test needs two non-empty samples");
  std::map<long, std::pair<double, double>> counts;
  for (long x : a) counts[x].first += 1;
  for (long x : b) counts[x].second += 1;
  std::vector<std::pair<double, double>> cells;
  std::pair<double, double> rare{0, 0};
  for (const auto& [k, c] : counts) {
    if (c.first + c.second >= min_pooled)
      cells.push_back(c);
    else {
      rare.first += c.first;
      rare.second += c.second;
    }
  }
  if (rare.first + rare.second > 0) {
    if (rare.first + rare.second >= min_pooled || cells.empty()) {
      cells.push_back(rare);
    } else {
      cells.back().first += rare.first;
      cells.back().second += rare.second;
    }
  }
  if (cells.size() < 2) return {0.0, 1.0, 0.0};
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double n = na + nb;
  double chi2 = 0.0;
  for (const auto& [ca, cb] : cells) {
    const double pooled = ca + cb;
    const double ea = pooled * na / n;
    const double eb = pooled * nb / n;
    chi2 += (ca - ea) * (ca - ea) / ea + (cb - eb) * (cb - eb) / eb;
  }
  const double dof = static_cast<double>(cells.size() - 1);
  const boost::math::chi_squared dist(dof);
  return {chi2, boost::math::cdf(boost::math::complement(dist, chi2)), dof};
}

/// Bonferroni-adjusted p-value.
inline double bonferroni(double p, std::size_t tests) {
  return std::min(1.0, p * static_cast<double>(tests));
}

/// P(N > j) for N ~ Poisson(mean).
inline double poisson_tail_above(double mean, std::size_t j) {
  if (mean <= 0.0) return 0.0;
  return boost::math::gamma_p(static_cast<double>(j) + 1.0, mean);
}

}  // namespace cofrag::stats
