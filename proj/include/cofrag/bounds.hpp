// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "cofrag/dislocation.hpp"
#include "cofrag/error.hpp"
#include "cofrag/kernels.hpp"
#include "cofrag/mass_sequence.hpp"
#include "cofrag/metrics.hpp"

namespace cofrag {

/// Fbar_m = sup of F over (0, ||m||_1]; 0 for an empty state.
inline double frag_bar(const MassSequence& m, const FragmentationKernel& frag) {
  const double mass = norm(m, 1.0);
  return mass > 0.0 ? frag.sup_box(mass) : 0.0;
}

/// Growth bound on the lambda-moment: ||m||_lambda exp(Fbar_m C_beta^lambda t).
inline double moment_bound(const MassSequence& m, double lambda, const FragmentationKernel& frag,
                           const DislocationMeasure& beta, double t) {
  return norm(m, lambda) * std::exp(frag_bar(m, frag) * beta.c_beta_lambda(lambda) * t);
}

/// Mean particle-count bound N_0 exp((k - 1) Fbar beta(Theta) t), k the
/// largest fragment count.
inline double count_bound(const MassSequence& m, const FragmentationKernel& frag,
                          const DislocationMeasure& beta, double t) {
  const double k = static_cast<double>(beta.max_fragments());
  const double growth = std::max(k - 1.0, 0.0) * frag_bar(m, frag) * beta.total_mass();
  return static_cast<double>(m.size()) * std::exp(growth * t);
}

struct CouplingConstants {
  double box = 0.0;         // a = max(||m||_1, ||m~||_1)
  double kappa = 0.0;       // kappa_a at the simulation lambda
  double mu = 0.0;          // mu_a
  double alpha = 0.0;       // Hölder index of F
  double c_beta = 0.0;      // C_beta^lambda
  double power_gap = 0.0;   // constant of the two-sided power-gap inequality at (alpha, lambda)
  double fbar = 0.0;        // Fbar over (0, a]
  double c_hat = 0.0;       // 8 kappa x + 4 mu C_beta C (a_m^alpha v a_m~^alpha) + Fbar C_beta
  bool fitted = false;      // kappa comes from a numeric fit
};

inline CouplingConstants coupling_constants(const MassSequence& m, const MassSequence& mt, double x,
                                            double lambda, const CoagulationKernel& coag,
                                            const FragmentationKernel& frag,
                                            const DislocationMeasure& beta) {
  detail::require_lambda(lambda);
  CouplingConstants c;
  const double mm = norm(m, 1.0), mmt = norm(mt, 1.0);
  c.box = std::max(mm, mmt);
  detail::require(c.box > 0.0, ErrorKind::kParameter, "coupling constants need a non-empty state");
  c.kappa = coag.holder_constant(c.box, lambda);
  c.mu = frag.holder_constant(c.box);
  c.alpha = frag.holder_index();
  c.c_beta = beta.c_beta_lambda(lambda);
  c.power_gap = c.alpha > 0.0 ? power_gap_constant(c.alpha, lambda) : 1.0;
  c.fbar = frag.sup_box(c.box);
  c.fitted = coag.fitted();
  const double mass_alpha = std::max(std::pow(mm, c.alpha), std::pow(mmt, c.alpha));
  c.c_hat = 8.0 * c.kappa * x + 4.0 * c.mu * c.c_beta * c.power_gap * mass_alpha + c.fbar * c.c_beta;
  return c;
}

/// delta_lambda(m, m~) exp(C_hat (x + 1) t).
inline double coupling_bound(double initial_delta, const CouplingConstants& c, double x, double t) {
  return initial_delta * std::exp(c.c_hat * (x + 1.0) * t);
}

/// Truncation bound line delta_lambda(m^p, m^q) + D_1 (A(p) + B(p)) t with
/// D_1 = Fbar_m ||m||_lambda exp(Fbar_m C_beta^lambda t) and m^n the first n
/// masses of m.
struct TruncationLine {
  double initial_gap = 0.0;
  double a_tail = 0.0;
  double b_tail = 0.0;
  double d1 = 0.0;
  double value = 0.0;
};

inline TruncationLine truncation_line(const MassSequence& m, std::size_t p, std::size_t q,
                                      double lambda, const FragmentationKernel& frag,
                                      const DislocationMeasure& beta, double t) {
  detail::require(p >= 1 && p <= q, ErrorKind::kParameter, "truncation line needs 1 <= p <= q");
  TruncationLine line;
  line.initial_gap = dist_delta(m.prefix(p), m.prefix(q), lambda);
  const auto [a, b] = beta.truncation_tails(p, lambda);
  line.a_tail = a;
  line.b_tail = b;
  const double fbar = frag_bar(m, frag);
  line.d1 = fbar * norm(m, lambda) * std::exp(fbar * beta.c_beta_lambda(lambda) * t);
  line.value = line.initial_gap + line.d1 * (a + b) * t;
  return line;
}

}  // namespace cofrag
