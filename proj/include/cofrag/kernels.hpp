// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "cofrag/error.hpp"
#include "cofrag/rng.hpp"

namespace cofrag {

using ParameterList = std::vector<std::pair<std::string, double>>;

namespace detail {

inline void require_mass_arg(double x) {
  require(std::isfinite(x) && x >= 0.0, ErrorKind::kInvalidMass,
          "kernel argument must be finite and non-negative, got " + std::to_string(x));
}

inline void require_finite_nonneg(double v, const std::string& what) {
  require(std::isfinite(v) && v >= 0.0, ErrorKind::kParameter,
          what + " must be finite and non-negative, got " + std::to_string(v));
}

/// Maximum of f on (0, 1]: dense linear grid plus a log grid towards 0,
/// refined by golden-section search around the best grid point.
template <class F>
double max_on_unit_interval(F&& f) {
  std::vector<double> xs;
  constexpr int kLinear = 4000;
  for (int k = 1; k <= kLinear; ++k) xs.push_back(static_cast<double>(k) / kLinear);
  for (int k = 0; k <= 240; ++k) xs.push_back(std::pow(10.0, -12.0 + 12.0 * k / 240.0));
  std::sort(xs.begin(), xs.end());
  std::size_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double v = f(xs[k]);
    if (v > best_val) {
      best_val = v;
      best = k;
    }
  }
  double lo = best > 0 ? xs[best - 1] : xs[0] * 0.5;
  double hi = best + 1 < xs.size() ? xs[best + 1] : 1.0;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - g * (hi - lo);
  double d = lo + g * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 80; ++it) {
    if (fc > fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - g * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + g * (hi - lo);
      fd = f(d);
    }
  }
  return std::max({best_val, fc, fd});
}

// Safety factors applied on top of numerically located suprema.
inline constexpr double kHolderFitSafety = 1.1;
inline constexpr double kSupFitSafety = 1.01;

}  // namespace detail

// ---------------------------------------------------------------------------
// Coagulation kernels
// ---------------------------------------------------------------------------

namespace coag {

/// K == scale.
struct Constant {
  double scale = 1.0;
};

/// scale * (x^alpha + y^alpha)^beta.
struct SumPower {
  double alpha = 1.0;
  double beta = 1.0;
  double scale = 1.0;
};

/// scale * (x^alpha y^beta + x^beta y^alpha), 0 <= alpha <= beta <= 1.
struct CrossPower {
  double alpha = 0.0;
  double beta = 1.0;
  double scale = 1.0;
};

/// scale * (x y)^(alpha/2) (x + y)^(-beta).
struct ProductSum {
  double alpha = 1.0;
  double beta = 0.0;
  double scale = 1.0;
  double unit_sup = 0.0;     // sup of the unscaled kernel on (0,1]^2
  double unit_holder = 0.0;  // sup |dG/ds| on the unit box boundary
};

/// scale * (x^alpha + y^alpha)^beta |x^gamma - y^gamma|.
struct SumPowerDiff {
  double alpha = 1.0;
  double beta = 1.0;
  double gamma = 1.0;
  double scale = 1.0;
  double unit_sup = 0.0;
  double unit_holder = 0.0;
};

/// scale * (x + y)^lambda exp(-beta (x + y)^(-alpha)).
struct ExpSum {
  double lambda = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  double scale = 1.0;
};

/// User-defined kernel. The caller supplies the Hölder index, the Hölder
/// constant a -> kappa_a and a majorant a -> sup_{(0,a]^2} K.
struct Custom {
  std::string name;
  std::function<double(double, double)> eval;
  double lambda = 1.0;
  std::function<double(double)> holder;
  std::function<double(double)> sup;
};

}  // namespace coag

/// Symmetric coagulation rate K(x, y) with the regularity data used by the
/// bound diagnostics. Immutable; cheap to copy.
class CoagulationKernel {
 public:
  using Family = std::variant<coag::Constant, coag::SumPower, coag::CrossPower, coag::ProductSum,
                              coag::SumPowerDiff, coag::ExpSum, coag::Custom>;

  static CoagulationKernel constant(double scale = 1.0) {
    detail::require_finite_nonneg(scale, "constant kernel value");
    return CoagulationKernel(coag::Constant{scale});
  }

  static CoagulationKernel sum_power(double alpha, double beta, double scale = 1.0) {
    detail::require_finite_nonneg(scale, "scale");
    detail::require(alpha > 0 && beta > 0 && std::isfinite(alpha) && std::isfinite(beta),
                    ErrorKind::kParameter, "sum_power needs alpha > 0 and beta > 0");
    const double lam = alpha * beta;
    detail::require(lam > 0 && lam <= 1.0, ErrorKind::kParameter,
                    "sum_power needs lambda = alpha*beta in (0, 1], got " + std::to_string(lam));
    return CoagulationKernel(coag::SumPower{alpha, beta, scale});
  }

  static CoagulationKernel cross_power(double alpha, double beta, double scale = 1.0) {
    detail::require_finite_nonneg(scale, "scale");
    detail::require(alpha >= 0 && alpha <= beta && beta <= 1.0, ErrorKind::kParameter,
                    "cross_power needs 0 <= alpha <= beta <= 1");
    const double lam = alpha + beta;
    detail::require(lam > 0 && lam <= 1.0, ErrorKind::kParameter,
                    "cross_power needs lambda = alpha+beta in (0, 1], got " + std::to_string(lam));
    return CoagulationKernel(coag::CrossPower{alpha, beta, scale});
  }

  static CoagulationKernel product_sum(double alpha, double beta, double scale = 1.0) {
    detail::require_finite_nonneg(scale, "scale");
    detail::require(alpha > 0 && alpha <= 1.0, ErrorKind::kParameter,
                    "product_sum needs alpha in (0, 1]");
    detail::require(beta >= 0 && std::isfinite(beta), ErrorKind::kParameter,
                    "product_sum needs beta >= 0");
    const double lam = alpha - beta;
    detail::require(lam > 0 && lam <= 1.0, ErrorKind::kParameter,
                    "product_sum needs lambda = alpha-beta in (0, 1], got " + std::to_string(lam));
    coag::ProductSum k{alpha, beta, scale, 0.0, 0.0};
    const auto unit = [&](double x, double y) {
      return std::pow(x * y, alpha / 2) * std::pow(x + y, -beta);
    };
    k.unit_sup = detail::max_on_unit_interval([&](double y) { return unit(1.0, y); });
    const double li = std::min(alpha / 2, alpha - beta);
    // dG/ds with x = s^(1/li): dK/dx * x^(1-li) / li, dK/dx = K (alpha/(2x) - beta/(x+y)).
    const auto dgds = [&](double x, double y) {
      return std::abs(unit(x, y) * (alpha / (2 * x) - beta / (x + y)) * std::pow(x, 1 - li) / li);
    };
    k.unit_holder = std::max(detail::max_on_unit_interval([&](double y) { return dgds(1.0, y); }),
                             detail::max_on_unit_interval([&](double s) {
                               return dgds(std::pow(s, 1 / li), 1.0);
                             }));
    return CoagulationKernel(k);
  }

  static CoagulationKernel sum_power_diff(double alpha, double beta, double gamma,
                                          double scale = 1.0) {
    detail::require_finite_nonneg(scale, "scale");
    detail::require(alpha > 0 && beta > 0 && std::isfinite(alpha) && std::isfinite(beta),
                    ErrorKind::kParameter, "sum_power_diff needs alpha > 0 and beta > 0");
    detail::require(gamma > 0 && gamma <= 1.0, ErrorKind::kParameter,
                    "sum_power_diff needs gamma in (0, 1]");
    const double lam = alpha * beta + gamma;
    detail::require(lam > 0 && lam <= 1.0, ErrorKind::kParameter,
                    "sum_power_diff needs lambda = alpha*beta+gamma in (0, 1], got " +
                        std::to_string(lam));
    coag::SumPowerDiff k{alpha, beta, gamma, scale, 0.0, 0.0};
    const auto unit = [&](double x, double y) {
      return std::pow(std::pow(x, alpha) + std::pow(y, alpha), beta) *
             std::abs(std::pow(x, gamma) - std::pow(y, gamma));
    };
    k.unit_sup = detail::max_on_unit_interval([&](double y) { return unit(1.0, y); });
    const double li = std::min(alpha, gamma);
    const auto dgds = [&](double x, double y) {
      const double sa = std::pow(x, alpha) + std::pow(y, alpha);
      const double diff = std::pow(x, gamma) - std::pow(y, gamma);
      const double dkdx = beta * std::pow(sa, beta - 1) * alpha * std::pow(x, alpha - 1) *
                              std::abs(diff) +
                          std::pow(sa, beta) * gamma * std::pow(x, gamma - 1);
      return std::abs(dkdx) * std::pow(x, 1 - li) / li;
    };
    k.unit_holder = std::max(detail::max_on_unit_interval([&](double y) { return dgds(1.0, y); }),
                             detail::max_on_unit_interval([&](double s) {
                               return dgds(std::pow(s, 1 / li), 1.0);
                             }));
    return CoagulationKernel(k);
  }

  static CoagulationKernel exp_sum(double lambda, double alpha, double beta, double scale = 1.0) {
    detail::require_finite_nonneg(scale, "scale");
    detail::require(lambda > 0 && lambda <= 1.0, ErrorKind::kParameter,
                    "exp_sum needs lambda in (0, 1]");
    detail::require(alpha > 0 && beta > 0 && std::isfinite(alpha) && std::isfinite(beta),
                    ErrorKind::kParameter, "exp_sum needs alpha > 0 and beta > 0");
    return CoagulationKernel(coag::ExpSum{lambda, alpha, beta, scale});
  }

  /// Custom kernels must ship a majorant; a missing one is a configuration
  /// error because thinning would silently be wrong without it.
  static CoagulationKernel custom(coag::Custom k) {
    detail::require(static_cast<bool>(k.eval), ErrorKind::kConfiguration,
                    "custom coagulation kernel '" + k.name + "' has no evaluator");
    detail::require(static_cast<bool>(k.sup), ErrorKind::kConfiguration,
                    "custom coagulation kernel '" + k.name + "' has no sup_box majorant");
    detail::require(static_cast<bool>(k.holder), ErrorKind::kConfiguration,
                    "custom coagulation kernel '" + k.name + "' has no Hölder constant");
    detail::require(k.lambda > 0 && k.lambda <= 1.0, ErrorKind::kConfiguration,
                    "custom coagulation kernel '" + k.name + "' needs lambda in (0, 1]");
    return CoagulationKernel(std::move(k));
  }

  /// K(x, y); zero whenever either argument is zero.
  double operator()(double x, double y) const {
    detail::require_mass_arg(x);
    detail::require_mass_arg(y);
    if (x == 0.0 || y == 0.0) return 0.0;
    return eval_positive(x, y);
  }

  /// Hot-path evaluation; both arguments must be > 0.
  double eval_positive(double x, double y) const {
    return std::visit([&](const auto& k) { return eval_family(k, x, y); }, family_);
  }

  /// Largest index for which the Hölder bound is certified.
  double holder_index() const {
    return std::visit([](const auto& k) { return holder_index_family(k); }, family_);
  }

  /// The lambda the literature catalog associates with this family
  /// (informational; may exceed holder_index()).
  double catalog_lambda() const {
    return std::visit([](const auto& k) { return catalog_lambda_family(k); }, family_);
  }

  /// kappa_a for the Hölder bound in x^lambda on (0, a]; requires
  /// lambda <= holder_index().
  double holder_constant(double a, double lambda) const {
    detail::require(a > 0 && std::isfinite(a), ErrorKind::kParameter, "box size must be > 0");
    detail::require_lambda(lambda);
    const double li = holder_index();
    detail::require(lambda <= li * (1 + 1e-12), ErrorKind::kParameter,
                    "lambda " + std::to_string(lambda) + " exceeds the kernel's Hölder index " +
                        std::to_string(li));
    const double at_index = std::visit([&](const auto& k) { return holder_family(k, a); }, family_);
    if (lambda >= li) return at_index;
    return at_index * (li / lambda) * std::pow(a, li - lambda);
  }

  /// A value >= sup of K over (0, a]^2.
  double sup_box(double a) const {
    detail::require(a > 0 && std::isfinite(a), ErrorKind::kParameter, "box size must be > 0");
    return std::visit([&](const auto& k) { return sup_family(k, a); }, family_);
  }

  /// True when the Hölder constant or the majorant comes from a numeric fit.
  bool fitted() const {
    return std::holds_alternative<coag::ProductSum>(family_) ||
           std::holds_alternative<coag::SumPowerDiff>(family_) ||
           std::holds_alternative<coag::ExpSum>(family_);
  }

  bool is_custom() const { return std::holds_alternative<coag::Custom>(family_); }

  /// True when K vanishes identically.
  bool is_zero() const {
    const auto* c = std::get_if<coag::Constant>(&family_);
    return c != nullptr && c->scale == 0.0;
  }

  std::string kind() const {
    return std::visit([](const auto& k) { return kind_family(k); }, family_);
  }

  ParameterList parameters() const {
    return std::visit([](const auto& k) { return params_family(k); }, family_);
  }

 private:
  explicit CoagulationKernel(Family f) : family_(std::move(f)) {}

  static double eval_family(const coag::Constant& k, double, double) { return k.scale; }
  static double eval_family(const coag::SumPower& k, double x, double y) {
    if (k.alpha == 1.0 && k.beta == 1.0) return k.scale * (x + y);
    return k.scale * std::pow(std::pow(x, k.alpha) + std::pow(y, k.alpha), k.beta);
  }
  static double eval_family(const coag::CrossPower& k, double x, double y) {
    return k.scale * (std::pow(x, k.alpha) * std::pow(y, k.beta) +
                      std::pow(x, k.beta) * std::pow(y, k.alpha));
  }
  static double eval_family(const coag::ProductSum& k, double x, double y) {
    return k.scale * std::pow(x * y, k.alpha / 2) * std::pow(x + y, -k.beta);
  }
  static double eval_family(const coag::SumPowerDiff& k, double x, double y) {
    return k.scale * std::pow(std::pow(x, k.alpha) + std::pow(y, k.alpha), k.beta) *
           std::abs(std::pow(x, k.gamma) - std::pow(y, k.gamma));
  }
  static double eval_family(const coag::ExpSum& k, double x, double y) {
    const double u = x + y;
    return k.scale * std::pow(u, k.lambda) * std::exp(-k.beta * std::pow(u, -k.alpha));
  }
  static double eval_family(const coag::Custom& k, double x, double y) { return k.eval(x, y); }

  static double holder_index_family(const coag::Constant&) { return 1.0; }
  static double holder_index_family(const coag::SumPower& k) {
    // beta <= 1: (s^(1/beta) + t^(1/beta))^beta is an l^p norm of (x^lambda, y^lambda).
    // beta > 1: (u + v)^beta in u = x^alpha is Lipschitz on compacts.
    return k.beta <= 1.0 ? k.alpha * k.beta : k.alpha;
  }
  static double holder_index_family(const coag::CrossPower& k) {
    // x^alpha y^beta is only Lipschitz in x^alpha near x = 0.
    return k.alpha == 0.0 ? (k.beta == 0.0 ? 1.0 : k.beta) : k.alpha;
  }
  static double holder_index_family(const coag::ProductSum& k) {
    return std::min(k.alpha / 2, k.alpha - k.beta);
  }
  static double holder_index_family(const coag::SumPowerDiff& k) {
    return std::min(k.alpha, k.gamma);
  }
  static double holder_index_family(const coag::ExpSum& k) { return k.lambda; }
  static double holder_index_family(const coag::Custom& k) { return k.lambda; }

  static double catalog_lambda_family(const coag::Constant&) { return 1.0; }
  static double catalog_lambda_family(const coag::SumPower& k) { return k.alpha * k.beta; }
  static double catalog_lambda_family(const coag::CrossPower& k) { return k.alpha + k.beta; }
  static double catalog_lambda_family(const coag::ProductSum& k) { return k.alpha - k.beta; }
  static double catalog_lambda_family(const coag::SumPowerDiff& k) {
    return k.alpha * k.beta + k.gamma;
  }
  static double catalog_lambda_family(const coag::ExpSum& k) { return k.lambda; }
  static double catalog_lambda_family(const coag::Custom& k) { return k.lambda; }

  static double holder_family(const coag::Constant&, double) { return 0.0; }
  static double holder_family(const coag::SumPower& k, double a) {
    if (k.beta <= 1.0) return k.scale;
    return k.scale * k.beta * std::pow(2.0, k.beta - 1) * std::pow(a, k.alpha * (k.beta - 1));
  }
  static double holder_family(const coag::CrossPower& k, double a) {
    if (k.alpha == 0.0) return k.beta == 0.0 ? 0.0 : k.scale;
    return k.scale * (1 + k.beta / k.alpha) * std::pow(a, k.beta);
  }
  static double holder_family(const coag::ProductSum& k, double a) {
    // dG/ds is homogeneous of degree (alpha-beta)/li - 1 in (s, t).
    const double li = holder_index_family(k);
    return detail::kHolderFitSafety * k.scale * k.unit_holder * std::pow(a, k.alpha - k.beta - li);
  }
  static double holder_family(const coag::SumPowerDiff& k, double a) {
    const double li = holder_index_family(k);
    const double degree = k.alpha * k.beta + k.gamma;
    return detail::kHolderFitSafety * k.scale * k.unit_holder * std::pow(a, degree - li);
  }
  static double holder_family(const coag::ExpSum& k, double a) {
    // K = h(x + y); |x - x'| <= a^(1-lambda)/lambda |x^lambda - x'^lambda| on (0, a].
    const auto hprime = [&](double u) {
      return std::pow(u, k.lambda) * std::exp(-k.beta * std::pow(u, -k.alpha)) *
             (k.lambda / u + k.alpha * k.beta * std::pow(u, -k.alpha - 1));
    };
    const double top = 2 * a;
    const double unit_max = detail::max_on_unit_interval([&](double r) { return hprime(r * top); });
    return detail::kHolderFitSafety * k.scale * unit_max * std::pow(a, 1 - k.lambda) / k.lambda;
  }
  static double holder_family(const coag::Custom& k, double a) { return k.holder(a); }

  static double sup_family(const coag::Constant& k, double) { return k.scale; }
  static double sup_family(const coag::SumPower& k, double a) { return eval_family(k, a, a); }
  static double sup_family(const coag::CrossPower& k, double a) { return eval_family(k, a, a); }
  static double sup_family(const coag::ProductSum& k, double a) {
    return detail::kSupFitSafety * k.scale * k.unit_sup * std::pow(a, k.alpha - k.beta);
  }
  static double sup_family(const coag::SumPowerDiff& k, double a) {
    return detail::kSupFitSafety * k.scale * k.unit_sup *
           std::pow(a, k.alpha * k.beta + k.gamma);
  }
  static double sup_family(const coag::ExpSum& k, double a) { return eval_family(k, a, a); }
  static double sup_family(const coag::Custom& k, double a) { return k.sup(a); }

  static std::string kind_family(const coag::Constant&) { return "constant"; }
  static std::string kind_family(const coag::SumPower&) { return "sum_power"; }
  static std::string kind_family(const coag::CrossPower&) { return "cross_power"; }
  static std::string kind_family(const coag::ProductSum&) { return "product_sum"; }
  static std::string kind_family(const coag::SumPowerDiff&) { return "sum_power_diff"; }
  static std::string kind_family(const coag::ExpSum&) { return "exp_sum"; }
  static std::string kind_family(const coag::Custom& k) { return "custom:" + k.name; }

  static ParameterList params_family(const coag::Constant& k) { return {{"scale", k.scale}}; }
  static ParameterList params_family(const coag::SumPower& k) {
    return {{"alpha", k.alpha}, {"beta", k.beta}, {"scale", k.scale}};
  }
  static ParameterList params_family(const coag::CrossPower& k) {
    return {{"alpha", k.alpha}, {"beta", k.beta}, {"scale", k.scale}};
  }
  static ParameterList params_family(const coag::ProductSum& k) {
    return {{"alpha", k.alpha}, {"beta", k.beta}, {"scale", k.scale}};
  }
  static ParameterList params_family(const coag::SumPowerDiff& k) {
    return {{"alpha", k.alpha}, {"beta", k.beta}, {"gamma", k.gamma}, {"scale", k.scale}};
  }
  static ParameterList params_family(const coag::ExpSum& k) {
    return {{"lambda", k.lambda}, {"alpha", k.alpha}, {"beta", k.beta}, {"scale", k.scale}};
  }
  static ParameterList params_family(const coag::Custom& k) { return {{"lambda", k.lambda}}; }

  Family family_;
};

// ---------------------------------------------------------------------------
// Fragmentation kernels
// ---------------------------------------------------------------------------

namespace frag {

/// F == scale.
struct Constant {
  double scale = 1.0;
};

/// F(x) = scale * x^alpha.
struct Power {
  double alpha = 1.0;
  double scale = 1.0;
};

struct Custom {
  std::string name;
  std::function<double(double)> eval;
  double alpha = 0.0;
  std::function<double(double)> holder;
  std::function<double(double)> sup;
};

}  // namespace frag

/// Total dislocation rate factor F(x). Immutable; cheap to copy.
class FragmentationKernel {
 public:
  using Family = std::variant<frag::Constant, frag::Power, frag::Custom>;

  static FragmentationKernel constant(double scale = 1.0) {
    detail::require_finite_nonneg(scale, "constant kernel value");
    return FragmentationKernel(frag::Constant{scale});
  }

  static FragmentationKernel power(double alpha, double scale = 1.0) {
    detail::require_finite_nonneg(scale, "scale");
    detail::require(alpha > 0 && std::isfinite(alpha), ErrorKind::kParameter,
                    "power fragmentation kernel needs alpha > 0");
    return FragmentationKernel(frag::Power{alpha, scale});
  }

  static FragmentationKernel custom(frag::Custom k) {
    detail::require(static_cast<bool>(k.eval), ErrorKind::kConfiguration,
                    "custom fragmentation kernel '" + k.name + "' has no evaluator");
    detail::require(static_cast<bool>(k.sup), ErrorKind::kConfiguration,
                    "custom fragmentation kernel '" + k.name + "' has no sup_box majorant");
    detail::require(static_cast<bool>(k.holder), ErrorKind::kConfiguration,
                    "custom fragmentation kernel '" + k.name + "' has no Hölder constant");
    detail::require(k.alpha >= 0 && std::isfinite(k.alpha), ErrorKind::kConfiguration,
                    "custom fragmentation kernel '" + k.name + "' needs alpha >= 0");
    return FragmentationKernel(std::move(k));
  }

  double operator()(double x) const {
    detail::require_mass_arg(x);
    if (x == 0.0) return 0.0;
    return eval_positive(x);
  }

  double eval_positive(double x) const {
    return std::visit([&](const auto& k) { return eval_family(k, x); }, family_);
  }

  /// alpha of the Hölder bound |F(x) - F(x')| <= mu_a |x^alpha - x'^alpha|.
  double holder_index() const {
    return std::visit([](const auto& k) { return index_family(k); }, family_);
  }

  /// mu_a on (0, a].
  double holder_constant(double a) const {
    detail::require(a > 0 && std::isfinite(a), ErrorKind::kParameter, "box size must be > 0");
    return std::visit([&](const auto& k) { return holder_family(k, a); }, family_);
  }

  /// A value >= sup of F over (0, a].
  double sup_box(double a) const {
    detail::require(a > 0 && std::isfinite(a), ErrorKind::kParameter, "box size must be > 0");
    return std::visit([&](const auto& k) { return sup_family(k, a); }, family_);
  }

  bool is_custom() const { return std::holds_alternative<frag::Custom>(family_); }

  bool is_zero() const {
    const auto* c = std::get_if<frag::Constant>(&family_);
    return c != nullptr && c->scale == 0.0;
  }

  std::string kind() const {
    return std::visit([](const auto& k) { return kind_family(k); }, family_);
  }

  ParameterList parameters() const {
    return std::visit([](const auto& k) { return params_family(k); }, family_);
  }

 private:
  explicit FragmentationKernel(Family f) : family_(std::move(f)) {}

  static double eval_family(const frag::Constant& k, double) { return k.scale; }
  static double eval_family(const frag::Power& k, double x) {
    return k.alpha == 1.0 ? k.scale * x : k.scale * std::pow(x, k.alpha);
  }
  static double eval_family(const frag::Custom& k, double x) { return k.eval(x); }

  static double index_family(const frag::Constant&) { return 0.0; }
  static double index_family(const frag::Power& k) { return k.alpha; }
  static double index_family(const frag::Custom& k) { return k.alpha; }

  static double holder_family(const frag::Constant&, double) { return 0.0; }
  static double holder_family(const frag::Power& k, double) { return k.scale; }
  static double holder_family(const frag::Custom& k, double a) { return k.holder(a); }

  static double sup_family(const frag::Constant& k, double) { return k.scale; }
  static double sup_family(const frag::Power& k, double a) { return eval_family(k, a); }
  static double sup_family(const frag::Custom& k, double a) { return k.sup(a); }

  static std::string kind_family(const frag::Constant&) { return "constant"; }
  static std::string kind_family(const frag::Power&) { return "power"; }
  static std::string kind_family(const frag::Custom& k) { return "custom:" + k.name; }

  static ParameterList params_family(const frag::Constant& k) { return {{"scale", k.scale}}; }
  static ParameterList params_family(const frag::Power& k) {
    return {{"alpha", k.alpha}, {"scale", k.scale}};
  }
  static ParameterList params_family(const frag::Custom& k) { return {{"alpha", k.alpha}}; }

  Family family_;
};

// ---------------------------------------------------------------------------
// Sampling checks
// ---------------------------------------------------------------------------

/// Violations of symmetry, the Hölder bound and the majorant found on random
/// points of (0, a]. Empty means nothing was falsified.
inline std::vector<std::string> falsify_by_sampling(const CoagulationKernel& k, double a,
                                                    double lambda, int samples,
                                                    std::uint64_t seed = 1) {
  std::vector<std::string> issues;
  RngStream rng(seed, 0, 7);
  const double kappa = k.holder_constant(a, lambda);
  const double sup = k.sup_box(a);
  const auto draw = [&] {
    // Half uniform, half log-uniform to probe the neighbourhood of 0.
    return rng.uniform() < 0.5 ? a * rng.uniform_positive()
                               : a * std::pow(10.0, -8.0 * rng.uniform());
  };
  int sym = 0, hold = 0, dom = 0;
  for (int n = 0; n < samples; ++n) {
    const double x = draw(), y = draw(), xt = draw(), yt = draw();
    const double kxy = k.eval_positive(x, y);
    const double kyx = k.eval_positive(y, x);
    if (std::abs(kxy - kyx) > 1e-12 * std::max(1.0, std::abs(kxy))) ++sym;
    const double lhs = std::abs(kxy - k.eval_positive(xt, yt));
    const double rhs = kappa * (std::abs(std::pow(x, lambda) - std::pow(xt, lambda)) +
                                std::abs(std::pow(y, lambda) - std::pow(yt, lambda)));
    if (lhs > rhs * (1 + 1e-9) + 1e-12) ++hold;
    if (kxy > sup * (1 + 1e-12)) ++dom;
  }
  if (sym > 0) issues.push_back(std::to_string(sym) + " asymmetric samples");
  if (hold > 0) issues.push_back(std::to_string(hold) + " samples break the Hölder bound");
  if (dom > 0) issues.push_back(std::to_string(dom) + " samples exceed sup_box");
  return issues;
}

inline std::vector<std::string> falsify_by_sampling(const FragmentationKernel& f, double a,
                                                    int samples, std::uint64_t seed = 1) {
  std::vector<std::string> issues;
  RngStream rng(seed, 0, 8);
  const double mu = f.holder_constant(a);
  const double alpha = f.holder_index();
  const double sup = f.sup_box(a);
  const auto draw = [&] {
    return rng.uniform() < 0.5 ? a * rng.uniform_positive()
                               : a * std::pow(10.0, -8.0 * rng.uniform());
  };
  int hold = 0, dom = 0;
  for (int n = 0; n < samples; ++n) {
    const double x = draw(), xt = draw();
    const double fx = f.eval_positive(x);
    const double lhs = std::abs(fx - f.eval_positive(xt));
    const double rhs = mu * std::abs(std::pow(x, alpha) - std::pow(xt, alpha));
    if (lhs > rhs * (1 + 1e-9) + 1e-12) ++hold;
    if (fx > sup * (1 + 1e-12)) ++dom;
  }
  if (hold > 0) issues.push_back(std::to_string(hold) + " samples break the Hölder bound");
  if (dom > 0) issues.push_back(std::to_string(dom) + " samples exceed sup_box");
  return issues;
}

/// Builds a custom kernel and refuses it if sampling on (0, a] falsifies any
/// of its claims.
inline CoagulationKernel make_checked_custom(coag::Custom spec, double a, int samples = 10000) {
  auto k = CoagulationKernel::custom(std::move(spec));
  const auto issues = falsify_by_sampling(k, a, k.holder_index(), samples);
  if (!issues.empty()) {
    std::string msg = "custom coagulation kernel rejected:";
    for (const auto& s : issues) msg += " " + s + ";";
    throw Error(ErrorKind::kConfiguration, msg);
  }
  return k;
}

inline FragmentationKernel make_checked_custom(frag::Custom spec, double a, int samples = 10000) {
  auto f = FragmentationKernel::custom(std::move(spec));
  const auto issues = falsify_by_sampling(f, a, samples);
  if (!issues.empty()) {
    std::string msg = "custom fragmentation kernel rejected:";
    for (const auto& s : issues) msg += " " + s + ";";
    throw Error(ErrorKind::kConfiguration, msg);
  }
  return f;
}

}  // namespace cofrag
