// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cofrag/kernels.hpp"

namespace cofrag {
namespace {

TEST(Coagulation, Examples) {
  EXPECT_EQ(CoagulationKernel::constant()(2.0, 3.0), 1.0);
  EXPECT_DOUBLE_EQ(CoagulationKernel::sum_power(1.0, 1.0)(2.0, 3.0), 5.0);
  EXPECT_EQ(CoagulationKernel::constant().sup_box(7.0), 1.0);
  EXPECT_DOUBLE_EQ(CoagulationKernel::sum_power(1.0, 1.0).sup_box(2.0), 4.0);
}

TEST(Coagulation, ZeroMassConventionAndArgumentChecks) {
  const std::vector<CoagulationKernel> ks{
      CoagulationKernel::constant(),           CoagulationKernel::sum_power(0.5, 1.0),
      CoagulationKernel::cross_power(0.3, 0.4), CoagulationKernel::product_sum(1.0, 0.5),
      CoagulationKernel::sum_power_diff(1.0, 0.5, 0.5), CoagulationKernel::exp_sum(0.5, 1.0, 1.0)};
  for (const auto& k : ks) {
    EXPECT_EQ(k(3.0, 0.0), 0.0) << k.kind();
    EXPECT_EQ(k(0.0, 3.0), 0.0) << k.kind();
    try {
      k(-1.0, 1.0);
      FAIL() << k.kind();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kInvalidMass);
    }
    EXPECT_THROW(k(1.0, INFINITY), Error);
  }
}

TEST(Coagulation, CatalogRangesAreEnforced) {
  EXPECT_THROW(CoagulationKernel::sum_power(0.0, 1.0), Error);
  EXPECT_THROW(CoagulationKernel::sum_power(2.0, 1.0), Error);  // alpha * beta > 1
  EXPECT_THROW(CoagulationKernel::cross_power(0.8, 0.5), Error);
  EXPECT_THROW(CoagulationKernel::constant(-1.0), Error);
}

TEST(Fragmentation, Examples) {
  EXPECT_DOUBLE_EQ(FragmentationKernel::power(2.0)(3.0), 9.0);
  EXPECT_EQ(FragmentationKernel::constant()(5.0), 1.0);
  EXPECT_EQ(FragmentationKernel::constant()(0.0), 0.0);
  EXPECT_EQ(FragmentationKernel::power(2.0)(0.0), 0.0);
  EXPECT_DOUBLE_EQ(FragmentationKernel::power(2.0).sup_box(3.0), 9.0);
  EXPECT_THROW(FragmentationKernel::power(0.0), Error);
  EXPECT_THROW(FragmentationKernel::power(1.0)(-2.0), Error);
}

struct CoagCase {
  std::string label;
  CoagulationKernel k;
};

void PrintTo(const CoagCase& c, std::ostream* os) { *os << c.label; }

class BuiltinCoagulation : public ::testing::TestWithParam<CoagCase> {};

// Symmetry, the Hölder bound with the declared constant and majorant
// dominance on 10^4 random points, at several box sizes and every lambda up
// to the kernel's index.
TEST_P(BuiltinCoagulation, SamplingFindsNoViolation) {
  const auto& k = GetParam().k;
  for (double a : {0.5, 1.0, 8.0, 40.0}) {
    for (double frac : {1.0, 0.6, 0.25}) {
      const double lam = k.holder_index() * frac;
      const auto issues = falsify_by_sampling(k, a, lam, 10000, 17);
      EXPECT_TRUE(issues.empty()) << GetParam().label << " a=" << a << " lambda=" << lam << ": " << issues.front();
    }
  }
}

TEST_P(BuiltinCoagulation, RejectsLambdaAboveIndex) {
  const auto& k = GetParam().k;
  EXPECT_THROW(k.holder_constant(1.0, k.holder_index() + 0.25), Error);
}

INSTANTIATE_TEST_SUITE_P(
    Catalog, BuiltinCoagulation,
    ::testing::Values(CoagCase{"constant", CoagulationKernel::constant(2.0)},
                      CoagCase{"additive", CoagulationKernel::sum_power(1.0, 1.0)},
                      CoagCase{"sum_power_small_beta", CoagulationKernel::sum_power(0.8, 0.5)},
                      CoagCase{"sum_power_large_beta", CoagulationKernel::sum_power(0.25, 3.0)},
                      CoagCase{"cross_power", CoagulationKernel::cross_power(0.3, 0.5)},
                      CoagCase{"cross_power_alpha0", CoagulationKernel::cross_power(0.0, 0.7)},
                      CoagCase{"product_sum", CoagulationKernel::product_sum(1.0, 0.5)},
                      CoagCase{"product_sum_b", CoagulationKernel::product_sum(0.8, 0.1)},
                      CoagCase{"sum_power_diff", CoagulationKernel::sum_power_diff(1.0, 0.5, 0.5)},
                      CoagCase{"exp_sum", CoagulationKernel::exp_sum(0.5, 1.0, 1.0)},
                      CoagCase{"exp_sum_b", CoagulationKernel::exp_sum(1.0, 0.5, 2.0)}),
    [](const auto& info) { return info.param.label; });

class BuiltinFragmentation : public ::testing::TestWithParam<double> {};

TEST_P(BuiltinFragmentation, SamplingFindsNoViolation) {
  const double alpha = GetParam();
  const auto f = alpha == 0.0 ? FragmentationKernel::constant(1.5) : FragmentationKernel::power(alpha, 0.7);
  for (double a : {0.5, 1.0, 8.0, 40.0}) {
    const auto issues = falsify_by_sampling(f, a, 10000, 23);
    EXPECT_TRUE(issues.empty()) << "alpha=" << alpha << " a=" << a << ": " << issues.front();
  }
}

INSTANTIATE_TEST_SUITE_P(Catalog, BuiltinFragmentation, ::testing::Values(0.0, 0.3, 1.0, 2.0, 3.5));

TEST(Custom, MissingMajorantIsAConfigurationError) {
  coag::Custom c{"no_sup", [](double x, double y) { return x * y; }, 1.0, [](double a) { return a; }, nullptr};
  try {
    CoagulationKernel::custom(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfiguration);
  }
  frag::Custom f{"no_sup", [](double x) { return x; }, 1.0, [](double) { return 1.0; }, nullptr};
  EXPECT_THROW(FragmentationKernel::custom(f), Error);
}

TEST(Custom, HonestKernelIsAccepted) {
  // K = x y on (0, a]^2: |xy - x'y'| <= a (|x - x'| + |y - y'|).
  coag::Custom c{"product", [](double x, double y) { return x * y; }, 1.0, [](double a) { return a; },
                 [](double a) { return a * a; }};
  const auto k = make_checked_custom(c, 5.0);
  EXPECT_TRUE(k.is_custom());
  EXPECT_DOUBLE_EQ(k(2.0, 3.0), 6.0);
  EXPECT_EQ(k(2.0, 0.0), 0.0);
}

TEST(Custom, WrongMajorantIsFalsified) {
  coag::Custom c{"product", [](double x, double y) { return x * y; }, 1.0, [](double a) { return a; },
                 [](double a) { return 0.5 * a * a; }};
  EXPECT_THROW(make_checked_custom(c, 5.0), Error);
  coag::Custom h{"product", [](double x, double y) { return x * y; }, 1.0, [](double a) { return 0.1 * a; },
                 [](double a) { return a * a; }};
  EXPECT_THROW(make_checked_custom(h, 5.0), Error);
  coag::Custom s{"skew", [](double x, double) { return x; }, 1.0, [](double) { return 1.0; },
                 [](double a) { return a; }};
  EXPECT_THROW(make_checked_custom(s, 5.0), Error);
  frag::Custom f{"sq", [](double x) { return x * x; }, 2.0, [](double) { return 1.0; }, [](double a) { return a; }};
  EXPECT_THROW(make_checked_custom(f, 5.0), Error);
}

}  // namespace
}  // namespace cofrag
