// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cofrag/dislocation.hpp"
#include "cofrag/mass_sequence.hpp"
#include "cofrag/rng.hpp"

namespace cofrag {
namespace {

std::vector<double> values(const MassSequence& m) { return {m.begin(), m.end()}; }

TEST(Reorder, DropsZerosAndSortsDescending) {
  EXPECT_EQ(values(MassSequence::reorder({1.0, 3.0, 0.0, 2.0})), (std::vector<double>{3, 2, 1}));
}

TEST(Reorder, EmptyInputGivesEmptySequence) {
  EXPECT_TRUE(MassSequence::reorder(std::vector<double>{}).empty());
}

TEST(Reorder, KeepsEqualMasses) {
  EXPECT_EQ(values(MassSequence::reorder({2.0, 2.0, 2.0})), (std::vector<double>{2, 2, 2}));
}

TEST(Reorder, RejectsNegativeAndNonFinite) {
  try {
    MassSequence::reorder({1.0, -1.0});
    FAIL() << "no error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kInvalidMass);
  }
  EXPECT_THROW(MassSequence::reorder({std::nan("")}), Error);
  EXPECT_THROW(MassSequence::reorder({INFINITY}), Error);
}

TEST(Reorder, IsIdempotent) {
  const auto m = MassSequence::reorder({0.3, 5.0, 1.0, 1.0, 0.0, 7.5});
  EXPECT_EQ(MassSequence::reorder(m.masses()), m);
}

TEST(Reorder, AtIsOneBasedAndZeroPadded) {
  const auto m = MassSequence::reorder({1.0, 3.0});
  EXPECT_EQ(m.at(1), 3.0);
  EXPECT_EQ(m.at(2), 1.0);
  EXPECT_EQ(m.at(3), 0.0);
  EXPECT_EQ(m.at(100), 0.0);
}

TEST(Coalesce, MergesPairAndReorders) {
  const auto m = MassSequence::reorder({3.0, 2.0, 1.0});
  EXPECT_EQ(values(coalesce(m, 1, 2)), (std::vector<double>{5, 1}));
  EXPECT_EQ(values(coalesce(m, 1, 3)), (std::vector<double>{4, 2}));
  EXPECT_EQ(values(coalesce(m, 2, 3)), (std::vector<double>{3, 3}));
}

TEST(Coalesce, HalfNormOfTwoUnitsDropsToRootTwo) {
  const auto m = MassSequence::reorder({1.0, 1.0});
  const double lhs = norm(coalesce(m, 1, 2), 0.5);
  EXPECT_NEAR(lhs, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(lhs, norm(m, 0.5) + std::sqrt(2.0) - 1.0 - 1.0, 1e-15);
}

TEST(Coalesce, RejectsBadIndices) {
  const auto m = MassSequence::reorder({3.0, 2.0, 1.0});
  for (auto [i, j] : {std::pair<std::size_t, std::size_t>{2, 2}, {3, 1}, {0, 1}, {1, 4}}) {
    try {
      coalesce(m, i, j);
      FAIL() << i << "," << j;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kIndex);
    }
  }
}

TEST(Fragment, LossyAtomDropsMass) {
  const auto m = MassSequence::reorder({10.0, 1.0});
  const auto f = fragment(m, 1, DislocationAtom::make({0.5, 0.4}, 1.0).ratios());
  EXPECT_EQ(values(f), (std::vector<double>{5, 4, 1}));
  EXPECT_DOUBLE_EQ(norm(f, 1.0), 10.0);
}

TEST(Fragment, ConservativeAtomPreservesMass) {
  const auto m = MassSequence::reorder({4.0, 2.0});
  const auto f = fragment(m, 2, DislocationAtom::make({0.5, 0.5}, 1.0).ratios());
  EXPECT_EQ(values(f), (std::vector<double>{4, 1, 1}));
  EXPECT_DOUBLE_EQ(norm(f, 1.0) - norm(m, 1.0), 2.0 * (1.0 - 1.0));
}

TEST(Fragment, RejectsBadIndex) {
  const auto m = MassSequence::reorder({4.0, 2.0});
  const std::vector<double> half{0.5, 0.5};
  EXPECT_THROW(fragment(m, 0, half), Error);
  EXPECT_THROW(fragment(m, 3, half), Error);
}

TEST(Norm, Examples) {
  EXPECT_DOUBLE_EQ(norm(MassSequence::reorder({4.0, 1.0}), 0.5), 3.0);
  EXPECT_DOUBLE_EQ(norm(MassSequence{}, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(norm(MassSequence::reorder({2.0, 2.0}), 1.0), 4.0);
}

TEST(Norm, RejectsLambdaOutOfRange) {
  const auto m = MassSequence::reorder({1.0});
  for (double l : {0.0, -0.5, 1.5, std::nan("")}) {
    try {
      norm(m, l);
      FAIL() << l;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::kParameter);
    }
  }
}

// Random properties of the event maps.
class EventMapProperties : public ::testing::TestWithParam<int> {};

TEST_P(EventMapProperties, MassAndNormIdentities) {
  RngStream rng(99, static_cast<std::uint32_t>(GetParam()));
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t n = 2 + rng.below(15);
    std::vector<double> raw(n);
    for (auto& x : raw) x = std::pow(10.0, -3.0 + 6.0 * rng.uniform());
    const auto m = MassSequence::reorder(raw);
    const double lam = rng.uniform_positive();
    const std::size_t i = 1 + rng.below(n - 1);
    const std::size_t j = i + 1 + rng.below(n - i);
    const auto c = coalesce(m, i, j);
    EXPECT_EQ(c.size(), n - 1);
    EXPECT_NEAR(norm(c, 1.0), norm(m, 1.0), 1e-12 * norm(m, 1.0));
    EXPECT_LE(norm(c, lam), norm(m, lam) * (1 + 1e-12));
    EXPECT_TRUE(std::is_sorted(c.begin(), c.end(), std::greater<>()));

    const double t1 = 0.05 + 0.9 * rng.uniform();
    const double t2 = (1.0 - t1) * rng.uniform();
    const auto theta = DislocationAtom::make({std::max(t1, t2), std::min(t1, t2)}, 1.0);
    const auto f = fragment(m, i, theta.ratios());
    EXPECT_LE(norm(f, 1.0), norm(m, 1.0) * (1 + 1e-12));
    const double pred = norm(m, lam) + std::pow(m.at(i), lam) * (theta.power_sum(lam) - 1.0);
    EXPECT_NEAR(norm(f, lam), pred, 1e-10 * std::max(1.0, norm(m, lam)));
    EXPECT_TRUE(std::is_sorted(f.begin(), f.end(), std::greater<>()));
    for (double x : f) EXPECT_GT(x, 0.0);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, EventMapProperties, ::testing::Range(0, 5));

}  // namespace
}  // namespace cofrag
