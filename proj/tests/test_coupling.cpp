// Copyright 2026 The cofrag Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "cofrag/bounds.hpp"
#include "cofrag/metrics.hpp"
#include "cofrag/simulator.hpp"
#include "cofrag/stats.hpp"

namespace cofrag {
namespace {

SimConfig unit_config(double horizon) {
  SimConfig c;
  c.coag = CoagulationKernel::constant(1.0);
  c.frag = FragmentationKernel::constant(1.0);
  c.beta = DislocationMeasure::preset("binary_half");
  c.horizon = horizon;
  c.lambda = 0.5;
  c.seed = 99;
  return c;
}

TEST(Coupled, SameStartSameLevelGivesIdenticalPaths) {
  const auto cfg = unit_config(2.0);
  const auto m = MassSequence::reorder({1.0, 0.7, 0.2});
  for (std::uint64_t r = 0; r < 50; ++r) {
    const auto res = simulate_coupled(m, m, 0, 0, cfg, r, true);
    EXPECT_EQ(res.sup_delta, 0.0);
    EXPECT_EQ(res.first.final_state, res.second.final_state);
    ASSERT_EQ(res.first.events.size(), res.second.events.size());
    for (std::size_t k = 0; k < res.first.events.size(); ++k)
      EXPECT_EQ(res.first.events[k].time, res.second.events[k].time);
  }
}

TEST(Coupled, PureCoalescenceOfPerturbedPair) {
  auto cfg = unit_config(1e6);
  cfg.frag = FragmentationKernel::constant(0.0);
  cfg.lambda = 1.0;
  const double eta = 0.01;
  const auto m = MassSequence::reorder({1.0, 1.0});
  const auto mt = MassSequence::reorder({1.0 + eta, 1.0});
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto res = simulate_coupled(m, mt, 0, 0, cfg, r);
    EXPECT_NEAR(res.initial_delta, eta, 1e-15);
    EXPECT_NEAR(res.sup_delta, eta, 1e-15);
    EXPECT_EQ(res.first.final_state, MassSequence::reorder({2.0}));
    EXPECT_EQ(res.second.final_state, MassSequence::reorder({2.0 + eta}));
    EXPECT_EQ(res.first.first_event_time, res.second.first_event_time);
  }
}

TEST(Coupled, InitialDeltaIsDeltaLambda) {
  const auto cfg = unit_config(0.0);
  const auto m = MassSequence::reorder({1.0, 0.5});
  const auto mt = MassSequence::reorder({0.9, 0.5, 0.1});
  const auto res = simulate_coupled(m, mt, 0, 0, cfg, 0);
  EXPECT_NEAR(res.initial_delta, dist_delta(m, mt, 0.5), 1e-14);
  EXPECT_EQ(res.candidates, 0u);
  EXPECT_EQ(res.first.final_state, m);
}

TEST(Coupled, MarginalsMatchUncoupledSimulation) {
  auto cfg = unit_config(0.7);
  const auto m = MassSequence::reorder({1.0, 1.0, 1.0});
  const auto mt = MassSequence::reorder({1.05, 1.0, 0.95, 0.1});
  const std::size_t n = 6000;
  std::vector<double> t_first, t_second, t_ref_m, t_ref_mt;
  std::vector<long> c_first, c_second, c_ref_m, c_ref_mt;
  auto ref = cfg;
  ref.seed = 4242;
  auto ref_m = ref, ref_mt = ref;
  ref_m.initial = m;
  ref_mt.initial = mt;
  SimOptions quiet;
  quiet.record_events = false;
  for (std::uint64_t r = 0; r < n; ++r) {
    const auto res = simulate_coupled(m, mt, 0, 0, cfg, r);
    t_first.push_back(std::min(res.first.first_event_time, cfg.horizon));
    t_second.push_back(std::min(res.second.first_event_time, cfg.horizon));
    c_first.push_back(static_cast<long>(res.first.final_state.size()));
    c_second.push_back(static_cast<long>(res.second.final_state.size()));
    const auto a = simulate(ref_m, r, quiet);
    const auto b = simulate(ref_mt, r, quiet);
    t_ref_m.push_back(std::min(a.first_event_time, cfg.horizon));
    t_ref_mt.push_back(std::min(b.first_event_time, cfg.horizon));
    c_ref_m.push_back(static_cast<long>(a.final_state.size()));
    c_ref_mt.push_back(static_cast<long>(b.final_state.size()));
  }
  const std::size_t tests = 4;
  EXPECT_GT(stats::bonferroni(stats::ks_two_sample(t_first, t_ref_m).p_value, tests), 0.01);
  EXPECT_GT(stats::bonferroni(stats::ks_two_sample(t_second, t_ref_mt).p_value, tests), 0.01);
  EXPECT_GT(stats::bonferroni(stats::chi_square_two_sample(c_first, c_ref_m).p_value, tests), 0.01);
  EXPECT_GT(stats::bonferroni(stats::chi_square_two_sample(c_second, c_ref_mt).p_value, tests), 0.01);
}

TEST(Coupled, TruncatedMemberFollowsRestrictedMeasure) {
  auto cfg = unit_config(0.8);
  cfg.beta = DislocationMeasure({DislocationAtom::make({0.5, 0.3, 0.2}, 1.0), DislocationAtom::make({0.8, 0.2}, 0.5)});
  const auto m = MassSequence::reorder({1.0, 0.5});
  const std::size_t n = 6000;
  std::vector<long> coupled, ref;
  auto ref_cfg = cfg;
  ref_cfg.seed = 777;
  ref_cfg.initial = m;
  ref_cfg.beta = cfg.beta.restrict(2);
  SimOptions quiet;
  quiet.record_events = false;
  for (std::uint64_t r = 0; r < n; ++r) {
    const auto res = simulate_coupled(m, m, 2, 0, cfg, r);
    // Level 2 keeps only the first atom, cut to two pieces.
    for (double x : res.first.final_state) EXPECT_GT(x, 0.0);
    coupled.push_back(static_cast<long>(res.first.final_state.size()) * 1000 +
                      static_cast<long>(std::lround(norm(res.first.final_state, 1.0) * 100)));
    const auto t = simulate(ref_cfg, r, quiet);
    ref.push_back(static_cast<long>(t.final_state.size()) * 1000 +
                  static_cast<long>(std::lround(norm(t.final_state, 1.0) * 100)));
  }
  EXPECT_GT(stats::chi_square_two_sample(coupled, ref).p_value, 0.01);
}

TEST(Coupled, LevelZeroEqualsSupportLevel) {
  auto cfg = unit_config(1.0);
  const auto m = MassSequence::reorder({1.0, 0.5, 0.25});
  const std::size_t s = cfg.beta.support_level();
  for (std::uint64_t r = 0; r < 30; ++r) {
    const auto res = simulate_coupled(m, m, s, 0, cfg, r);
    EXPECT_EQ(res.first.final_state, res.second.final_state);
    EXPECT_EQ(res.sup_delta, 0.0);
  }
}

TEST(Coupled, StopNormCensorsBothMembers) {
  auto cfg = unit_config(50.0);
  cfg.coag = CoagulationKernel::constant(0.0);
  cfg.stop_norm = 3.0;
  const auto m = MassSequence::reorder({1.0});
  const auto mt = MassSequence::reorder({1.01});
  std::size_t stopped = 0;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto res = simulate_coupled(m, mt, 0, 0, cfg, r);
    if (!res.stopped) continue;
    ++stopped;
    EXPECT_TRUE(res.first.stopped);
    EXPECT_TRUE(res.second.stopped);
    EXPECT_EQ(res.first.final_time, res.second.final_time);
    EXPECT_LT(res.end_time, cfg.horizon);
    EXPECT_TRUE(norm(res.first.final_state, 0.5) >= 3.0 || norm(res.second.final_state, 0.5) >= 3.0);
  }
  EXPECT_GT(stopped, 90u);
}

TEST(Coupled, MeanSupDeltaWithinBound) {
  auto cfg = unit_config(0.05);
  cfg.stop_norm = 12.0;
  const auto m = MassSequence::uniform(8, 1.0);
  auto v = std::vector<double>(m.begin(), m.end());
  v[0] += 0.01;
  const auto mt = MassSequence::reorder(v);
  const std::size_t n = 1000;
  std::vector<double> sups;
  for (std::uint64_t r = 0; r < n; ++r) sups.push_back(simulate_coupled(m, mt, 0, 0, cfg, r).sup_delta);
  const auto ms = stats::mean_stats(sups);
  const double x = *cfg.stop_norm;
  const auto c = coupling_constants(m, mt, x, cfg.lambda, cfg.coag, cfg.frag, cfg.beta);
  const double bound = coupling_bound(dist_delta(m, mt, 0.5), c, x, cfg.horizon);
  EXPECT_LE(ms.mean + 3.0 * ms.sem, bound);
  EXPECT_GE(ms.mean, dist_delta(m, mt, 0.5) - 1e-15);
}

TEST(Coupled, Deterministic) {
  const auto cfg = unit_config(1.0);
  const auto m = MassSequence::reorder({1.0, 0.6});
  const auto mt = MassSequence::reorder({1.0, 0.5});
  const auto a = simulate_coupled(m, mt, 0, 0, cfg, 5, true);
  const auto b = simulate_coupled(m, mt, 0, 0, cfg, 5, true);
  EXPECT_EQ(a.sup_delta, b.sup_delta);
  EXPECT_EQ(a.first.final_state, b.first.final_state);
  EXPECT_EQ(a.second.events.size(), b.second.events.size());
  EXPECT_EQ(a.candidates, b.candidates);
}

TEST(Coupled, RejectsBadLambda) {
  auto cfg = unit_config(1.0);
  cfg.lambda = 1.5;
  const auto m = MassSequence::reorder({1.0});
  EXPECT_THROW(simulate_coupled(m, m, 0, 0, cfg, 0), Error);
}

TEST(CouplingBound, Examples) {
  const auto m = MassSequence::uniform(2, 1.0);
  const auto k = CoagulationKernel::constant(1.0);
  const auto f = FragmentationKernel::constant(1.0);
  const auto beta = DislocationMeasure::preset("binary_half");
  const auto c = coupling_constants(m, m, 4.0, 0.5, k, f, beta);
  EXPECT_EQ(coupling_bound(0.0, c, 4.0, 3.0), 0.0);
  EXPECT_DOUBLE_EQ(coupling_bound(0.2, c, 4.0, 0.0), 0.2);
  EXPECT_GT(coupling_bound(0.2, c, 4.0, 0.1), 0.2);
}

TEST(TruncationLine, DecreasesToZeroAtSupport) {
  std::vector<double> g;
  for (int k = 0; k < 8; ++k) g.push_back(std::pow(0.5, k));
  const auto m = MassSequence::reorder(g);
  const DislocationMeasure beta({DislocationAtom::make({0.5, 0.5}, 1.0), DislocationAtom::make({0.6, 0.2, 0.2}, 1.0),
                                 DislocationAtom::make({0.8, 0.1, 0.05, 0.05}, 0.5),
                                 DislocationAtom::make({0.4, 0.3, 0.2, 0.1}, 1.0)});
  const auto f = FragmentationKernel::constant(1.0);
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t p : {1u, 2u, 4u, 6u}) {
    const auto line = truncation_line(m, p, 8, 0.5, f, beta, 1.0);
    EXPECT_LE(line.value, prev);
    prev = line.value;
  }
  const std::size_t s = std::max<std::size_t>(beta.support_level(), 8);
  EXPECT_NEAR(truncation_line(m, s, s, 0.5, f, beta, 1.0).value, 0.0, 1e-15);
  EXPECT_THROW(truncation_line(m, 3, 2, 0.5, f, beta, 1.0), Error);
}

}  // namespace
}  // namespace cofrag
