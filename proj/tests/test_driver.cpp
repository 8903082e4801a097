#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include <hetsca/driver.hpp>
#include <hetsca/errors.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

using namespace hetsca;

namespace {

PrecoderSet scalar(Complex x) {
  CMatrix v(1, 1);
  v(0, 0) = x;
  return PrecoderSet({v});
}

ChannelSet scalar_interference(const oracle::ScalarInterference& ic, UtilityKind kind) {
  NetworkConfig cfg = NetworkConfig::uniform(2, 1, 1, 1, 1);
  cfg.scenario = Scenario::Ibc;
  cfg.utility = kind;
  cfg.noise_power = {ic.noise1, ic.noise2};
  cfg.total_cell_power = {ic.budget1, ic.budget2};
  auto link = [](double gain) {
    CMatrix h(1, 1);
    h(0, 0) = std::sqrt(gain);
    return h;
  };
  return ChannelSet(cfg, {{{link(ic.gain11)}, {link(ic.gain12)}}, {{link(ic.gain21)}, {link(ic.gain22)}}},
                    {{ic.budget1}, {ic.budget2}});
}

ChannelSet scenario_instance(Scenario s, std::uint64_t seed) {
  NetworkConfig cfg = s == Scenario::IbcZf ? NetworkConfig::uniform(2, 1, 2, 4, 2, 1)
                                           : NetworkConfig::uniform(2, 2, 2, 2, 2, 1);
  cfg.scenario = s;
  cfg.total_cell_power = {10.0, 10.0};
  return fixtures::unit_gain(cfg, seed);
}

void expect_monotone(const SolveReport& r, double initial) {
  double previous = initial;
  for (const auto& row : r.trace) {
    EXPECT_GE(row.objective, previous - kAscentSlack);
    previous = row.objective;
  }
}

}  // namespace

TEST(Parse, AlgorithmAndInit) {
  EXPECT_EQ(parse_algorithm("sca"), Algorithm::Sca);
  EXPECT_EQ(parse_algorithm("insca"), Algorithm::InSca);
  EXPECT_EQ(parse_algorithm("IN-SCA"), Algorithm::InSca);
  EXPECT_EQ(parse_init_policy("scaled-mrt"), InitPolicy::ScaledMrt);
  EXPECT_THROW((void)parse_algorithm("gradient"), Error);
}

TEST(Run, SingleLinkReachesFullPower) {
  const auto ch = fixtures::scalar_link(Complex(0.6, 0.8), 1.0, 3.0);
  RunSettings s;
  s.tol = 1e-14;
  const auto r = run(ch, s);
  EXPECT_NEAR(r.rates[0], std::log(4.0), 1e-6);
  EXPECT_NEAR(std::norm(r.precoders[0](0, 0)), 3.0, 1e-6);
  EXPECT_LE(r.stationarity, 1e-5);
}

TEST(Run, StationaryStartIsFixedPoint) {
  const auto ch = fixtures::scalar_link(1.0, 1.0, 2.0);
  RunSettings s;
  s.initial = scalar(std::sqrt(2.0));
  s.record_iterates = true;
  const auto r = run(ch, s);
  ASSERT_GE(r.iterates.size(), 2u);
  EXPECT_LE(std::sqrt((r.iterates[1] - r.iterates[0]).squared_norm()), 1e-8);
}

TEST(Run, ScalarInterferenceMatchesGrid) {
  const oracle::ScalarInterference ic{1.0, 0.4, 0.3, 0.8, 0.5, 0.5, 1.0, 2.0};
  for (auto kind : {UtilityKind::WeightedSumRate, UtilityKind::LogOnePlusRate}) {
    const auto ch = scalar_interference(ic, kind);
    double best = -1e300;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      RunSettings s;
      s.init_seed = seed;
      s.tol = 1e-10;
      best = std::max(best, run(ch, s).objective);
    }
    const double grid = oracle::grid_search(ic, kind, 400);
    EXPECT_GE(best, grid * 0.98);
    EXPECT_LE(best, grid * 1.02 + 1e-9);
  }
}

TEST(Run, WmmseReductionIterateForIterate) {
  NetworkConfig cfg = NetworkConfig::uniform(2, 1, 2, 4, 2, 1);
  cfg.scenario = Scenario::Ibc;
  cfg.total_cell_power = {10.0, 10.0};
  const auto ch = fixtures::unit_gain(cfg, 21);
  RunSettings s;
  s.beta = {0.0};
  s.max_iters = 20;
  s.tol = 1e-300;
  s.record_iterates = true;
  s.stationarity_directions = 0;
  const auto r = run(ch, s);
  const auto ref = oracle::wmmse_iterates(ch, r.iterates.front(), 20);
  ASSERT_EQ(r.iterates.size(), ref.size());
  for (std::size_t t = 0; t < ref.size(); ++t) {
    const double scale = std::max(1.0, std::sqrt(ref[t].squared_norm()));
    EXPECT_LE(std::sqrt((r.iterates[t] - ref[t]).squared_norm()), 1e-10 * scale) << "iteration " << t;
  }
}

TEST(Run, ZfWithSingleUsersMatchesIbc) {
  NetworkConfig cfg = NetworkConfig::uniform(2, 1, 1, 3, 2, 1);
  cfg.total_cell_power = {5.0, 5.0};
  cfg.scenario = Scenario::Ibc;
  const auto ibc = fixtures::unit_gain(cfg, 22);
  cfg.scenario = Scenario::IbcZf;
  const auto zf = fixtures::unit_gain(cfg, 22);
  RunSettings s;
  s.tol = 1e-8;
  const auto a = run(ibc, s);
  const auto b = run(zf, s);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  for (std::size_t t = 0; t < a.trace.size(); ++t) EXPECT_NEAR(a.trace[t].objective, b.trace[t].objective, 1e-8);
}

TEST(Run, ZfIteratesHaveZeroLeakage) {
  const auto ch = scenario_instance(Scenario::IbcZf, 23);
  RunSettings s;
  s.record_iterates = true;
  const auto r = run(ch, s);
  for (const auto& v : r.iterates) EXPECT_LE(is_feasible(ch, v).max_zf_residual, 1e-8);
}

TEST(Run, AscentAndFeasibilityAcrossScenarios) {
  for (auto scenario : {Scenario::Ibc, Scenario::IbcZf, Scenario::CompFull, Scenario::CompPartialFixed,
                        Scenario::CompSparse}) {
    for (auto algorithm : {Algorithm::Sca, Algorithm::InSca}) {
      for (auto init : {InitPolicy::ZeroPlusEpsilon, InitPolicy::ScaledRandom, InitPolicy::ScaledMrt}) {
        const auto ch = scenario_instance(scenario, 24);
        RunSettings s;
        s.algorithm = algorithm;
        s.init = init;
        s.tol = 1e-6;
        s.inner_tol = 1e-8;
        s.record_iterates = true;
        const auto r = run(ch, s);
        expect_monotone(r, r.initial_objective);
        const auto serving = serving_for(ch);
        for (const auto& v : r.iterates) EXPECT_TRUE(is_feasible(ch, v, 1e-6, &serving).feasible);
        EXPECT_GE(r.min_ascent_margin, -kAscentSlack);
        EXPECT_LE(r.max_active_power_gap, 1e-8);
        EXPECT_LE(r.max_inactive_power_excess, 0.0);
      }
    }
  }
}

TEST(Run, InScaVanishingSteps) {
  const auto ch = scenario_instance(Scenario::CompFull, 25);
  RunSettings s;
  s.algorithm = Algorithm::InSca;
  s.beta = {1e-2};
  s.tol = 1e-9;
  const auto r = run(ch, s);
  ASSERT_GE(r.trace.size(), 2u);
  const auto& last = r.trace.back();
  const double gain = last.objective - r.trace[r.trace.size() - 2].objective;
  EXPECT_LE(last.step, 10.0 * std::sqrt(std::max(gain, 0.0) / (0.5 * 1e-2)) + 1e-12);
}

TEST(Run, InScaNeedsPositiveBetaForBlocks) {
  const auto ch = scenario_instance(Scenario::CompFull, 26);
  RunSettings s;
  s.algorithm = Algorithm::InSca;
  s.beta = {0.0};
  try {
    (void)run(ch, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::ValidationError);
    EXPECT_EQ(e.key(), "beta");
  }
}

TEST(Run, RejectsBadSettings) {
  const auto ch = fixtures::scalar_link(1.0, 1.0, 1.0);
  RunSettings s;
  s.tol = 0.0;
  EXPECT_THROW((void)run(ch, s), Error);
  s = {};
  s.max_iters = 0;
  EXPECT_THROW((void)run(ch, s), Error);
}

TEST(Stationarity, ZeroIsNotStationary) {
  const auto ch = scenario_instance(Scenario::CompFull, 27);
  EXPECT_GT(stationarity_residual(ch, PrecoderSet::zeros(ch), uniform_block_weights(ch, 0.0), 8, 1), 0.0);
}

TEST(Stationarity, ConvergedBeatsEarlyIterate) {
  const auto ch = scenario_instance(Scenario::CompFull, 28);
  RunSettings s;
  s.tol = 1e-9;
  s.inner_tol = 1e-10;
  s.record_iterates = true;
  const auto r = run(ch, s);
  const auto gamma = uniform_block_weights(ch, 0.0);
  const double early = stationarity_residual(ch, r.iterates[1], gamma, 32, 5);
  const double final = stationarity_residual(ch, r.precoders, gamma, 32, 5);
  EXPECT_GE(early, final);
  EXPECT_LE(final, 1e-3);
}

TEST(Initialize, ZeroPlusEpsilonScale) {
  for (auto scenario : {Scenario::Ibc, Scenario::CompFull}) {
    const auto ch = scenario_instance(scenario, 29);
    const auto v = initialize(ch, InitPolicy::ZeroPlusEpsilon, 1);
    const auto powers = group_powers(ch, v);
    const auto budgets = group_budgets(ch);
    for (std::size_t k = 0; k < powers.size(); ++k)
      for (std::size_t q = 0; q < powers[k].size(); ++q)
        EXPECT_NEAR(std::sqrt(powers[k][q]), kInitEpsilon * std::sqrt(budgets[k][q]), 1e-12);
    EXPECT_TRUE(is_feasible(ch, v).feasible);
  }
}

TEST(Initialize, ScaledPoliciesFillBudgets) {
  for (auto scenario : {Scenario::Ibc, Scenario::IbcZf, Scenario::CompFull, Scenario::CompPartialFixed}) {
    for (auto policy : {InitPolicy::ScaledRandom, InitPolicy::ScaledMrt}) {
      const auto ch = scenario_instance(scenario, 30);
      const auto v = initialize(ch, policy, 2);
      const auto serving = serving_for(ch);
      EXPECT_TRUE(is_feasible(ch, v, 1e-6, &serving).feasible);
      const auto powers = group_powers(ch, v);
      const auto budgets = group_budgets(ch);
      for (std::size_t k = 0; k < powers.size(); ++k)
        for (std::size_t q = 0; q < powers[k].size(); ++q)
          EXPECT_NEAR(powers[k][q] / (kInitFill * budgets[k][q]), 1.0, 1e-6);
    }
  }
}

TEST(Initialize, ZfProjection) {
  const auto ch = scenario_instance(Scenario::IbcZf, 31);
  for (auto policy : {InitPolicy::ZeroPlusEpsilon, InitPolicy::ScaledRandom, InitPolicy::ScaledMrt}) {
    EXPECT_LE(is_feasible(ch, initialize(ch, policy, 3)).max_zf_residual, 1e-8);
  }
}

TEST(Initialize, SameSeedSamePoint) {
  const auto ch = scenario_instance(Scenario::CompFull, 32);
  EXPECT_EQ((initialize(ch, InitPolicy::ScaledRandom, 4) - initialize(ch, InitPolicy::ScaledRandom, 4)).squared_norm(),
            0.0);
}
