#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "pwstable/stability_theory.hpp"
#include "test_support.hpp"

using namespace pwstable;
namespace ts = testing_support;

namespace {

PriceSeries alternating(std::size_t cycles, double hi = 105.0, double lo = 95.0) {
  std::vector<double> p;
  for (std::size_t c = 0; c < cycles; ++c) {
    p.push_back(hi);
    p.push_back(lo);
  }
  return PriceSeries::make(std::move(p));
}

PriceSeries from_inverse(std::vector<double> inv) {
  for (double& v : inv) v = 1.0 / v;
  return PriceSeries::make(std::move(inv));
}

PriceSeries harmonic(std::size_t terms) {
  std::vector<double> inv;
  for (std::size_t k = 2; k < terms + 2; ++k) {
    inv.push_back(1.0 - 1.0 / static_cast<double>(k));
    inv.push_back(2.0 + 1.0 / static_cast<double>(k));
  }
  return from_inverse(std::move(inv));
}

PriceSeries random_series(ts::Gen& g, std::size_t len) {
  std::vector<double> p(len);
  for (double& v : p) v = g.uniform(50.0, 150.0);
  return PriceSeries::make(std::move(p));
}

}  // namespace

TEST(TailSpread, TwoPointTail) {
  const auto s = tail_spread(alternating(10), 0.5);
  EXPECT_DOUBLE_EQ(s.inv_liminf_est, 1.0 / 105.0);
  EXPECT_DOUBLE_EQ(s.inv_limsup_est, 1.0 / 95.0);
  EXPECT_EQ(s.tail_samples, 10u);
}

TEST(TailSpread, ConstantSeriesHasZeroWidth) {
  const auto s = tail_spread(PriceSeries::make(std::vector<double>(50, 3.0)), 0.3);
  EXPECT_EQ(s.width(), 0.0);
}

TEST(TailSpread, HarmonicApproachesOneTwo) {
  double prev_gap = 10.0;
  for (std::size_t n : {10u, 100u, 1000u, 10000u}) {
    const auto s = tail_spread(harmonic(n), 0.5);
    const double gap = std::abs(s.inv_liminf_est - 1.0) + std::abs(s.inv_limsup_est - 2.0);
    EXPECT_LT(gap, prev_gap);
    prev_gap = gap;
  }
  EXPECT_LT(prev_gap, 1e-3);
}

TEST(TailSpread, Errors) {
  EXPECT_THROW(tail_spread(alternating(2), 0.0), InvalidArgument);
  EXPECT_THROW(tail_spread(alternating(2), 1.5), InvalidArgument);
  EXPECT_THROW(tail_spread(PriceSeries{}, 0.5), InvalidArgument);
}

TEST(LCriterion, BoundaryAtOneThird) {
  const auto L = L_criterion(1.0 / 3.0, 1.0 / 3.0, TailSpread::from_inverse(1.0, 2.0));
  EXPECT_NEAR(L.value, 0.0, 1e-15);
  EXPECT_EQ(L.classification, Stability::boundary);
}

TEST(LCriterion, ConvergentPricesAreBoundary) {
  const auto L = L_criterion(0.0, 0.0, TailSpread::from_inverse(0.01, 0.01));
  EXPECT_EQ(L.value, 0.0);
  EXPECT_EQ(L.classification, Stability::boundary);
}

TEST(LCriterion, FeeAboveThresholdIsStable) {
  const auto spread = tail_spread(alternating(4), 1.0);
  EXPECT_EQ(L_criterion(0.06, 0.06, spread).classification, Stability::stable);
  EXPECT_GT(L_criterion(0.06, 0.06, spread).value, 0.0);
  EXPECT_EQ(L_criterion(0.04, 0.04, spread).classification, Stability::at_risk);
}

TEST(LCriterion, HarmonicFiniteEstimateDecaysLikeOneOverN) {
  // The trailing half starts at k = 2 + n/2, where both extremes sit, so
  // L = (4/3)(1 - 1/k) - (2/3)(2 + 1/k) = -2/k.
  for (std::size_t n : {100u, 1000u, 10000u}) {
    const auto spread = tail_spread(harmonic(n), 0.5);
    const auto L = L_criterion(1.0 / 3.0, 1.0 / 3.0, spread);
    const double k = 2.0 + static_cast<double>(n) / 2.0;
    EXPECT_NEAR(L.value, -2.0 / k, 1e-12) << n;
    EXPECT_EQ(L.classification, Stability::at_risk);
  }
}

TEST(MinFee, TwoPointExact) {
  EXPECT_EQ(min_fee(tail_spread(alternating(3), 1.0)), 0.05);
}

TEST(MinFee, ZeroSpreadAndOneThird) {
  EXPECT_EQ(min_fee(tail_spread(PriceSeries::make({4.0, 4.0, 4.0}), 1.0)), 0.0);
  EXPECT_DOUBLE_EQ(min_fee(TailSpread::from_inverse(1.0, 2.0)), 1.0 / 3.0);
  EXPECT_THROW(min_fee(TailSpread::from_inverse(0.0, 0.0)), InvalidArgument);
}

TEST(MinFee, ScaleInvariant) {
  ts::Gen g(8);
  for (int t = 0; t < 200; ++t) {
    const auto base = random_series(g, 30);
    const double lambda = g.uniform(1e-3, 1e3);
    std::vector<double> scaled = base.prices;
    for (double& p : scaled) p *= lambda;
    const double a = min_fee(tail_spread(base, 0.5));
    const double b = min_fee(tail_spread(PriceSeries::make(scaled), 0.5));
    EXPECT_NEAR(a, b, 1e-14);
  }
}

TEST(MinFee, ThresholdSeparatesStableFromAtRisk) {
  ts::Gen g(81);
  for (int t = 0; t < 200; ++t) {
    const auto spread = tail_spread(random_series(g, 20), 1.0);
    const double eps = min_fee(spread);
    EXPECT_EQ(L_criterion(eps + 1e-6, eps + 1e-6, spread).classification, Stability::stable);
    if (eps > 1e-6) {
      EXPECT_EQ(L_criterion(eps - 1e-6, eps - 1e-6, spread).classification, Stability::at_risk);
    }
  }
}

TEST(OptimalProfit, BruteForceExamples) {
  const auto s = optimal_profit_bruteforce(from_inverse({1.0, 2.0}), 0.0, 0.0, 1.0);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0], 0.0);
  EXPECT_EQ(s[1], 1.0);
  const auto fee = optimal_profit_bruteforce(from_inverse({1.0, 2.0}), 0.5, 0.5, 1.0);
  EXPECT_EQ(fee[1], 0.0);
  for (double v : optimal_profit_bruteforce(PriceSeries::make(std::vector<double>(12, 9.0)), 0, 0, 1))
    EXPECT_EQ(v, 0.0);
}

TEST(OptimalProfit, BruteForceRejectsLongSeries) {
  EXPECT_THROW(optimal_profit_bruteforce(alternating(8), 0.0, 0.0, 1.0), InvalidArgument);
}

TEST(OptimalProfit, GreedyEqualsBruteForce) {
  ts::Gen g(1234);
  for (int t = 0; t < 1000; ++t) {
    const auto series = random_series(g, g.index(1, 12));
    const double ea = g.coin(0.3) ? 0.0 : g.uniform(0.0, 0.2);
    const double eb = g.coin(0.3) ? 0.0 : g.uniform(0.0, 0.2);
    const double n0 = g.uniform(0.1, 10.0);
    const auto brute = optimal_profit_bruteforce(series, ea, eb, n0);
    const auto greedy = greedy_threshold_profit(series, ea, eb, n0);
    ASSERT_EQ(brute.size(), greedy.size());
    for (std::size_t i = 0; i < brute.size(); ++i) {
      EXPECT_LE(std::abs(brute[i] - greedy[i]), 1e-12 * std::max(1.0, std::abs(brute[i])));
    }
  }
}

TEST(OptimalProfit, TracesNondecreasingAndFeeMonotone) {
  ts::Gen g(77);
  for (int t = 0; t < 300; ++t) {
    const auto series = random_series(g, 40);
    const double e1 = g.uniform(0.0, 0.1);
    const double e2 = e1 + g.uniform(0.0, 0.1);
    const auto lo_fee = greedy_threshold_profit(series, e1, e1, 1.0);
    const auto hi_alpha = greedy_threshold_profit(series, e2, e1, 1.0);
    const auto hi_beta = greedy_threshold_profit(series, e1, e2, 1.0);
    for (std::size_t i = 0; i < lo_fee.size(); ++i) {
      if (i > 0) {
        EXPECT_GE(lo_fee[i], lo_fee[i - 1]);
      }
      EXPECT_LE(hi_alpha[i], lo_fee[i]);
      EXPECT_LE(hi_beta[i], lo_fee[i]);
    }
  }
}

TEST(OptimalProfit, AlternatingGrowsWithoutFees) {
  // Each cycle multiplies wealth by 105/95.
  const auto s = greedy_threshold_profit(alternating(3), 0.0, 0.0, 1.0);
  EXPECT_NEAR(s[1], 105.0 / 95.0 - 1.0, 1e-15);
  EXPECT_NEAR(s[3], std::pow(105.0 / 95.0, 2) - 1.0, 1e-14);
  EXPECT_NEAR(s[5], std::pow(105.0 / 95.0, 3) - 1.0, 1e-14);
}

TEST(OptimalProfit, FeeCriterionDirections) {
  const auto bounded = greedy_threshold_profit(alternating(50000), 0.06, 0.06, 1.0);
  for (double v : bounded) EXPECT_EQ(v, 0.0);
  const auto unbounded = greedy_threshold_profit(alternating(50000), 0.04, 0.04, 1.0);
  EXPECT_GT(unbounded.back(), 1e6);
  EXPECT_GT(unbounded[2 * 1000 - 1], unbounded[2 * 500 - 1]);
}

TEST(OptimalSchedule, AttainsGreedyOptimum) {
  ts::Gen g(55);
  for (int t = 0; t < 300; ++t) {
    const auto series = random_series(g, g.index(1, 60));
    const double ea = g.uniform(0.0, 0.1);
    const double eb = g.uniform(0.0, 0.1);
    const auto plan = optimal_schedule(series.prices, ea, eb);
    double backing = 1.0;
    double stable = 0.0;
    for (std::size_t i = 0; i < plan.size(); ++i) {
      if (plan[i] == ScheduledAction::buy) {
        ASSERT_GT(backing, 0.0);
        stable = backing * series[i] / (1.0 + ea);
        backing = 0.0;
      } else if (plan[i] == ScheduledAction::sell) {
        ASSERT_GT(stable, 0.0);
        backing = stable * (1.0 - eb) / series[i];
        stable = 0.0;
      }
    }
    EXPECT_EQ(stable, 0.0);
    const double best = greedy_threshold_profit(series, ea, eb, 1.0).back() + 1.0;
    EXPECT_NEAR(backing, best, 1e-12 * best);
  }
}

TEST(Sensitivity, Examples) {
  const std::vector<double> s = {0.0, 0.5, 1.0, 2.0};
  std::vector<double> r = s;
  for (double& v : r) v *= 3.0;
  EXPECT_EQ(sensitivity_check(r, s, 3.0), 1.0);
  const std::vector<double> zero(4, 0.0);
  EXPECT_FALSE(sensitivity_check(zero, s, 1.0).has_value());
  const std::vector<double> half = {0.0, 0.25, 0.5, 1.0};
  EXPECT_DOUBLE_EQ(*sensitivity_check(half, s, 1.0), 2.0);
  EXPECT_THROW(sensitivity_check(half, std::vector<double>{1.0}, 1.0), InvalidArgument);
}
