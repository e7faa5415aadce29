#include <gtest/gtest.h>

#include "pwstable/mechanism.hpp"

using namespace pwstable;

TEST(Mechanism, MintAndRedeemPrices) {
  const auto s = MechanismState::make(100.0, 0.02, 0.03);
  EXPECT_DOUBLE_EQ(mint_cost(s, 50.0), 1.02 / 50.0);
  EXPECT_DOUBLE_EQ(redeem_payout(s, 10.0, 50.0), 10.0 * 0.97 / 50.0);
}

TEST(Mechanism, RedeemCappedByReserves) {
  const auto s = MechanismState::make(1.0);
  EXPECT_DOUBLE_EQ(redeem_payout(s, 1000.0, 10.0), 1.0);
}

TEST(Mechanism, BuyAddsToReserves) {
  const auto s = MechanismState::make(100.0, 0.1, 0.0);
  const auto out = apply_trade(s, 200.0, 100.0, 3);
  EXPECT_DOUBLE_EQ(out.state.reserves, 100.0 + 200.0 * 1.1 / 100.0);
  EXPECT_DOUBLE_EQ(out.backing_flow, -2.2);
  EXPECT_FALSE(out.state.depleted());
}

TEST(Mechanism, SellDepletesAndRecordsStep) {
  const auto s = MechanismState::make(5.0);
  const auto first = apply_trade(s, -100.0, 10.0, 7);
  EXPECT_EQ(first.state.reserves, 0.0);
  EXPECT_EQ(first.backing_flow, 5.0);
  ASSERT_TRUE(first.state.depleted_at.has_value());
  EXPECT_EQ(*first.state.depleted_at, 7u);
  // Later trades do not move the depletion step.
  const auto again = apply_trade(first.state, -1.0, 10.0, 9);
  EXPECT_EQ(*again.state.depleted_at, 7u);
  EXPECT_EQ(again.backing_flow, 0.0);
}

TEST(Mechanism, ZeroOrderIsNoOp) {
  const auto s = MechanismState::make(5.0);
  const auto out = apply_trade(s, 0.0, 10.0);
  EXPECT_EQ(out.state.reserves, 5.0);
  EXPECT_EQ(out.backing_flow, 0.0);
}

TEST(Mechanism, ReservesPlusFlowsConserved) {
  auto s = MechanismState::make(50.0, 0.01, 0.02);
  double paid_out = 0.0;
  const double orders[] = {100.0, -30.0, 250.0, -400.0, 10.0};
  const double prices[] = {10.0, 9.0, 11.0, 8.5, 10.0};
  for (int k = 0; k < 5; ++k) {
    const auto out = apply_trade(s, orders[k], prices[k], k + 1);
    paid_out += out.backing_flow;
    s = out.state;
  }
  EXPECT_NEAR(s.reserves + paid_out, 50.0, 1e-12);
}

TEST(Mechanism, Validation) {
  EXPECT_THROW(MechanismState::make(-1.0), InvalidArgument);
  EXPECT_THROW(MechanismState::make(1.0, -0.1, 0.0), InvalidArgument);
  EXPECT_THROW(MechanismState::make(1.0, 0.0, 1.0), InvalidArgument);
  const auto s = MechanismState::make(1.0);
  EXPECT_THROW(mint_cost(s, 0.0), InvalidArgument);
  EXPECT_THROW(apply_trade(s, 1.0, -2.0), InvalidArgument);
}
