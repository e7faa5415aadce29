#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>

#include "pwstable/error.hpp"

namespace pwstable {

// Price-window mechanism: mints at (1 + eps_alpha) dollars and redeems at
// (1 - eps_beta) dollars of backing coin while reserves last, then pays out
// whatever is left.
struct MechanismState {
  double reserves = 0.0;
  double eps_alpha = 0.0;
  double eps_beta = 0.0;
  std::optional<std::size_t> depleted_at;

  static MechanismState make(double reserves, double eps_alpha = 0.0, double eps_beta = 0.0) {
    MechanismState s{reserves, eps_alpha, eps_beta, std::nullopt};
    s.validate();
    return s;
  }

  void validate() const {
    if (!(reserves >= 0.0) || !std::isfinite(reserves)) {
      throw InvalidArgument("MechanismState: reserves must be >= 0");
    }
    if (!(eps_alpha >= 0.0) || !(eps_beta >= 0.0)) {
      throw InvalidArgument("MechanismState: fees must be >= 0");
    }
    if (!(eps_beta < 1.0)) {
      throw InvalidArgument("MechanismState: eps_beta must be < 1");
    }
  }

  bool depleted() const { return depleted_at.has_value(); }
};

namespace detail {
inline void require_positive_price(double p) {
  if (!(p > 0.0) || !std::isfinite(p)) {
    throw InvalidArgument("price must be > 0");
  }
}
}  // namespace detail

// Backing coins charged per minted stablecoin.
inline double mint_cost(const MechanismState& state, double price) {
  detail::require_positive_price(price);
  return (1.0 + state.eps_alpha) / price;
}

// Backing coins paid for redeeming `qty` stablecoins: the full window price
// when reserves cover it, otherwise the entire reserves.
inline double redeem_payout(const MechanismState& state, double qty, double price) {
  detail::require_positive_price(price);
  if (!(qty >= 0.0)) throw InvalidArgument("redeem_payout: quantity must be >= 0");
  return std::min(qty * (1.0 - state.eps_beta) / price, state.reserves);
}

struct TradeOutcome {
  MechanismState state;
  // Backing coins credited to the speculator: negative on a buy (paid in),
  // positive on a sell (paid out).
  double backing_flow = 0.0;
};

// Execute a signed stablecoin order: delta > 0 mints, delta < 0 redeems.
// `step` is recorded in depleted_at when this trade empties the reserves.
inline TradeOutcome apply_trade(const MechanismState& state, double delta, double price,
                                std::size_t step = 0) {
  detail::require_positive_price(price);
  TradeOutcome out{state, 0.0};
  if (delta > 0.0) {
    const double paid = delta * mint_cost(state, price);
    out.state.reserves += paid;
    out.backing_flow = -paid;
  } else if (delta < 0.0) {
    const double payout = redeem_payout(state, -delta, price);
    out.state.reserves = std::max(state.reserves - payout, 0.0);
    out.backing_flow = payout;
    if (out.state.reserves <= 0.0) {
      out.state.reserves = 0.0;
      if (!out.state.depleted_at) out.state.depleted_at = step;
    }
  }
  return out;
}

}  // namespace pwstable
