#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "pwstable/error.hpp"
#include "pwstable/price_sources.hpp"

namespace pwstable {

/// Finite-sample stand-ins for lim inf 1/p_t and lim sup 1/p_t (heuristic:
/// the true limits need an infinite tail). The tail's price extremes are kept
/// so fee thresholds can be evaluated without reciprocal rounding.
struct TailSpread {
  double inv_liminf_est = 0.0;
  double inv_limsup_est = 0.0;
  double tail_fraction = 1.0;
  double price_min = std::numeric_limits<double>::infinity();  // = 1 / inv_limsup_est
  double price_max = std::numeric_limits<double>::infinity();  // = 1 / inv_liminf_est
  std::size_t tail_samples = 0;

  static TailSpread from_inverse(double inv_liminf, double inv_limsup) {
    if (!(inv_liminf >= 0.0) || !(inv_limsup >= inv_liminf)) {
      throw InvalidArgument("TailSpread: require 0 <= inv_liminf <= inv_limsup");
    }
    TailSpread s;
    s.inv_liminf_est = inv_liminf;
    s.inv_limsup_est = inv_limsup;
    s.price_min = inv_limsup > 0.0 ? 1.0 / inv_limsup : std::numeric_limits<double>::infinity();
    s.price_max = inv_liminf > 0.0 ? 1.0 / inv_liminf : std::numeric_limits<double>::infinity();
    return s;
  }

  double width() const { return inv_limsup_est - inv_liminf_est; }
};

inline constexpr std::string_view kTailSpreadEstimator = "heuristic trailing-window min/max";

inline TailSpread tail_spread(const PriceSeries& series, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw InvalidArgument("tail_spread: tail_fraction must be in (0, 1]");
  }
  const std::size_t len = series.size();
  const auto count = static_cast<std::size_t>(std::ceil(tail_fraction * static_cast<double>(len)));
  if (len == 0 || count == 0) throw InvalidArgument("tail_spread: empty tail");
  const auto tail = std::span<const double>(series.prices).last(std::min(count, len));
  const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end());
  TailSpread s;
  s.price_min = *lo;
  s.price_max = *hi;
  s.inv_liminf_est = 1.0 / *hi;
  s.inv_limsup_est = 1.0 / *lo;
  s.tail_fraction = tail_fraction;
  s.tail_samples = tail.size();
  return s;
}

enum class Stability { stable, at_risk, boundary };

inline std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::at_risk: return "at-risk";
    case Stability::boundary: return "boundary";
  }
  return "unknown";
}

struct LCriterion {
  double value = 0.0;
  Stability classification = Stability::boundary;
};

inline constexpr double kBoundaryTolerance = 1e-12;

// L = (1 + eps_alpha) liminf(1/p) - (1 - eps_beta) limsup(1/p); boundary
// when |L| is within `tolerance` of the magnitude of the two terms.
inline LCriterion L_criterion(double eps_alpha, double eps_beta, const TailSpread& spread,
                              double tolerance = kBoundaryTolerance) {
  const double lower = (1.0 + eps_alpha) * spread.inv_liminf_est;
  const double upper = (1.0 - eps_beta) * spread.inv_limsup_est;
  const double value = lower - upper;
  const double scale = std::max({std::abs(lower), std::abs(upper), 1e-300});
  LCriterion out{value, Stability::boundary};
  if (std::abs(value) > tolerance * scale) {
    out.classification = value > 0.0 ? Stability::stable : Stability::at_risk;
  }
  return out;
}

/// Smallest symmetric fee eps = (limsup - liminf) / (limsup + liminf) that
/// rules out unbounded speculator profit. In price terms this is
/// (p_max - p_min) / (p_max + p_min).
inline double min_fee(const TailSpread& spread) {
  if (!(spread.inv_limsup_est + spread.inv_liminf_est > 0.0)) {
    throw InvalidArgument("min_fee: degenerate spread (both estimates are zero)");
  }
  if (std::isfinite(spread.price_min) && std::isfinite(spread.price_max) &&
      spread.price_min > 0.0) {
    return (spread.price_max - spread.price_min) / (spread.price_max + spread.price_min);
  }
  return spread.width() / (spread.inv_limsup_est + spread.inv_liminf_est);
}

namespace detail {

inline void require_fees(double eps_alpha, double eps_beta, double n0) {
  if (!(eps_alpha >= 0.0) || !(eps_beta >= 0.0 && eps_beta < 1.0)) {
    throw InvalidArgument("fees must satisfy eps_alpha >= 0 and 0 <= eps_beta < 1");
  }
  if (!(n0 > 0.0)) throw InvalidArgument("n0 must be > 0");
}

struct BruteForce {
  std::span<const double> prices;
  double buy_factor;   // 1 + eps_alpha
  double sell_factor;  // 1 - eps_beta
  std::vector<double>& best;

  // wealth is in backing coins when holding_stable is false, stablecoins otherwise.
  void descend(std::size_t t, double wealth, bool holding_stable) {
    if (t == prices.size()) return;
    const double p = prices[t];
    // wait
    if (!holding_stable) best[t] = std::max(best[t], wealth);
    descend(t + 1, wealth, holding_stable);
    // the one valid all-in action
    if (holding_stable) {
      const double backing = wealth * sell_factor / p;
      best[t] = std::max(best[t], backing);
      descend(t + 1, backing, false);
    } else {
      descend(t + 1, wealth * p / buy_factor, true);
    }
  }
};

}  // namespace detail

inline constexpr std::size_t kBruteForceMaxLength = 14;

/// Omniscient profit trace by exhaustive search over all-in/all-out
/// schedules. Entry t is the best backing-coin holding reachable at step t
/// (ending out of stablecoins) minus n0.
inline std::vector<double> optimal_profit_bruteforce(const PriceSeries& series, double eps_alpha,
                                                     double eps_beta, double n0 = 1.0) {
  detail::require_fees(eps_alpha, eps_beta, n0);
  if (series.size() > kBruteForceMaxLength) {
    throw InvalidArgument("optimal_profit_bruteforce: series too long (max 14)");
  }
  std::vector<double> best(series.size(), n0);
  detail::BruteForce search{series.prices, 1.0 + eps_alpha, 1.0 - eps_beta, best};
  search.descend(0, n0, false);
  for (std::size_t t = 1; t < best.size(); ++t) best[t] = std::max(best[t], best[t - 1]);
  for (double& b : best) b -= n0;
  return best;
}

/// Linear-time optimum: B_t is the best backing wealth so far and S_t the
/// best stablecoin holding so far,
///   S_t = max(S_{t-1}, B_{t-1} p_t / (1 + eps_alpha))
///   B_t = max(B_{t-1}, S_{t-1} (1 - eps_beta) / p_t).
inline std::vector<double> greedy_threshold_profit(const PriceSeries& series, double eps_alpha,
                                                   double eps_beta, double n0 = 1.0) {
  detail::require_fees(eps_alpha, eps_beta, n0);
  const double buy_factor = 1.0 + eps_alpha;
  const double sell_factor = 1.0 - eps_beta;
  std::vector<double> trace(series.size());
  double backing = n0;
  double stable = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < series.size(); ++t) {
    const double p = series[t];
    const double sold = stable * sell_factor / p;
    const double bought = backing * p / buy_factor;
    if (sold > backing) backing = sold;
    if (bought > stable) stable = bought;
    trace[t] = backing - n0;
  }
  return trace;
}

enum class ScheduledAction : std::int8_t { sell = -1, wait = 0, buy = 1 };

/// One schedule attaining the greedy optimum at the final step: every buy
/// converts all backing coins and every sell redeems all stablecoins.
inline std::vector<ScheduledAction> optimal_schedule(std::span<const double> prices,
                                                     double eps_alpha, double eps_beta) {
  detail::require_fees(eps_alpha, eps_beta, 1.0);
  const std::size_t n = prices.size();
  const double buy_factor = 1.0 + eps_alpha;
  const double sell_factor = 1.0 - eps_beta;
  std::vector<bool> sold_at(n, false);
  std::vector<bool> bought_at(n, false);
  double backing = 1.0;
  double stable = -std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t < n; ++t) {
    const double p = prices[t];
    const double sold = stable * sell_factor / p;
    const double bought = backing * p / buy_factor;
    if (sold > backing) {
      backing = sold;
      sold_at[t] = true;
    }
    if (bought > stable) {
      stable = bought;
      bought_at[t] = true;
    }
  }
  std::vector<ScheduledAction> actions(n, ScheduledAction::wait);
  bool holding_stable = false;
  for (std::size_t t = n; t-- > 0;) {
    if (!holding_stable && sold_at[t]) {
      actions[t] = ScheduledAction::sell;
      holding_stable = true;
    } else if (holding_stable && bought_at[t]) {
      actions[t] = ScheduledAction::buy;
      holding_stable = false;
    }
  }
  return actions;
}

/// Smallest k >= 1 with r_t >= (n0 / k) s_t for all t, where s is the
/// optimal trace for unit endowment. nullopt means "not sensitive".
inline std::optional<double> sensitivity_check(std::span<const double> r_trace,
                                               std::span<const double> s_trace, double n0) {
  if (r_trace.size() != s_trace.size()) {
    throw InvalidArgument("sensitivity_check: traces must have the same length");
  }
  if (!(n0 > 0.0)) throw InvalidArgument("sensitivity_check: n0 must be > 0");
  double k = 1.0;
  for (std::size_t t = 0; t < r_trace.size(); ++t) {
    if (!(s_trace[t] > 0.0)) continue;
    if (!(r_trace[t] > 0.0)) return std::nullopt;
    k = std::max(k, n0 * s_trace[t] / r_trace[t]);
  }
  return k;
}

}  // namespace pwstable
