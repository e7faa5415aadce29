#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <optional>
#include <span>

#include "pwstable/error.hpp"
#include "pwstable/numerics.hpp"
#include "pwstable/price_sources.hpp"

namespace pwstable {

// Holdings: m stablecoins, n backing coins.
struct Portfolio {
  double m = 0.0;
  double n = 0.0;

  friend Portfolio operator+(Portfolio a, Portfolio b) { return {a.m + b.m, a.n + b.n}; }
  friend bool operator==(const Portfolio&, const Portfolio&) = default;
};

struct SpeculatorParams {
  double delta = 0.1;        // impatience, in [0, 1)
  double lambda_buy = 0.0;   // share of backing coins held back when buying
  double lambda_sell = 0.0;  // share of stablecoins held back when selling

  static SpeculatorParams make(double delta, double lambda_buy, double lambda_sell) {
    SpeculatorParams p{delta, lambda_buy, lambda_sell};
    p.validate();
    return p;
  }

  void validate() const {
    if (!(delta >= 0.0 && delta < 1.0)) {
      throw InvalidArgument("SpeculatorParams: delta must be in [0, 1)");
    }
    if (!(lambda_buy >= 0.0 && lambda_buy <= 1.0) || !(lambda_sell >= 0.0 && lambda_sell <= 1.0)) {
      throw InvalidArgument("SpeculatorParams: lambdas must be in [0, 1]");
    }
  }
};

// Prices in [y1, y2] make the speculator wait. x1, x2 are the anticipated
// sell/buy thresholds that define the value of waiting; s1 is the
// speculator's valuation of one stablecoin in backing coins.
struct WaitingInterval {
  double y1 = 0.0;
  double y2 = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
  double s1 = 0.0;
};

namespace detail {

// (1 - delta)^(1 / prob), with prob = 0 read as the limit.
inline double discount_weight(double delta, double prob) {
  if (delta == 0.0) return 1.0;
  if (!(prob > 0.0)) return 0.0;
  return std::exp(std::log1p(-delta) / prob);
}

// Conditional means that fall back to the boundary limit on empty events.
inline double mean_below_or_limit(const NormalSpec& d, double x) {
  const auto m = interval_mean(d, d.support_lo, std::min(x, d.support_hi));
  return m ? *m : std::clamp(x, d.support_lo, d.support_hi);
}

inline double mean_above_or_limit(const NormalSpec& d, double x) {
  const auto m = interval_mean(d, std::max(x, d.support_lo), d.support_hi);
  return m ? *m : std::clamp(x, d.support_lo, d.support_hi);
}

}  // namespace detail

/// Stablecoin valuation s1 = max_x (1 - delta)^(1/F(x)) / E[p | p <= x] over
/// the truncated support, via a coarse grid plus golden-section refinement.
///
/// Point mass at c gives (1 - delta)/c. With delta = 0 the objective is
/// 1/E[p | p <= x], whose supremum is the limit 1/support_lo.
inline double stablecoin_value_s1(const NormalSpec& dist, double delta,
                                  std::size_t grid_points = 1024) {
  dist.validate();
  if (!(delta >= 0.0 && delta < 1.0)) {
    throw InvalidArgument("stablecoin_value_s1: delta must be in [0, 1)");
  }
  if (dist.is_point_mass()) return (1.0 - delta) / dist.mu;
  if (delta == 0.0) return 1.0 / dist.support_lo;
  auto objective = [&](double x) {
    const double w = detail::discount_weight(delta, support_cdf(dist, x));
    if (w == 0.0) return 0.0;
    return w / detail::mean_below_or_limit(dist, x);
  };
  return numerics::grid_refine_max(objective, dist.support_lo, dist.support_hi, grid_points)
      .value;
}

/// Waiting interval [y1, y2] from the indifference conditions between acting
/// now and waiting for the anticipated sell (x1) or buy (x2) threshold.
///
///   y1 = ((1 - w1) s1 + w1 / E[p | p <= x1])^-1,  w1 = (1 - delta)^(1/F(x1))
///   y2 = w2 E[p | p >= x2] + (1 - w2) / s1,       w2 = (1 - delta)^(1/(1 - F(x2)))
///
/// Lambda scales both sides of each indifference equation equally, so the
/// interval depends on the distribution and delta only.
inline WaitingInterval waiting_interval(const NormalSpec& dist, const SpeculatorParams& params,
                                        std::size_t grid_points = 1024) {
  params.validate();
  dist.validate();
  if (dist.is_point_mass()) {
    throw DomainError("waiting_interval: degenerate distribution (sigma2 = 0)");
  }
  const double delta = params.delta;
  const double s1 = stablecoin_value_s1(dist, delta, grid_points);
  const double inv_s1 = 1.0 / s1;
  WaitingInterval wi;
  wi.s1 = s1;

  const double sell_hi = std::min(inv_s1, dist.support_hi);
  auto sell_gain = [&](double x) {
    const double w = detail::discount_weight(delta, support_cdf(dist, x));
    if (w == 0.0) return 0.0;
    return w * (1.0 / detail::mean_below_or_limit(dist, x) - s1);
  };
  wi.x1 = numerics::grid_refine_max(sell_gain, dist.support_lo, sell_hi, grid_points).x;
  const double w1 = detail::discount_weight(delta, support_cdf(dist, wi.x1));
  wi.y1 = 1.0 / ((1.0 - w1) * s1 + w1 / detail::mean_below_or_limit(dist, wi.x1));

  if (inv_s1 >= dist.support_hi) {
    // No price in the support is worth buying at; the closed form's limit.
    wi.x2 = dist.support_hi;
    wi.y2 = inv_s1;
  } else {
    const double buy_lo = std::max(inv_s1, dist.support_lo);
    auto buy_gain = [&](double x) {
      const double w = detail::discount_weight(delta, support_sf(dist, x));
      if (w == 0.0) return 0.0;
      return w * (detail::mean_above_or_limit(dist, x) - inv_s1);
    };
    wi.x2 = numerics::grid_refine_max(buy_gain, buy_lo, dist.support_hi, grid_points).x;
    const double w2 = detail::discount_weight(delta, support_sf(dist, wi.x2));
    wi.y2 = w2 * detail::mean_above_or_limit(dist, wi.x2) + (1.0 - w2) * inv_s1;
  }
  if (!std::isfinite(wi.y1) || !std::isfinite(wi.y2)) {
    throw DomainError("waiting_interval: optimization produced a non-finite threshold");
  }
  return wi;
}

// Threshold policy: buy (1 - lambda_buy) p n above y2, sell
// (1 - lambda_sell) m below y1, wait on the closed interval.
inline double decide(double price, const Portfolio& x, const SpeculatorParams& params,
                     double y1, double y2) {
  if (price > y2) return (1.0 - params.lambda_buy) * price * x.n;
  if (price < y1) return -(1.0 - params.lambda_sell) * x.m;
  return 0.0;
}

inline double decide(double price, const Portfolio& x, const SpeculatorParams& params,
                     const WaitingInterval& wi) {
  return decide(price, x, params, wi.y1, wi.y2);
}

// u(x) = m s1 + n, in backing coins.
inline double utility(const Portfolio& x, double s1) { return x.m * s1 + x.n; }

struct Band {
  double y1;
  double y2;
};

// [mean - c sd, mean + c sd] over the window (population sd). Fewer than two
// samples yields nullopt, which callers treat as "wait".
inline std::optional<Band> adaptive_interval(std::span<const double> window, double c) {
  if (window.size() < 2) return std::nullopt;
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t k = 0;
  for (double p : window) {
    ++k;
    const double d = p - mean;
    mean += d / static_cast<double>(k);
    m2 += d * (p - mean);
  }
  const double sd = std::sqrt(std::max(m2 / static_cast<double>(k), 0.0));
  return Band{mean - c * sd, mean + c * sd};
}

// Streaming counterpart of adaptive_interval over the last `capacity`
// prices. Sums are shifted by the first price seen and rebuilt every
// `capacity` pushes.
class RollingWindow {
 public:
  explicit RollingWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity < 2) throw InvalidArgument("RollingWindow: capacity must be >= 2");
  }

  void push(double p) {
    if (values_.empty() && !has_shift_) {
      shift_ = p;
      has_shift_ = true;
    }
    values_.push_back(p);
    const double d = p - shift_;
    sum_ += d;
    sum_sq_ += d * d;
    if (values_.size() > capacity_) {
      const double old = values_.front() - shift_;
      values_.pop_front();
      sum_ -= old;
      sum_sq_ -= old * old;
    }
    if (++since_rebuild_ >= capacity_) rebuild();
  }

  std::size_t size() const { return values_.size(); }

  std::optional<Band> band(double c) const {
    if (values_.size() < 2) return std::nullopt;
    const double k = static_cast<double>(values_.size());
    const double mean_shifted = sum_ / k;
    const double var = std::max(sum_sq_ / k - mean_shifted * mean_shifted, 0.0);
    const double mean = mean_shifted + shift_;
    const double sd = std::sqrt(var);
    return Band{mean - c * sd, mean + c * sd};
  }

 private:
  void rebuild() {
    since_rebuild_ = 0;
    if (values_.empty()) return;
    shift_ = values_.front();
    sum_ = 0.0;
    sum_sq_ = 0.0;
    for (double v : values_) {
      const double d = v - shift_;
      sum_ += d;
      sum_sq_ += d * d;
    }
  }

  std::size_t capacity_;
  std::deque<double> values_;
  double shift_ = 0.0;
  bool has_shift_ = false;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
  std::size_t since_rebuild_ = 0;
};

}  // namespace pwstable
