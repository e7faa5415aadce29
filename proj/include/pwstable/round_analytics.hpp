#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>

#include "pwstable/error.hpp"
#include "pwstable/numerics.hpp"
#include "pwstable/price_sources.hpp"
#include "pwstable/speculator.hpp"

namespace pwstable {

/// Expected effect of one buy-then-sell round on the portfolio (m, n),
/// M = B(E[p|p<=y1])^j A(E[p|p>=y2])^i:
///
///   [ A  B ]   [ L2              L2 (1 - L1) E+              ]
///   [ C  D ] = [ (1 - L2) / E-   L1 + (1 - L1)(1 - L2) E+/E- ]
///
/// with L1 = lambda_buy^i, L2 = lambda_sell^j, E+ = E[p | p >= y2],
/// E- = E[p | p <= y1].
struct RoundMatrix {
  double a = 0.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;
  double y_ratio = 1.0;         // Y = E+ / E-
  double buys = 1.0;            // i, expected wait for a buy price
  double sells = 1.0;           // j, expected wait for a sell price
  double buy_retention = 0.0;   // lambda_buy^i
  double sell_retention = 0.0;  // lambda_sell^j
  double mean_above = 1.0;      // E+
  double mean_below = 1.0;      // E-

  static RoundMatrix from_components(double lambda_buy, double lambda_sell, double buys,
                                     double sells, double mean_above, double mean_below) {
    if (!(lambda_buy >= 0.0 && lambda_buy <= 1.0 && lambda_sell >= 0.0 && lambda_sell <= 1.0)) {
      throw InvalidArgument("RoundMatrix: lambdas must be in [0, 1]");
    }
    if (!(buys >= 0.0) || !(sells >= 0.0)) {
      throw InvalidArgument("RoundMatrix: expected counts must be >= 0");
    }
    if (!(mean_below > 0.0) || !(mean_above >= mean_below)) {
      throw InvalidArgument("RoundMatrix: require E+ >= E- > 0");
    }
    RoundMatrix mat;
    mat.buys = buys;
    mat.sells = sells;
    mat.mean_above = mean_above;
    mat.mean_below = mean_below;
    mat.y_ratio = mean_above / mean_below;
    const double l1 = std::pow(lambda_buy, buys);
    const double l2 = std::pow(lambda_sell, sells);
    mat.buy_retention = l1;
    mat.sell_retention = l2;
    mat.a = l2;
    mat.b = l2 * (1.0 - l1) * mean_above;
    mat.c = (1.0 - l2) / mean_below;
    mat.d = l1 + (1.0 - l1) * (1.0 - l2) * mat.y_ratio;
    return mat;
  }

  Portfolio apply(const Portfolio& x) const { return {a * x.m + b * x.n, c * x.m + d * x.n}; }
};

inline RoundMatrix build_round_matrix(const NormalSpec& dist, const WaitingInterval& wi,
                                      const SpeculatorParams& params) {
  params.validate();
  const double p_sell = support_cdf(dist, wi.y1);
  const double p_buy = support_sf(dist, wi.y2);
  constexpr double kNeverTrades = 1e-14;
  if (!(p_sell > kNeverTrades) || !(p_buy > kNeverTrades)) {
    throw DomainError("speculator never trades: a tail probability of the waiting interval vanishes");
  }
  return RoundMatrix::from_components(params.lambda_buy, params.lambda_sell, 1.0 / p_buy,
                                      1.0 / p_sell, cond_mean_above(dist, wi.y2),
                                      cond_mean_below(dist, wi.y1));
}

// R = sqrt((A - D)^2 + 4BC).
inline double discriminant(const RoundMatrix& mat) {
  const double diff = mat.a - mat.d;
  return std::sqrt(std::max(diff * diff + 4.0 * mat.b * mat.c, 0.0));
}

// Same quantity through BC = AD - L1 L2: sqrt((A + D)^2 - 4 L1 L2).
inline double discriminant_via_trace(const RoundMatrix& mat) {
  const double tr = mat.a + mat.d;
  return std::sqrt(std::max(tr * tr - 4.0 * mat.buy_retention * mat.sell_retention, 0.0));
}

struct EigenSystem {
  double a1 = 1.0;
  double a2 = 0.0;
  Portfolio c1;  // eigenvector component of x0 along a1
  Portfolio c2;  // eigenvector component of x0 along a2
  Portfolio x0;
  double discriminant = 0.0;
};

inline EigenSystem eigen(const RoundMatrix& mat, const Portfolio& x0) {
  const double r = discriminant(mat);
  const double scale = std::abs(mat.a) + std::abs(mat.d) + 1.0;
  if (!(r > 1e-14 * scale)) {
    throw DomainError("eigen decomposition undefined: R = 0 (both lambda powers equal 1)");
  }
  EigenSystem sys;
  sys.discriminant = r;
  sys.x0 = x0;
  sys.a1 = 0.5 * (mat.a + mat.d + r);
  // a1 a2 = det M = L1 L2.
  sys.a2 = mat.buy_retention * mat.sell_retention / sys.a1;
  const double diff = mat.a - mat.d;
  const double plus = 0.5 * (r + diff);
  const double minus = 0.5 * (r - diff);
  sys.c1 = {(plus * x0.m + mat.b * x0.n) / r, (mat.c * x0.m + minus * x0.n) / r};
  sys.c2 = {(minus * x0.m - mat.b * x0.n) / r, (-mat.c * x0.m + plus * x0.n) / r};
  return sys;
}

namespace detail {
// a^k for real k, continued through |a|^k cos(pi k) when a < 0.
inline double real_power(double base, double k) {
  if (k == 0.0) return 1.0;
  if (base == 0.0) return 0.0;
  if (base > 0.0) return std::pow(base, k);
  return std::pow(-base, k) * std::cos(std::numbers::pi * k);
}
}  // namespace detail

// x^k = a1^k c1 + a2^k c2.
inline Portfolio expected_portfolio(const EigenSystem& sys, std::size_t k) {
  const double kd = static_cast<double>(k);
  const double p1 = detail::real_power(sys.a1, kd);
  const double p2 = detail::real_power(sys.a2, kd);
  return {p1 * sys.c1.m + p2 * sys.c2.m, p1 * sys.c1.n + p2 * sys.c2.n};
}

// Backing-coin component n_k, continued to real k.
inline double expected_backing(const EigenSystem& sys, double k) {
  return detail::real_power(sys.a1, k) * sys.c1.n + detail::real_power(sys.a2, k) * sys.c2.n;
}

enum class DepletionOutcome { depletes, never, beyond_horizon };

struct DepletionEstimate {
  DepletionOutcome outcome = DepletionOutcome::never;
  double rounds = std::numeric_limits<double>::quiet_NaN();

  bool depletes() const { return outcome == DepletionOutcome::depletes; }
};

inline constexpr std::size_t kDefaultMaxRounds = 1'000'000;

/// Smallest k >= 0 with n_k = n0 + R0 (the speculator has absorbed all
/// reserves). Integer-unit scan for the first bracketing interval, then
/// bisection to |g(k)| <= 1e-9 (n0 + R0).
inline DepletionEstimate expected_depletion_rounds(const EigenSystem& sys, double reserves0,
                                                   double n0,
                                                   std::size_t max_rounds = kDefaultMaxRounds) {
  if (!(reserves0 > 0.0) || !(n0 > 0.0)) {
    throw InvalidArgument("expected_depletion_rounds: require R0 > 0 and n0 > 0");
  }
  const double target = n0 + reserves0;
  auto g = [&](double k) { return expected_backing(sys, k) - target; };
  if (g(0.0) >= 0.0) return {DepletionOutcome::depletes, 0.0};

  if (sys.a1 <= 1.0 + 1e-12) {
    // Bounded regime: n_k stays within c1 +/- |c2|.
    if (sys.c1.n + std::abs(sys.c2.n) < target) return {DepletionOutcome::never, std::numeric_limits<double>::quiet_NaN()};
  }
  for (std::size_t k = 1; k <= max_rounds; ++k) {
    const double kd = static_cast<double>(k);
    if (g(kd) >= 0.0) {
      const double root = numerics::bisect(g, kd - 1.0, kd, 1e-9 * target);
      return {DepletionOutcome::depletes, root};
    }
  }
  return {DepletionOutcome::beyond_horizon, std::numeric_limits<double>::quiet_NaN()};
}

// Timesteps for k rounds when the first round waits i steps for its first buy.
inline double rounds_to_timesteps(double rounds, double buys, double sells) {
  if (!(rounds >= 0.0) || !(buys >= 0.0) || !(sells >= 0.0)) {
    throw InvalidArgument("rounds_to_timesteps: arguments must be >= 0");
  }
  return buys + rounds * (buys + sells);
}

/// Y = (mu + sigma2 f(y2) / (1 - F(y2))) / (mu - sigma2 f(y1) / F(y1)) with the
/// untruncated normal f, F. A point mass gives the limit 1.
inline double y_normal_closed_form(const NormalSpec& dist, double y1, double y2) {
  if (dist.is_point_mass()) return 1.0;
  const double sd = dist.sigma();
  const double z1 = (y1 - dist.mu) / sd;
  const double z2 = (y2 - dist.mu) / sd;
  const double lower_mass = detail::std_cdf(z1);
  const double upper_mass = detail::std_sf(z2);
  if (!(lower_mass > 0.0) || !(upper_mass > 0.0)) {
    throw DomainError("y_normal_closed_form: tail probability vanishes");
  }
  const double num = dist.mu + dist.sigma2 * detail::density(dist, y2) / upper_mass;
  const double den = dist.mu - dist.sigma2 * detail::density(dist, y1) / lower_mass;
  if (!(den > 0.0)) {
    throw DomainError(
        "y_normal_closed_form: E[p | p <= y1] is not positive; raise support_lo (the "
        "untruncated normal puts too much mass below zero)");
  }
  return num / den;
}

// lim n_k = +inf iff none of Y, lambda_buy^i, lambda_sell^j equals 1 and x0 is
// nonnegative and nontrivial.
inline bool divergence_check(const RoundMatrix& mat, const Portfolio& x0) {
  if (x0.m < 0.0 || x0.n < 0.0) {
    throw InvalidArgument("divergence_check: x0 must be nonnegative");
  }
  constexpr double tol = 1e-12;
  const bool nontrivial = x0.m > 0.0 || x0.n > 0.0;
  return nontrivial && std::abs(mat.y_ratio - 1.0) > tol &&
         std::abs(mat.buy_retention - 1.0) > tol && std::abs(mat.sell_retention - 1.0) > tol;
}

}  // namespace pwstable
