#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <limits>

#include "pwstable/error.hpp"

namespace pwstable::numerics {

struct Extremum {
  double x;
  double value;
};

// Golden-section search for a maximum of a unimodal function on [lo, hi].
template <std::invocable<double> F>
Extremum golden_section_max(F&& f, double lo, double hi, double x_tol = 1e-8) {
  constexpr double inv_phi = 0.6180339887498948482;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > x_tol) {
    // >= keeps the left candidate on ties, so plateaus resolve toward smaller x.
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x)};
}

/// Maximize f on [lo, hi]: evaluate a uniform grid of `grid_points` nodes,
/// then refine around the best node with golden-section search.
///
/// Ties on the grid go to the smaller x. The result is never worse than the
/// best grid node. Non-finite objective values are treated as failures.
template <std::invocable<double> F>
Extremum grid_refine_max(F&& f, double lo, double hi,
                         std::size_t grid_points = 1024,
                         double x_tol = 1e-8) {
  if (!(hi >= lo)) {
    throw InvalidArgument("grid_refine_max: empty search interval");
  }
  if (hi == lo || grid_points < 2) {
    const double v = f(lo);
    if (!std::isfinite(v)) {
      throw DomainError("optimization failure: non-finite objective");
    }
    return {lo, v};
  }
  const double step = (hi - lo) / static_cast<double>(grid_points - 1);
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < grid_points; ++k) {
    const double x = (k + 1 == grid_points) ? hi : lo + step * static_cast<double>(k);
    const double v = f(x);
    if (!std::isfinite(v)) {
      throw DomainError("optimization failure: non-finite objective");
    }
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  const double left = best == 0 ? lo : lo + step * static_cast<double>(best - 1);
  const double right =
      best + 1 >= grid_points ? hi : lo + step * static_cast<double>(best + 1);
  const Extremum refined = golden_section_max(f, left, right, x_tol);
  if (std::isfinite(refined.value) && refined.value > best_value) {
    return refined;
  }
  const double best_x =
      (best + 1 == grid_points) ? hi : lo + step * static_cast<double>(best);
  return {best_x, best_value};
}

// Bisection on a sign-changing bracket. Stops when |f| <= f_tol or the
// bracket collapses to adjacent doubles.
template <std::invocable<double> F>
double bisect(F&& f, double lo, double hi, double f_tol) {
  double f_lo = f(lo);
  double f_hi = f(hi);
  if (f_lo == 0.0) return lo;
  if (f_hi == 0.0) return hi;
  if ((f_lo > 0.0) == (f_hi > 0.0)) {
    throw DomainError("bisect: interval does not bracket a root");
  }
  for (int iter = 0; iter < 400; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) return mid;
    const double f_mid = f(mid);
    if (std::abs(f_mid) <= f_tol) return mid;
    if ((f_mid > 0.0) == (f_lo > 0.0)) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seed of trial `index` under `master`: splitmix64(splitmix64(master) + index).
constexpr std::uint64_t derive_trial_seed(std::uint64_t master,
                                          std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master) + index);
}

}  // namespace pwstable::numerics
