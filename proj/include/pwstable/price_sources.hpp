#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pwstable/error.hpp"

namespace pwstable {

// Lowest admissible price. 1/p appears throughout, so prices must stay > 0.
inline constexpr double kPriceFloor = 1e-6;

// Normal price distribution truncated to [support_lo, support_hi].
struct NormalSpec {
  double mu = 0.0;
  double sigma2 = 1.0;
  double support_lo = kPriceFloor;
  double support_hi = 1.0;

  // Default support: [max(mu - 6 sigma, 1e-6), mu + 6 sigma]. A point mass
  // (sigma2 == 0) gets a relative 1e-9 sliver around mu.
  static NormalSpec with_default_support(double mu, double sigma2) {
    if (!(sigma2 >= 0.0) || !std::isfinite(mu) || !std::isfinite(sigma2)) {
      throw InvalidArgument("NormalSpec: require finite mu and sigma2 >= 0");
    }
    if (!(mu > 0.0)) {
      throw InvalidArgument("NormalSpec: mu must be positive for a price distribution");
    }
    const double sd = std::sqrt(sigma2);
    double lo = std::max(mu - 6.0 * sd, kPriceFloor);
    double hi = mu + 6.0 * sd;
    if (sigma2 == 0.0) {
      lo = std::max(mu * (1.0 - 1e-9), kPriceFloor * 0.5);
      hi = mu * (1.0 + 1e-9);
    }
    return make(mu, sigma2, lo, hi);
  }

  static NormalSpec make(double mu, double sigma2, double lo, double hi) {
    NormalSpec s{mu, sigma2, lo, hi};
    s.validate();
    return s;
  }

  void validate() const {
    if (!std::isfinite(mu) || !(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
      throw InvalidArgument("NormalSpec: require finite mu and sigma2 >= 0");
    }
    if (!(support_lo > 0.0)) {
      throw InvalidArgument("NormalSpec: support_lo must be > 0");
    }
    if (!(support_lo < support_hi) || !std::isfinite(support_hi)) {
      throw InvalidArgument("NormalSpec: support_lo must be < support_hi");
    }
  }

  double sigma() const { return std::sqrt(sigma2); }
  bool is_point_mass() const { return sigma2 == 0.0; }
};

// Gaussian random walk p_{t+1} = max(p_t + N(mu_step, sigma_step^2), floor).
struct WalkSpec {
  double mu_step = 0.0;
  double sigma_step = 0.0;
  double p0 = 1.0;
  double floor = kPriceFloor;

  static WalkSpec make(double mu_step, double sigma_step, double p0,
                       double floor = kPriceFloor) {
    WalkSpec w{mu_step, sigma_step, p0, floor};
    w.validate();
    return w;
  }

  void validate() const {
    if (!std::isfinite(mu_step) || !(sigma_step >= 0.0) || !std::isfinite(sigma_step)) {
      throw InvalidArgument("WalkSpec: require finite mu_step and sigma_step >= 0");
    }
    if (!(floor > 0.0) || !(p0 > floor) || !std::isfinite(p0)) {
      throw InvalidArgument("WalkSpec: require p0 > floor > 0");
    }
  }
};

enum class SourceTag { iid, walk, csv, literal };

inline std::string_view to_string(SourceTag tag) {
  switch (tag) {
    case SourceTag::iid: return "iid";
    case SourceTag::walk: return "walk";
    case SourceTag::csv: return "csv";
    case SourceTag::literal: return "literal";
  }
  return "unknown";
}

struct PriceSeries {
  std::vector<double> prices;
  SourceTag source = SourceTag::literal;
  std::optional<std::uint64_t> seed;
  std::size_t clamp_count = 0;

  static PriceSeries make(std::vector<double> prices, SourceTag source = SourceTag::literal,
                          std::optional<std::uint64_t> seed = std::nullopt) {
    PriceSeries s{std::move(prices), source, seed, 0};
    s.validate();
    return s;
  }

  void validate() const {
    if (prices.empty()) {
      throw InvalidArgument("PriceSeries: at least one price required");
    }
    for (std::size_t t = 0; t < prices.size(); ++t) {
      if (!(prices[t] > 0.0) || !std::isfinite(prices[t])) {
        throw InvalidArgument("PriceSeries: price at index " + std::to_string(t) +
                              " is not strictly positive");
      }
    }
  }

  std::size_t size() const { return prices.size(); }
  double operator[](std::size_t t) const { return prices[t]; }
};

namespace detail {

inline void require_nondegenerate(const NormalSpec& spec) {
  if (spec.is_point_mass()) {
    throw DomainError("degenerate distribution (sigma2 = 0)");
  }
}

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline double std_cdf(double z) { return 0.5 * std::erfc(-z * kInvSqrt2); }
inline double std_sf(double z) { return 0.5 * std::erfc(z * kInvSqrt2); }

// Untruncated probability of [a, b], taken from the nearer tail.
inline double raw_mass(const NormalSpec& spec, double a, double b) {
  if (!(b > a)) return 0.0;
  const double sd = spec.sigma();
  const double za = (a - spec.mu) / sd;
  const double zb = (b - spec.mu) / sd;
  if (za >= 0.0) return std::max(std_sf(za) - std_sf(zb), 0.0);
  if (zb <= 0.0) return std::max(std_cdf(zb) - std_cdf(za), 0.0);
  return std::max(1.0 - std_cdf(za) - std_sf(zb), 0.0);
}

inline double density(const NormalSpec& spec, double x) {
  const double d = x - spec.mu;
  return std::exp(-d * d / (2.0 * spec.sigma2)) /
         std::sqrt(2.0 * std::numbers::pi * spec.sigma2);
}

// Both below and above relative to the support's total mass.
inline constexpr double kEmptyEventTolerance = 1e-14;

// E[p | a <= p <= b] from mu * P - sigma2 [f(b) - f(a)]; nullopt when the
// event has (numerically) no mass.
inline std::optional<double> interval_mean(const NormalSpec& spec, double a, double b) {
  const double total = raw_mass(spec, spec.support_lo, spec.support_hi);
  const double mass = raw_mass(spec, a, b);
  if (!(mass > kEmptyEventTolerance * total)) return std::nullopt;
  const double mean = spec.mu - spec.sigma2 * (density(spec, b) - density(spec, a)) / mass;
  // Exact math keeps the mean inside [a, b]; clamp the rounding.
  return std::clamp(mean, a, b);
}

}  // namespace detail

// Untruncated normal density. Truncation is the caller's business.
inline double pdf(const NormalSpec& spec, double x) {
  detail::require_nondegenerate(spec);
  return detail::density(spec, x);
}

// Untruncated normal CDF.
inline double cdf(const NormalSpec& spec, double x) {
  detail::require_nondegenerate(spec);
  return detail::std_cdf((x - spec.mu) / spec.sigma());
}

// CDF of the distribution restricted to [support_lo, support_hi].
inline double support_cdf(const NormalSpec& spec, double x) {
  if (spec.is_point_mass()) return x >= spec.mu ? 1.0 : 0.0;
  if (x <= spec.support_lo) return 0.0;
  if (x >= spec.support_hi) return 1.0;
  const double total = detail::raw_mass(spec, spec.support_lo, spec.support_hi);
  return detail::raw_mass(spec, spec.support_lo, x) / total;
}

// 1 - support_cdf(x), without cancellation in the upper tail.
inline double support_sf(const NormalSpec& spec, double x) {
  if (spec.is_point_mass()) return x < spec.mu ? 1.0 : 0.0;
  if (x <= spec.support_lo) return 1.0;
  if (x >= spec.support_hi) return 0.0;
  const double total = detail::raw_mass(spec, spec.support_lo, spec.support_hi);
  return detail::raw_mass(spec, x, spec.support_hi) / total;
}

/// Closed-form expansion of the partial first moment:
/// integral_a^b x f(x) dx = mu * integral_a^b f(x) dx - sigma2 * (f(b) - f(a)).
inline double partial_first_moment(const NormalSpec& spec, double a, double b) {
  detail::require_nondegenerate(spec);
  double mass = 0.0;
  if (b >= a) {
    mass = detail::raw_mass(spec, a, b);
  } else {
    mass = -detail::raw_mass(spec, b, a);
  }
  return spec.mu * mass - spec.sigma2 * (detail::density(spec, b) - detail::density(spec, a));
}

// E[p | p <= x] over the truncated support.
inline double cond_mean_below(const NormalSpec& spec, double x) {
  if (spec.is_point_mass()) {
    if (x >= spec.mu) return spec.mu;
    throw DomainError("empty conditioning event: P(p <= x) = 0");
  }
  const auto m = detail::interval_mean(spec, spec.support_lo, std::min(x, spec.support_hi));
  if (!m) throw DomainError("empty conditioning event: P(p <= x) = 0");
  return *m;
}

// E[p | p >= x] over the truncated support.
inline double cond_mean_above(const NormalSpec& spec, double x) {
  if (spec.is_point_mass()) {
    if (x <= spec.mu) return spec.mu;
    throw DomainError("empty conditioning event: P(p >= x) = 0");
  }
  const auto m = detail::interval_mean(spec, std::max(x, spec.support_lo), spec.support_hi);
  if (!m) throw DomainError("empty conditioning event: P(p >= x) = 0");
  return *m;
}

// Stateful generator of i.i.d. draws clipped to the support. The stream for a
// given (spec, seed) is fixed, so sample_iid and the simulator agree.
class IidNormalStream {
 public:
  IidNormalStream(const NormalSpec& spec, std::uint64_t seed)
      : spec_(spec), rng_(seed), normal_(spec.mu, spec.is_point_mass() ? 1.0 : spec.sigma()) {
    spec_.validate();
  }

  double next() {
    if (spec_.is_point_mass()) return spec_.mu;
    return std::clamp(normal_(rng_), spec_.support_lo, spec_.support_hi);
  }

 private:
  NormalSpec spec_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
};

class RandomWalkStream {
 public:
  RandomWalkStream(const WalkSpec& spec, std::uint64_t seed)
      : spec_(spec), rng_(seed), normal_(0.0, 1.0), current_(spec.p0) {
    spec_.validate();
  }

  // First call yields p0.
  double next() {
    if (!started_) {
      started_ = true;
      return current_;
    }
    const double proposed = current_ + spec_.mu_step + spec_.sigma_step * normal_(rng_);
    if (proposed < spec_.floor) {
      current_ = spec_.floor;
      ++clamp_count_;
    } else {
      current_ = proposed;
    }
    return current_;
  }

  std::size_t clamp_count() const { return clamp_count_; }

 private:
  WalkSpec spec_;
  std::mt19937_64 rng_;
  std::normal_distribution<double> normal_;
  double current_;
  bool started_ = false;
  std::size_t clamp_count_ = 0;
};

inline PriceSeries sample_iid(const NormalSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("sample_iid: n must be >= 1");
  IidNormalStream stream(spec, seed);
  std::vector<double> prices(n);
  for (auto& p : prices) p = stream.next();
  return PriceSeries{std::move(prices), SourceTag::iid, seed, 0};
}

inline PriceSeries random_walk(const WalkSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw InvalidArgument("random_walk: n must be >= 1");
  RandomWalkStream stream(spec, seed);
  std::vector<double> prices(n);
  for (auto& p : prices) p = stream.next();
  return PriceSeries{std::move(prices), SourceTag::walk, seed, stream.clamp_count()};
}

namespace detail {

inline std::string_view trim_field(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
    s.remove_prefix(1);
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    if (line[k] == '"') quoted = !quoted;
    if (line[k] == ',' && !quoted) {
      out.push_back(trim_field(line.substr(start, k - start)));
      start = k + 1;
    }
  }
  out.push_back(trim_field(line.substr(start)));
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

}  // namespace detail

// Load prices from a CSV with a header row. Rows stay in file order; the
// timestamp column must exist but is not interpreted. Row numbers in errors
// count data rows from 1.
inline PriceSeries load_csv(const std::string& path, std::string_view timestamp_column,
                            std::string_view price_column) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("load_csv: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line) || detail::trim_field(line).empty()) {
    throw InvalidArgument("load_csv: empty file '" + path + "'");
  }
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  const auto header = detail::split_csv_line(line);
  auto find_column = [&](std::string_view name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw InvalidArgument("load_csv: missing column '" + std::string(name) + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t ts_idx = find_column(timestamp_column);
  const std::size_t price_idx = find_column(price_column);
  const std::size_t needed = std::max(ts_idx, price_idx) + 1;

  std::vector<double> prices;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (detail::trim_field(line).empty()) continue;
    ++row;
    const auto fields = detail::split_csv_line(line);
    if (fields.size() < needed) {
      throw InvalidArgument("load_csv: row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, expected at least " +
                            std::to_string(needed));
    }
    const auto value = detail::parse_double(fields[price_idx]);
    if (!value || !std::isfinite(*value)) {
      throw InvalidArgument("load_csv: row " + std::to_string(row) + ": unparsable price '" +
                            std::string(fields[price_idx]) + "'");
    }
    if (!(*value > 0.0)) {
      throw InvalidArgument("load_csv: row " + std::to_string(row) +
                            ": price must be positive, got '" +
                            std::string(fields[price_idx]) + "'");
    }
    prices.push_back(*value);
  }
  if (prices.empty()) throw InvalidArgument("load_csv: no data rows in '" + path + "'");
  return PriceSeries{std::move(prices), SourceTag::csv, std::nullopt, 0};
}

// Mean and population standard deviation of first differences; p0 is the
// first price.
inline WalkSpec step_stats(const PriceSeries& series) {
  if (series.size() < 2) throw InvalidArgument("step_stats: need at least 2 prices");
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 1; t < series.size(); ++t) {
    const double d = series[t] - series[t - 1];
    ++count;
    const double delta = d - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (d - mean);
  }
  const double p0 = series[0];
  WalkSpec w;
  w.mu_step = mean;
  w.sigma_step = std::sqrt(std::max(m2 / static_cast<double>(count), 0.0));
  w.p0 = p0;
  w.floor = std::min(kPriceFloor, 0.5 * p0);
  return w;
}

}  // namespace pwstable
