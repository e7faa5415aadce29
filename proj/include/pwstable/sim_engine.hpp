#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "pwstable/error.hpp"
#include "pwstable/mechanism.hpp"
#include "pwstable/numerics.hpp"
#include "pwstable/price_sources.hpp"
#include "pwstable/round_analytics.hpp"
#include "pwstable/speculator.hpp"
#include "pwstable/stability_theory.hpp"

namespace pwstable {

// Fixed waiting interval from a believed i.i.d. distribution (defaults to the
// source distribution), or an explicit band.
struct AnalyticMode {
  std::optional<NormalSpec> belief;
  std::optional<Band> interval;
};

// Mean +/- c sd over the trailing `window` prices seen before p_t.
struct AdaptiveMode {
  double c = 3.5;
  std::size_t window = 168;
};

// Omniscient all-in/all-out schedule over the realised series.
struct OptimalMode {};

using SpeculatorMode = std::variant<AnalyticMode, AdaptiveMode, OptimalMode>;
using PriceSource = std::variant<NormalSpec, WalkSpec, PriceSeries>;

inline constexpr std::size_t kDefaultMaxSteps = 100'000;

struct SimConfig {
  PriceSource source = NormalSpec::with_default_support(100.0, 100.0);
  SpeculatorParams speculator;
  // nullopt: analytic for NormalSpec sources, adaptive otherwise.
  std::optional<SpeculatorMode> mode;
  double eps_alpha = 0.0;
  double eps_beta = 0.0;
  double reserves0 = 100.0;
  double n0 = 1.0;
  double m0 = 0.0;
  std::size_t max_steps = kDefaultMaxSteps;
  std::uint64_t master_seed = 0;
  bool record_traces = false;

  void validate() const {
    if (max_steps < 1) throw InvalidArgument("SimConfig: max_steps must be >= 1");
    if (!(reserves0 > 0.0) || !std::isfinite(reserves0)) {
      throw InvalidArgument("SimConfig: R0 must be > 0");
    }
    if (!(n0 >= 0.0) || !(m0 >= 0.0)) throw InvalidArgument("SimConfig: n0, m0 must be >= 0");
    speculator.validate();
    MechanismState::make(reserves0, eps_alpha, eps_beta);
    std::visit([](const auto& s) { s.validate(); }, source);
    if (const auto* adaptive = mode ? std::get_if<AdaptiveMode>(&*mode) : nullptr) {
      if (adaptive->window < 2) throw InvalidArgument("SimConfig: adaptive window must be >= 2");
      if (!(adaptive->c >= 0.0)) throw InvalidArgument("SimConfig: adaptive c must be >= 0");
    }
  }

  SpeculatorMode resolved_mode() const {
    if (mode) return *mode;
    if (std::holds_alternative<NormalSpec>(source)) return AnalyticMode{};
    return AdaptiveMode{};
  }
};

struct SimTraces {
  std::vector<double> reserves;  // R_t after the trade at t
  std::vector<double> prices;
  std::vector<double> orders;    // Delta_t in stablecoins
  std::vector<double> backing;   // n_t
  std::vector<double> stable;    // m_t
};

struct SimResult {
  bool depleted = false;
  std::optional<std::size_t> depletion_step;  // 1-based
  double r_min = 0.0;
  double final_reserves = 0.0;
  Portfolio final_portfolio;
  std::size_t steps = 0;
  std::size_t clamp_count = 0;
  std::uint64_t seed = 0;
  std::optional<SimTraces> traces;
};

namespace detail {

inline std::string_view source_name(const PriceSource& s) {
  if (std::holds_alternative<NormalSpec>(s)) return "normal";
  if (std::holds_alternative<WalkSpec>(s)) return "walk";
  return "series";
}

// Everything about a config that does not depend on the seed.
struct PreparedSim {
  SimConfig config;
  SpeculatorMode mode;
  std::optional<Band> band;  // analytic interval
};

inline PreparedSim prepare(const SimConfig& config) {
  config.validate();
  PreparedSim prep{config, config.resolved_mode(), std::nullopt};
  if (const auto* analytic = std::get_if<AnalyticMode>(&prep.mode)) {
    if (analytic->interval) {
      if (!(analytic->interval->y1 <= analytic->interval->y2)) {
        throw InvalidArgument("SimConfig: explicit interval requires y1 <= y2");
      }
      prep.band = analytic->interval;
    } else {
      std::optional<NormalSpec> belief = analytic->belief;
      if (!belief) {
        if (const auto* normal = std::get_if<NormalSpec>(&config.source)) belief = *normal;
      }
      if (!belief) throw InvalidArgument("analytic mode requires a distribution");
      if (belief->is_point_mass()) {
        prep.band = Band{belief->mu, belief->mu};
      } else {
        const WaitingInterval wi = waiting_interval(*belief, config.speculator);
        prep.band = Band{wi.y1, wi.y2};
      }
    }
  }
  return prep;
}

class PriceFeed {
 public:
  PriceFeed(const PriceSource& source, std::uint64_t seed) {
    if (const auto* normal = std::get_if<NormalSpec>(&source)) {
      iid_.emplace(*normal, seed);
    } else if (const auto* walk = std::get_if<WalkSpec>(&source)) {
      walk_.emplace(*walk, seed);
    } else {
      series_ = &std::get<PriceSeries>(source);
    }
  }

  std::optional<double> next() {
    if (iid_) return iid_->next();
    if (walk_) return walk_->next();
    if (index_ >= series_->size()) return std::nullopt;
    return (*series_)[index_++];
  }

  std::size_t clamp_count() const {
    if (walk_) return walk_->clamp_count();
    if (series_) return series_->clamp_count;
    return 0;
  }

 private:
  std::optional<IidNormalStream> iid_;
  std::optional<RandomWalkStream> walk_;
  const PriceSeries* series_ = nullptr;
  std::size_t index_ = 0;
};

inline SimResult run_prepared(const PreparedSim& prep, std::uint64_t seed) {
  const SimConfig& cfg = prep.config;
  PriceFeed feed(cfg.source, seed);
  MechanismState mech = MechanismState::make(cfg.reserves0, cfg.eps_alpha, cfg.eps_beta);
  Portfolio port{cfg.m0, cfg.n0};

  SimResult result;
  result.seed = seed;
  result.r_min = cfg.reserves0;
  if (cfg.record_traces) result.traces.emplace();

  const auto* adaptive = std::get_if<AdaptiveMode>(&prep.mode);
  std::optional<RollingWindow> window;
  if (adaptive) window.emplace(adaptive->window);

  const bool omniscient = std::holds_alternative<OptimalMode>(prep.mode);
  std::vector<ScheduledAction> schedule;
  std::vector<double> realised;
  if (omniscient) {
    while (realised.size() < cfg.max_steps) {
      const auto p = feed.next();
      if (!p) break;
      realised.push_back(*p);
    }
    schedule = optimal_schedule(realised, cfg.eps_alpha, cfg.eps_beta);
  }

  const double buy_cost = 1.0 + cfg.eps_alpha;
  for (std::size_t t = 1; t <= cfg.max_steps; ++t) {
    double p = 0.0;
    if (omniscient) {
      if (t > realised.size()) break;
      p = realised[t - 1];
    } else {
      const auto next = feed.next();
      if (!next) break;
      p = *next;
    }

    double order = 0.0;
    if (prep.band) {
      order = decide(p, port, cfg.speculator, prep.band->y1, prep.band->y2);
    } else if (window) {
      if (const auto band = window->band(adaptive->c)) {
        order = decide(p, port, cfg.speculator, band->y1, band->y2);
      }
      window->push(p);
    } else {
      const ScheduledAction action = schedule[t - 1];
      if (action == ScheduledAction::buy) order = p * port.n;
      if (action == ScheduledAction::sell) order = -port.m;
    }
    // A buy order spends (1 - lambda_buy) n backing coins; the fee reduces
    // the stablecoins received for it.
    if (order > 0.0) order /= buy_cost;

    const TradeOutcome out = apply_trade(mech, order, p, t);
    mech = out.state;
    port.m += order;
    if (order < 0.0 && port.m < 0.0) port.m = 0.0;
    port.n += out.backing_flow;
    if (port.n < 0.0) port.n = 0.0;
    result.r_min = std::min(result.r_min, mech.reserves);
    result.steps = t;

    if (result.traces) {
      result.traces->reserves.push_back(mech.reserves);
      result.traces->prices.push_back(p);
      result.traces->orders.push_back(order);
      result.traces->backing.push_back(port.n);
      result.traces->stable.push_back(port.m);
    }
    if (mech.depleted()) {
      result.depleted = true;
      result.depletion_step = t;
      result.r_min = 0.0;
      break;
    }
  }
  result.final_reserves = mech.reserves;
  result.final_portfolio = port;
  result.clamp_count = feed.clamp_count();
  return result;
}

}  // namespace detail

// One run seeded with config.master_seed.
inline SimResult run(const SimConfig& config) {
  return detail::run_prepared(detail::prepare(config), config.master_seed);
}

struct TrialRecord {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  bool depleted = false;
  std::optional<std::size_t> depletion_step;
  double r_min = 0.0;
  std::size_t steps = 0;
  std::size_t clamp_count = 0;
};

struct MonteCarloSummary {
  std::size_t trials = 0;
  std::size_t depleted_count = 0;
  double fraction_depleted = 0.0;
  // Over depleting trials; NaN when fewer than one (mean) or two (std).
  double mean_depletion_step = std::numeric_limits<double>::quiet_NaN();
  double std_depletion_step = std::numeric_limits<double>::quiet_NaN();
  // Over all trials, counting a trial that never depletes at its step count.
  double restricted_mean_step = 0.0;
  double r_min_mean = 0.0;
  double r_min_min = 0.0;
  double r_min_max = 0.0;
  std::vector<TrialRecord> records;
};

inline std::size_t default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Independent trials with seeds derive_trial_seed(master_seed, i). Results
/// are reduced in trial order, so the summary does not depend on `threads`.
inline MonteCarloSummary monte_carlo(const SimConfig& config, std::size_t trials,
                                     std::size_t threads = 0) {
  if (trials < 1) throw InvalidArgument("monte_carlo: trials must be >= 1");
  SimConfig cfg = config;
  cfg.record_traces = false;
  const detail::PreparedSim prep = detail::prepare(cfg);

  std::vector<TrialRecord> records(trials);
  auto run_trial = [&](std::size_t i) {
    const std::uint64_t seed = numerics::derive_trial_seed(cfg.master_seed, i);
    const SimResult r = detail::run_prepared(prep, seed);
    records[i] = {i, seed, r.depleted, r.depletion_step, r.r_min, r.steps, r.clamp_count};
  };

  if (threads == 0) threads = default_threads();
  threads = std::min(threads, trials);
  if (threads <= 1) {
    for (std::size_t i = 0; i < trials; ++i) run_trial(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < trials; i = next++) {
          try {
            run_trial(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  MonteCarloSummary s;
  s.trials = trials;
  s.r_min_min = std::numeric_limits<double>::infinity();
  s.r_min_max = -std::numeric_limits<double>::infinity();
  double mean = 0.0;
  double m2 = 0.0;
  double r_sum = 0.0;
  double censored_sum = 0.0;
  for (const TrialRecord& rec : records) {
    r_sum += rec.r_min;
    censored_sum += static_cast<double>(rec.depleted ? *rec.depletion_step : rec.steps);
    s.r_min_min = std::min(s.r_min_min, rec.r_min);
    s.r_min_max = std::max(s.r_min_max, rec.r_min);
    if (!rec.depleted) continue;
    ++s.depleted_count;
    const double x = static_cast<double>(*rec.depletion_step);
    const double d = x - mean;
    mean += d / static_cast<double>(s.depleted_count);
    m2 += d * (x - mean);
  }
  s.fraction_depleted = static_cast<double>(s.depleted_count) / static_cast<double>(trials);
  s.r_min_mean = r_sum / static_cast<double>(trials);
  s.restricted_mean_step = censored_sum / static_cast<double>(trials);
  if (s.depleted_count >= 1) s.mean_depletion_step = mean;
  if (s.depleted_count >= 2) {
    s.std_depletion_step = std::sqrt(m2 / static_cast<double>(s.depleted_count - 1));
  }
  s.records = std::move(records);
  return s;
}

enum class SweepAxis { sigma2, delta, lambda, sigma_step, n0, eps };

inline std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::sigma2: return "sigma2";
    case SweepAxis::delta: return "delta";
    case SweepAxis::lambda: return "lambda";
    case SweepAxis::sigma_step: return "sigma_step";
    case SweepAxis::n0: return "n0";
    case SweepAxis::eps: return "eps";
  }
  return "unknown";
}

inline SweepAxis parse_sweep_axis(std::string_view name) {
  for (SweepAxis a : {SweepAxis::sigma2, SweepAxis::delta, SweepAxis::lambda,
                      SweepAxis::sigma_step, SweepAxis::n0, SweepAxis::eps}) {
    if (to_string(a) == name) return a;
  }
  throw InvalidArgument("unknown sweep axis '" + std::string(name) +
                        "' (expected sigma2, delta, lambda, sigma_step, n0 or eps)");
}

// Config with one parameter replaced. sigma2 keeps mu and resets the support
// to mu +/- 6 sigma; lambda and eps set both sides.
inline SimConfig with_axis_value(const SimConfig& base, SweepAxis axis, double value) {
  SimConfig cfg = base;
  switch (axis) {
    case SweepAxis::sigma2: {
      auto* normal = std::get_if<NormalSpec>(&cfg.source);
      if (!normal) throw InvalidArgument("sweep axis sigma2 requires a normal source");
      *normal = NormalSpec::with_default_support(normal->mu, value);
      break;
    }
    case SweepAxis::delta: cfg.speculator.delta = value; break;
    case SweepAxis::lambda:
      cfg.speculator.lambda_buy = value;
      cfg.speculator.lambda_sell = value;
      break;
    case SweepAxis::sigma_step: {
      auto* walk = std::get_if<WalkSpec>(&cfg.source);
      if (!walk) throw InvalidArgument("sweep axis sigma_step requires a walk source");
      walk->sigma_step = value;
      break;
    }
    case SweepAxis::n0: cfg.n0 = value; break;
    case SweepAxis::eps:
      cfg.eps_alpha = value;
      cfg.eps_beta = value;
      break;
  }
  cfg.validate();
  return cfg;
}

struct ClosedFormEstimate {
  WaitingInterval interval;
  RoundMatrix matrix;
  std::optional<EigenSystem> eigen;
  DepletionEstimate depletion;
  std::optional<double> timesteps;
};

/// Closed-form depletion estimate for an i.i.d. normal config: interval,
/// round matrix, eigen-decomposition, rounds and timesteps.
inline ClosedFormEstimate closed_form_estimate(const NormalSpec& dist,
                                               const SpeculatorParams& params, double reserves0,
                                               double n0, double m0 = 0.0) {
  ClosedFormEstimate est;
  est.interval = waiting_interval(dist, params);
  est.matrix = build_round_matrix(dist, est.interval, params);
  const Portfolio x0{m0, n0};
  try {
    est.eigen = eigen(est.matrix, x0);
  } catch (const DomainError&) {
    // R = 0: both lambda powers equal 1 and the speculator is inert.
    est.depletion = {DepletionOutcome::never, std::numeric_limits<double>::quiet_NaN()};
    return est;
  }
  est.depletion = expected_depletion_rounds(*est.eigen, reserves0, n0);
  if (est.depletion.depletes()) {
    est.timesteps = rounds_to_timesteps(est.depletion.rounds, est.matrix.buys, est.matrix.sells);
  }
  return est;
}

struct SweepRow {
  double value = 0.0;
  MonteCarloSummary summary;
  std::optional<double> expected_timesteps;
};

inline std::vector<SweepRow> sweep(const SimConfig& base, SweepAxis axis,
                                   const std::vector<double>& values, std::size_t trials,
                                   std::size_t threads = 0) {
  if (values.empty()) throw InvalidArgument("sweep: values list is empty");
  std::vector<SweepRow> rows;
  rows.reserve(values.size());
  for (double v : values) {
    const SimConfig cfg = with_axis_value(base, axis, v);
    SweepRow row;
    row.value = v;
    row.summary = monte_carlo(cfg, trials, threads);
    const auto* normal = std::get_if<NormalSpec>(&cfg.source);
    const SpeculatorMode mode = cfg.resolved_mode();
    const auto* analytic = std::get_if<AnalyticMode>(&mode);
    if (normal && analytic && !analytic->belief && !analytic->interval &&
        !normal->is_point_mass() && cfg.n0 > 0.0) {
      try {
        row.expected_timesteps =
            closed_form_estimate(*normal, cfg.speculator, cfg.reserves0, cfg.n0, cfg.m0)
                .timesteps;
      } catch (const DomainError&) {
      }
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace pwstable
