#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "json.hpp"
#include "pwstable/error.hpp"
#include "pwstable/price_sources.hpp"
#include "pwstable/round_analytics.hpp"
#include "pwstable/sim_engine.hpp"
#include "pwstable/speculator.hpp"
#include "pwstable/stability_theory.hpp"

namespace pwstable::cli {

class ConfigError : public InvalidArgument {
 public:
  explicit ConfigError(const std::string& what) : InvalidArgument("config error: " + what) {}
};

enum class Format { csv, json };

inline Format parse_format(std::string_view s) {
  if (s == "csv") return Format::csv;
  if (s == "json") return Format::json;
  throw ConfigError("format must be csv or json, got '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Values and tables

using Value = std::variant<std::monostate, double, std::uint64_t, bool, std::string>;

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_value(const Value& v) {
  struct Visitor {
    std::string operator()(std::monostate) const { return ""; }
    std::string operator()(double d) const { return format_double(d); }
    std::string operator()(std::uint64_t u) const { return std::to_string(u); }
    std::string operator()(bool b) const { return b ? "true" : "false"; }
    std::string operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, v);
}

inline Value optional_value(const std::optional<double>& v) {
  if (v && std::isfinite(*v)) return *v;
  return std::monostate{};
}

inline Value finite_or_empty(double v) {
  if (std::isfinite(v)) return v;
  return std::monostate{};
}

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Value>> rows;

  void add(std::vector<Value> row) {
    if (row.size() != columns.size()) throw Error("Table: row width does not match header");
    rows.push_back(std::move(row));
  }
};

namespace detail {
inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline nlohmann::ordered_json to_json(const Value& v) {
  struct Visitor {
    nlohmann::ordered_json operator()(std::monostate) const { return nullptr; }
    nlohmann::ordered_json operator()(double d) const {
      if (!std::isfinite(d)) return nullptr;
      return d;
    }
    nlohmann::ordered_json operator()(std::uint64_t u) const { return u; }
    nlohmann::ordered_json operator()(bool b) const { return b; }
    nlohmann::ordered_json operator()(const std::string& s) const { return s; }
  };
  return std::visit(Visitor{}, v);
}
}  // namespace detail

inline void write_csv(const Table& table, std::ostream& out) {
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    out << (c ? "," : "") << detail::csv_escape(table.columns[c]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      out << (c ? "," : "") << detail::csv_escape(format_value(row[c]));
    }
    out << '\n';
  }
}

// JSON array with one object per row; missing and non-finite values are null.
inline void write_json(const Table& table, std::ostream& out) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& row : table.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t c = 0; c < row.size(); ++c) obj[table.columns[c]] = detail::to_json(row[c]);
    arr.push_back(std::move(obj));
  }
  out << arr.dump(2) << '\n';
}

inline void write_table(const Table& table, Format format, std::ostream& out) {
  if (format == Format::csv) {
    write_csv(table, out);
  } else {
    write_json(table, out);
  }
}

inline void write_table_file(const Table& table, Format format, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file '" + path + "'");
  write_table(table, format, out);
  if (!out) throw Error("failed writing output file '" + path + "'");
}

// ---------------------------------------------------------------------------
// Configuration

struct TheorySettings {
  double tail_fraction = 0.5;
  double boundary_tolerance = kBoundaryTolerance;
};

struct SweepSettings {
  std::string axis;
  std::vector<double> values;
  std::size_t trials = 100;
};

struct OutputSettings {
  std::string path;
  Format format = Format::csv;
  std::string traces_path;
};

struct ExperimentConfig {
  SimConfig sim;
  std::string source_type = "normal";
  std::size_t trials = 1;
  std::size_t threads = 0;
  std::vector<double> n0_grid;
  TheorySettings theory;
  std::optional<SweepSettings> sweep;
  OutputSettings output;
};

namespace detail {

using json = nlohmann::json;

inline void reject_unknown(const json& obj, std::string_view section,
                           std::initializer_list<std::string_view> allowed) {
  if (!obj.is_object()) throw ConfigError("section '" + std::string(section) + "' must be an object");
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) {
      throw ConfigError("unknown key '" + (section.empty() ? "" : std::string(section) + ".") +
                        key + "'");
    }
  }
}

inline std::string key_path(std::string_view section, std::string_view key) {
  return std::string(section) + "." + std::string(key);
}

inline double get_number(const json& obj, std::string_view section, std::string_view key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError("missing key '" + key_path(section, key) + "'");
  if (!it->is_number()) throw ConfigError("key '" + key_path(section, key) + "' must be a number");
  return it->get<double>();
}

inline double get_number(const json& obj, std::string_view section, std::string_view key,
                         double fallback) {
  return obj.contains(key) ? get_number(obj, section, key) : fallback;
}

inline std::uint64_t get_count(const json& obj, std::string_view section, std::string_view key,
                               std::uint64_t fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  const bool ok = it->is_number_unsigned() ||
                  (it->is_number_integer() && it->get<std::int64_t>() >= 0);
  if (!ok) {
    throw ConfigError("key '" + key_path(section, key) + "' must be a nonnegative integer");
  }
  return it->get<std::uint64_t>();
}

inline std::string get_string(const json& obj, std::string_view section, std::string_view key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError("missing key '" + key_path(section, key) + "'");
  if (!it->is_string()) throw ConfigError("key '" + key_path(section, key) + "' must be a string");
  return it->get<std::string>();
}

inline std::string get_string(const json& obj, std::string_view section, std::string_view key,
                              const std::string& fallback) {
  return obj.contains(key) ? get_string(obj, section, key) : fallback;
}

inline bool get_bool(const json& obj, std::string_view section, std::string_view key,
                     bool fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) throw ConfigError("key '" + key_path(section, key) + "' must be a boolean");
  return it->get<bool>();
}

inline std::vector<double> get_number_list(const json& obj, std::string_view section,
                                           std::string_view key) {
  const auto it = obj.find(key);
  if (it == obj.end()) return {};
  if (!it->is_array()) throw ConfigError("key '" + key_path(section, key) + "' must be a list");
  std::vector<double> out;
  for (const auto& v : *it) {
    if (!v.is_number()) {
      throw ConfigError("key '" + key_path(section, key) + "' must contain only numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

// 1/p alternates 1 - 1/k and 2 + 1/k for k = 2 .. terms + 1.
inline PriceSeries harmonic_series(std::size_t terms) {
  if (terms < 1) throw ConfigError("key 'source.terms' must be >= 1");
  std::vector<double> prices;
  prices.reserve(2 * terms);
  for (std::size_t k = 2; k < terms + 2; ++k) {
    const double inv_k = 1.0 / static_cast<double>(k);
    prices.push_back(1.0 / (1.0 - inv_k));
    prices.push_back(1.0 / (2.0 + inv_k));
  }
  return PriceSeries::make(std::move(prices), SourceTag::literal);
}

inline PriceSource parse_source(const json& src, std::string& type_out,
                                const std::string& base_dir) {
  constexpr std::string_view sec = "source";
  const std::string type = get_string(src, sec, "type");
  type_out = type;
  if (type == "normal") {
    reject_unknown(src, sec, {"type", "mu", "sigma2", "support_lo", "support_hi"});
    const double mu = get_number(src, sec, "mu");
    const double sigma2 = get_number(src, sec, "sigma2");
    NormalSpec spec = NormalSpec::with_default_support(mu, sigma2);
    if (src.contains("support_lo") || src.contains("support_hi")) {
      spec = NormalSpec::make(mu, sigma2, get_number(src, sec, "support_lo", spec.support_lo),
                              get_number(src, sec, "support_hi", spec.support_hi));
    }
    return spec;
  }
  if (type == "walk") {
    reject_unknown(src, sec, {"type", "mu_step", "sigma_step", "p0", "floor"});
    return WalkSpec::make(get_number(src, sec, "mu_step"), get_number(src, sec, "sigma_step"),
                          get_number(src, sec, "p0"), get_number(src, sec, "floor", kPriceFloor));
  }
  if (type == "csv") {
    reject_unknown(src, sec, {"type", "path", "timestamp_column", "price_column"});
    std::filesystem::path path = get_string(src, sec, "path");
    if (path.is_relative() && !base_dir.empty()) path = std::filesystem::path(base_dir) / path;
    return load_csv(path.string(),
                    get_string(src, sec, "timestamp_column", "timestamp"),
                    get_string(src, sec, "price_column", "close"));
  }
  if (type == "literal") {
    reject_unknown(src, sec, {"type", "prices"});
    if (!src.contains("prices")) throw ConfigError("missing key 'source.prices'");
    auto prices = get_number_list(src, sec, "prices");
    if (prices.empty()) throw ConfigError("key 'source.prices' must not be empty");
    return PriceSeries::make(std::move(prices), SourceTag::literal);
  }
  if (type == "harmonic") {
    reject_unknown(src, sec, {"type", "terms"});
    return harmonic_series(get_count(src, sec, "terms", 1000));
  }
  throw ConfigError("key 'source.type' must be one of normal, walk, csv, literal, harmonic; got '" +
                    type + "'");
}

}  // namespace detail

/// Parse a JSON experiment config. Sections: source (required), speculator,
/// mechanism, simulation, theory, sweep, output. Unknown keys are errors.
/// Relative csv paths resolve against `base_dir` when it is given.
inline ExperimentConfig parse_config(const nlohmann::json& root, const std::string& base_dir = "") {
  using detail::get_bool;
  using detail::get_count;
  using detail::get_number;
  using detail::get_number_list;
  using detail::get_string;
  detail::reject_unknown(root, "",
                         {"source", "speculator", "mechanism", "simulation", "theory", "sweep",
                          "output"});
  ExperimentConfig cfg;
  if (!root.contains("source")) throw ConfigError("missing section 'source'");
  cfg.sim.source = detail::parse_source(root.at("source"), cfg.source_type, base_dir);

  const nlohmann::json empty = nlohmann::json::object();
  auto section = [&](const char* name) -> const nlohmann::json& {
    return root.contains(name) ? root.at(name) : empty;
  };

  {
    const auto& s = section("speculator");
    detail::reject_unknown(s, "speculator",
                           {"delta", "lambda_buy", "lambda_sell", "mode", "c", "window",
                            "belief_mu", "belief_sigma2", "y1", "y2"});
    cfg.sim.speculator = SpeculatorParams::make(get_number(s, "speculator", "delta", 0.1),
                                                get_number(s, "speculator", "lambda_buy", 0.0),
                                                get_number(s, "speculator", "lambda_sell", 0.0));
    const std::string mode = get_string(s, "speculator", "mode", "auto");
    if (mode == "analytic") {
      AnalyticMode m;
      if (s.contains("belief_mu") || s.contains("belief_sigma2")) {
        m.belief = NormalSpec::with_default_support(get_number(s, "speculator", "belief_mu"),
                                                    get_number(s, "speculator", "belief_sigma2"));
      }
      if (s.contains("y1") || s.contains("y2")) {
        m.interval = Band{get_number(s, "speculator", "y1"), get_number(s, "speculator", "y2")};
      }
      cfg.sim.mode = m;
    } else if (mode == "adaptive") {
      AdaptiveMode m;
      m.c = get_number(s, "speculator", "c", m.c);
      m.window = get_count(s, "speculator", "window", m.window);
      cfg.sim.mode = m;
    } else if (mode == "optimal") {
      cfg.sim.mode = OptimalMode{};
    } else if (mode != "auto") {
      throw ConfigError("key 'speculator.mode' must be auto, analytic, adaptive or optimal");
    }
    if (mode != "analytic") {
      for (const char* k : {"belief_mu", "belief_sigma2", "y1", "y2"}) {
        if (s.contains(k)) {
          throw ConfigError("key 'speculator." + std::string(k) + "' requires mode analytic");
        }
      }
    }
    if (mode != "adaptive" && mode != "auto") {
      for (const char* k : {"c", "window"}) {
        if (s.contains(k)) {
          throw ConfigError("key 'speculator." + std::string(k) + "' requires mode adaptive");
        }
      }
    }
    if (mode == "auto" && (s.contains("c") || s.contains("window"))) {
      AdaptiveMode m;
      m.c = get_number(s, "speculator", "c", m.c);
      m.window = get_count(s, "speculator", "window", m.window);
      cfg.sim.mode = m;
    }
  }
  {
    const auto& s = section("mechanism");
    detail::reject_unknown(s, "mechanism", {"eps_alpha", "eps_beta", "R0"});
    cfg.sim.eps_alpha = get_number(s, "mechanism", "eps_alpha", 0.0);
    cfg.sim.eps_beta = get_number(s, "mechanism", "eps_beta", 0.0);
    cfg.sim.reserves0 = get_number(s, "mechanism", "R0", 100.0);
  }
  {
    const auto& s = section("simulation");
    detail::reject_unknown(s, "simulation",
                           {"n0", "m0", "max_steps", "seed", "trials", "threads", "n0_grid"});
    cfg.sim.n0 = get_number(s, "simulation", "n0", 1.0);
    cfg.sim.m0 = get_number(s, "simulation", "m0", 0.0);
    cfg.sim.max_steps = get_count(s, "simulation", "max_steps", kDefaultMaxSteps);
    cfg.sim.master_seed = get_count(s, "simulation", "seed", 0);
    cfg.trials = get_count(s, "simulation", "trials", 1);
    cfg.threads = get_count(s, "simulation", "threads", 0);
    cfg.n0_grid = get_number_list(s, "simulation", "n0_grid");
  }
  {
    const auto& s = section("theory");
    detail::reject_unknown(s, "theory", {"tail_fraction", "boundary_tolerance"});
    cfg.theory.tail_fraction = get_number(s, "theory", "tail_fraction", 0.5);
    cfg.theory.boundary_tolerance =
        get_number(s, "theory", "boundary_tolerance", kBoundaryTolerance);
  }
  if (root.contains("sweep")) {
    const auto& s = root.at("sweep");
    detail::reject_unknown(s, "sweep", {"axis", "values", "trials"});
    SweepSettings sw;
    sw.axis = get_string(s, "sweep", "axis");
    parse_sweep_axis(sw.axis);
    if (!s.contains("values")) throw ConfigError("missing key 'sweep.values'");
    sw.values = get_number_list(s, "sweep", "values");
    sw.trials = get_count(s, "sweep", "trials", sw.trials);
    cfg.sweep = std::move(sw);
  }
  {
    const auto& s = section("output");
    detail::reject_unknown(s, "output", {"path", "format", "traces_path"});
    cfg.output.path = get_string(s, "output", "path", "");
    cfg.output.format = parse_format(get_string(s, "output", "format", "csv"));
    cfg.output.traces_path = get_string(s, "output", "traces_path", "");
  }
  cfg.sim.validate();
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
  return parse_config(root, std::filesystem::path(path).parent_path().string());
}

// ---------------------------------------------------------------------------
// Commands

// Console lines ("key: value") plus the machine-readable table.
struct Report {
  std::vector<std::pair<std::string, Value>> summary;
  Table table;

  void print(std::ostream& out) const {
    for (const auto& [key, value] : summary) out << key << ": " << format_value(value) << '\n';
  }
};

namespace detail {
inline Table summary_table(const std::vector<std::pair<std::string, Value>>& summary) {
  Table t;
  std::vector<Value> row;
  for (const auto& [key, value] : summary) {
    t.columns.push_back(key);
    row.push_back(value);
  }
  t.add(std::move(row));
  return t;
}

inline std::string_view outcome_name(DepletionOutcome o) {
  switch (o) {
    case DepletionOutcome::depletes: return "depletes";
    case DepletionOutcome::never: return "never depletes";
    case DepletionOutcome::beyond_horizon: return "beyond horizon";
  }
  return "unknown";
}

// Price series behind a config: series sources as-is, generated sources
// sampled for max_steps steps from the master seed.
inline PriceSeries materialize_series(const ExperimentConfig& cfg) {
  const auto& src = cfg.sim.source;
  if (const auto* s = std::get_if<PriceSeries>(&src)) return *s;
  if (const auto* n = std::get_if<NormalSpec>(&src)) {
    return sample_iid(*n, cfg.sim.max_steps, cfg.sim.master_seed);
  }
  return random_walk(std::get<WalkSpec>(src), cfg.sim.max_steps, cfg.sim.master_seed);
}
}  // namespace detail

/// Closed-form pipeline for an i.i.d. normal source.
inline Report cmd_analyze(const ExperimentConfig& cfg) {
  const auto* dist = std::get_if<NormalSpec>(&cfg.sim.source);
  if (!dist) throw ConfigError("analytic mode requires a distribution");
  const SimConfig& sim = cfg.sim;
  Report rep;
  auto& s = rep.summary;
  s.emplace_back("mu", dist->mu);
  s.emplace_back("sigma2", dist->sigma2);
  s.emplace_back("delta", sim.speculator.delta);
  s.emplace_back("lambda_buy", sim.speculator.lambda_buy);
  s.emplace_back("lambda_sell", sim.speculator.lambda_sell);
  s.emplace_back("R0", sim.reserves0);
  s.emplace_back("n0", sim.n0);

  const std::vector<std::string> keys = {"s1", "x1", "y1", "x2", "y2", "i", "j", "A", "B",
                                         "C", "D", "Y", "Y_closed_form", "a1", "a2",
                                         "divergent", "expected_rounds",
                                         "expected_timesteps"};
  auto empty_rest = [&](const std::string& outcome) {
    for (const auto& k : keys) {
      bool present = false;
      for (const auto& [key, _] : s) present = present || key == k;
      if (!present) s.emplace_back(k, std::monostate{});
    }
    s.emplace_back("outcome", outcome);
  };

  if (dist->is_point_mass()) {
    s.emplace_back("s1", stablecoin_value_s1(*dist, sim.speculator.delta));
    s.emplace_back("y1", dist->mu);
    s.emplace_back("y2", dist->mu);
    s.emplace_back("Y", 1.0);
    s.emplace_back("divergent", false);
    empty_rest(std::string(detail::outcome_name(DepletionOutcome::never)));
    rep.table = detail::summary_table(s);
    return rep;
  }

  const WaitingInterval wi = waiting_interval(*dist, sim.speculator);
  s.emplace_back("s1", wi.s1);
  s.emplace_back("x1", wi.x1);
  s.emplace_back("y1", wi.y1);
  s.emplace_back("x2", wi.x2);
  s.emplace_back("y2", wi.y2);
  RoundMatrix mat;
  try {
    mat = build_round_matrix(*dist, wi, sim.speculator);
  } catch (const DomainError&) {
    empty_rest(std::string(detail::outcome_name(DepletionOutcome::never)));
    rep.table = detail::summary_table(s);
    return rep;
  }
  s.emplace_back("i", mat.buys);
  s.emplace_back("j", mat.sells);
  s.emplace_back("A", mat.a);
  s.emplace_back("B", mat.b);
  s.emplace_back("C", mat.c);
  s.emplace_back("D", mat.d);
  s.emplace_back("Y", mat.y_ratio);
  try {
    s.emplace_back("Y_closed_form", y_normal_closed_form(*dist, wi.y1, wi.y2));
  } catch (const DomainError&) {
    s.emplace_back("Y_closed_form", std::monostate{});
  }
  const Portfolio x0{sim.m0, sim.n0};
  std::optional<EigenSystem> sys;
  try {
    sys = eigen(mat, x0);
  } catch (const DomainError&) {
  }
  if (!sys) {
    s.emplace_back("divergent", false);
    empty_rest(std::string(detail::outcome_name(DepletionOutcome::never)));
    rep.table = detail::summary_table(s);
    return rep;
  }
  s.emplace_back("a1", sys->a1);
  s.emplace_back("a2", sys->a2);
  s.emplace_back("divergent", divergence_check(mat, x0));
  const DepletionEstimate dep = expected_depletion_rounds(*sys, sim.reserves0, sim.n0);
  s.emplace_back("expected_rounds", optional_value(dep.rounds));
  if (dep.depletes()) {
    s.emplace_back("expected_timesteps", rounds_to_timesteps(dep.rounds, mat.buys, mat.sells));
  } else {
    s.emplace_back("expected_timesteps", std::monostate{});
  }
  s.emplace_back("outcome", std::string(detail::outcome_name(dep.outcome)));
  rep.table = detail::summary_table(s);
  return rep;
}

inline const std::vector<std::string>& trial_columns() {
  static const std::vector<std::string> cols = {
      "n0", "trial", "seed", "depleted", "depletion_step", "R_min", "steps", "clamp_count"};
  return cols;
}

/// Monte Carlo (or a single run) per n0 in the grid; one record per trial.
inline Report cmd_simulate(const ExperimentConfig& cfg) {
  if (cfg.trials < 1) throw ConfigError("key 'simulation.trials' must be >= 1");
  std::vector<double> grid = cfg.n0_grid;
  if (grid.empty()) grid.push_back(cfg.sim.n0);
  Report rep;
  rep.table.columns = trial_columns();
  rep.summary.emplace_back("source", cfg.source_type);
  rep.summary.emplace_back("trials", static_cast<std::uint64_t>(cfg.trials));
  rep.summary.emplace_back("R0", cfg.sim.reserves0);
  for (double n0 : grid) {
    SimConfig sim = cfg.sim;
    sim.n0 = n0;
    const std::string tag = "[n0=" + format_double(n0) + "] ";
    if (cfg.trials == 1) {
      sim.master_seed = numerics::derive_trial_seed(cfg.sim.master_seed, 0);
      sim.record_traces = !cfg.output.traces_path.empty();
      const SimResult r = run(sim);
      rep.table.add({n0, std::uint64_t{0}, r.seed, r.depleted,
                     r.depletion_step ? Value{static_cast<std::uint64_t>(*r.depletion_step)}
                                      : Value{},
                     r.r_min, static_cast<std::uint64_t>(r.steps),
                     static_cast<std::uint64_t>(r.clamp_count)});
      rep.summary.emplace_back(tag + "depleted", r.depleted);
      rep.summary.emplace_back(tag + "depletion_step",
                               r.depletion_step
                                   ? Value{static_cast<std::uint64_t>(*r.depletion_step)}
                                   : Value{});
      rep.summary.emplace_back(tag + "R_min", r.r_min);
      rep.summary.emplace_back(tag + "steps", static_cast<std::uint64_t>(r.steps));
      if (r.traces && !cfg.output.traces_path.empty()) {
        Table tr;
        tr.columns = {"n0", "step", "price", "order", "reserves", "backing", "stablecoins"};
        for (std::size_t t = 0; t < r.traces->prices.size(); ++t) {
          tr.add({n0, static_cast<std::uint64_t>(t + 1), r.traces->prices[t],
                  r.traces->orders[t], r.traces->reserves[t], r.traces->backing[t],
                  r.traces->stable[t]});
        }
        const std::string path =
            grid.size() == 1 ? cfg.output.traces_path
                             : cfg.output.traces_path + ".n0=" + format_double(n0);
        write_table_file(tr, cfg.output.format, path);
      }
      continue;
    }
    const MonteCarloSummary mc = monte_carlo(sim, cfg.trials, cfg.threads);
    for (const TrialRecord& rec : mc.records) {
      rep.table.add({n0, static_cast<std::uint64_t>(rec.index), rec.seed, rec.depleted,
                     rec.depletion_step ? Value{static_cast<std::uint64_t>(*rec.depletion_step)}
                                        : Value{},
                     rec.r_min, static_cast<std::uint64_t>(rec.steps),
                     static_cast<std::uint64_t>(rec.clamp_count)});
    }
    rep.summary.emplace_back(tag + "fraction_depleted", mc.fraction_depleted);
    rep.summary.emplace_back(tag + "mean_depletion_step", finite_or_empty(mc.mean_depletion_step));
    rep.summary.emplace_back(tag + "std_depletion_step", finite_or_empty(mc.std_depletion_step));
    rep.summary.emplace_back(tag + "restricted_mean_step", mc.restricted_mean_step);
    rep.summary.emplace_back(tag + "mean_R_min", mc.r_min_mean);
    rep.summary.emplace_back(tag + "min_R_min", mc.r_min_min);
  }
  return rep;
}

/// Tail spread, L criterion, minimal fee and classification.
inline Report cmd_theory(const ExperimentConfig& cfg) {
  const PriceSeries series = detail::materialize_series(cfg);
  if (series.size() == 0) throw ConfigError("theory requires a nonempty price series");
  const TailSpread spread = tail_spread(series, cfg.theory.tail_fraction);
  const LCriterion L =
      L_criterion(cfg.sim.eps_alpha, cfg.sim.eps_beta, spread, cfg.theory.boundary_tolerance);
  Report rep;
  auto& s = rep.summary;
  s.emplace_back("samples", static_cast<std::uint64_t>(series.size()));
  s.emplace_back("tail_fraction", spread.tail_fraction);
  s.emplace_back("tail_samples", static_cast<std::uint64_t>(spread.tail_samples));
  s.emplace_back("estimator", std::string(kTailSpreadEstimator));
  s.emplace_back("inv_liminf_est", spread.inv_liminf_est);
  s.emplace_back("inv_limsup_est", spread.inv_limsup_est);
  s.emplace_back("price_min", spread.price_min);
  s.emplace_back("price_max", spread.price_max);
  s.emplace_back("eps_alpha", cfg.sim.eps_alpha);
  s.emplace_back("eps_beta", cfg.sim.eps_beta);
  s.emplace_back("L", L.value);
  s.emplace_back("classification", std::string(to_string(L.classification)));
  s.emplace_back("min_fee", min_fee(spread));
  rep.table = detail::summary_table(s);
  return rep;
}

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols = {
      "axis", "value", "trials", "fraction_depleted", "mean_depletion_step",
      "std_depletion_step", "log10_mean_depletion_step", "restricted_mean_step", "mean_R_min",
      "expected_timesteps"};
  return cols;
}

/// One Monte Carlo aggregate per axis value, long format.
inline Report cmd_sweep(const ExperimentConfig& cfg) {
  if (!cfg.sweep) throw ConfigError("missing section 'sweep'");
  if (cfg.sweep->values.empty()) throw ConfigError("key 'sweep.values' must not be empty");
  const SweepAxis axis = parse_sweep_axis(cfg.sweep->axis);
  const auto rows = sweep(cfg.sim, axis, cfg.sweep->values, cfg.sweep->trials, cfg.threads);
  Report rep;
  rep.table.columns = sweep_columns();
  rep.summary.emplace_back("axis", cfg.sweep->axis);
  rep.summary.emplace_back("trials", static_cast<std::uint64_t>(cfg.sweep->trials));
  for (const SweepRow& row : rows) {
    const double mean = row.summary.mean_depletion_step;
    const Value log_mean = std::isfinite(mean) && mean > 0.0 ? Value{std::log10(mean)} : Value{};
    rep.table.add({cfg.sweep->axis, row.value, static_cast<std::uint64_t>(row.summary.trials),
                   row.summary.fraction_depleted, finite_or_empty(mean),
                   finite_or_empty(row.summary.std_depletion_step), log_mean,
                   row.summary.restricted_mean_step, row.summary.r_min_mean, optional_value(row.expected_timesteps)});
    const std::string tag = "[" + cfg.sweep->axis + "=" + format_double(row.value) + "] ";
    rep.summary.emplace_back(tag + "fraction_depleted", row.summary.fraction_depleted);
    rep.summary.emplace_back(tag + "mean_depletion_step", finite_or_empty(mean));
    rep.summary.emplace_back(tag + "std_depletion_step",
                             finite_or_empty(row.summary.std_depletion_step));
    rep.summary.emplace_back(tag + "restricted_mean_step", row.summary.restricted_mean_step);
  }
  return rep;
}

/// Random-walk step statistics of a series (for parameterising walks).
inline Report cmd_ingest_stats(const ExperimentConfig& cfg) {
  const auto* series = std::get_if<PriceSeries>(&cfg.sim.source);
  if (!series) throw ConfigError("ingest-stats requires a csv or literal source");
  const WalkSpec w = step_stats(*series);
  const auto [lo, hi] = std::minmax_element(series->prices.begin(), series->prices.end());
  Report rep;
  auto& s = rep.summary;
  s.emplace_back("samples", static_cast<std::uint64_t>(series->size()));
  s.emplace_back("p0", w.p0);
  s.emplace_back("p_last", series->prices.back());
  s.emplace_back("price_min", *lo);
  s.emplace_back("price_max", *hi);
  s.emplace_back("mu_step", w.mu_step);
  s.emplace_back("sigma_step", w.sigma_step);
  rep.table = detail::summary_table(s);
  return rep;
}

}  // namespace pwstable::cli
