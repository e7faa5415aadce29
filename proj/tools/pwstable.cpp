#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pwstable/experiment.hpp"

using namespace pwstable;

namespace {

struct Overrides {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> format;
  std::optional<std::size_t> trials;
  std::optional<std::size_t> max_steps;
};

cli::ExperimentConfig resolve(const Overrides& o) {
  cli::ExperimentConfig cfg = cli::load_config(o.config);
  if (o.seed) cfg.sim.master_seed = *o.seed;
  if (o.out) cfg.output.path = *o.out;
  if (o.format) cfg.output.format = cli::parse_format(*o.format);
  if (o.trials) {
    cfg.trials = *o.trials;
    if (cfg.sweep) cfg.sweep->trials = *o.trials;
  }
  if (o.max_steps) cfg.sim.max_steps = *o.max_steps;
  cfg.sim.validate();
  return cfg;
}

void add_flags(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config, "JSON experiment config")->required();
  sub->add_option("--seed", o.seed, "master seed (overrides simulation.seed)");
  sub->add_option("--out", o.out, "output file (overrides output.path)");
  sub->add_option("--format", o.format, "output format: csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  sub->add_option("--trials", o.trials, "Monte Carlo trials per point");
  sub->add_option("--max-steps", o.max_steps, "simulation horizon in steps");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Price-window stablecoin reserve-depletion toolkit"};
  app.require_subcommand(1);
  Overrides o;
  using Command = cli::Report (*)(const cli::ExperimentConfig&);
  Command command = nullptr;

  struct Entry {
    const char* name;
    const char* help;
    Command fn;
  };
  const Entry entries[] = {
      {"analyze", "closed-form depletion analysis for an i.i.d. normal source", &cli::cmd_analyze},
      {"simulate", "run the interaction model (Monte Carlo with --trials)", &cli::cmd_simulate},
      {"theory", "tail spread, L criterion and minimal fee of a price series", &cli::cmd_theory},
      {"sweep", "Monte Carlo sweep over one parameter axis", &cli::cmd_sweep},
      {"ingest-stats", "random-walk step statistics of a price series", &cli::cmd_ingest_stats},
  };
  for (const Entry& e : entries) {
    CLI::App* sub = app.add_subcommand(e.name, e.help);
    add_flags(sub, o);
    sub->callback([&command, fn = e.fn] { command = fn; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const cli::ExperimentConfig cfg = resolve(o);
    const cli::Report report = command(cfg);
    report.print(std::cout);
    if (!cfg.output.path.empty()) {
      cli::write_table_file(report.table, cfg.output.format, cfg.output.path);
      std::cout << "wrote: " << cfg.output.path << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
