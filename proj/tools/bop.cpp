#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bop/commands.hpp"
#include "bop/config.hpp"
#include "bop/errors.hpp"

namespace {

struct Options {
  std::string config;
  std::string out = "out";
  std::string in;
  std::uint64_t seed = 0;
  int experiment = 0;
  std::vector<std::string> selectors;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config, "JSON run configuration");
  cmd->add_option("--seed", o.seed, "master seed, overrides the config");
  cmd->add_option("--out", o.out, "output directory")->capture_default_str();
}

bop::RunConfig load(const Options& o, const CLI::App& app) {
  bop::ConfigOverrides ov;
  if (app.get_subcommands().front()->count("--seed")) ov.seed = o.seed;
  if (o.experiment != 0) ov.experiment = o.experiment;
  ov.selectors = o.selectors;
  return o.config.empty() ? bop::parse_config("{}", ".", ov) : bop::load_config(o.config, ov);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian portfolio selection: simulations, tests, sampler and backtests"};
  app.set_version_flag("--version", bop::version());
  app.require_subcommand(1);
  Options o;

  auto* simulate = app.add_subcommand("simulate", "run a simulation experiment");
  add_common(simulate, o);
  simulate->add_option("--experiment", o.experiment, "experiment id 1..4, overrides the config");
  auto* test = app.add_subcommand("test", "spike-and-slab test on a price panel");
  add_common(test, o);
  auto* hb = app.add_subcommand("hb-fit", "hierarchical-Bayes chain on a price panel");
  add_common(hb, o);
  auto* backtest = app.add_subcommand("backtest", "monthly rebalancing backtest");
  add_common(backtest, o);
  backtest->add_option("--selector", o.selectors, "oracle|hb|ftest|market, repeatable");
  auto* report = app.add_subcommand("report", "report tables from daily returns");
  add_common(report, o);
  report->add_option("--in", o.in, "daily_returns.csv")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    const bop::RunConfig cfg = load(o, app);
    bop::CommandResult result;
    if (simulate->parsed()) result = bop::cmd_simulate(cfg, o.out);
    else if (test->parsed()) result = bop::cmd_test(cfg, o.out);
    else if (hb->parsed()) result = bop::cmd_hb_fit(cfg, o.out);
    else if (backtest->parsed()) result = bop::cmd_backtest(cfg, o.out);
    else result = bop::cmd_report(cfg, o.in, o.out);
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    for (const auto& p : result.outputs) std::cout << p << '\n';
    return 0;
  } catch (const bop::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return bop::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
