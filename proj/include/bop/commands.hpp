#pragma once

#include <string>
#include <vector>

#include "bop/config.hpp"
#include "bop/prices.hpp"

namespace bop {

// Library version string.
std::string version();

struct CommandResult {
  std::vector<std::string> outputs;  // artifact paths, manifest last
  std::vector<std::string> warnings;
};

// Reads and aligns the configured price, benchmark, factor and risk-free
// files. Throws ConfigError when a required path is missing.
PricePanel load_panel(const DataPaths& paths);

// Each command writes its artifacts into out_dir plus manifest.json, which
// lists the config snapshot, master seed, versions, timestamps, inputs and
// every artifact path.

// <out>/experiment<N>.csv in tidy format.
CommandResult cmd_simulate(const RunConfig& cfg, const std::string& out_dir);
// <out>/oracle_test.csv for the configured window and k.
CommandResult cmd_test(const RunConfig& cfg, const std::string& out_dir);
// <out>/hb_trace.csv and <out>/hb_ranking.csv for the configured window.
CommandResult cmd_hb_fit(const RunConfig& cfg, const std::string& out_dir);
// Report tables, daily_returns.csv and selections.csv for every selector.
CommandResult cmd_backtest(const RunConfig& cfg, const std::string& out_dir);
// Rebuilds the report tables from an existing daily_returns.csv.
CommandResult cmd_report(const RunConfig& cfg, const std::string& daily_returns_path,
                         const std::string& out_dir);

}  // namespace bop
