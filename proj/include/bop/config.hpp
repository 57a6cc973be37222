#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bop/backtest.hpp"
#include "bop/hb_sampler.hpp"
#include "bop/market_sim.hpp"
#include "bop/oracle_test.hpp"

namespace bop {

struct DataPaths {
  std::string prices;
  std::string benchmark;
  std::vector<std::string> factors;
  std::string risk_free;  // optional
};

struct SimulateSettings {
  int experiment = 1;
  Experiment1Config e1;
  Experiment2Config e2;
  Experiment3Config e3;
  Experiment4Config e4;
};

// Date bounds are inclusive ISO dates; empty means open.
struct TestSettings {
  int k = 1;
  std::string start;
  std::string end;
  double p = 0.05;
  Matrix lambda0;  // empty: default slab
  LossSpec loss;
  Statistic statistic = Statistic::S;
};

struct HBSettings {
  int k = 1;
  std::string start;
  std::string end;
  HBPrior prior;  // empty mu0: defaults for k
  ChainOptions chain;
  int p_tilde = 25;
};

struct BacktestSettings {
  std::vector<SelectorKind> selectors{SelectorKind::Oracle, SelectorKind::HB, SelectorKind::FTest,
                                      SelectorKind::Market};
  SelectorConfig selector;  // shared settings; kind is set per strategy
  std::string start;
  std::string end;
};

struct RunConfig {
  std::uint64_t seed = 1;
  DataPaths data;
  SimulateSettings simulate;
  TestSettings test;
  HBSettings hb;
  BacktestSettings backtest;
  ReportOptions report;
  std::string snapshot;  // canonical JSON of the parsed input
};

// Command-line values that take precedence over the file.
struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> experiment;
  std::vector<std::string> selectors;
};

// JSON text; relative data paths resolve against base_dir. Unknown keys and
// ill-typed or out-of-range values throw ConfigError naming the field.
// Component seeds derive from the master seed: experiments use it directly,
// hb-fit uses derive_seed(seed, "hb_fit") and the backtest
// derive_seed(seed, "backtest").
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".",
                       const ConfigOverrides& overrides = {});
RunConfig load_config(const std::string& path, const ConfigOverrides& overrides = {});

}  // namespace bop
