#include "bop/commands.hpp"

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <gsl/gsl_version.h>
#include <json.hpp>

#include "bop/backtest.hpp"
#include "bop/errors.hpp"
#include "bop/format.hpp"
#include "bop/hb_sampler.hpp"
#include "bop/market_sim.hpp"
#include "bop/oracle_test.hpp"

#ifndef BOP_VERSION
#define BOP_VERSION "0.0.0"
#endif

namespace bop {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Collects artifacts for one command and writes the manifest last.
class Run {
 public:
  Run(std::string command, const RunConfig& cfg, std::string out_dir)
      : command_(std::move(command)), cfg_(cfg), out_(std::move(out_dir)), started_(utc_now()) {
    fs::create_directories(out_);
  }

  std::string path(const std::string& name) const { return (fs::path(out_) / name).string(); }

  std::ofstream open(const std::string& name) {
    const std::string p = path(name);
    std::ofstream os(p);
    if (!os) throw DataError("cannot write " + p);
    result_.outputs.push_back(p);
    return os;
  }

  void add_output(const std::string& p) { result_.outputs.push_back(p); }
  void add_input(const std::string& p) {
    if (!p.empty()) inputs_.push_back(p);
  }
  void warn(const std::string& w) { result_.warnings.push_back(w); }
  void note(const std::string& key, json value) { effective_[key] = std::move(value); }

  CommandResult finish() {
    json m;
    m["tool"] = "bop";
    m["command"] = command_;
    m["version"] = version();
    m["seed"] = cfg_.seed;
    m["config"] = json::parse(cfg_.snapshot);
    m["effective"] = effective_;
    m["module_versions"] = {
        {"bop", version()},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", BOOST_LIB_VERSION},
        {"gsl", GSL_VERSION}};
    m["started_utc"] = started_;
    m["finished_utc"] = utc_now();
    m["inputs"] = inputs_;
    m["outputs"] = result_.outputs;
    m["warnings"] = result_.warnings;
    const std::string p = path("manifest.json");
    std::ofstream os(p);
    if (!os) throw DataError("cannot write " + p);
    os << m.dump(2) << '\n';
    result_.outputs.push_back(p);
    return result_;
  }

 private:
  std::string command_;
  const RunConfig& cfg_;
  std::string out_;
  std::string started_;
  std::vector<std::string> inputs_;
  json effective_ = json::object();
  CommandResult result_;
};

void add_data_inputs(Run& run, const DataPaths& d) {
  run.add_input(d.prices);
  run.add_input(d.benchmark);
  for (const auto& f : d.factors) run.add_input(f);
  run.add_input(d.risk_free);
}

WindowData load_window(const PricePanel& panel, int k, const std::string& start, const std::string& end) {
  const auto [begin, stop] = date_rows(panel, start, end);
  return window_data(panel, begin, stop, k - 1);
}

}  // namespace

std::string version() { return BOP_VERSION; }

PricePanel load_panel(const DataPaths& paths) {
  if (paths.prices.empty()) throw ConfigError("config: data.prices: required for this command");
  if (paths.benchmark.empty()) throw ConfigError("config: data.benchmark: required for this command");
  std::vector<std::vector<LevelRow>> factors;
  for (const auto& f : paths.factors) factors.push_back(read_level_file(f));
  const auto rf = paths.risk_free.empty() ? std::vector<LevelRow>{} : read_rate_file(paths.risk_free);
  return assemble_panel(read_price_file(paths.prices), read_level_file(paths.benchmark), factors, rf);
}

CommandResult cmd_simulate(const RunConfig& cfg, const std::string& out_dir) {
  const int id = cfg.simulate.experiment;
  ExperimentResult result;
  switch (id) {
    case 1: result = run_experiment1(cfg.simulate.e1); break;
    case 2: result = run_experiment2(cfg.simulate.e2); break;
    case 3: result = run_experiment3(cfg.simulate.e3); break;
    case 4: result = run_experiment4(cfg.simulate.e4); break;
    default: throw ConfigError("config: simulate.experiment: expected 1, 2, 3 or 4");
  }
  Run run("simulate", cfg, out_dir);
  run.note("experiment", id);
  auto os = run.open("experiment" + std::to_string(id) + ".csv");
  write_tidy(os, result);
  return run.finish();
}

CommandResult cmd_test(const RunConfig& cfg, const std::string& out_dir) {
  const PricePanel panel = load_panel(cfg.data);
  const auto& t = cfg.test;
  const WindowData w = load_window(panel, t.k, t.start, t.end);
  if (w.returns.size() == 0) throw InsufficientData("test: no asset has complete data in the window");
  const SpikeSlabPrior prior{t.p, t.lambda0.size() ? t.lambda0 : default_lambda0(t.k), w.design.mu0()};
  OracleTestOptions opts;
  opts.statistic = t.statistic;
  const auto results = run_oracle_test(prior, t.loss, w.design, w.returns, opts);

  Run run("test", cfg, out_dir);
  add_data_inputs(run, cfg.data);
  run.note("window", {w.returns.dates.front(), w.returns.dates.back()});
  run.note("days", w.returns.days());
  run.note("assets", w.returns.size());
  long rejections = 0;
  for (const auto& r : results) rejections += r.reject;
  run.note("rejections", rejections);
  auto os = run.open("oracle_test.csv");
  write_oracle_report(os, results);
  return run.finish();
}

CommandResult cmd_hb_fit(const RunConfig& cfg, const std::string& out_dir) {
  const PricePanel panel = load_panel(cfg.data);
  const auto& h = cfg.hb;
  const WindowData w = load_window(panel, h.k, h.start, h.end);
  if (w.returns.size() < h.p_tilde) {
    throw InsufficientAssets("hb-fit: " + std::to_string(w.returns.size()) +
                             " assets with complete data, need p_tilde = " + std::to_string(h.p_tilde));
  }
  const HBPrior prior = h.prior.mu0.size() ? h.prior : HBPrior::defaults(h.k);
  const auto fit = run_chain_standardized(w.returns, w.market, w.factors, prior, h.chain);
  const auto ranked = hb_select(fit.draws, h.p_tilde);

  Run run("hb-fit", cfg, out_dir);
  add_data_inputs(run, cfg.data);
  run.note("window", {w.returns.dates.front(), w.returns.dates.back()});
  run.note("data_scale", fit.scale);
  run.note("accept_rate", fit.draws.accept_rate);
  run.note("proposal_scale", fit.draws.proposal_scale);
  {
    auto os = run.open("hb_trace.csv");
    write_trace(os, fit.draws);
  }
  auto os = run.open("hb_ranking.csv");
  os << "rank,asset,prob_positive,mean_alpha\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    os << i + 1 << ',' << w.returns.assets[static_cast<std::size_t>(ranked[i].index)] << ','
       << format_number(ranked[i].prob_positive) << ',' << format_number(ranked[i].mean_alpha) << '\n';
  }
  os.close();
  return run.finish();
}

CommandResult cmd_backtest(const RunConfig& cfg, const std::string& out_dir) {
  const PricePanel panel = load_panel(cfg.data);
  const auto& b = cfg.backtest;
  if (b.selectors.empty()) throw ConfigError("config: backtest.selectors: at least one selector required");
  const int extras = b.selector.factors < 0 ? static_cast<int>(panel.factor_series.size()) : b.selector.factors;
  const auto full = monthly_schedule(panel.dates, extras + 3);
  RebalanceSchedule schedule;
  for (const auto& pair : full.pairs) {
    const std::string first = panel.dates[pair.hold.begin];
    const std::string last = panel.dates[pair.hold.end - 1];
    if (!b.start.empty() && last < b.start) continue;
    if (!b.end.empty() && first > b.end) continue;
    schedule.pairs.push_back(pair);
  }
  if (schedule.pairs.empty()) {
    throw InsufficientData("backtest: need at least two calendar months with a usable fit month");
  }

  std::vector<BacktestResult> results;
  for (SelectorKind kind : b.selectors) {
    SelectorConfig sc = b.selector;
    sc.kind = kind;
    results.push_back(monthly_rebalance(panel, sc, schedule));
  }
  const PerfReport report = build_report(combine(results), cfg.report);

  Run run("backtest", cfg, out_dir);
  add_data_inputs(run, cfg.data);
  std::vector<std::string> names;
  for (auto k : b.selectors) names.push_back(selector_name(k));
  run.note("selectors", names);
  run.note("hold_months", schedule.pairs.size());
  for (const auto& w : report.warnings) run.warn(w);
  for (const auto& p : write_report(out_dir, report)) run.add_output(p);

  auto os = run.open("selections.csv");
  os << "strategy,fit_month,rank,ticker,score,alpha,sigma2_hat\n";
  for (const auto& r : results) {
    for (const auto& m : r.months) {
      for (std::size_t i = 0; i < m.tickers.size(); ++i) {
        os << r.strategy << ',' << m.fit_month << ',' << i + 1 << ',' << m.tickers[i] << ','
           << format_number(m.score[i]) << ',' << format_number(m.alpha[i]) << ','
           << format_number(m.sigma2_hat[i]) << '\n';
      }
    }
  }
  os.close();
  return run.finish();
}

CommandResult cmd_report(const RunConfig& cfg, const std::string& daily_returns_path,
                         const std::string& out_dir) {
  std::ifstream in(daily_returns_path);
  if (!in) throw DataError("cannot open " + daily_returns_path);
  const StrategySeries series = read_daily_returns(in, daily_returns_path);
  const PerfReport report = build_report(series, cfg.report);
  Run run("report", cfg, out_dir);
  run.add_input(daily_returns_path);
  for (const auto& w : report.warnings) run.warn(w);
  for (const auto& p : write_report(out_dir, report)) run.add_output(p);
  return run.finish();
}

}  // namespace bop
