#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bop/factor_model.hpp"
#include "bop/format.hpp"
#include "bop/hb_sampler.hpp"
#include "bop/linalg.hpp"
#include "bop/oracle_test.hpp"
#include "bop/prices.hpp"

namespace bop {

// Half-open range of panel rows. Row t carries the return from t-1 to t,
// so row 0 never belongs to a window.
struct MonthWindow {
  std::string month;  // YYYY-MM
  Eigen::Index begin = 0;
  Eigen::Index end = 0;

  Eigen::Index days() const { return end - begin; }
};

struct RebalancePair {
  MonthWindow fit;
  MonthWindow hold;
};

struct RebalanceSchedule {
  std::vector<RebalancePair> pairs;
};

// Consecutive calendar-month pairs in the input calendar. Pairs whose fit
// window has fewer than min_fit_days returns are skipped.
RebalanceSchedule monthly_schedule(const std::vector<std::string>& dates, Eigen::Index min_fit_days);

// Excess returns over panel rows [begin, end) for assets priced on every
// row from begin-1 to end-1, with the factor design of that window. The
// market column is benchmark minus risk-free; extra factors are the simple
// returns of the first `extras` factor series.
struct WindowData {
  ReturnsPanel returns;
  std::vector<Eigen::Index> columns;  // panel column of each returns column
  Vector market;
  std::vector<Vector> factors;
  FactorDesign design;
};

// Throws InsufficientData unless the window holds at least extras + 3
// returns, and ConfigError when extras exceeds the available series.
WindowData window_data(const PricePanel& panel, Eigen::Index begin, Eigen::Index end, int extras);

// First row dated on or after `from` and one past the last row dated on or
// before `to` (empty strings leave that side open). Row 0 is never included.
std::pair<Eigen::Index, Eigen::Index> date_rows(const PricePanel& panel, const std::string& from,
                                                const std::string& to);

enum class SelectorKind { Oracle, HB, FTest, Market };

// oracle | hb | ftest | market; throws ConfigError otherwise.
SelectorKind parse_selector(const std::string& name);
std::string selector_name(SelectorKind kind);

struct SelectorConfig {
  SelectorKind kind = SelectorKind::Oracle;
  int p_tilde = 25;
  int factors = -1;  // extra factor series used; -1 takes every series in the panel
  // Spike-and-slab settings; empty lambda0 takes the default slab.
  double p = 0.05;
  Matrix lambda0;
  LossSpec loss;
  Statistic statistic = Statistic::S;
  // Hierarchical-Bayes settings; an empty mu0 takes the defaults.
  HBPrior hb_prior;
  ChainOptions chain;
  double significance = 0.05;
  // Keep assets with positive estimated alpha first, then fill by rank.
  bool positive_alpha_first = true;
  std::uint64_t seed = 1;
};

struct MonthSelection {
  std::string fit_month;
  Eigen::Index fit_days = 0;
  Eigen::Index eligible = 0;
  std::vector<std::string> tickers;
  std::vector<Eigen::Index> columns;  // panel columns of the held assets
  std::vector<double> score;          // ranking score of each held asset
  std::vector<double> alpha;          // estimated alpha of each held asset
  std::vector<double> sigma2_hat;     // OLS residual variance of each held asset
  IdiosyncraticBound bound;           // equal-weight idiosyncratic variance
};

// Fits on the last calendar month present in history and returns the held
// assets. Callers pass a panel already truncated at the fit month's end.
// Throws InsufficientData when the month has fewer than k+2 returns and
// InsufficientAssets when fewer than p_tilde assets have complete data.
MonthSelection select_portfolio(const PricePanel& history, const SelectorConfig& cfg);

struct BacktestResult {
  std::string strategy;
  std::vector<std::string> dates;  // hold-window dates
  Vector returns;                  // equal-weight daily simple returns
  std::vector<MonthSelection> months;
};

// Each fit uses panel.truncated(last fit date); hold returns come from the
// full panel. Missing hold-day returns count as zero. The market selector
// holds the benchmark.
BacktestResult monthly_rebalance(const PricePanel& panel, const SelectorConfig& cfg,
                                 const RebalanceSchedule& schedule);

// 100 (prod(1 + r) - 1).
double annual_return(std::span<const double> daily);
// 100 sqrt(periods) mean(sqrt(h)).
double annualized_vol(std::span<const double> cond_var, double periods_per_year = 252.0);
// -100 times the type-7 (1 - confidence) quantile, floored at zero. Throws
// InsufficientData on an empty sample.
double var_historical(std::span<const double> daily, double confidence = 0.99);
// annual_return / ann_vol; empty when ann_vol <= 0.
std::optional<double> risk_adjusted(double annual_return_pct, double ann_vol_pct);

// Daily returns of several strategies on a shared date axis; NaN = no data.
struct StrategySeries {
  std::vector<std::string> dates;
  std::vector<std::string> strategies;
  Matrix returns;  // days x strategies
};

StrategySeries combine(const std::vector<BacktestResult>& results);
void write_daily_returns(std::ostream& os, const StrategySeries& series);
StrategySeries read_daily_returns(std::istream& is, const std::string& source = "daily_returns");

using YearTable = std::vector<std::vector<std::optional<double>>>;  // [year][strategy]

struct ReportOptions {
  double var_confidence = 0.99;
  double periods_per_year = 252.0;
  Eigen::Index min_var_obs = 20;
};

struct PerfReport {
  std::vector<std::string> strategies;
  std::vector<int> years;
  YearTable annual_return;
  YearTable ann_vol;
  YearTable var;
  YearTable risk_adjusted;
  StrategySeries daily;
  std::vector<std::string> warnings;
};

// GARCH is fitted once per strategy over its whole series and sliced by
// year. Years without any observation are omitted with a warning.
PerfReport build_report(const StrategySeries& daily, const ReportOptions& options = {});
// Tables from precomputed yearly summaries; risk_adjusted is derived.
PerfReport report_from_summaries(const std::vector<std::string>& strategies, const std::vector<int>& years,
                                 const YearTable& annual_return, const YearTable& ann_vol,
                                 const YearTable& var);

enum class Best { Highest, Lowest };
// Header year,<strategies>,best. Missing cells print as NA.
void write_year_table(std::ostream& os, const PerfReport& report, const YearTable& table, Best best);
// returns.csv, vol.csv, var.csv, riskadj.csv and daily_returns.csv.
std::vector<std::string> write_report(const std::string& dir, const PerfReport& report);

}  // namespace bop
