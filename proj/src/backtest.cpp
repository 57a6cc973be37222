#include "bop/backtest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "bop/errors.hpp"
#include "bop/garch.hpp"

namespace bop {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string month_of(const std::string& date) { return date.substr(0, 7); }

std::uint64_t month_ordinal(const std::string& month) {
  return static_cast<std::uint64_t>(std::stoi(month.substr(0, 4))) * 12 +
         static_cast<std::uint64_t>(std::stoi(month.substr(5, 2)));
}

int year_of(const std::string& date) { return std::stoi(date.substr(0, 4)); }

int extra_factors(const PricePanel& panel, const SelectorConfig& cfg) {
  const int available = static_cast<int>(panel.factor_series.size());
  if (cfg.factors < 0) return available;
  if (cfg.factors > available) {
    throw ConfigError("selector: " + std::to_string(cfg.factors) + " factors requested, panel has " +
                      std::to_string(available));
  }
  return cfg.factors;
}

struct Ranked {
  Eigen::Index local = 0;  // index into the eligible set
  double score = 0.0;
  double tie = 0.0;
  double alpha = 0.0;
};

std::vector<Ranked> rank_oracle(const SelectorConfig& cfg, const FactorDesign& design,
                                const ReturnsPanel& returns) {
  SpikeSlabPrior prior{cfg.p, cfg.lambda0.size() ? cfg.lambda0 : default_lambda0(design.k()),
                       design.mu0()};
  OracleTestOptions opts;
  opts.statistic = cfg.statistic;
  const auto results = run_oracle_test(prior, cfg.loss, design, returns, opts);
  std::vector<Ranked> out;
  for (std::size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    const double stat = cfg.statistic == Statistic::S ? r.s : r.s_tilde;
    out.push_back({static_cast<Eigen::Index>(i), r.pip, stat, r.alpha_hat});
  }
  return out;
}

std::vector<Ranked> rank_hb(const SelectorConfig& cfg, const WindowData& w, const std::string& month) {
  const HBPrior prior = cfg.hb_prior.mu0.size() ? cfg.hb_prior : HBPrior::defaults(w.design.k());
  ChainOptions chain = cfg.chain;
  chain.seed = derive_seed(cfg.seed, "hb_month", month_ordinal(month));
  const auto fit = run_chain_standardized(w.returns, w.market, w.factors, prior, chain);
  std::vector<Ranked> out;
  for (const auto& r : hb_select(fit.draws, w.returns.size())) {
    out.push_back({r.index, r.prob_positive, r.mean_alpha, r.mean_alpha});
  }
  return out;
}

std::vector<Ranked> rank_ftest(const FactorDesign& design, const std::vector<AssetEstimate>& est) {
  std::vector<Ranked> out;
  for (std::size_t i = 0; i < est.size(); ++i) {
    out.push_back({static_cast<Eigen::Index>(i), f_statistic(design, est[i]), 0.0, est[i].theta_hat[0]});
  }
  return out;
}

}  // namespace

WindowData window_data(const PricePanel& panel, Eigen::Index begin, Eigen::Index end, int extras) {
  begin = std::max<Eigen::Index>(begin, 1);
  end = std::min(end, panel.days());
  const Eigen::Index n = std::max<Eigen::Index>(end - begin, 0);
  if (extras < 0 || extras > static_cast<int>(panel.factor_series.size())) {
    throw ConfigError("window: " + std::to_string(extras) + " extra factors requested, panel has " +
                      std::to_string(panel.factor_series.size()));
  }
  if (n < extras + 3) {
    throw InsufficientData("window: " + std::to_string(n) + " returns, need at least " +
                           std::to_string(extras + 3) + " for " + std::to_string(extras + 1) +
                           " factors");
  }
  WindowData w;
  const auto rf = panel.risk_free.segment(begin, n);
  w.market = simple_returns(panel.benchmark).segment(begin, n) - rf;
  for (int f = 0; f < extras; ++f) {
    w.factors.push_back(simple_returns(panel.factor_series[static_cast<std::size_t>(f)]).segment(begin, n));
  }
  w.design = build_design(w.market, w.factors);

  const auto& px = panel.adjusted_close;
  for (Eigen::Index j = 0; j < panel.assets(); ++j) {
    if (px.col(j).segment(begin - 1, n + 1).allFinite()) w.columns.push_back(j);
  }
  const auto cols = static_cast<Eigen::Index>(w.columns.size());
  w.returns.dates.assign(panel.dates.begin() + begin, panel.dates.begin() + end);
  w.returns.excess.resize(n, cols);
  for (Eigen::Index i = 0; i < cols; ++i) {
    const Eigen::Index j = w.columns[static_cast<std::size_t>(i)];
    w.returns.assets.push_back(panel.tickers[static_cast<std::size_t>(j)]);
    w.returns.excess.col(i) =
        px.col(j).segment(begin, n).array() / px.col(j).segment(begin - 1, n).array() - 1.0 - rf.array();
  }
  return w;
}

std::pair<Eigen::Index, Eigen::Index> date_rows(const PricePanel& panel, const std::string& from,
                                                const std::string& to) {
  const auto& d = panel.dates;
  Eigen::Index begin = from.empty() ? 0 : std::lower_bound(d.begin(), d.end(), from) - d.begin();
  const Eigen::Index end = to.empty() ? panel.days() : std::upper_bound(d.begin(), d.end(), to) - d.begin();
  begin = std::max<Eigen::Index>(begin, 1);
  return {begin, std::max(begin, end)};
}

RebalanceSchedule monthly_schedule(const std::vector<std::string>& dates, Eigen::Index min_fit_days) {
  std::vector<MonthWindow> months;
  for (Eigen::Index t = 1; t < static_cast<Eigen::Index>(dates.size()); ++t) {
    const std::string m = month_of(dates[t]);
    if (months.empty() || months.back().month != m) months.push_back({m, t, t});
    months.back().end = t + 1;
  }
  RebalanceSchedule schedule;
  for (std::size_t i = 0; i + 1 < months.size(); ++i) {
    if (months[i].days() >= min_fit_days) schedule.pairs.push_back({months[i], months[i + 1]});
  }
  return schedule;
}

SelectorKind parse_selector(const std::string& name) {
  if (name == "oracle") return SelectorKind::Oracle;
  if (name == "hb") return SelectorKind::HB;
  if (name == "ftest") return SelectorKind::FTest;
  if (name == "market") return SelectorKind::Market;
  throw ConfigError("selector: unknown '" + name + "' (expected oracle, hb, ftest or market)");
}

std::string selector_name(SelectorKind kind) {
  switch (kind) {
    case SelectorKind::Oracle: return "oracle";
    case SelectorKind::HB: return "hb";
    case SelectorKind::FTest: return "ftest";
    case SelectorKind::Market: return "market";
  }
  return "unknown";
}

MonthSelection select_portfolio(const PricePanel& history, const SelectorConfig& cfg) {
  if (cfg.p_tilde < 1) throw ConfigError("selector: p_tilde must be at least 1");
  const Eigen::Index n_all = history.days();
  if (n_all < 2) throw InsufficientData("select_portfolio: history has no returns");
  MonthSelection sel;
  sel.fit_month = month_of(history.dates.back());
  Eigen::Index begin = n_all - 1;
  while (begin > 1 && month_of(history.dates[begin - 1]) == sel.fit_month) --begin;
  sel.fit_days = n_all - begin;

  const WindowData w = window_data(history, begin, n_all, extra_factors(history, cfg));
  const auto& design = w.design;
  const auto& returns = w.returns;
  const auto& eligible = w.columns;
  sel.eligible = static_cast<Eigen::Index>(eligible.size());
  if (sel.eligible < cfg.p_tilde) {
    throw InsufficientAssets("select_portfolio: " + sel.fit_month + " has " +
                             std::to_string(sel.eligible) + " assets with complete data, need " +
                             std::to_string(cfg.p_tilde));
  }

  std::vector<AssetEstimate> est;
  est.reserve(eligible.size());
  for (Eigen::Index i = 0; i < sel.eligible; ++i) est.push_back(ols_estimate(design, returns.excess.col(i)));

  std::vector<Ranked> ranked;
  switch (cfg.kind) {
    case SelectorKind::Oracle: ranked = rank_oracle(cfg, design, returns); break;
    case SelectorKind::HB: ranked = rank_hb(cfg, w, sel.fit_month); break;
    case SelectorKind::FTest: ranked = rank_ftest(design, est); break;
    case SelectorKind::Market: throw ConfigError("select_portfolio: the market selector holds the benchmark");
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.tie != b.tie) return a.tie > b.tie;
    return a.local < b.local;
  });

  std::vector<Ranked> held;
  std::vector<bool> taken(ranked.size(), false);
  if (cfg.positive_alpha_first) {
    for (std::size_t r = 0; r < ranked.size() && static_cast<int>(held.size()) < cfg.p_tilde; ++r) {
      if (ranked[r].alpha > 0.0) {
        held.push_back(ranked[r]);
        taken[r] = true;
      }
    }
  }
  for (std::size_t r = 0; r < ranked.size() && static_cast<int>(held.size()) < cfg.p_tilde; ++r) {
    if (!taken[r]) held.push_back(ranked[r]);
  }

  for (const auto& h : held) {
    const Eigen::Index j = eligible[static_cast<std::size_t>(h.local)];
    sel.columns.push_back(j);
    sel.tickers.push_back(history.tickers[static_cast<std::size_t>(j)]);
    sel.score.push_back(h.score);
    sel.alpha.push_back(h.alpha);
    sel.sigma2_hat.push_back(est[static_cast<std::size_t>(h.local)].sigma2_hat);
  }
  const std::vector<double> weights(held.size(), 1.0 / static_cast<double>(held.size()));
  sel.bound = idiosyncratic_bound(weights, sel.sigma2_hat);
  return sel;
}

BacktestResult monthly_rebalance(const PricePanel& panel, const SelectorConfig& cfg,
                                 const RebalanceSchedule& schedule) {
  BacktestResult out;
  out.strategy = selector_name(cfg.kind);
  const Matrix asset_returns = simple_returns(panel.adjusted_close);
  const Vector bench_returns = simple_returns(panel.benchmark);
  std::vector<double> daily;
  for (const auto& pair : schedule.pairs) {
    const auto& hold = pair.hold;
    if (cfg.kind == SelectorKind::Market) {
      for (Eigen::Index t = hold.begin; t < hold.end; ++t) {
        out.dates.push_back(panel.dates[t]);
        daily.push_back(bench_returns[t]);
      }
      continue;
    }
    const PricePanel history = panel.truncated(panel.dates[pair.fit.end - 1]);
    MonthSelection sel = select_portfolio(history, cfg);
    for (Eigen::Index t = hold.begin; t < hold.end; ++t) {
      double sum = 0.0;
      for (Eigen::Index j : sel.columns) {
        const double r = asset_returns(t, j);
        if (std::isfinite(r)) sum += r;
      }
      out.dates.push_back(panel.dates[t]);
      daily.push_back(sum / static_cast<double>(sel.columns.size()));
    }
    out.months.push_back(std::move(sel));
  }
  out.returns = Eigen::Map<const Vector>(daily.data(), static_cast<Eigen::Index>(daily.size()));
  return out;
}

double annual_return(std::span<const double> daily) {
  double growth = 1.0;
  for (double r : daily) growth *= 1.0 + r;
  return 100.0 * (growth - 1.0);
}

double annualized_vol(std::span<const double> cond_var, double periods_per_year) {
  if (cond_var.empty()) return 0.0;
  double sum = 0.0;
  for (double h : cond_var) sum += std::sqrt(std::max(h, 0.0));
  return 100.0 * std::sqrt(periods_per_year) * sum / static_cast<double>(cond_var.size());
}

double var_historical(std::span<const double> daily, double confidence) {
  if (daily.empty()) throw InsufficientData("var_historical: empty sample");
  if (!(confidence > 0.0 && confidence < 1.0)) throw ConfigError("var_historical: confidence must lie in (0, 1)");
  std::vector<double> x(daily.begin(), daily.end());
  std::sort(x.begin(), x.end());
  const double h = static_cast<double>(x.size() - 1) * (1.0 - confidence);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  const double q = x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
  return std::max(0.0, -100.0 * q);
}

std::optional<double> risk_adjusted(double annual_return_pct, double ann_vol_pct) {
  if (!(ann_vol_pct > 0.0)) return std::nullopt;
  return annual_return_pct / ann_vol_pct;
}

StrategySeries combine(const std::vector<BacktestResult>& results) {
  StrategySeries s;
  std::vector<std::string> all;
  for (const auto& r : results) all.insert(all.end(), r.dates.begin(), r.dates.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());
  s.dates = all;
  s.returns = Matrix::Constant(static_cast<Eigen::Index>(all.size()), static_cast<Eigen::Index>(results.size()), kNaN);
  for (std::size_t c = 0; c < results.size(); ++c) {
    s.strategies.push_back(results[c].strategy);
    for (std::size_t i = 0; i < results[c].dates.size(); ++i) {
      const auto row = std::lower_bound(all.begin(), all.end(), results[c].dates[i]) - all.begin();
      s.returns(row, static_cast<Eigen::Index>(c)) = results[c].returns[static_cast<Eigen::Index>(i)];
    }
  }
  return s;
}

void write_daily_returns(std::ostream& os, const StrategySeries& series) {
  os << "date";
  for (const auto& s : series.strategies) os << ',' << s;
  os << '\n';
  for (std::size_t t = 0; t < series.dates.size(); ++t) {
    os << series.dates[t];
    for (Eigen::Index c = 0; c < series.returns.cols(); ++c) {
      os << ',' << format_number(series.returns(static_cast<Eigen::Index>(t), c));
    }
    os << '\n';
  }
}

StrategySeries read_daily_returns(std::istream& is, const std::string& source) {
  StrategySeries s;
  std::string line;
  long number = 0;
  std::vector<std::vector<double>> rows;
  auto fail = [&](const std::string& what) {
    throw DataError(source + " line " + std::to_string(number) + ": " + what);
  };
  while (std::getline(is, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    if (s.strategies.empty() && s.dates.empty() && rows.empty()) {
      if (fields.size() < 2 || fields[0] != "date") fail("expected header date,<strategy>...");
      s.strategies.assign(fields.begin() + 1, fields.end());
      continue;
    }
    if (fields.size() != s.strategies.size() + 1) fail("wrong number of fields");
    if (!is_iso_date(fields[0])) fail("bad date '" + fields[0] + "'");
    if (!s.dates.empty() && !(s.dates.back() < fields[0])) fail("dates not strictly increasing");
    std::vector<double> row;
    for (std::size_t c = 1; c < fields.size(); ++c) {
      if (fields[c] == "NA") {
        row.push_back(kNaN);
        continue;
      }
      double v = 0.0;
      const char* end = fields[c].data() + fields[c].size();
      const auto [ptr, ec] = std::from_chars(fields[c].data(), end, v);
      if (fields[c].empty() || ec != std::errc() || ptr != end) fail("bad number '" + fields[c] + "'");
      row.push_back(v);
    }
    s.dates.push_back(fields[0]);
    rows.push_back(std::move(row));
  }
  if (s.strategies.empty()) throw DataError(source + ": missing header");
  s.returns.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(s.strategies.size()));
  for (std::size_t t = 0; t < rows.size(); ++t) {
    for (std::size_t c = 0; c < rows[t].size(); ++c) {
      s.returns(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c)) = rows[t][c];
    }
  }
  return s;
}

PerfReport build_report(const StrategySeries& daily, const ReportOptions& options) {
  PerfReport rep;
  rep.strategies = daily.strategies;
  rep.daily = daily;
  const auto S = static_cast<std::size_t>(daily.returns.cols());

  std::vector<int> years;
  for (const auto& d : daily.dates) {
    const int y = year_of(d);
    if (years.empty() || years.back() != y) years.push_back(y);
  }

  // Per strategy: finite observations, their years, and the GARCH path.
  std::vector<std::vector<double>> obs(S);
  std::vector<std::vector<int>> obs_year(S);
  std::vector<Vector> cond_var(S);
  for (std::size_t c = 0; c < S; ++c) {
    for (std::size_t t = 0; t < daily.dates.size(); ++t) {
      const double r = daily.returns(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
      if (!std::isfinite(r)) continue;
      obs[c].push_back(r);
      obs_year[c].push_back(year_of(daily.dates[t]));
    }
    const GarchFit fit = garch_fit_or_fallback(obs[c]);
    if (!fit.converged) {
      rep.warnings.push_back(daily.strategies[c] + ": GARCH fit unavailable, using the sample variance");
    }
    cond_var[c] = fit.cond_var;
  }

  for (int y : years) {
    std::vector<std::optional<double>> ret(S), vol(S), var(S), adj(S);
    bool any = false;
    for (std::size_t c = 0; c < S; ++c) {
      std::vector<double> r;
      std::vector<double> h;
      for (std::size_t i = 0; i < obs[c].size(); ++i) {
        if (obs_year[c][i] != y) continue;
        r.push_back(obs[c][i]);
        h.push_back(cond_var[c][static_cast<Eigen::Index>(i)]);
      }
      if (r.empty()) continue;
      any = true;
      ret[c] = annual_return(r);
      vol[c] = annualized_vol(h, options.periods_per_year);
      if (static_cast<Eigen::Index>(r.size()) >= options.min_var_obs) {
        var[c] = var_historical(r, options.var_confidence);
      }
      adj[c] = risk_adjusted(*ret[c], *vol[c]);
    }
    if (!any) {
      rep.warnings.push_back("year " + std::to_string(y) + ": no observations, row omitted");
      continue;
    }
    rep.years.push_back(y);
    rep.annual_return.push_back(ret);
    rep.ann_vol.push_back(vol);
    rep.var.push_back(var);
    rep.risk_adjusted.push_back(adj);
  }
  return rep;
}

PerfReport report_from_summaries(const std::vector<std::string>& strategies, const std::vector<int>& years,
                                 const YearTable& annual_return, const YearTable& ann_vol,
                                 const YearTable& var) {
  for (const YearTable* t : {&annual_return, &ann_vol, &var}) {
    if (t->size() != years.size()) throw ConfigError("report: table rows do not match years");
    for (const auto& row : *t) {
      if (row.size() != strategies.size()) throw ConfigError("report: table columns do not match strategies");
    }
  }
  PerfReport rep;
  rep.strategies = strategies;
  rep.years = years;
  rep.annual_return = annual_return;
  rep.ann_vol = ann_vol;
  rep.var = var;
  for (std::size_t y = 0; y < years.size(); ++y) {
    std::vector<std::optional<double>> row(strategies.size());
    for (std::size_t c = 0; c < strategies.size(); ++c) {
      if (annual_return[y][c] && ann_vol[y][c]) row[c] = risk_adjusted(*annual_return[y][c], *ann_vol[y][c]);
    }
    rep.risk_adjusted.push_back(row);
  }
  rep.daily.strategies = strategies;
  return rep;
}

void write_year_table(std::ostream& os, const PerfReport& report, const YearTable& table, Best best) {
  os << "year";
  for (const auto& s : report.strategies) os << ',' << s;
  os << ",best\n";
  for (std::size_t y = 0; y < report.years.size(); ++y) {
    os << report.years[y];
    std::optional<std::size_t> winner;
    for (std::size_t c = 0; c < report.strategies.size(); ++c) {
      const auto& v = table[y][c];
      os << ',' << (v ? format_number(*v) : "NA");
      if (!v) continue;
      if (!winner || (best == Best::Highest ? *v > *table[y][*winner] : *v < *table[y][*winner])) winner = c;
    }
    os << ',' << (winner ? report.strategies[*winner] : "NA") << '\n';
  }
}

std::vector<std::string> write_report(const std::string& dir, const PerfReport& report) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> paths;
  auto emit = [&](const std::string& name, auto&& body) {
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    body(out);
    paths.push_back(path);
  };
  emit("returns.csv", [&](std::ostream& os) { write_year_table(os, report, report.annual_return, Best::Highest); });
  emit("vol.csv", [&](std::ostream& os) { write_year_table(os, report, report.ann_vol, Best::Lowest); });
  emit("var.csv", [&](std::ostream& os) { write_year_table(os, report, report.var, Best::Lowest); });
  emit("riskadj.csv", [&](std::ostream& os) { write_year_table(os, report, report.risk_adjusted, Best::Highest); });
  emit("daily_returns.csv", [&](std::ostream& os) { write_daily_returns(os, report.daily); });
  return paths;
}

}  // namespace bop
