#include "bop/market_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "bop/errors.hpp"
#include "bop/format.hpp"
#include "bop/oracle_test.hpp"

namespace bop {

namespace {

struct FactorPaths {
  Vector market;
  std::vector<Vector> extras;
};

FactorPaths simulate_factors(Rng& rng, int n, int k, const MarketParams& m) {
  FactorPaths f;
  f.market = m.market_sd * draw_normal_vector(rng, n);
  f.market.array() += m.market_mean;
  for (int j = 1; j < k; ++j) f.extras.push_back(m.factor_sd * draw_normal_vector(rng, n));
  return f;
}

FactorPaths head(const FactorPaths& f, int n) {
  FactorPaths h{f.market.head(n), {}};
  for (const auto& e : f.extras) h.extras.push_back(e.head(n));
  return h;
}

Matrix simulate_truth(Rng& rng, int assets, int k, int planted, const MarketParams& m) {
  Matrix truth(assets, k + 1);
  const Vector mu0 = null_point(k);
  for (int i = 0; i < assets; ++i) {
    if (i < planted) {
      truth(i, 0) = m.alpha_sd * draw_normal(rng);
      truth(i, 1) = 1.0 + m.beta_sd * draw_normal(rng);
      for (int j = 2; j <= k; ++j) truth(i, j) = m.alpha_sd * draw_normal(rng);
    } else {
      truth.row(i) = mu0.transpose();
    }
  }
  return truth;
}

Matrix simulate_returns(Rng& rng, const Matrix& x, const Matrix& truth, double sigma) {
  Matrix r = x * truth.transpose();
  if (sigma > 0.0) {
    for (Eigen::Index j = 0; j < r.cols(); ++j) r.col(j) += sigma * draw_normal_vector(rng, r.rows());
  }
  return r;
}

ReturnsPanel make_panel(Matrix excess) {
  ReturnsPanel panel;
  panel.excess = std::move(excess);
  for (Eigen::Index j = 0; j < panel.excess.cols(); ++j) panel.assets.push_back("A" + std::to_string(j));
  return panel;
}

// Variance the test treats as known; a noise-free market uses a 1e-8 floor on sigma.
OracleTestOptions test_options(double sigma, bool known_sigma) {
  OracleTestOptions o;
  o.statistic = Statistic::S;
  o.known_sigma2 = known_sigma ? std::pow(std::max(sigma, 1e-8), 2) : 0.0;
  return o;
}

SpikeSlabPrior test_prior(double p, const Matrix& lambda0, int k) {
  SpikeSlabPrior prior{p, lambda0.size() == 0 ? default_lambda0(k) : lambda0, null_point(k)};
  prior.validate();
  return prior;
}

Rng replicate_rng(std::uint64_t seed, std::string_view experiment, std::uint64_t grid_index, int rep) {
  return Rng(derive_seed(derive_seed(seed, experiment, grid_index), "replicate",
                         static_cast<std::uint64_t>(rep)));
}

// Inclusion probability of each asset computed from S_tilde; ordering by it
// is the ranking used to build portfolios. Ties go to the lower index.
std::vector<Eigen::Index> rank_by_inclusion(const std::vector<OracleTestResult>& res, double p) {
  std::vector<double> key(res.size());
  for (std::size_t i = 0; i < res.size(); ++i) {
    double log_det = 0.0;
    for (double l : res[i].lambdas) log_det += std::log1p(-l);
    key[i] = posterior_inclusion(res[i].s_tilde, p, log_det);
  }
  std::vector<Eigen::Index> order(res.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const auto ia = static_cast<std::size_t>(a);
    const auto ib = static_cast<std::size_t>(b);
    if (key[ia] != key[ib]) return key[ia] > key[ib];
    // saturated probabilities fall back to the statistic itself
    return res[ia].s_tilde > res[ib].s_tilde;
  });
  return order;
}

double compounded_portfolio_return(const Matrix& test, const std::vector<Eigen::Index>& members) {
  double growth = 1.0;
  for (Eigen::Index t = 0; t < test.rows(); ++t) {
    double day = 0.0;
    for (Eigen::Index j : members) day += test(t, j);
    growth *= 1.0 + day / static_cast<double>(members.size());
  }
  return growth - 1.0;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void push_metrics(ExperimentResult& out, ResultRow base, const std::string& method,
                  const Confusion& c) {
  base.method = method;
  for (auto [name, value] : {std::pair{"t1", c.t1()}, {"t2", c.t2()}, {"bfdr", c.bfdr()}, {"pmc", c.pmc()}}) {
    base.metric = name;
    base.value = value;
    out.rows.push_back(base);
  }
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

void SimConfig::validate() const {
  require(P >= 1, "sim: P must be at least 1");
  require(k >= 1, "sim: k must be at least 1");
  require(n > k + 1, "sim: n must exceed k+1");
  require(p >= 0.0 && p <= 1.0, "sim: p must lie in [0,1]");
  require(sigma >= 0.0 && std::isfinite(sigma), "sim: sigma must be non-negative");
  require(market.alpha_sd >= 0.0 && market.beta_sd >= 0.0, "sim: dispersions must be non-negative");
  require(market.market_sd > 0.0 && market.factor_sd > 0.0, "sim: factor SDs must be positive");
}

int SimConfig::planted() const { return static_cast<int>(std::floor(p * P + 1e-9)); }

SyntheticMarket simulate_market(const SimConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, "market"));
  return simulate_market(cfg, rng);
}

SyntheticMarket simulate_market(const SimConfig& cfg, Rng& rng) {
  cfg.validate();
  const FactorPaths f = simulate_factors(rng, cfg.n, cfg.k, cfg.market);
  FactorDesign design = build_design(f.market, f.extras);
  const int q = cfg.planted();
  Matrix truth = simulate_truth(rng, cfg.P, cfg.k, q, cfg.market);
  ReturnsPanel panel = make_panel(simulate_returns(rng, design.x(), truth, cfg.sigma));
  std::vector<Eigen::Index> oracle(static_cast<std::size_t>(q));
  std::iota(oracle.begin(), oracle.end(), 0);
  return {std::move(panel), std::move(design), std::move(truth), std::move(oracle)};
}

void Confusion::add(bool is_alt, bool rejected) {
  if (is_alt) {
    ++alts;
    false_neg += !rejected;
  } else {
    ++nulls;
    false_pos += rejected;
  }
  rejections += rejected;
}

double Confusion::t1() const { return nulls ? static_cast<double>(false_pos) / nulls : 0.0; }
double Confusion::t2() const { return alts ? static_cast<double>(false_neg) / alts : 0.0; }
double Confusion::bfdr() const {
  return rejections ? static_cast<double>(false_pos) / rejections : 0.0;
}
double Confusion::pmc() const {
  const long total = nulls + alts;
  return total ? static_cast<double>(false_pos + false_neg) / total : 0.0;
}

std::vector<ResultRow> ExperimentResult::select(
    const std::function<bool(const ResultRow&)>& pred) const {
  std::vector<ResultRow> out;
  std::copy_if(rows.begin(), rows.end(), std::back_inserter(out), pred);
  return out;
}

std::vector<double> default_p_grid() {
  std::vector<double> g;
  for (int i = 0; i < 18; ++i) g.push_back(0.01 + 0.05 * i);
  return g;
}

ExperimentResult run_experiment1(const Experiment1Config& cfg) {
  require(cfg.replicates >= 1, "experiment 1: replicates must be at least 1");
  ExperimentResult out{1, {}};
  std::uint64_t grid = 0;
  for (int P : cfg.P) {
    for (int n : cfg.n) {
      for (double sigma : cfg.sigma) {
        for (double p : cfg.p) {
          SimConfig sc{P, n, 1, p, sigma, cfg.market, cfg.seed};
          sc.validate();
          const SpikeSlabPrior prior = test_prior(p, cfg.lambda0, 1);
          const OracleTestOptions opts = test_options(sigma, cfg.known_sigma);
          Confusion by_s, by_s_tilde;
          for (int rep = 0; rep < cfg.replicates; ++rep) {
            Rng rng = replicate_rng(cfg.seed, "experiment1", grid, rep);
            const SyntheticMarket m = simulate_market(sc, rng);
            const auto res = run_oracle_test(prior, {}, m.design, m.panel, opts);
            const int q = sc.planted();
            for (int i = 0; i < P; ++i) {
              const auto& r = res[static_cast<std::size_t>(i)];
              by_s.add(i < q, r.reject);
              by_s_tilde.add(i < q, r.s_tilde >= r.c2);
            }
          }
          const ResultRow base{1, P, n, 1, sigma, p, 0, "", "", 0.0};
          push_metrics(out, base, "S", by_s);
          push_metrics(out, base, "S_tilde", by_s_tilde);
          ++grid;
        }
      }
    }
  }
  return out;
}

ExperimentResult run_experiment2(const Experiment2Config& cfg) {
  require(cfg.replicates >= 1, "experiment 2: replicates must be at least 1");
  require(cfg.significance > 0.0 && cfg.significance < 1.0, "experiment 2: significance must lie in (0,1)");
  ExperimentResult out{2, {}};
  std::uint64_t grid = 0;
  for (double p : cfg.p) {
    SimConfig sc{cfg.P, cfg.n, 1, p, cfg.sigma, cfg.market, cfg.seed};
    sc.validate();
    const SpikeSlabPrior prior = test_prior(p, cfg.lambda0, 1);
    const OracleTestOptions opts = test_options(cfg.sigma, cfg.known_sigma);
    Confusion abos, ftest;
    for (int rep = 0; rep < cfg.replicates; ++rep) {
      Rng rng = replicate_rng(cfg.seed, "experiment2", grid, rep);
      const SyntheticMarket m = simulate_market(sc, rng);
      const auto res = run_oracle_test(prior, {}, m.design, m.panel, opts);
      const int q = sc.planted();
      for (int i = 0; i < cfg.P; ++i) {
        const auto& r = res[static_cast<std::size_t>(i)];
        abos.add(i < q, r.s_tilde >= r.c2);
        const AssetEstimate est = ols_estimate(m.design, m.panel.excess.col(i));
        ftest.add(i < q, f_test_baseline(m.design, est, cfg.significance));
      }
    }
    const ResultRow base{2, cfg.P, cfg.n, 1, cfg.sigma, p, 0, "", "", 0.0};
    push_metrics(out, base, "abos", abos);
    push_metrics(out, base, "f_test", ftest);
    ++grid;
  }
  return out;
}

ExperimentResult run_experiment3(const Experiment3Config& cfg) {
  require(cfg.replicates >= 1, "experiment 3: replicates must be at least 1");
  require(cfg.q >= 0 && cfg.q <= cfg.P, "experiment 3: q must lie in [0, P]");
  require(cfg.n_test >= 1, "experiment 3: n_test must be at least 1");
  for (int pt : cfg.p_tilde) require(pt >= cfg.q && pt <= cfg.P, "experiment 3: need q <= p_tilde <= P");
  const double p = static_cast<double>(cfg.q) / cfg.P;
  ExperimentResult out{3, {}};
  std::uint64_t grid = 0;
  for (int p_tilde : cfg.p_tilde) {
    for (double sigma : cfg.sigma) {
      const SpikeSlabPrior prior = test_prior(p, cfg.lambda0, 1);
      const OracleTestOptions opts = test_options(sigma, cfg.known_sigma);
      SimConfig sc{cfg.P, cfg.n_train, 1, p, sigma, cfg.market, cfg.seed};
      sc.validate();
      std::vector<double> oracle_returns, abos_returns;
      for (int rep = 0; rep < cfg.replicates; ++rep) {
        Rng rng = replicate_rng(cfg.seed, "experiment3", grid, rep);
        const int n_total = cfg.n_train + cfg.n_test;
        const FactorPaths f = simulate_factors(rng, n_total, 1, cfg.market);
        const FactorDesign full = build_design(f.market, f.extras);
        const Matrix truth = simulate_truth(rng, cfg.P, 1, cfg.q, cfg.market);
        const Matrix r = simulate_returns(rng, full.x(), truth, sigma);
        const FactorPaths tr = head(f, cfg.n_train);
        const FactorDesign train = build_design(tr.market, tr.extras);
        const ReturnsPanel panel = make_panel(r.topRows(cfg.n_train));
        const Matrix test = r.bottomRows(cfg.n_test);

        const auto res = run_oracle_test(prior, {}, train, panel, opts);
        const auto order = rank_by_inclusion(res, p);
        std::vector<Eigen::Index> abos(order.begin(), order.begin() + p_tilde);

        std::vector<Eigen::Index> oracle(static_cast<std::size_t>(cfg.q));
        std::iota(oracle.begin(), oracle.end(), 0);
        std::vector<Eigen::Index> rest(static_cast<std::size_t>(cfg.P - cfg.q));
        std::iota(rest.begin(), rest.end(), cfg.q);
        std::shuffle(rest.begin(), rest.end(), rng);
        oracle.insert(oracle.end(), rest.begin(), rest.begin() + (p_tilde - cfg.q));

        oracle_returns.push_back(compounded_portfolio_return(test, oracle));
        abos_returns.push_back(compounded_portfolio_return(test, abos));
      }
      ResultRow base{3, cfg.P, cfg.n_train, 1, sigma, p, p_tilde, "", "median_return", 0.0};
      base.method = "oracle";
      base.value = median_of(oracle_returns);
      out.rows.push_back(base);
      base.method = "abos";
      base.value = median_of(abos_returns);
      out.rows.push_back(base);
      ++grid;
    }
  }
  return out;
}

ExperimentResult run_experiment4(const Experiment4Config& cfg) {
  require(cfg.replicates >= 1, "experiment 4: replicates must be at least 1");
  ExperimentResult out{4, {}};
  std::uint64_t grid = 0;
  for (int P : cfg.P) {
    require(cfg.q >= 1 && cfg.q < P, "experiment 4: q must lie in [1, P)");
    const double p = static_cast<double>(cfg.q) / P;
    for (int n : cfg.n) {
      for (int p_tilde : cfg.p_tilde) {
        require(p_tilde >= 1 && p_tilde <= P, "experiment 4: p_tilde must lie in [1, P]");
        for (double sigma : cfg.sigma) {
          // every model sees the same replicate seeds at a grid point
          for (int k : cfg.k) {
            SimConfig sc{P, n, k, p, sigma, cfg.market, cfg.seed};
            sc.validate();
            const SpikeSlabPrior prior = test_prior(p, Matrix(), k);
            const OracleTestOptions opts = test_options(sigma, cfg.known_sigma);
            int contained = 0;
            for (int rep = 0; rep < cfg.replicates; ++rep) {
              Rng rng = replicate_rng(cfg.seed, "experiment4", grid, rep);
              const SyntheticMarket m = simulate_market(sc, rng);
              const auto res = run_oracle_test(prior, {}, m.design, m.panel, opts);
              const auto order = rank_by_inclusion(res, p);
              const std::vector<Eigen::Index> top(order.begin(), order.begin() + p_tilde);
              contained += std::all_of(m.oracle_set.begin(), m.oracle_set.end(), [&](Eigen::Index i) {
                return std::find(top.begin(), top.end(), i) != top.end();
              });
            }
            out.rows.push_back({4, P, n, k, sigma, p, p_tilde, "abos", "inclusion_prob",
                                static_cast<double>(contained) / cfg.replicates});
          }
          ++grid;
        }
      }
    }
  }
  return out;
}

void write_tidy(std::ostream& os, const ExperimentResult& result) {
  os << "experiment,P,n,k,sigma,p,p_tilde,method,metric,value\n";
  for (const auto& r : result.rows) {
    os << r.experiment << ',' << r.P << ',' << r.n << ',' << r.k << ',' << format_number(r.sigma) << ','
       << format_number(r.p) << ',' << r.p_tilde << ',' << r.method << ',' << r.metric << ',' << format_number(r.value) << '\n';
  }
}

}  // namespace bop
