#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "bop/factor_model.hpp"
#include "bop/linalg.hpp"
#include "bop/random.hpp"

namespace bop {

// Market-wide simulation knobs shared by every experiment.
struct MarketParams {
  double alpha_sd = 0.1;  // SD of non-null intercepts (and extra loadings)
  double beta_sd = 0.1;   // SD of non-null market loadings around 1
  double market_mean = 0.0005;
  double market_sd = 0.01;
  double factor_sd = 1.0;  // extra factor columns ~ N(0, factor_sd^2)
};

struct SimConfig {
  int P = 100;
  int n = 20;
  int k = 1;
  double p = 0.05;
  double sigma = 0.1;  // 0 gives a noise-free market
  MarketParams market;
  std::uint64_t seed = 1;

  void validate() const;  // throws ConfigError
  // floor(p P), guarded against representation error (0.05 * 100 -> 5).
  int planted() const;
};

struct SyntheticMarket {
  ReturnsPanel panel;
  FactorDesign design;
  Matrix truth;  // P x (k+1)
  std::vector<Eigen::Index> oracle_set;
};

SyntheticMarket simulate_market(const SimConfig& cfg);
SyntheticMarket simulate_market(const SimConfig& cfg, Rng& rng);

// Pooled confusion counts; rates are ratios of totals over replicates.
struct Confusion {
  long nulls = 0;
  long alts = 0;
  long false_pos = 0;
  long false_neg = 0;
  long rejections = 0;

  void add(bool is_alt, bool rejected);
  double t1() const;    // 0 when there are no nulls
  double t2() const;    // 0 when there are no alternatives
  double bfdr() const;  // 0 when nothing is rejected
  double pmc() const;
};

struct ResultRow {
  int experiment = 0;
  int P = 0;
  int n = 0;
  int k = 1;
  double sigma = 0.0;
  double p = 0.0;
  int p_tilde = 0;
  std::string method;
  std::string metric;
  double value = 0.0;
};

struct ExperimentResult {
  int experiment = 0;
  std::vector<ResultRow> rows;

  std::vector<ResultRow> select(const std::function<bool(const ResultRow&)>& pred) const;
};

// 0.01, 0.06, ..., 0.86
std::vector<double> default_p_grid();

struct Experiment1Config {
  std::vector<int> P{100, 500};
  std::vector<int> n{20, 50};
  std::vector<double> sigma{0.1, 0.05};
  std::vector<double> p = default_p_grid();
  int replicates = 200;
  MarketParams market;
  Matrix lambda0;  // empty: default slab precision
  bool known_sigma = true;
  std::uint64_t seed = 1;
};

struct Experiment2Config {
  int P = 500;
  int n = 20;
  double sigma = 0.1;
  std::vector<double> p = default_p_grid();
  double significance = 0.05;
  int replicates = 200;
  MarketParams market;
  Matrix lambda0;
  bool known_sigma = true;
  std::uint64_t seed = 1;
};

struct Experiment3Config {
  int P = 500;
  int q = 25;
  std::vector<int> p_tilde{50, 100};
  std::vector<double> sigma{0.01, 0.03};
  int n_train = 20;
  int n_test = 20;
  int replicates = 200;
  MarketParams market;
  Matrix lambda0;
  bool known_sigma = true;
  std::uint64_t seed = 1;
};

struct Experiment4Config {
  std::vector<int> k{1, 4};
  std::vector<int> P{100};
  std::vector<int> n{20};
  std::vector<int> p_tilde{25};
  int q = 5;
  std::vector<double> sigma{0.02, 0.05, 0.1, 0.2, 0.5};
  int replicates = 200;
  MarketParams market;
  bool known_sigma = true;
  std::uint64_t seed = 1;
};

// Metrics t1, t2, bfdr, pmc for methods "S" and "S_tilde".
ExperimentResult run_experiment1(const Experiment1Config& cfg);
// Metrics t1, t2, bfdr, pmc for methods "abos" (S_tilde) and "f_test".
ExperimentResult run_experiment2(const Experiment2Config& cfg);
// median_return (compounded over the test window) for "oracle" and "abos".
ExperimentResult run_experiment3(const Experiment3Config& cfg);
// inclusion_prob = P(A_q within the top p_tilde by inclusion probability).
ExperimentResult run_experiment4(const Experiment4Config& cfg);

// Header: experiment,P,n,k,sigma,p,p_tilde,method,metric,value
void write_tidy(std::ostream& os, const ExperimentResult& result);

}  // namespace bop
