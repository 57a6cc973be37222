#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>

#include "bop/errors.hpp"
#include "bop/market_sim.hpp"
#include "bop/oracle_test.hpp"
#include "../support/oracles.hpp"

using namespace bop;

namespace {

double value_of(const ExperimentResult& r, const std::string& method, const std::string& metric,
                const std::function<bool(const ResultRow&)>& where = {}) {
  const auto rows = r.select([&](const ResultRow& x) {
    return x.method == method && x.metric == metric && (!where || where(x));
  });
  REQUIRE(rows.size() == 1);
  return rows.front().value;
}

}  // namespace

TEST_CASE("simulate_market planted set sizes") {
  SimConfig cfg;
  cfg.P = 100;
  cfg.p = 0.0;
  auto m = simulate_market(cfg);
  CHECK(m.oracle_set.empty());
  for (Eigen::Index i = 0; i < 100; ++i) CHECK(m.truth.row(i) == null_point(1).transpose());

  cfg.p = 1.0;
  m = simulate_market(cfg);
  CHECK(m.oracle_set.size() == 100);

  cfg.p = 0.05;
  m = simulate_market(cfg);
  CHECK(m.oracle_set.size() == 5);
  CHECK(cfg.planted() == 5);
  for (Eigen::Index i = 5; i < 100; ++i) CHECK(m.truth.row(i) == null_point(1).transpose());
  CHECK(m.panel.excess.rows() == cfg.n);
  CHECK(m.panel.excess.cols() == 100);

  const auto again = simulate_market(cfg);
  CHECK(again.panel.excess == m.panel.excess);
  CHECK(again.truth == m.truth);

  SimConfig four = cfg;
  four.k = 4;
  four.n = 30;
  const auto m4 = simulate_market(four);
  CHECK(m4.design.x().cols() == 5);
  CHECK(m4.truth.cols() == 5);

  cfg.n = 2;
  CHECK_THROWS_AS(simulate_market(cfg), ConfigError);
}

TEST_CASE("noise-free returns are exactly linear in the truth") {
  SimConfig cfg;
  cfg.sigma = 0.0;
  cfg.p = 0.2;
  const auto m = simulate_market(cfg);
  const Matrix fitted = m.design.x() * m.truth.transpose();
  CHECK((m.panel.excess - fitted).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("Confusion rates and the misclassification identity") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 100; ++rep) {
    Confusion c;
    const int total = 1 + static_cast<int>(u(rng) * 300);
    for (int i = 0; i < total; ++i) c.add(u(rng) < 0.3, u(rng) < 0.4);
    const double p_hat = static_cast<double>(c.alts) / total;
    const double identity = (1.0 - p_hat) * c.t1() + p_hat * c.t2();
    CHECK(std::abs(c.pmc() - identity) < 1e-12);
  }
  Confusion none;
  none.add(false, false);
  CHECK(none.bfdr() == 0.0);
  CHECK(none.t2() == 0.0);
}

TEST_CASE("aggregate metrics do not depend on asset order") {
  SimConfig cfg;
  cfg.P = 60;
  cfg.p = 0.2;
  cfg.seed = 11;
  const auto m = simulate_market(cfg);
  const SpikeSlabPrior prior{0.2, default_lambda0(1), null_point(1)};
  OracleTestOptions o;
  o.known_sigma2 = cfg.sigma * cfg.sigma;
  std::vector<Eigen::Index> perm(60);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(12);
  std::shuffle(perm.begin(), perm.end(), rng);
  ReturnsPanel shuffled = m.panel;
  for (int j = 0; j < 60; ++j) shuffled.excess.col(j) = m.panel.excess.col(perm[j]);

  const auto a = run_oracle_test(prior, {}, m.design, m.panel, o);
  const auto b = run_oracle_test(prior, {}, m.design, shuffled, o);
  Confusion ca, cb;
  for (int j = 0; j < 60; ++j) {
    ca.add(j < cfg.planted(), a[j].reject);
    cb.add(perm[j] < cfg.planted(), b[j].reject);
  }
  CHECK(ca.t1() == cb.t1());
  CHECK(ca.t2() == cb.t2());
  CHECK(ca.bfdr() == cb.bfdr());
  CHECK(ca.pmc() == cb.pmc());
}

TEST_CASE("experiment 1 smoke run emits one row per grid point, method and metric") {
  Experiment1Config cfg;
  cfg.P = {20};
  cfg.n = {20};
  cfg.sigma = {0.1};
  cfg.p = {0.1, 0.3};
  cfg.replicates = 1;
  const auto r = run_experiment1(cfg);
  CHECK(r.rows.size() == 2 * 2 * 4);
  for (const auto& row : r.rows) {
    CHECK(row.value >= 0.0);
    CHECK(row.value <= 1.0);
  }
  std::ostringstream os;
  write_tidy(os, r);
  CHECK(os.str().rfind("experiment,P,n,k,sigma,p,p_tilde,method,metric,value\n1,20,20,1,0.1", 0) == 0);

  cfg.replicates = 0;
  CHECK_THROWS_AS(run_experiment1(cfg), ConfigError);
}

TEST_CASE("experiment 1 noise-free market separates perfectly") {
  Experiment1Config cfg;
  cfg.P = {50};
  cfg.n = {20};
  cfg.sigma = {0.0};
  cfg.p = {0.06, 0.46, 0.86};
  cfg.replicates = 3;
  const auto r = run_experiment1(cfg);
  for (const auto& row : r.select([](const ResultRow& x) { return x.metric == "pmc"; })) {
    CHECK(row.value == 0.0);
  }
}

TEST_CASE("experiment 1 sparse type-I error stays small") {
  Experiment1Config cfg;
  cfg.P = {100};
  cfg.n = {50};
  cfg.sigma = {0.05};
  cfg.p = {0.01};
  cfg.replicates = 200;
  const auto r = run_experiment1(cfg);
  CHECK(value_of(r, "S", "t1") < 0.05);
  CHECK(value_of(r, "S_tilde", "t1") < 0.05);
}

TEST_CASE("experiment 2 arms") {
  Experiment2Config cfg;
  cfg.P = 200;
  cfg.p = {0.01, 0.5};
  cfg.replicates = 20;
  const auto r = run_experiment2(cfg);
  for (double p : {0.01, 0.5}) {
    auto at = [p](const ResultRow& x) { return x.p == p; };
    CHECK(std::abs(value_of(r, "f_test", "t1", at) - 0.05) < 0.02);
  }
  auto sparse = [](const ResultRow& x) { return x.p == 0.01; };
  CHECK(value_of(r, "abos", "t1", sparse) < value_of(r, "f_test", "t1", sparse));

  cfg.sigma = 0.0;
  cfg.replicates = 2;
  const auto clean = run_experiment2(cfg);
  for (const auto& row : clean.select([](const ResultRow& x) { return x.metric == "pmc"; })) {
    CHECK(row.value == 0.0);
  }
}

TEST_CASE("experiment 3 degenerate portfolios agree") {
  Experiment3Config cfg;
  cfg.P = 100;
  cfg.q = 5;
  cfg.p_tilde = {20};
  cfg.sigma = {0.0};
  cfg.replicates = 21;
  auto r = run_experiment3(cfg);
  CHECK(value_of(r, "oracle", "median_return") ==
        doctest::Approx(value_of(r, "abos", "median_return")).epsilon(1e-12));

  cfg.sigma = {0.03};
  cfg.p_tilde = {100};
  r = run_experiment3(cfg);
  CHECK(value_of(r, "oracle", "median_return") ==
        doctest::Approx(value_of(r, "abos", "median_return")).epsilon(1e-12));

  cfg.p_tilde = {3};
  CHECK_THROWS_AS(run_experiment3(cfg), ConfigError);
}

TEST_CASE("experiment 4 inclusion-probability limits") {
  Experiment4Config cfg;
  cfg.k = {1, 4};
  cfg.sigma = {1e-8};
  cfg.replicates = 20;
  auto r = run_experiment4(cfg);
  for (const auto& row : r.rows) CHECK(row.value == 1.0);

  // at huge noise the ranking is a random subset
  cfg.k = {1};
  cfg.P = {100};
  cfg.q = 2;
  cfg.p_tilde = {50};
  cfg.sigma = {1e3};
  cfg.replicates = 2000;
  r = run_experiment4(cfg);
  const double chance = testing::hypergeometric_containment(100, 2, 50);
  CHECK(chance == doctest::Approx(0.2474747474747475).epsilon(1e-12));
  const double se = std::sqrt(chance * (1.0 - chance) / 2000.0);
  CHECK(std::abs(r.rows.front().value - chance) < 3.0 * se);
}
