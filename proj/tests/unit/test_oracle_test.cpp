#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "bop/errors.hpp"
#include "bop/oracle_test.hpp"
#include "bop/quadform.hpp"
#include "bop/random.hpp"
#include "../support/oracles.hpp"

using namespace bop;

namespace {

Matrix capm_lambda0() { return default_lambda0(1); }

FactorDesign random_design(Rng& rng, int n, int k) {
  std::vector<Vector> extras;
  for (int j = 1; j < k; ++j) extras.push_back(draw_normal_vector(rng, n));
  return build_design(0.01 * draw_normal_vector(rng, n), extras);
}

// Posterior mean as the minimiser of ||(r - X t)/s||^2 + (t - mu0)' L0 (t - mu0),
// solved as one stacked least-squares problem.
Vector stacked_posterior_mean(const Matrix& x, const Vector& r, double sigma, const Matrix& l0,
                              const Vector& mu0) {
  const Matrix u = Eigen::LLT<Matrix>(l0).matrixU();
  Matrix a(x.rows() + u.rows(), x.cols());
  a << x / sigma, u;
  Vector b(x.rows() + u.rows());
  b << r / sigma, u * mu0;
  return a.colPivHouseholderQr().solve(b);
}

}  // namespace

TEST_CASE("default_lambda0 layout") {
  const Matrix l = default_lambda0(3);
  CHECK(l(0, 0) == 0.5);
  CHECK(l(0, 1) == 0.3);
  CHECK(l(1, 1) == 0.7);
  CHECK(l.bottomRightCorner(2, 2).isIdentity());
  CHECK(l(0, 2) == 0.0);
}

TEST_CASE("prior and loss validation") {
  SpikeSlabPrior prior{0.0, capm_lambda0(), null_point(1)};
  CHECK_THROWS_AS(prior.validate(), ConfigError);
  prior.p = 0.2;
  CHECK_NOTHROW(prior.validate());
  CHECK(prior.odds() == doctest::Approx(4.0));
  prior.lambda0(0, 0) = -1.0;
  CHECK_THROWS_AS(prior.validate(), ConfigError);
  CHECK_THROWS_AS((LossSpec{0.0, 1.0}).validate(), ConfigError);
}

TEST_CASE("posterior_update fixed point and prior limit") {
  Rng rng(21);
  const FactorDesign d = random_design(rng, 20, 1);
  const SpikeSlabPrior prior{0.1, capm_lambda0(), d.mu0()};
  const Posterior at_null = posterior_update(prior, d, d.mu0(), 0.01);
  CHECK((at_null.mu_n - d.mu0()).cwiseAbs().maxCoeff() == 0.0);

  const SpikeSlabPrior stiff{0.1, 1e8 * Matrix::Identity(2, 2), d.mu0()};
  const Vector theta = (Vector(2) << 0.05, 1.4).finished();
  CHECK((posterior_update(stiff, d, theta, 0.01).mu_n - d.mu0()).norm() < 1e-6);
}

TEST_CASE("posterior_update matches a stacked least-squares solve") {
  Rng rng(22);
  const double sigma = 0.1;
  for (int rep = 0; rep < 20; ++rep) {
    const FactorDesign d = random_design(rng, 20, 1);
    const Vector r = d.x() * (Vector(2) << 0.01, 1.2).finished() + sigma * draw_normal_vector(rng, 20);
    const AssetEstimate est = ols_estimate(d, r);
    const SpikeSlabPrior prior{0.1, capm_lambda0(), d.mu0()};
    const Posterior post = posterior_update(prior, d, est.theta_hat, sigma * sigma);
    const Vector oracle = stacked_posterior_mean(d.x(), r, sigma, prior.lambda0, d.mu0());
    CHECK((post.mu_n - oracle).cwiseAbs().maxCoeff() < 1e-10);
    const Matrix l_oracle = prior.lambda0 + d.x().transpose() * d.x() / (sigma * sigma);
    CHECK((post.lambda_n - l_oracle).cwiseAbs().maxCoeff() < 1e-8 * l_oracle.norm());
  }
}

TEST_CASE("statistic_s zero, basis invariance, and dense quadratic form") {
  Rng rng(23);
  const Vector mu0 = null_point(1);
  CHECK(statistic_s(mu0, capm_lambda0(), mu0) == 0.0);

  const Vector mu = (Vector(2) << 0.3, 0.7).finished();
  const Matrix l = (Matrix(2, 2) << 2.0, 0.4, 0.4, 1.0).finished();
  const double angle = 0.7;
  const Matrix o = (Matrix(2, 2) << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle)).finished();
  CHECK(statistic_s(o * mu, o * l * o.transpose(), o * mu0) ==
        doctest::Approx(statistic_s(mu, l, mu0)).epsilon(1e-10));

  for (int rep = 0; rep < 10; ++rep) {
    const double sigma = 0.05;
    const FactorDesign d = random_design(rng, 20, 1);
    const Vector r = d.x() * (Vector(2) << 0.02, 0.9).finished() + sigma * draw_normal_vector(rng, 20);
    const SpikeSlabPrior prior{0.1, capm_lambda0(), d.mu0()};
    const Posterior post = posterior_update(prior, d, ols_estimate(d, r).theta_hat, sigma * sigma);
    const double s = statistic_s(post.mu_n, post.lambda_n, d.mu0());
    const Vector z = (r - d.x() * d.mu0()) / sigma;
    const double dense = z.dot(testing::dense_q(d.x(), post.lambda_n, sigma) * z);
    CHECK(s == doctest::Approx(dense).epsilon(1e-8));
  }
}

TEST_CASE("statistic_s_tilde projection properties") {
  Rng rng(24);
  const FactorDesign d = random_design(rng, 25, 3);
  CHECK(statistic_s_tilde(d, d.x() * d.mu0(), 0.1, d.mu0()) == doctest::Approx(0.0));
  // z already in the column space: projection is the identity on it
  const Vector coef = (Vector(4) << 0.3, -1.0, 0.2, 0.5).finished();
  const double sigma = 0.2;
  const Vector r = d.x() * (d.mu0() + sigma * coef);
  const Vector z = (r - d.x() * d.mu0()) / sigma;
  CHECK(statistic_s_tilde(d, r, sigma, d.mu0()) == doctest::Approx(z.squaredNorm()).epsilon(1e-10));
}

TEST_CASE("statistic_s_tilde null law is chi-square with k+1 degrees of freedom") {
  for (int k : {1, 3}) {
    Rng rng(100 + k);
    const FactorDesign d = random_design(rng, 20, k);
    std::vector<double> draws;
    for (int rep = 0; rep < 2000; ++rep) {
      const Vector r = d.x() * d.mu0() + 0.1 * draw_normal_vector(rng, 20);
      draws.push_back(statistic_s_tilde(d, r, 0.1, d.mu0()));
    }
    const double ks = testing::ks_distance(draws, [k](double x) { return testing::chi2_cdf(k + 1, x); });
    CHECK(ks < testing::ks_critical_1pct(draws.size()));
  }
}

TEST_CASE("threshold_c2 cases and Bayes-factor boundary") {
  const std::vector<double> half{0.5, 0.5};
  SpikeSlabPrior even{0.5, capm_lambda0(), null_point(1)};
  CHECK(threshold_c2(even, {}, half) == doctest::Approx(-std::log(0.25)));

  SpikeSlabPrior sparse{0.01, capm_lambda0(), null_point(1)};
  const double c2 = threshold_c2(sparse, {}, half);
  CHECK(c2 == doctest::Approx(-std::log(0.25) + 2.0 * std::log(99.0)).epsilon(1e-12));
  CHECK(c2 == doctest::Approx(10.576).epsilon(1e-4));
  // plug back: sqrt(det(I-Q)) exp(c2/2) = f delta
  CHECK(std::sqrt(0.25) * std::exp(c2 / 2.0) == doctest::Approx(99.0).epsilon(1e-12));

  SpikeSlabPrior dense{0.999, capm_lambda0(), null_point(1)};
  CHECK(threshold_c2(dense, {}, {0.1, 0.1}) < 0.0);
}

TEST_CASE("Bayes-factor identity on random instances") {
  Rng rng(25);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const std::vector<double> lam{0.05 + 0.9 * u(rng), 0.05 + 0.9 * u(rng)};
    const SpikeSlabPrior prior{0.01 + 0.5 * u(rng), capm_lambda0(), null_point(1)};
    const LossSpec loss{0.5 + u(rng), 0.5 + u(rng)};
    const double c2 = threshold_c2(prior, loss, lam);
    const double s = 30.0 * u(rng);
    const double det = (1 - lam[0]) * (1 - lam[1]);
    const bool by_factor = std::sqrt(det) * std::exp(s / 2.0) >= prior.odds() * loss.ratio();
    if (std::abs(s - c2) > 1e-9) CHECK(by_factor == (s >= c2));
  }
}

TEST_CASE("posterior_inclusion values") {
  const double p = 0.1;
  CHECK(posterior_inclusion(2.0 * std::log(9.0), p) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(posterior_inclusion(0.0, 0.5) == 0.5);
  // Bayes theorem with Bayes factor exp(s/2): p BF / (p BF + (1-p))
  const double bf = std::exp(10.0 / 2.0);
  const double direct = p * bf / (p * bf + (1.0 - p));
  CHECK(posterior_inclusion(10.0, p) == doctest::Approx(direct).epsilon(1e-14));
  CHECK(posterior_inclusion(10.0, p) == doctest::Approx(0.9428256185740149).epsilon(1e-12));
  double prev = 0.0;
  for (double s = 0.0; s < 40.0; s += 0.5) {
    const double v = posterior_inclusion(s, 0.05);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("error_probs limits and Monte Carlo agreement") {
  const std::vector<double> lam{0.3, 0.7};
  auto e = error_probs(lam, 0.0, 0.1);
  CHECK(e.t1 == 1.0);
  CHECK(e.t2 == 0.0);
  e = error_probs(lam, 1e4, 0.1);
  CHECK(e.t1 < 1e-9);
  CHECK(e.t2 > 1.0 - 1e-9);

  e = error_probs(lam, 5.0, 0.1);
  const double mc_t1 = 1.0 - qf_cdf_mc(WeightedChiSquare(lam), 5.0, 1'000'000, 5);
  const double mc_t2 = qf_cdf_mc(WeightedChiSquare({0.3 / 0.7, 0.7 / 0.3}), 5.0, 1'000'000, 6);
  CHECK(std::abs(e.t1 - mc_t1) < 0.003);
  CHECK(std::abs(e.t2 - mc_t2) < 0.003);
  const double bfdr = 0.9 * e.t1 / (0.9 * e.t1 + 0.1 * (1.0 - e.t2));
  CHECK(e.bfdr == doctest::Approx(bfdr).epsilon(1e-14));

  double t1 = 1.0, t2 = 0.0;
  for (double c2 = 0.5; c2 < 30.0; c2 += 1.5) {
    const auto x = error_probs(lam, c2, 0.1);
    CHECK(x.t1 <= t1 + 1e-12);
    CHECK(x.t2 >= t2 - 1e-12);
    t1 = x.t1;
    t2 = x.t2;
  }
}

TEST_CASE("bayes_risk additivity") {
  const SpikeSlabPrior prior{0.2, capm_lambda0(), null_point(1)};
  const LossSpec loss{2.0, 1.0};
  CHECK(bayes_risk({ErrorProfile{}, ErrorProfile{}}, prior, loss) == 0.0);
  const auto one = error_probs({0.4, 0.8}, 6.0, prior.p, loss);
  const double single = bayes_risk({one}, prior, loss);
  CHECK(single == doctest::Approx(one.risk).epsilon(1e-14));
  CHECK(bayes_risk(std::vector<ErrorProfile>(17, one), prior, loss) ==
        doctest::Approx(17.0 * single).epsilon(1e-12));
}

TEST_CASE("bfdr_threshold closed form, plug-back and feasibility") {
  const SpikeSlabPrior prior{0.01, capm_lambda0(), null_point(1)};
  // sqrt(prod(1 - l)) = 0.5
  const std::vector<double> lam{0.5, 0.5};
  const double c2 = bfdr_threshold(prior, lam, 0.05);
  CHECK(c2 == doctest::Approx(-2.0 * std::log((0.05 / 0.95) / 99.0) / 0.5).epsilon(1e-12));
  CHECK(c2 == doctest::Approx(30.16).epsilon(1e-3));
  CHECK(std::abs(bfdr_at_threshold(0.01, lam, c2) - 0.05) < 1e-10);

  // r_alpha >= f
  CHECK_THROWS_AS(bfdr_threshold(prior, lam, 0.995), Infeasible);
  const SpikeSlabPrior even{0.5, capm_lambda0(), null_point(1)};
  CHECK_THROWS_AS(bfdr_threshold(even, lam, 0.5), Infeasible);

  const std::vector<double> sharp{1.0 - 1e-9, 1.0 - 1e-9};
  CHECK(bfdr_threshold(prior, sharp, 0.05) ==
        doctest::Approx(-2.0 * std::log((0.05 / 0.95) / 99.0)).epsilon(1e-6));
}

TEST_CASE("abos_diagnostic on a constant sequence is constant") {
  Rng rng(26);
  const FactorDesign d = random_design(rng, 20, 1);
  const AsymptoticPoint pt{0.05, capm_lambda0(), 0.01, 1.0};
  const auto rows = abos_diagnostic({pt, pt, pt}, d);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.c2 == rows[0].c2);
    CHECK(r.t1 == rows[0].t1);
    CHECK(r.t2 == rows[0].t2);
    CHECK(r.v == rows[0].v);
  }
  CHECK(rows[0].c2_contraction == doctest::Approx(rows[0].c2 * rows[0].contraction));
}

TEST_CASE("f_test_baseline size and degenerate branch") {
  Rng rng(27);
  const FactorDesign d = random_design(rng, 20, 1);
  AssetEstimate exact = ols_estimate(d, d.x() * d.mu0());
  CHECK_FALSE(f_test_baseline(d, exact, 0.05));
  exact = ols_estimate(d, d.x() * (Vector(2) << 0.001, 1.0).finished());
  CHECK(f_test_baseline(d, exact, 0.05));

  int rejected = 0;
  const int reps = 10'000;
  for (int rep = 0; rep < reps; ++rep) {
    const Vector r = d.x() * d.mu0() + 0.1 * draw_normal_vector(rng, 20);
    rejected += f_test_baseline(d, ols_estimate(d, r), 0.05);
  }
  CHECK(std::abs(rejected / double(reps) - 0.05) < 0.01);

  const AssetEstimate at_null{d.mu0(), 1.0, 1.0 / 18.0, 20};
  CHECK(f_statistic(d, at_null) == 0.0);
  CHECK_FALSE(f_test_baseline(d, at_null, 0.05));
}

TEST_CASE("run_oracle_test decisions agree with inclusion probabilities") {
  Rng rng(28);
  const int n = 30, assets = 200;
  const FactorDesign d = random_design(rng, n, 1);
  ReturnsPanel panel;
  panel.excess.resize(n, assets);
  for (int j = 0; j < assets; ++j) {
    Vector theta = d.mu0();
    if (j % 4 == 0) theta += 0.1 * draw_normal_vector(rng, 2);
    panel.excess.col(j) = d.x() * theta + 0.05 * draw_normal_vector(rng, n);
    panel.assets.push_back("A" + std::to_string(j));
  }
  const SpikeSlabPrior prior{0.25, capm_lambda0(), d.mu0()};
  for (double known : {0.0, 0.0025}) {
    const auto res = run_oracle_test(prior, {}, d, panel, {Statistic::S, known});
    REQUIRE(res.size() == static_cast<std::size_t>(assets));
    for (const auto& r : res) {
      CHECK(r.reject == (r.s >= r.c2));
      CHECK(r.reject == (r.pip > 0.5));
      CHECK(r.pip > 0.0);
      CHECK(r.pip <= 1.0);
      const double det = std::exp(-threshold_c2(prior, {}, r.lambdas) + 2.0 * std::log(prior.odds()));
      double prod = 1.0;
      for (double l : r.lambdas) prod *= 1.0 - l;
      CHECK(prod == doctest::Approx(det).epsilon(1e-9));
    }
  }
  std::ostringstream os;
  write_oracle_report(os, run_oracle_test(prior, {}, d, panel));
  const std::string text = os.str();
  CHECK(text.rfind("asset,S,S_tilde,c2,pip,reject,lambda_1,lambda_2\nA0,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == assets + 1);
}
