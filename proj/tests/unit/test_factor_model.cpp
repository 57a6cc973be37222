#include <doctest.h>

#include <random>

#include "bop/errors.hpp"
#include "bop/factor_model.hpp"
#include "bop/random.hpp"
#include "../support/oracles.hpp"

using namespace bop;

namespace {

Vector gaussian(Rng& rng, int n, double sd) { return sd * draw_normal_vector(rng, n); }

}  // namespace

TEST_CASE("build_design assembles intercept, market and extra factors") {
  Rng rng(1);
  const Vector m = gaussian(rng, 30, 0.01);

  const FactorDesign capm = build_design(m);
  CHECK(capm.k() == 1);
  CHECK(capm.x().cols() == 2);
  CHECK(capm.x().col(0).isOnes());
  CHECK(capm.mu0() == (Vector(2) << 0, 1).finished());

  const FactorDesign ff = build_design(m, {gaussian(rng, 30, 0.01), gaussian(rng, 30, 0.01)});
  CHECK(ff.k() == 3);
  CHECK(ff.x().cols() == 4);
  CHECK(is_symmetric(ff.gram()));
  Eigen::SelfAdjointEigenSolver<Matrix> es(ff.gram());
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("build_design rejects collinear and undersized designs") {
  CHECK_THROWS_AS(build_design(Vector::Constant(20, 0.01)), RankDeficient);
  Rng rng(2);
  CHECK_THROWS_AS(build_design(gaussian(rng, 2, 1.0)), RankDeficient);
  const Vector m = gaussian(rng, 10, 1.0);
  CHECK_THROWS_AS(build_design(m, {2.0 * m}), RankDeficient);
  CHECK_THROWS_AS(build_design(m, {gaussian(rng, 9, 1.0)}), RankDeficient);
}

TEST_CASE("ols_estimate interpolates exactly linear returns") {
  Rng rng(3);
  const FactorDesign d = build_design(gaussian(rng, 25, 0.01));

  const AssetEstimate null_fit = ols_estimate(d, d.x() * d.mu0());
  CHECK(null_fit.theta_hat[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(null_fit.theta_hat[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(null_fit.rss < 1e-28);

  const Vector theta = (Vector(2) << 0.02, 1.3).finished();
  const AssetEstimate fit = ols_estimate(d, d.x() * theta);
  CHECK(fit.theta_hat[0] == doctest::Approx(0.02).epsilon(1e-10));
  CHECK(fit.theta_hat[1] == doctest::Approx(1.3).epsilon(1e-10));
  CHECK(fit.rss < 1e-28);
}

TEST_CASE("ols_estimate matches an explicit-inverse normal-equations solve") {
  Rng rng(4);
  for (int rep = 0; rep < 20; ++rep) {
    const FactorDesign d =
        build_design(gaussian(rng, 40, 0.01), {gaussian(rng, 40, 1.0), gaussian(rng, 40, 1.0)});
    const Vector r = gaussian(rng, 40, 0.02);
    const AssetEstimate est = ols_estimate(d, r);
    const Vector oracle = testing::ols_by_inverse(d.x(), r);
    CHECK((est.theta_hat - oracle).cwiseAbs().maxCoeff() < 1e-10 * (1.0 + oracle.cwiseAbs().maxCoeff()));
    const double rss = (r - d.x() * oracle).squaredNorm();
    CHECK(est.rss == doctest::Approx(rss).epsilon(1e-10));
    CHECK(est.sigma2_hat == doctest::Approx(rss / (40 - 3 - 1)).epsilon(1e-10));
  }
}

TEST_CASE("idiosyncratic_bound equality and degenerate cases") {
  std::vector<double> w(100, 0.01), s(100, 0.01);
  auto b = idiosyncratic_bound(w, s);
  CHECK(b.exact == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(b.bound == doctest::Approx(1e-4).epsilon(1e-12));

  const std::vector<double> one{1.0}, var{0.04};
  b = idiosyncratic_bound(one, var);
  CHECK(b.exact == 0.04);
  CHECK(b.bound == 0.04);

  const std::vector<double> bad{0.5, 0.6}, v2{0.1, 0.1};
  CHECK_THROWS_AS(idiosyncratic_bound(bad, v2), WeightSum);
}

TEST_CASE("idiosyncratic_bound holds on random portfolios and shrinks with size") {
  Rng rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const int m = 1 + static_cast<int>(u(rng) * 50);
    std::vector<double> w(m), s(m);
    double total = 0.0;
    for (int i = 0; i < m; ++i) {
      w[i] = u(rng);
      total += w[i];
      s[i] = 0.1 * u(rng);
    }
    for (double& x : w) x /= total;
    // direct enumeration
    double exact = 0.0;
    for (int i = 0; i < m; ++i) exact += w[i] * w[i] * s[i];
    const auto b = idiosyncratic_bound(w, s);
    CHECK(b.exact == doctest::Approx(exact).epsilon(1e-12));
    CHECK(b.exact <= b.bound * (1.0 + 1e-12));
  }

  double prev = 1e300;
  for (int size : {10, 100, 1000}) {
    std::vector<double> w(size, 1.0 / size), s(size, 0.02);
    const auto b = idiosyncratic_bound(w, s);
    CHECK(b.exact == doctest::Approx(0.02 / size).epsilon(1e-9));
    CHECK(b.exact < prev);
    prev = b.exact;
  }
}
