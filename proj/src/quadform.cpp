#include "bop/quadform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>

#include "bop/errors.hpp"
#include "bop/random.hpp"

namespace bop {

namespace {

constexpr double kDropWeight = 1e-12;
constexpr double kEigenTol = 1e-10;
constexpr std::size_t kMaxTailTerms = 200000;
constexpr int kWynnWindow = 21;

// Imhof integrand pieces for the central case with unit multiplicities.
struct Imhof {
  std::vector<double> w;
  double x;

  double theta(double u) const {
    double s = 0.0;
    for (double wj : w) s += std::atan(wj * u);
    return 0.5 * s - 0.5 * x * u;
  }

  // theta'(u) * 2
  double slope2(double u) const {
    double s = 0.0;
    for (double wj : w) s += wj / (1.0 + wj * wj * u * u);
    return s - x;
  }

  double integrand(double u) const {
    if (u <= 0.0) return 0.5 * (std::accumulate(w.begin(), w.end(), 0.0) - x);
    double log_rho = 0.0;
    for (double wj : w) log_rho += std::log1p(wj * wj * u * u);
    log_rho *= 0.25;
    return std::sin(theta(u)) / (u * std::exp(log_rho));
  }
};

// Adaptive bisection comparing 15- and 30-point Gauss-Legendre rules.
// Accepts a span once the rules agree to 1e-14 absolute or 1e-12 relative.
double integrate_span(const Imhof& f, double a, double b, int depth = 20) {
  auto g = [&f](double u) { return f.integrand(u); };
  const double coarse = boost::math::quadrature::gauss<double, 15>::integrate(g, a, b);
  const double fine = boost::math::quadrature::gauss<double, 30>::integrate(g, a, b);
  const double err = std::abs(fine - coarse);
  if (err <= std::max(1e-14, 1e-12 * std::abs(fine)) || depth == 0) return fine;
  const double mid = 0.5 * (a + b);
  return integrate_span(f, a, mid, depth - 1) + integrate_span(f, mid, b, depth - 1);
}

// The integrand changes shape near u = 1/w_j; splitting there keeps each
// span smooth enough for Gauss-Kronrod to reach tolerance cheaply.
double integrate_piece(const Imhof& f, double a, double b) {
  if (b <= a) return 0.0;
  std::vector<double> cuts{a};
  for (double w : f.w) {
    for (double c : {0.1, 1.0, 10.0}) {
      const double u = c / w;
      if (u > a && u < b) cuts.push_back(u);
    }
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.push_back(b);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) total += integrate_span(f, cuts[i], cuts[i + 1]);
  return total;
}

// Solve theta(u) = target on a bracket where theta is monotone.
double solve_phase(const Imhof& f, double target, double lo, double hi) {
  auto h = [&](double u) { return f.theta(u) - target; };
  boost::uintmax_t iters = 200;
  auto tol = boost::math::tools::eps_tolerance<double>(52);
  auto r = boost::math::tools::toms748_solve(h, lo, hi, tol, iters);
  return 0.5 * (r.first + r.second);
}

// Wynn epsilon on a window of partial sums (odd length), returns the
// highest even-column entry.
double wynn_epsilon(const std::vector<double>& s) {
  const std::size_t n = s.size();
  std::vector<double> prev(n + 1, 0.0);  // eps_{k-1}
  std::vector<double> cur(s);            // eps_k
  double best = s.back();
  for (std::size_t k = 1; k < n; ++k) {
    std::vector<double> next(n - k);
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
      const double d = cur[i + 1] - cur[i];
      if (d == 0.0 || !std::isfinite(d)) return best;
      next[i] = prev[i + 1] + 1.0 / d;
    }
    prev = std::move(cur);
    cur = std::move(next);
    if (k % 2 == 0) best = cur.back();
  }
  return best;
}

}  // namespace

WeightedChiSquare::WeightedChiSquare(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw std::invalid_argument("WeightedChiSquare: no weights");
  for (double w : weights_) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("WeightedChiSquare: weights must be positive and finite");
    }
  }
}

double WeightedChiSquare::mean() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0);
}

double qf_cdf(const WeightedChiSquare& dist, double c2) {
  if (std::isnan(c2)) throw std::invalid_argument("qf_cdf: threshold is NaN");
  if (c2 <= 0.0) return 0.0;
  if (std::isinf(c2)) return 1.0;

  Imhof f;
  f.x = c2;
  for (double w : dist.weights()) {
    if (w >= kDropWeight) f.w.push_back(w);
  }
  if (f.w.empty()) return 1.0;

  // theta is concave: it rises to its maximum at u_star, then falls without
  // bound. sin(theta) changes sign only where theta crosses a multiple of pi.
  double u_star = 0.0;
  const double total = std::accumulate(f.w.begin(), f.w.end(), 0.0);
  if (total > c2) {
    double inv_sum = 0.0;
    for (double w : f.w) inv_sum += 1.0 / w;
    double hi = std::sqrt(inv_sum / c2) + 1.0;
    auto h = [&f](double u) { return f.slope2(u); };
    boost::uintmax_t iters = 200;
    auto r = boost::math::tools::toms748_solve(h, 0.0, hi, boost::math::tools::eps_tolerance<double>(52), iters);
    u_star = 0.5 * (r.first + r.second);
  }
  const double theta_max = f.theta(u_star);
  const double pi = std::numbers::pi;
  const double m = static_cast<double>(f.w.size());

  // Head: [0, first zero past u_star], split at interior sign changes.
  double head = 0.0;
  double a = 0.0;
  if (theta_max > pi) {
    for (int j = 1; j * pi < theta_max; ++j) {
      const double z = solve_phase(f, j * pi, a, u_star);
      head += integrate_piece(f, a, z);
      a = z;
    }
  }
  head += integrate_piece(f, a, u_star);
  a = u_star;

  // On the falling branch theta(u) < m*pi/4 - c2*u/2 gives an upper bracket.
  int j = static_cast<int>(std::ceil(theta_max / pi)) - 1;
  if (j * pi >= theta_max) --j;
  auto next_zero = [&](double from, int jj) {
    const double target = jj * pi;
    double hi = std::max(from, (m * pi * 0.5 - 2.0 * target) / c2) + 1e-12;
    while (f.theta(hi) > target) hi = 2.0 * hi + 1.0;
    return solve_phase(f, target, from, hi);
  };

  double z = next_zero(a, j);
  head += integrate_piece(f, a, z);
  a = z;

  std::vector<double> partial{head};
  double estimate = head;
  double prev_estimate = std::numeric_limits<double>::quiet_NaN();
  int stable = 0;
  for (std::size_t t = 0; t < kMaxTailTerms; ++t) {
    --j;
    const double b = next_zero(a, j);
    const double term = integrate_piece(f, a, b);
    a = b;
    partial.push_back(partial.back() + term);

    if (partial.size() >= static_cast<std::size_t>(kWynnWindow)) {
      std::vector<double> window(partial.end() - kWynnWindow, partial.end());
      estimate = wynn_epsilon(window);
    } else {
      estimate = partial.back();
    }
    if (std::abs(term) < 1e-15) {
      estimate = partial.back();
      break;
    }
    if (std::isfinite(prev_estimate) && std::abs(estimate - prev_estimate) < 1e-10) {
      if (++stable >= 3) break;
    } else {
      stable = 0;
    }
    prev_estimate = estimate;
    if (t + 1 == kMaxTailTerms) {
      throw IntegrationFailure("qf_cdf: oscillatory tail did not converge");
    }
  }
  if (!std::isfinite(estimate)) throw IntegrationFailure("qf_cdf: non-finite integral");

  double cdf = 0.5 - estimate / pi;
  if (cdf < -1e-6 || cdf > 1.0 + 1e-6) {
    throw IntegrationFailure("qf_cdf: result outside [0,1]: " + std::to_string(cdf));
  }
  return std::clamp(cdf, 0.0, 1.0);
}

double qf_cdf_mc(const WeightedChiSquare& dist, double c2, std::uint64_t draws,
                 std::uint64_t seed) {
  if (draws == 0) throw std::invalid_argument("qf_cdf_mc: draws must be >= 1");
  if (c2 <= 0.0) return 0.0;
  Rng rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  const auto& w = dist.weights();
  std::uint64_t hits = 0;
  for (std::uint64_t d = 0; d < draws; ++d) {
    double s = 0.0;
    for (double wj : w) {
      const double z = n01(rng);
      s += wj * z * z;
    }
    if (s <= c2) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(draws);
}

std::vector<double> eigen_weights(const Matrix& lambda_n, const Matrix& sigma_x, double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("eigen_weights: sigma2 must be positive");
  spd_cholesky(lambda_n, "posterior precision");
  const Matrix a = sigma_x / sigma2;
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> es(a, lambda_n);
  if (es.info() != Eigen::Success) {
    throw NumericalRange("eigen_weights: generalized eigensolver failed");
  }
  std::vector<double> out(es.eigenvalues().data(),
                          es.eigenvalues().data() + es.eigenvalues().size());
  for (double& l : out) {
    if (l <= -kEigenTol || l >= 1.0 + kEigenTol || !std::isfinite(l)) {
      throw NumericalRange("eigen_weights: eigenvalue " + std::to_string(l) +
                           " outside (0,1)");
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace bop
