#include "bop/factor_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "bop/errors.hpp"

namespace bop {

Vector null_point(int k) {
  if (k < 1) throw std::invalid_argument("null_point: k must be >= 1");
  Vector mu = Vector::Zero(k + 1);
  mu[1] = 1.0;
  return mu;
}

FactorDesign build_design(const Vector& market, const std::vector<Vector>& extra_factors) {
  const Eigen::Index n = market.size();
  const Eigen::Index cols = 2 + static_cast<Eigen::Index>(extra_factors.size());
  for (const auto& f : extra_factors) {
    if (f.size() != n) throw RankDeficient("build_design: factor length differs from market");
  }
  if (n <= cols) {
    throw RankDeficient("build_design: need n > k+1 observations (n=" + std::to_string(n) +
                        ", k+1=" + std::to_string(cols) + ")");
  }
  FactorDesign d;
  d.x_.resize(n, cols);
  d.x_.col(0).setOnes();
  d.x_.col(1) = market;
  for (std::size_t j = 0; j < extra_factors.size(); ++j) {
    d.x_.col(2 + static_cast<Eigen::Index>(j)) = extra_factors[j];
  }
  d.gram_ = d.x_.transpose() * d.x_;
  d.gram_llt_ = spd_cholesky(d.gram_, "design Gram matrix");
  return d;
}

AssetEstimate ols_estimate(const FactorDesign& design, const Vector& returns) {
  if (returns.size() != design.days()) {
    throw std::invalid_argument("ols_estimate: return series length differs from design");
  }
  AssetEstimate est;
  est.n = returns.size();
  est.theta_hat = design.gram_llt().solve(design.x().transpose() * returns);
  const Vector resid = returns - design.x() * est.theta_hat;
  est.rss = resid.squaredNorm();
  est.sigma2_hat = est.rss / static_cast<double>(est.n - design.k() - 1);
  return est;
}

IdiosyncraticBound idiosyncratic_bound(std::span<const double> weights,
                                       std::span<const double> sigma2s) {
  if (weights.size() != sigma2s.size() || weights.empty()) {
    throw std::invalid_argument("idiosyncratic_bound: weights and variances must match");
  }
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw WeightSum("idiosyncratic_bound: weights sum to " + std::to_string(total));
  }
  IdiosyncraticBound out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] < 0.0 || sigma2s[i] < 0.0) {
      throw std::invalid_argument("idiosyncratic_bound: negative weight or variance");
    }
    out.exact += weights[i] * weights[i] * sigma2s[i];
  }
  out.bound = *std::max_element(sigma2s.begin(), sigma2s.end()) *
              *std::max_element(weights.begin(), weights.end());
  return out;
}

}  // namespace bop
