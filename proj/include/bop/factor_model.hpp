#pragma once

#include <span>
#include <string>
#include <vector>

#include "bop/linalg.hpp"

namespace bop {

// Daily excess returns, n days by P assets. Column j belongs to assets[j].
struct ReturnsPanel {
  std::vector<std::string> dates;
  std::vector<std::string> assets;
  Matrix excess;

  Eigen::Index days() const { return excess.rows(); }
  Eigen::Index size() const { return excess.cols(); }
};

// Null point (0, 1, 0, ..., 0) of length k+1: zero intercept, unit market
// loading, zero loadings on every other factor.
Vector null_point(int k);

// Design [1 | market | extras] and its Gram matrix X^T X.
class FactorDesign {
 public:
  const Matrix& x() const { return x_; }
  const Matrix& gram() const { return gram_; }
  // Cached Cholesky of the Gram matrix.
  const Eigen::LLT<Matrix>& gram_llt() const { return gram_llt_; }
  int k() const { return static_cast<int>(x_.cols()) - 1; }
  Eigen::Index days() const { return x_.rows(); }
  Vector mu0() const { return null_point(k()); }

 private:
  friend FactorDesign build_design(const Vector& market, const std::vector<Vector>& extra_factors);
  Matrix x_;
  Matrix gram_;
  Eigen::LLT<Matrix> gram_llt_;
};

// Throws RankDeficient on mismatched lengths, n <= k+1, or a singular Gram
// matrix (collinear factors).
FactorDesign build_design(const Vector& market, const std::vector<Vector>& extra_factors = {});

struct AssetEstimate {
  Vector theta_hat;
  double rss = 0.0;
  double sigma2_hat = 0.0;  // rss / (n - k - 1)
  Eigen::Index n = 0;
};

AssetEstimate ols_estimate(const FactorDesign& design, const Vector& returns);

struct IdiosyncraticBound {
  double exact = 0.0;  // sum w_i^2 sigma_i^2
  double bound = 0.0;  // max(sigma^2) * max(w)
};

// Idiosyncratic variance of a long-only portfolio and its max-weight bound.
// Throws WeightSum if the weights do not sum to one within 1e-9.
IdiosyncraticBound idiosyncratic_bound(std::span<const double> weights,
                                       std::span<const double> sigma2s);

}  // namespace bop
