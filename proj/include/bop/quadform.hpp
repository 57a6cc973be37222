#pragma once

#include <cstdint>
#include <vector>

#include "bop/linalg.hpp"

namespace bop {

// Law of sum_j w_j Z_j^2 with Z_j iid N(0,1) and w_j > 0.
class WeightedChiSquare {
 public:
  // Throws std::invalid_argument on an empty list or non-positive weights.
  explicit WeightedChiSquare(std::vector<double> weights);

  const std::vector<double>& weights() const { return weights_; }
  double mean() const;

 private:
  std::vector<double> weights_;
};

// P(sum w_j Z_j^2 <= c2) by inverting the characteristic function (Imhof).
// Weights below 1e-12 are treated as zero. Throws IntegrationFailure if the
// oscillatory tail does not settle to the 1e-6 target.
double qf_cdf(const WeightedChiSquare& dist, double c2);

// Empirical CDF over `draws` simulated values; deterministic in `seed`.
double qf_cdf_mc(const WeightedChiSquare& dist, double c2, std::uint64_t draws,
                 std::uint64_t seed);

// Nonzero spectrum of Q = (X/s) lambda_n^{-1} (X/s)^T, taken from the
// (k+1)x(k+1) generalized problem (sigma_x / sigma2) v = l lambda_n v.
// Returned ascending. Throws NumericalRange if any value leaves (0,1) by
// more than 1e-10.
std::vector<double> eigen_weights(const Matrix& lambda_n, const Matrix& sigma_x, double sigma2);

}  // namespace bop
