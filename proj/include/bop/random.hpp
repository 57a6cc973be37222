#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "bop/linalg.hpp"

namespace bop {

using Rng = std::mt19937_64;

// Seed derivation: one master seed fans out into independent streams keyed
// by (component, index). splitmix64 over master ^ fnv1a(component) ^ mix(index).
std::uint64_t derive_seed(std::uint64_t master, std::string_view component,
                          std::uint64_t index = 0);

double draw_normal(Rng& rng);
Vector draw_normal_vector(Rng& rng, Eigen::Index n);

// Gamma(shape, rate = 1).
double draw_gamma(Rng& rng, double shape);

// InvGamma(shape, scale): 1/X with X ~ Gamma(shape, rate = scale).
double draw_inv_gamma(Rng& rng, double shape, double scale);

// N(mean, prec^{-1}) given the lower Cholesky factor L of the precision
// (prec = L L^T): mean + L^{-T} z.
Vector draw_mvn_precision(Rng& rng, const Vector& mean, const Eigen::LLT<Matrix>& prec_llt);

// N(mean, cov) given the lower Cholesky factor of the covariance.
Vector draw_mvn_covariance(Rng& rng, const Vector& mean, const Eigen::LLT<Matrix>& cov_llt);

// Wishart(scale, df) with E[W] = df * scale, via the Bartlett decomposition.
// Requires df > dim - 1.
Matrix draw_wishart(Rng& rng, const Matrix& scale, double df);

}  // namespace bop
