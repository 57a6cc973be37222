#pragma once

#include <span>

#include "bop/linalg.hpp"

namespace bop {

// r_t = mu + e_t, h_t = omega + a e_{t-1}^2 + b h_{t-1}, h_1 = sample variance.
struct GarchFit {
  double mu = 0.0;
  double omega = 0.0;
  double a = 0.0;
  double b = 0.0;
  Vector cond_var;
  double log_likelihood = 0.0;
  // Asymptotic standard errors of (mu, omega, a, b) from the observed
  // information; NaN when the Hessian is not negative definite.
  Vector se;
  bool converged = true;  // false for the sample-variance fallback
};

// Gaussian quasi-likelihood, dropping the 2 pi constant.
double garch_log_likelihood(std::span<const double> returns, double mu, double omega, double a,
                            double b);

// Conditional variance path for fixed parameters.
Vector garch_filter(std::span<const double> returns, double mu, double omega, double a, double b);

// Multi-start Nelder-Mead maximum likelihood with a + b < 1 enforced by
// the parameterisation. Throws InsufficientData below 50 observations and
// NonConvergence when every start fails or the data are degenerate.
GarchFit garch_fit(std::span<const double> returns);

// garch_fit, falling back to a constant sample variance on NonConvergence.
GarchFit garch_fit_or_fallback(std::span<const double> returns);

}  // namespace bop
