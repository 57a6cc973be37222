#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "bop/factor_model.hpp"
#include "bop/linalg.hpp"
#include "bop/random.hpp"

namespace bop {

// Hierarchical model:
//   r_i | theta_i, s2_i ~ N(X theta_i, s2_i I)
//   theta_i | theta0, Lambda, tau ~ N(theta0, tau^2 Lambda^{-1})
//   s2_i ~ InvGamma(nu0/2, nu0/2),  Lambda ~ Wishart((rho R)^{-1}, rho)
//   theta0 ~ N(mu0, C),  tau ~ half-Cauchy(0, 1)
struct HBPrior {
  double nu0 = 1.0;
  double rho = 4.0;
  Matrix R;
  Vector mu0;
  Matrix C;

  // nu0 = 1, rho = k+3, R = I, C = 100 I, mu0 = null point.
  static HBPrior defaults(int k);
  void validate() const;  // throws ConfigError
};

struct HBState {
  Matrix thetas;  // P x (k+1), row i is theta_i
  Vector sigma2s;
  Matrix lambda;
  Vector theta0;
  double tau2 = 1.0;

  Eigen::Index assets() const { return thetas.rows(); }
};

// Per-asset sufficient statistics X^T r_i and r_i^T r_i, shared by every
// conditional so a sweep never touches the raw n x P panel.
class HBData {
 public:
  HBData(const FactorDesign& design, const ReturnsPanel& panel);

  const Matrix& gram() const { return gram_; }
  const Matrix& xtr() const { return xtr_; }  // (k+1) x P
  const Vector& rtr() const { return rtr_; }
  Eigen::Index days() const { return n_; }
  Eigen::Index assets() const { return xtr_.cols(); }
  int dim() const { return static_cast<int>(gram_.rows()); }

  double rss(Eigen::Index i, const Vector& theta) const;

 private:
  Matrix gram_;
  Matrix xtr_;
  Vector rtr_;
  Eigen::Index n_ = 0;
};

Vector gibbs_theta_i(Rng& rng, const HBState& state, const HBData& data, Eigen::Index i);
double gibbs_sigma2_i(Rng& rng, const HBState& state, const HBPrior& prior, const HBData& data,
                      Eigen::Index i);
Matrix gibbs_lambda(Rng& rng, const HBState& state, const HBPrior& prior);
Vector gibbs_theta0(Rng& rng, const HBState& state, const HBPrior& prior);

// Log of the tau target in eta = log(tau), including the Jacobian.
double tau_log_target(const HBState& state, double tau2);

// Metropolis log acceptance ratio for moving tau2 -> proposed_tau2 under a
// symmetric random walk on log(tau).
double mh_log_accept_ratio(const HBState& state, double proposed_tau2);

struct MhStep {
  double tau2 = 1.0;
  bool accepted = false;
};

MhStep mh_tau(Rng& rng, const HBState& state, double proposal_scale);

struct ChainOptions {
  int iterations = 2000;
  int burn_in = 500;
  int stride = 1;
  std::uint64_t seed = 1;
  double proposal_scale = 0.5;  // initial scale on log(tau)
  double target_accept = 0.4;   // tuning target, burn-in only
};

struct PosteriorDraws {
  std::vector<HBState> states;
  std::vector<std::string> assets;
  int burn_in = 0;
  int stride = 1;
  std::uint64_t seed = 0;
  double proposal_scale = 0.0;  // frozen value after burn-in
  double accept_rate = 0.0;     // post burn-in MH acceptance
};

HBState initial_state(const HBData& data, const HBPrior& prior, const FactorDesign& design);

PosteriorDraws run_chain(const ReturnsPanel& panel, const FactorDesign& design,
                         const HBPrior& prior, const ChainOptions& options);

// Divides every return series (assets, market and extra factors) by the
// median OLS residual SD so the unit-scale residual-variance prior matches
// the data, samples, then maps the draws back to the original units. Common
// scaling leaves the null point and every loading except the intercept
// unchanged.
struct StandardizedDraws {
  PosteriorDraws draws;
  double scale = 1.0;  // multiplier applied to the return series
};

StandardizedDraws run_chain_standardized(const ReturnsPanel& panel, const Vector& market,
                                         const std::vector<Vector>& factors, const HBPrior& prior,
                                         const ChainOptions& options);

struct RankedAsset {
  Eigen::Index index = 0;
  double prob_positive = 0.0;  // posterior P(alpha_i > 0)
  double mean_alpha = 0.0;
};

// Top p_tilde assets by P(alpha > 0), ties broken by posterior mean alpha
// then index. Throws InsufficientDraws below 100 retained draws.
std::vector<RankedAsset> hb_select(const PosteriorDraws& draws, Eigen::Index p_tilde);

// Long-format trace: iteration,parameter,value.
void write_trace(std::ostream& os, const PosteriorDraws& draws);

}  // namespace bop
