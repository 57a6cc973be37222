#include "bop/hb_sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "bop/errors.hpp"
#include "bop/format.hpp"

namespace bop {

HBPrior HBPrior::defaults(int k) {
  const int m = k + 1;
  HBPrior p;
  p.nu0 = 1.0;
  p.rho = static_cast<double>(k + 3);
  p.R = Matrix::Identity(m, m);
  p.mu0 = null_point(k);
  p.C = 100.0 * Matrix::Identity(m, m);
  return p;
}

void HBPrior::validate() const {
  const Eigen::Index m = mu0.size();
  if (!(nu0 > 0.0)) throw ConfigError("hb prior: nu0 must be positive");
  if (R.rows() != m || R.cols() != m || C.rows() != m || C.cols() != m) {
    throw ConfigError("hb prior: R and C must be (k+1)x(k+1)");
  }
  if (!(rho >= static_cast<double>(m))) throw ConfigError("hb prior: rho must be at least k+1");
  if (!is_symmetric(R) || Eigen::LLT<Matrix>(R).info() != Eigen::Success) {
    throw ConfigError("hb prior: R must be symmetric positive definite");
  }
  if (!is_symmetric(C) || Eigen::LLT<Matrix>(C).info() != Eigen::Success) {
    throw ConfigError("hb prior: C must be symmetric positive definite");
  }
}

HBData::HBData(const FactorDesign& design, const ReturnsPanel& panel)
    : gram_(design.gram()),
      xtr_(design.x().transpose() * panel.excess),
      rtr_(panel.excess.colwise().squaredNorm().transpose()),
      n_(design.days()) {
  if (panel.days() != design.days()) {
    throw DataError("hb: returns panel and design cover different numbers of days");
  }
}

double HBData::rss(Eigen::Index i, const Vector& theta) const {
  const double v = rtr_[i] - 2.0 * theta.dot(xtr_.col(i)) + theta.dot(gram_ * theta);
  return std::max(0.0, v);
}

Vector gibbs_theta_i(Rng& rng, const HBState& state, const HBData& data, Eigen::Index i) {
  const double s2 = state.sigma2s[i];
  const Matrix shrink = state.lambda / state.tau2;
  const Matrix prec = data.gram() / s2 + shrink;
  const auto llt = spd_cholesky(prec, "theta_i precision");
  const Vector b = data.xtr().col(i) / s2 + shrink * state.theta0;
  return draw_mvn_precision(rng, llt.solve(b), llt);
}

double gibbs_sigma2_i(Rng& rng, const HBState& state, const HBPrior& prior, const HBData& data,
                      Eigen::Index i) {
  const double n = static_cast<double>(data.days());
  const double rss = data.rss(i, state.thetas.row(i).transpose());
  return draw_inv_gamma(rng, 0.5 * (prior.nu0 + n), 0.5 * (prior.nu0 + rss));
}

Matrix gibbs_lambda(Rng& rng, const HBState& state, const HBPrior& prior) {
  const Eigen::Index p = state.assets();
  Matrix scatter = prior.rho * prior.R;
  if (p > 0) {
    const Matrix dev = state.thetas.rowwise() - state.theta0.transpose();
    scatter += dev.transpose() * dev / state.tau2;
  }
  const Matrix scale = spd_inverse(scatter, "lambda scale");
  return draw_wishart(rng, scale, static_cast<double>(p) + prior.rho);
}

Vector gibbs_theta0(Rng& rng, const HBState& state, const HBPrior& prior) {
  const Eigen::Index p = state.assets();
  const Matrix c_inv = spd_inverse(prior.C, "theta0 prior covariance");
  Matrix prec = c_inv;
  Vector b = c_inv * prior.mu0;
  if (p > 0) {
    prec += static_cast<double>(p) * state.lambda / state.tau2;
    b += state.lambda * state.thetas.colwise().sum().transpose() / state.tau2;
  }
  const auto llt = spd_cholesky(prec, "theta0 precision");
  return draw_mvn_precision(rng, llt.solve(b), llt);
}

double tau_log_target(const HBState& state, double tau2) {
  const double log_tau = 0.5 * std::log(tau2);
  const double m = static_cast<double>(state.lambda.rows());
  const double p = static_cast<double>(state.assets());
  double q = 0.0;
  for (Eigen::Index i = 0; i < state.assets(); ++i) {
    const Vector d = state.thetas.row(i).transpose() - state.theta0;
    q += d.dot(state.lambda * d);
  }
  // half-Cauchy(tau) * tau (Jacobian) * prod_i N(theta_i; theta0, tau^2 Lambda^{-1})
  return -std::log1p(tau2) + log_tau - m * p * log_tau - 0.5 * q / tau2;
}

double mh_log_accept_ratio(const HBState& state, double proposed_tau2) {
  return tau_log_target(state, proposed_tau2) - tau_log_target(state, state.tau2);
}

MhStep mh_tau(Rng& rng, const HBState& state, double proposal_scale) {
  if (!(proposal_scale > 0.0)) throw std::invalid_argument("mh_tau: proposal scale must be positive");
  const double log_tau = 0.5 * std::log(state.tau2) + proposal_scale * draw_normal(rng);
  const double proposed = std::exp(2.0 * log_tau);
  if (!(proposed > 0.0) || !std::isfinite(proposed)) return {state.tau2, false};
  const double log_ratio = mh_log_accept_ratio(state, proposed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (log_ratio >= 0.0 || std::log(u(rng)) < log_ratio) return {proposed, true};
  return {state.tau2, false};
}

HBState initial_state(const HBData& data, const HBPrior& prior, const FactorDesign& design) {
  const Eigen::Index p = data.assets();
  const int m = data.dim();
  const double df = static_cast<double>(data.days() - m);
  HBState s;
  s.thetas.resize(p, m);
  s.sigma2s.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    const Vector theta = design.gram_llt().solve(data.xtr().col(i));
    s.thetas.row(i) = theta.transpose();
    const double s2 = df > 0.0 ? data.rss(i, theta) / df : 0.0;
    s.sigma2s[i] = std::max(s2, 1e-12);
  }
  s.lambda = Matrix::Identity(m, m);
  s.theta0 = prior.mu0;
  s.tau2 = 1.0;
  return s;
}

PosteriorDraws run_chain(const ReturnsPanel& panel, const FactorDesign& design,
                         const HBPrior& prior, const ChainOptions& options) {
  prior.validate();
  if (prior.mu0.size() != design.k() + 1) throw ConfigError("hb prior dimension does not match design");
  if (options.iterations <= options.burn_in || options.burn_in < 0) {
    throw ConfigError("hb chain: iterations must exceed burn_in");
  }
  if (options.stride < 1) throw ConfigError("hb chain: stride must be at least 1");

  const HBData data(design, panel);
  Rng rng(derive_seed(options.seed, "hb_chain"));
  HBState state = initial_state(data, prior, design);

  PosteriorDraws out;
  out.assets = panel.assets;
  out.burn_in = options.burn_in;
  out.stride = options.stride;
  out.seed = options.seed;
  out.states.reserve(static_cast<std::size_t>((options.iterations - options.burn_in) / options.stride + 1));

  double scale = options.proposal_scale;
  int batch_accepts = 0;
  int batch_size = 0;
  int batches = 0;
  long kept_accepts = 0;
  long kept_steps = 0;

  for (int it = 0; it < options.iterations; ++it) {
    try {
      for (Eigen::Index i = 0; i < state.assets(); ++i) {
        state.thetas.row(i) = gibbs_theta_i(rng, state, data, i).transpose();
      }
      for (Eigen::Index i = 0; i < state.assets(); ++i) {
        state.sigma2s[i] = gibbs_sigma2_i(rng, state, prior, data, i);
      }
      state.lambda = gibbs_lambda(rng, state, prior);
      state.theta0 = gibbs_theta0(rng, state, prior);
      const MhStep step = mh_tau(rng, state, scale);
      state.tau2 = step.tau2;

      if (it < options.burn_in) {
        batch_accepts += step.accepted;
        if (++batch_size == 50) {
          // Robbins-Monro on log(scale), decaying gain
          const double rate = batch_accepts / 50.0;
          scale *= std::exp(3.0 * (rate - options.target_accept) / std::sqrt(1.0 + batches));
          ++batches;
          batch_accepts = 0;
          batch_size = 0;
        }
      } else {
        kept_accepts += step.accepted;
        ++kept_steps;
        if ((it - options.burn_in) % options.stride == 0) out.states.push_back(state);
      }
    } catch (const Error& e) {
      throw Error(e.kind(), "hb chain iteration " + std::to_string(it) + ": " + e.what());
    }
  }
  out.proposal_scale = scale;
  out.accept_rate = kept_steps > 0 ? static_cast<double>(kept_accepts) / kept_steps : 0.0;
  return out;
}

StandardizedDraws run_chain_standardized(const ReturnsPanel& panel, const Vector& market,
                                         const std::vector<Vector>& factors, const HBPrior& prior,
                                         const ChainOptions& options) {
  const FactorDesign raw = build_design(market, factors);
  if (panel.size() == 0) throw ConfigError("hb chain: empty panel");
  std::vector<double> s2;
  for (Eigen::Index i = 0; i < panel.size(); ++i) s2.push_back(ols_estimate(raw, panel.excess.col(i)).sigma2_hat);
  const auto mid = s2.begin() + static_cast<std::ptrdiff_t>(s2.size() / 2);
  std::nth_element(s2.begin(), mid, s2.end());
  const double c = *mid > 0.0 ? 1.0 / std::sqrt(*mid) : 1.0;

  std::vector<Vector> scaled_factors;
  for (const auto& f : factors) scaled_factors.push_back(c * f);
  const FactorDesign design = build_design(c * market, scaled_factors);
  ReturnsPanel scaled = panel;
  scaled.excess *= c;

  StandardizedDraws out{run_chain(scaled, design, prior, options), c};
  // theta = D theta_scaled with D = diag(1/c, 1, ..., 1)
  for (auto& st : out.draws.states) {
    st.thetas.col(0) /= c;
    st.sigma2s /= c * c;
    st.theta0[0] /= c;
    st.lambda.row(0) *= c;
    st.lambda.col(0) *= c;
  }
  return out;
}

std::vector<RankedAsset> hb_select(const PosteriorDraws& draws, Eigen::Index p_tilde) {
  if (draws.states.size() < 100) {
    throw InsufficientDraws("hb_select: need at least 100 retained draws, have " +
                            std::to_string(draws.states.size()));
  }
  const Eigen::Index p = draws.states.front().assets();
  if (p_tilde < 0 || p_tilde > p) throw ConfigError("hb_select: p_tilde must lie in [0, P]");
  const double count = static_cast<double>(draws.states.size());
  std::vector<RankedAsset> ranked(static_cast<std::size_t>(p));
  for (Eigen::Index i = 0; i < p; ++i) {
    double positive = 0.0;
    double sum = 0.0;
    for (const auto& s : draws.states) {
      const double a = s.thetas(i, 0);
      positive += a > 0.0;
      sum += a;
    }
    ranked[static_cast<std::size_t>(i)] = {i, positive / count, sum / count};
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedAsset& a, const RankedAsset& b) {
    if (a.prob_positive != b.prob_positive) return a.prob_positive > b.prob_positive;
    if (a.mean_alpha != b.mean_alpha) return a.mean_alpha > b.mean_alpha;
    return a.index < b.index;
  });
  ranked.resize(static_cast<std::size_t>(p_tilde));
  return ranked;
}

void write_trace(std::ostream& os, const PosteriorDraws& draws) {
  os << "iteration,parameter,value\n";
  for (std::size_t t = 0; t < draws.states.size(); ++t) {
    const auto& s = draws.states[t];
    const std::size_t iter =
        static_cast<std::size_t>(draws.burn_in) + t * static_cast<std::size_t>(draws.stride);
    for (Eigen::Index i = 0; i < s.assets(); ++i) {
      const std::string name =
          i < static_cast<Eigen::Index>(draws.assets.size()) ? draws.assets[i] : std::to_string(i);
      for (Eigen::Index j = 0; j < s.thetas.cols(); ++j) {
        os << iter << ",theta[" << name << "][" << j << "],"
           << format_number(s.thetas(i, j)) << '\n';
      }
      os << iter << ",sigma2[" << name << "]," << format_number(s.sigma2s[i]) << '\n';
    }
    for (Eigen::Index j = 0; j < s.theta0.size(); ++j) {
      os << iter << ",theta0[" << j << "]," << format_number(s.theta0[j]) << '\n';
    }
    for (Eigen::Index a = 0; a < s.lambda.rows(); ++a) {
      for (Eigen::Index b = a; b < s.lambda.cols(); ++b) {
        os << iter << ",lambda[" << a << "][" << b << "]," << format_number(s.lambda(a, b)) << '\n';
      }
    }
    os << iter << ",tau2," << format_number(s.tau2) << '\n';
  }
}

}  // namespace bop
