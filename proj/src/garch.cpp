#include "bop/garch.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <string>

#include "bop/errors.hpp"

namespace bop {

namespace {

constexpr double kMaxPersistence = 1.0 - 1e-6;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Natural {
  double mu, omega, a, b;
};

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

Natural to_natural(const gsl_vector* x) {
  const double s = kMaxPersistence * logistic(gsl_vector_get(x, 2));
  const double a = s * logistic(gsl_vector_get(x, 3));
  return {gsl_vector_get(x, 0), std::exp(gsl_vector_get(x, 1)), a, s - a};
}

void to_unconstrained(const Natural& n, gsl_vector* x) {
  const double s = n.a + n.b;
  gsl_vector_set(x, 0, n.mu);
  gsl_vector_set(x, 1, std::log(n.omega));
  gsl_vector_set(x, 2, logit(s / kMaxPersistence));
  gsl_vector_set(x, 3, logit(n.a / s));
}

double sample_mean(std::span<const double> r) {
  return std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
}

double mean_square_dev(std::span<const double> r) {
  if (std::adjacent_find(r.begin(), r.end(), std::not_equal_to<>()) == r.end()) return 0.0;
  const double m = sample_mean(r);
  double ss = 0.0;
  for (double v : r) ss += (v - m) * (v - m);
  return ss / static_cast<double>(r.size());
}

struct Problem {
  std::span<const double> returns;
};

double neg_ll(const gsl_vector* x, void* params) {
  const auto* p = static_cast<const Problem*>(params);
  const Natural n = to_natural(x);
  const double ll = garch_log_likelihood(p->returns, n.mu, n.omega, n.a, n.b);
  return std::isfinite(ll) ? -ll : std::numeric_limits<double>::max();
}

struct Start {
  double a, b;
};

struct Outcome {
  bool ok = false;
  Natural at{};
  double ll = -std::numeric_limits<double>::infinity();
};

Outcome minimise(Problem& problem, const Natural& start, double mu_step) {
  using Minimizer = std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)>;
  using Vec = std::unique_ptr<gsl_vector, decltype(&gsl_vector_free)>;
  Vec x(gsl_vector_alloc(4), gsl_vector_free);
  Vec step(gsl_vector_alloc(4), gsl_vector_free);
  to_unconstrained(start, x.get());
  gsl_vector_set(step.get(), 0, mu_step);
  for (int i = 1; i < 4; ++i) gsl_vector_set(step.get(), i, 0.5);

  gsl_multimin_function fn{&neg_ll, 4, &problem};
  Outcome out;
  // Restarting from the best vertex guards against a collapsed simplex.
  for (int round = 0; round < 3; ++round) {
    Minimizer m(gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 4),
                gsl_multimin_fminimizer_free);
    gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), step.get());
    int status = GSL_CONTINUE;
    // A flat ridge (a = 0 leaves b unidentified) never shrinks the simplex,
    // so a stalled best value also counts as converged.
    double anchor = gsl_multimin_fminimizer_minimum(m.get());
    int since = 0;
    for (int it = 0; it < 20000 && status == GSL_CONTINUE; ++it) {
      if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
      status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), 1e-9);
      const double f = gsl_multimin_fminimizer_minimum(m.get());
      if (anchor - f > 1e-9 * (1.0 + std::abs(f))) {
        anchor = f;
        since = 0;
      } else if (++since >= 500) {
        status = GSL_SUCCESS;
      }
    }
    gsl_vector_memcpy(x.get(), gsl_multimin_fminimizer_x(m.get()));
    const double value = gsl_multimin_fminimizer_minimum(m.get());
    out.ok = status == GSL_SUCCESS && value < std::numeric_limits<double>::max();
    out.at = to_natural(x.get());
    out.ll = -value;
    for (int i = 1; i < 4; ++i) gsl_vector_set(step.get(), i, 0.05);
    gsl_vector_set(step.get(), 0, mu_step * 0.1);
  }
  return out;
}

Vector standard_errors(std::span<const double> r, const Natural& n) {
  const std::array<double, 4> theta{n.mu, n.omega, n.a, n.b};
  const std::array<double, 4> h{1e-3 * std::sqrt(mean_square_dev(r)), 1e-3 * n.omega, 1e-4, 1e-4};
  auto ll = [&](std::array<double, 4> t) { return garch_log_likelihood(r, t[0], t[1], t[2], t[3]); };

  Matrix hess(4, 4);
  const double f0 = ll(theta);
  for (int i = 0; i < 4; ++i) {
    for (int j = i; j < 4; ++j) {
      auto at = [&](double si, double sj) {
        auto t = theta;
        t[i] += si * h[i];
        t[j] += sj * h[j];
        return ll(t);
      };
      double v;
      if (i == j) {
        v = (at(1, 0) - 2.0 * f0 + at(-1, 0)) / (h[i] * h[i]);
      } else {
        v = (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * h[i] * h[j]);
      }
      hess(i, j) = hess(j, i) = v;
    }
  }
  Vector se = Vector::Constant(4, kNaN);
  if (!hess.allFinite()) return se;
  Eigen::LLT<Matrix> llt(-hess);
  if (llt.info() != Eigen::Success) return se;
  const Matrix cov = llt.solve(Matrix::Identity(4, 4));
  for (int i = 0; i < 4; ++i) se[i] = cov(i, i) > 0.0 ? std::sqrt(cov(i, i)) : kNaN;
  return se;
}

}  // namespace

Vector garch_filter(std::span<const double> r, double mu, double omega, double a, double b) {
  const auto n = static_cast<Eigen::Index>(r.size());
  Vector h(n);
  if (n == 0) return h;
  h[0] = mean_square_dev(r);
  for (Eigen::Index t = 1; t < n; ++t) {
    const double e = r[t - 1] - mu;
    h[t] = omega + a * e * e + b * h[t - 1];
  }
  return h;
}

double garch_log_likelihood(std::span<const double> r, double mu, double omega, double a, double b) {
  const Vector h = garch_filter(r, mu, omega, a, b);
  double ll = 0.0;
  for (Eigen::Index t = 0; t < h.size(); ++t) {
    if (!(h[t] > 0.0)) return -std::numeric_limits<double>::infinity();
    const double e = r[t] - mu;
    ll -= 0.5 * (std::log(h[t]) + e * e / h[t]);
  }
  return ll;
}

GarchFit garch_fit(std::span<const double> returns) {
  if (returns.size() < 50) {
    throw InsufficientData("garch_fit: need at least 50 observations, have " +
                           std::to_string(returns.size()));
  }
  for (double v : returns) {
    if (!std::isfinite(v)) throw DataError("garch_fit: non-finite return");
  }
  const double var = mean_square_dev(returns);
  const double mean = sample_mean(returns);
  if (!(var > 1e-300) || var < 1e-20 * std::max(1.0, mean * mean)) {
    throw NonConvergence("garch_fit: returns are constant");
  }

  gsl_error_handler_t* previous = gsl_set_error_handler_off();
  Problem problem{returns};
  const double mu_step = 0.1 * std::sqrt(var);
  static constexpr std::array<Start, 5> kStarts{{{0.05, 0.90}, {0.10, 0.80}, {0.20, 0.50},
                                                 {0.03, 0.96}, {0.01, 0.10}}};
  Outcome best;
  for (const auto& s : kStarts) {
    const Natural start{mean, var * (1.0 - s.a - s.b), s.a, s.b};
    const Outcome o = minimise(problem, start, mu_step);
    if (o.ok && o.ll > best.ll) best = o;
  }
  gsl_set_error_handler(previous);
  if (!best.ok) throw NonConvergence("garch_fit: no start converged");

  GarchFit fit;
  fit.mu = best.at.mu;
  fit.omega = best.at.omega;
  fit.a = best.at.a;
  fit.b = best.at.b;
  fit.cond_var = garch_filter(returns, fit.mu, fit.omega, fit.a, fit.b);
  fit.log_likelihood = best.ll;
  fit.se = standard_errors(returns, best.at);
  return fit;
}

GarchFit garch_fit_or_fallback(std::span<const double> returns) {
  try {
    return garch_fit(returns);
  } catch (const NonConvergence&) {
  } catch (const InsufficientData&) {
  }
  GarchFit fit;
  fit.converged = false;
  const auto n = static_cast<Eigen::Index>(returns.size());
  double var = 0.0;
  if (n > 1) var = mean_square_dev(returns) * static_cast<double>(n) / static_cast<double>(n - 1);
  fit.mu = n > 0 ? sample_mean(returns) : 0.0;
  fit.omega = var;
  fit.cond_var = Vector::Constant(n, var);
  fit.se = Vector::Constant(4, kNaN);
  return fit;
}

}  // namespace bop
