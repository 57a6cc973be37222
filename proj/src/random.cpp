#include "bop/random.hpp"

#include <cmath>
#include <stdexcept>

#include "bop/errors.hpp"

namespace bop {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view component,
                          std::uint64_t index) {
  return splitmix64(master ^ fnv1a(component) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

double draw_normal(Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  return n01(rng);
}

Vector draw_normal_vector(Rng& rng, Eigen::Index n) {
  std::normal_distribution<double> n01(0.0, 1.0);
  Vector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = n01(rng);
  return z;
}

double draw_gamma(Rng& rng, double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("draw_gamma: shape must be positive");
  std::gamma_distribution<double> g(shape, 1.0);
  return g(rng);
}

double draw_inv_gamma(Rng& rng, double shape, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("draw_inv_gamma: scale must be positive");
  const double g = draw_gamma(rng, shape);
  return scale / g;
}

Vector draw_mvn_precision(Rng& rng, const Vector& mean, const Eigen::LLT<Matrix>& prec_llt) {
  Vector z = draw_normal_vector(rng, mean.size());
  // L^T x = z  =>  Cov(x) = (L L^T)^{-1}
  Vector x = prec_llt.matrixU().solve(z);
  return mean + x;
}

Vector draw_mvn_covariance(Rng& rng, const Vector& mean, const Eigen::LLT<Matrix>& cov_llt) {
  Vector z = draw_normal_vector(rng, mean.size());
  return mean + cov_llt.matrixL() * z;
}

Matrix draw_wishart(Rng& rng, const Matrix& scale, double df) {
  const Eigen::Index d = scale.rows();
  if (!(df > static_cast<double>(d) - 1.0)) {
    throw std::invalid_argument("draw_wishart: df must exceed dim - 1");
  }
  auto llt = spd_cholesky(scale, "wishart scale");
  // Bartlett: A lower triangular, A_ii^2 ~ chi2(df - i), A_ij ~ N(0,1) below.
  Matrix a = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    a(i, i) = std::sqrt(2.0 * draw_gamma(rng, 0.5 * (df - static_cast<double>(i))));
    for (Eigen::Index j = 0; j < i; ++j) a(i, j) = draw_normal(rng);
  }
  Matrix la = llt.matrixL() * a;
  Matrix w = la * la.transpose();
  return 0.5 * (w + w.transpose());
}

}  // namespace bop
