#include "bop/linalg.hpp"

#include <cmath>
#include <string>

#include "bop/errors.hpp"

namespace bop {

Eigen::LLT<Matrix> spd_cholesky(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw RankDeficient(std::string(what) + ": not a nonempty square matrix");
  }
  if (!a.allFinite()) {
    throw RankDeficient(std::string(what) + ": non-finite entries");
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw RankDeficient(std::string(what) + ": not positive definite");
  }
  // LLT accepts near-singular matrices; reject when the smallest pivot is
  // negligible relative to the largest.
  const auto d = llt.matrixLLT().diagonal();
  const double lo = d.minCoeff();
  const double hi = d.maxCoeff();
  if (!(lo > 0.0) || lo * lo < 1e-14 * hi * hi) {
    throw RankDeficient(std::string(what) + ": singular to working precision");
  }
  return llt;
}

Matrix spd_inverse(const Matrix& a, const char* what) {
  auto llt = spd_cholesky(a, what);
  return llt.solve(Matrix::Identity(a.rows(), a.cols()));
}

double spd_log_det(const Matrix& a, const char* what) {
  auto llt = spd_cholesky(a, what);
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

}  // namespace bop
