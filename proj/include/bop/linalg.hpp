#pragma once

#include <Eigen/Dense>

namespace bop {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Cholesky of a symmetric matrix; throws RankDeficient unless it is
// positive definite to working precision. `what` names the matrix in the
// error message.
Eigen::LLT<Matrix> spd_cholesky(const Matrix& a, const char* what);

// Inverse of a symmetric positive-definite matrix via Cholesky.
Matrix spd_inverse(const Matrix& a, const char* what);

// log det of a symmetric positive-definite matrix.
double spd_log_det(const Matrix& a, const char* what);

bool is_symmetric(const Matrix& a, double tol = 1e-10);

}  // namespace bop
