#pragma once

#include <Eigen/Dense>

namespace genrep::linalg {

struct SymmetricEigen {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // orthonormal columns
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Sweeps until the
/// off-diagonal Frobenius norm falls below `tol` times the full norm.
/// Throws NumericalError if it has not converged after `max_sweeps`.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& a, double tol = 1e-15, int max_sweeps = 64);

/// Principal square root of a symmetric positive semidefinite matrix
/// together with the eigensystem it was built from.
struct SqrtDecomposition {
  Eigen::MatrixXd root;
  Eigen::VectorXd root_values;  // square roots of the eigenvalues
  Eigen::MatrixXd vectors;
};

/// Eigenvalues in (-neg_tol, 0] are clamped to zero; anything more negative
/// is a NumericalError.
SqrtDecomposition sqrt_psd(const Eigen::MatrixXd& a, double neg_tol = 1e-10);

/// Solves X S + S X = rhs for symmetric S = V diag(d) V^T given its
/// eigensystem: in the eigenbasis X~_ij = B~_ij / (d_i + d_j).
/// Throws NumericalError when some d_i + d_j < 1e-12.
Eigen::MatrixXd solve_lyapunov(const Eigen::VectorXd& d, const Eigen::MatrixXd& v,
                               const Eigen::MatrixXd& rhs);

}  // namespace genrep::linalg
