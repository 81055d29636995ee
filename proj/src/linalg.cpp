#include "genrep/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "genrep/errors.hpp"

namespace genrep::linalg {

namespace {

double off_diagonal_norm(const Eigen::MatrixXd& a) {
  double s = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

}  // namespace

SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& input, double tol, int max_sweeps) {
  if (input.rows() != input.cols()) throw NumericalError("jacobi_eigen: matrix is not square");
  const Eigen::Index n = input.rows();
  Eigen::MatrixXd a = 0.5 * (input + input.transpose());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  const double scale = a.norm();

  bool converged = scale == 0.0;
  for (int sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    if (off_diagonal_norm(a) <= tol * scale) {
      converged = true;
      break;
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        // A <- J^T A J with J the (p, q) Givens rotation.
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  if (!converged && off_diagonal_norm(a) > tol * scale) {
    throw NumericalError("jacobi_eigen: no convergence after " + std::to_string(max_sweeps) + " sweeps");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });

  SymmetricEigen out{Eigen::VectorXd(n), Eigen::MatrixXd(n, n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    out.values[k] = a(src, src);
    out.vectors.col(k) = v.col(src);
  }
  return out;
}

SqrtDecomposition sqrt_psd(const Eigen::MatrixXd& a, double neg_tol) {
  SymmetricEigen eig = jacobi_eigen(a);
  Eigen::VectorXd roots(eig.values.size());
  for (Eigen::Index i = 0; i < roots.size(); ++i) {
    const double d = eig.values[i];
    if (d < -neg_tol) {
      throw NumericalError("sqrt_psd: matrix has negative eigenvalue " + std::to_string(d));
    }
    roots[i] = d > 0.0 ? std::sqrt(d) : 0.0;
  }
  Eigen::MatrixXd root = eig.vectors * roots.asDiagonal() * eig.vectors.transpose();
  root = 0.5 * (root + root.transpose()).eval();
  return {std::move(root), std::move(roots), std::move(eig.vectors)};
}

Eigen::MatrixXd solve_lyapunov(const Eigen::VectorXd& d, const Eigen::MatrixXd& v,
                               const Eigen::MatrixXd& rhs) {
  Eigen::MatrixXd b = v.transpose() * rhs * v;
  for (Eigen::Index j = 0; j < b.cols(); ++j) {
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      const double denom = d[i] + d[j];
      if (denom < 1e-12) {
        throw NumericalError("solve_lyapunov: singular eigenvalue pair (" + std::to_string(d[i]) + ", " +
                             std::to_string(d[j]) + ")");
      }
      b(i, j) /= denom;
    }
  }
  return v * b * v.transpose();
}

}  // namespace genrep::linalg
