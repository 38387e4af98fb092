#pragma once

#include <Eigen/Dense>

namespace trimglm {

// Symmetric square root and inverse square root of an SPD matrix via
// eigendecomposition. Throws Numeric if an eigenvalue falls below min_eig
// (ill-conditioned) and InvalidArgument if the input is not symmetric.
struct SpdRoots {
  Eigen::MatrixXd sqrt;      // S^{1/2}
  Eigen::MatrixXd inv_sqrt;  // S^{-1/2}
};
SpdRoots spd_roots(const Eigen::MatrixXd& s, double min_eig = 1e-12);

// Top eigenpair of a symmetric matrix. `largest_abs` selects the eigenvalue of
// largest magnitude (operator norm direction); otherwise the algebraically
// largest. Dense eigensolve for d <= 64, power iteration (tol 1e-8, at most
// 1000 rounds) above.
struct EigPair {
  double value = 0.0;
  Eigen::VectorXd vector;
};
EigPair sym_top_eig(const Eigen::MatrixXd& a, bool largest_abs);

// ||a||_op for symmetric a (largest |eigenvalue|).
double sym_op_norm(const Eigen::MatrixXd& a);

}  // namespace trimglm
