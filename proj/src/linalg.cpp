#include "trimglm/linalg.hpp"

#include <cmath>

#include "trimglm/errors.hpp"

namespace trimglm {

namespace {

void require_symmetric(const Eigen::MatrixXd& s, const char* who) {
  if (s.rows() != s.cols()) fail_invalid(std::string(who) + ": matrix must be square");
  const double scale = s.cwiseAbs().maxCoeff();
  const double asym = (s - s.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * (scale > 0.0 ? scale : 1.0)) fail_invalid(std::string(who) + ": matrix must be symmetric");
}

}  // namespace

SpdRoots spd_roots(const Eigen::MatrixXd& s, double min_eig) {
  require_symmetric(s, "spd_roots");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  if (es.info() != Eigen::Success) fail_numeric("spd_roots: eigendecomposition failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  if (lam.minCoeff() < min_eig) fail_numeric("spd_roots: covariance is not positive definite (eigenvalue below 1e-12)");
  const Eigen::MatrixXd& v = es.eigenvectors();
  SpdRoots out;
  out.sqrt = v * lam.cwiseSqrt().asDiagonal() * v.transpose();
  out.inv_sqrt = v * lam.cwiseSqrt().cwiseInverse().asDiagonal() * v.transpose();
  return out;
}

namespace {

// Power iteration on symmetric a; converges to the eigenvalue of largest
// magnitude. Deterministic start vector with a fixed perturbation retry in
// case the start is orthogonal to the dominant eigenspace.
EigPair power_iteration(const Eigen::MatrixXd& a) {
  const Eigen::Index d = a.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(d).normalized();
  double lam = 0.0;
  for (int attempt = 0; attempt < 2; ++attempt) {
    for (int it = 0; it < 1000; ++it) {
      Eigen::VectorXd w = a * v;
      const double norm = w.norm();
      if (norm == 0.0) break;  // a v = 0: v is a null vector, retry perturbed
      w /= norm;
      const double lam_new = w.dot(a * w);
      const bool converged = (a * w - lam_new * w).norm() <= 1e-8 * std::max(1.0, std::fabs(lam_new));
      v = w;
      lam = lam_new;
      if (converged) return {lam, v};
    }
    // perturb deterministically and retry once
    v = Eigen::VectorXd::LinSpaced(d, 1.0, 2.0).normalized();
  }
  return {lam, v};
}

}  // namespace

EigPair sym_top_eig(const Eigen::MatrixXd& a, bool largest_abs) {
  require_symmetric(a, "sym_top_eig");
  const Eigen::Index d = a.rows();
  if (d <= 64) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.info() != Eigen::Success) fail_numeric("sym_top_eig: eigendecomposition failed");
    const Eigen::VectorXd& lam = es.eigenvalues();  // ascending
    EigPair hi{lam(d - 1), es.eigenvectors().col(d - 1)};
    if (!largest_abs) return hi;
    EigPair lo{lam(0), es.eigenvectors().col(0)};
    return std::fabs(lo.value) > std::fabs(hi.value) ? lo : hi;
  }
  EigPair dom = power_iteration(a);
  if (largest_abs || dom.value > 0.0) return dom;
  // dominant by magnitude is negative; shift spectrum up to expose the
  // algebraically largest eigenvalue
  const double shift = std::fabs(dom.value) * 1.01 + 1e-12;
  Eigen::MatrixXd shifted = a + shift * Eigen::MatrixXd::Identity(d, d);
  EigPair top = power_iteration(shifted);
  top.value -= shift;
  return top;
}

double sym_op_norm(const Eigen::MatrixXd& a) { return std::fabs(sym_top_eig(a, /*largest_abs=*/true).value); }

}  // namespace trimglm
