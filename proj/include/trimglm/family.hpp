#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>

#include "trimglm/rng.hpp"

namespace trimglm {

enum class FamilyKind { Gaussian, Poisson, Binomial, Custom };

enum class LabelDomain {
  RealLine,             // gaussian
  NonNegativeIntegers,  // poisson
  IntegerRange,         // binomial: {0, ..., m}
};

// Canonical one-parameter exponential family with natural parameter theta:
//   -log f(y | theta) = -( (y*theta - b(theta)) / phi + log c(y) )
// where phi is the dispersion (sigma^2 for gaussian, 1 otherwise). The mean is
// b'(theta) and the conditional variance phi * b''(theta).
class GlmFamily {
 public:
  struct CustomSpec {
    std::function<double(double)> b;
    std::function<double(double)> b_prime;
    std::function<double(double)> b_double_prime;
    std::function<double(double)> log_base_measure;
    LabelDomain domain = LabelDomain::RealLine;
    // optional; sample_label fails without it
    std::function<double(double, Rng&)> sampler;
  };

  static GlmFamily gaussian(double sigma);
  static GlmFamily poisson();
  static GlmFamily binomial(long long m);
  static GlmFamily custom(CustomSpec spec);

  FamilyKind kind() const { return kind_; }
  LabelDomain label_domain() const { return domain_; }
  double sigma() const { return sigma_; }        // gaussian only (1 otherwise)
  long long trials() const { return m_; }        // binomial only (0 otherwise)
  double dispersion() const { return kind_ == FamilyKind::Gaussian ? sigma_ * sigma_ : 1.0; }
  std::string name() const;                      // e.g. "gaussian(sigma=1)"

  double b(double theta) const;
  double b_prime(double theta) const;
  double b_double_prime(double theta) const;
  double log_base_measure(double y) const;
  double mean(double theta) const { return b_prime(theta); }
  double conditional_variance(double theta) const { return dispersion() * b_double_prime(theta); }

  // Per-point negative log likelihood; finite for y in the label domain and
  // |theta| <= 700. Throws InvalidArgument on labels outside the domain.
  double nll(double y, double theta) const;

  // d/dbeta of nll(y, x.beta) = -(y - b'(theta)) x / phi
  Eigen::VectorXd nll_gradient(double y, const Eigen::VectorXd& x, const Eigen::VectorXd& beta) const;

  // Weight of x x^T in the per-point Hessian: b''(theta) / phi.
  double hessian_weight(double theta) const { return b_double_prime(theta) / dispersion(); }

  // Draws y ~ f(. | theta). Poisson requires theta <= 30 (rate cap exp(30)).
  double sample_label(double theta, Rng& rng) const;

  bool label_in_domain(double y) const;
  void require_label(double y) const;

 private:
  GlmFamily() = default;

  FamilyKind kind_ = FamilyKind::Gaussian;
  LabelDomain domain_ = LabelDomain::RealLine;
  double sigma_ = 1.0;
  long long m_ = 0;
  CustomSpec custom_;
};

}  // namespace trimglm
