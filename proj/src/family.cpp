#include "trimglm/family.hpp"

#include <cmath>

#include "trimglm/errors.hpp"

namespace trimglm {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178032973640562;  // log(2*pi)/2
constexpr double kThetaFiniteRange = 700.0;
constexpr double kPoissonThetaCap = 30.0;

// log(1 + e^t) without overflow on either side
double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log C(m, y) for integral 0 <= y <= m
double log_choose(long long m, long long y) {
  return std::lgamma(static_cast<double>(m) + 1.0) - std::lgamma(static_cast<double>(y) + 1.0) -
         std::lgamma(static_cast<double>(m - y) + 1.0);
}

bool is_integral(double y) { return std::isfinite(y) && y == std::floor(y); }

void require_theta(double theta) {
  if (!std::isfinite(theta)) fail_invalid("natural parameter must be finite");
  if (std::fabs(theta) > kThetaFiniteRange) fail_invalid("natural parameter exceeds the supported range |theta| <= 700");
}

}  // namespace

GlmFamily GlmFamily::gaussian(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail_invalid("gaussian family: sigma must be finite and positive");
  GlmFamily f;
  f.kind_ = FamilyKind::Gaussian;
  f.domain_ = LabelDomain::RealLine;
  f.sigma_ = sigma;
  return f;
}

GlmFamily GlmFamily::poisson() {
  GlmFamily f;
  f.kind_ = FamilyKind::Poisson;
  f.domain_ = LabelDomain::NonNegativeIntegers;
  return f;
}

GlmFamily GlmFamily::binomial(long long m) {
  if (m < 1) fail_invalid("binomial family: trial count m must be >= 1");
  GlmFamily f;
  f.kind_ = FamilyKind::Binomial;
  f.domain_ = LabelDomain::IntegerRange;
  f.m_ = m;
  return f;
}

GlmFamily GlmFamily::custom(CustomSpec spec) {
  if (!spec.b || !spec.b_prime || !spec.b_double_prime || !spec.log_base_measure)
    fail_invalid("custom family: b, b', b'' and log c callbacks are all required");
  // spot-check the derivative chain so silently inconsistent callbacks are
  // rejected up front
  for (double theta : {-2.0, -0.5, 0.0, 0.7, 2.0}) {
    const double h = 1e-5;
    const double fd1 = (spec.b(theta + h) - spec.b(theta - h)) / (2.0 * h);
    const double fd2 = (spec.b_prime(theta + h) - spec.b_prime(theta - h)) / (2.0 * h);
    const double scale1 = std::max(1.0, std::fabs(spec.b_prime(theta)));
    const double scale2 = std::max(1.0, std::fabs(spec.b_double_prime(theta)));
    if (std::fabs(fd1 - spec.b_prime(theta)) > 1e-3 * scale1)
      fail_invalid("custom family: b_prime is not the derivative of b");
    if (std::fabs(fd2 - spec.b_double_prime(theta)) > 1e-3 * scale2)
      fail_invalid("custom family: b_double_prime is not the derivative of b_prime");
    if (spec.b_double_prime(theta) < 0.0) fail_invalid("custom family: b must be convex (b'' >= 0)");
  }
  GlmFamily f;
  f.kind_ = FamilyKind::Custom;
  f.domain_ = spec.domain;
  f.custom_ = std::move(spec);
  return f;
}

std::string GlmFamily::name() const {
  switch (kind_) {
    case FamilyKind::Gaussian: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "gaussian(sigma=%g)", sigma_);
      return buf;
    }
    case FamilyKind::Poisson:
      return "poisson";
    case FamilyKind::Binomial: {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "binomial(m=%lld)", m_);
      return buf;
    }
    case FamilyKind::Custom:
      return "custom";
  }
  return "unknown";
}

double GlmFamily::b(double theta) const {
  require_theta(theta);
  switch (kind_) {
    case FamilyKind::Gaussian:
      return 0.5 * theta * theta;
    case FamilyKind::Poisson:
      return std::exp(theta);
    case FamilyKind::Binomial:
      return static_cast<double>(m_) * softplus(theta);
    case FamilyKind::Custom:
      return custom_.b(theta);
  }
  return 0.0;
}

double GlmFamily::b_prime(double theta) const {
  require_theta(theta);
  switch (kind_) {
    case FamilyKind::Gaussian:
      return theta;
    case FamilyKind::Poisson:
      return std::exp(theta);
    case FamilyKind::Binomial:
      return static_cast<double>(m_) * sigmoid(theta);
    case FamilyKind::Custom:
      return custom_.b_prime(theta);
  }
  return 0.0;
}

double GlmFamily::b_double_prime(double theta) const {
  require_theta(theta);
  switch (kind_) {
    case FamilyKind::Gaussian:
      return 1.0;
    case FamilyKind::Poisson:
      return std::exp(theta);
    case FamilyKind::Binomial: {
      const double s = sigmoid(theta);
      return static_cast<double>(m_) * s * (1.0 - s);
    }
    case FamilyKind::Custom:
      return custom_.b_double_prime(theta);
  }
  return 0.0;
}

double GlmFamily::log_base_measure(double y) const {
  require_label(y);
  switch (kind_) {
    case FamilyKind::Gaussian:
      return -y * y / (2.0 * sigma_ * sigma_) - kHalfLog2Pi - std::log(sigma_);
    case FamilyKind::Poisson:
      return -std::lgamma(y + 1.0);
    case FamilyKind::Binomial:
      return log_choose(m_, static_cast<long long>(y));
    case FamilyKind::Custom:
      return custom_.log_base_measure(y);
  }
  return 0.0;
}

bool GlmFamily::label_in_domain(double y) const {
  switch (domain_) {
    case LabelDomain::RealLine:
      return std::isfinite(y);
    case LabelDomain::NonNegativeIntegers:
      return is_integral(y) && y >= 0.0;
    case LabelDomain::IntegerRange:
      return is_integral(y) && y >= 0.0 && y <= static_cast<double>(m_);
  }
  return false;
}

void GlmFamily::require_label(double y) const {
  if (label_in_domain(y)) return;
  switch (domain_) {
    case LabelDomain::RealLine:
      fail_invalid("label outside family domain: expected a finite real");
    case LabelDomain::NonNegativeIntegers:
      fail_invalid("label outside family domain: expected a nonnegative integer");
    case LabelDomain::IntegerRange:
      fail_invalid("label outside family domain: expected an integer in {0,...,m}");
  }
}

double GlmFamily::nll(double y, double theta) const {
  require_label(y);
  require_theta(theta);
  switch (kind_) {
    case FamilyKind::Gaussian: {
      const double r = y - theta;
      return r * r / (2.0 * sigma_ * sigma_) + kHalfLog2Pi + std::log(sigma_);
    }
    case FamilyKind::Poisson:
      return std::exp(theta) - y * theta + std::lgamma(y + 1.0);
    case FamilyKind::Binomial:
      return static_cast<double>(m_) * softplus(theta) - y * theta - log_choose(m_, static_cast<long long>(y));
    case FamilyKind::Custom:
      return -(y * theta - custom_.b(theta) + custom_.log_base_measure(y));
  }
  return 0.0;
}

Eigen::VectorXd GlmFamily::nll_gradient(double y, const Eigen::VectorXd& x, const Eigen::VectorXd& beta) const {
  if (x.size() != beta.size()) fail_invalid("nll_gradient: x and beta dimensions differ");
  const double theta = beta.dot(x);
  return (-(y - b_prime(theta)) / dispersion()) * x;
}

double GlmFamily::sample_label(double theta, Rng& rng) const {
  require_theta(theta);
  switch (kind_) {
    case FamilyKind::Gaussian:
      return theta + sigma_ * rng.normal();
    case FamilyKind::Poisson:
      if (theta > kPoissonThetaCap) fail_invalid("poisson sampler: theta exceeds the rate cap (theta <= 30)");
      return static_cast<double>(rng.poisson(std::exp(theta)));
    case FamilyKind::Binomial:
      return static_cast<double>(rng.binomial(m_, sigmoid(theta)));
    case FamilyKind::Custom:
      if (!custom_.sampler) fail_invalid("custom family: no label sampler was provided");
      return custom_.sampler(theta, rng);
  }
  return 0.0;
}

}  // namespace trimglm
