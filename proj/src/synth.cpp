#include "trimglm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "trimglm/errors.hpp"
#include "trimglm/linalg.hpp"

namespace trimglm {

namespace {

bool is_exact_identity(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols()) return false;
  return (s - Eigen::MatrixXd::Identity(s.rows(), s.cols())).cwiseAbs().maxCoeff() == 0.0;
}

}  // namespace

Eigen::MatrixXd gen_covariates(Eigen::Index n, Eigen::Index d, const Eigen::MatrixXd& sigma_cov, CovariateDist dist,
                               Rng& rng) {
  if (n < 1) fail_invalid("gen_covariates: need at least one row");
  if (d < 1) fail_invalid("gen_covariates: need at least one covariate");
  if (sigma_cov.rows() != d || sigma_cov.cols() != d) fail_invalid("gen_covariates: sigma_cov must be d x d");

  Eigen::MatrixXd x(n, d);
  switch (dist) {
    case CovariateDist::StdNormal:
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal();
      break;
    case CovariateDist::Rademacher:
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) x(i, j) = static_cast<double>(rng.rademacher());
      break;
    case CovariateDist::SphereScaled: {
      const double radius = std::sqrt(static_cast<double>(d));
      for (Eigen::Index i = 0; i < n; ++i) {
        double norm = 0.0;
        do {
          for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal();
          norm = x.row(i).norm();
        } while (norm == 0.0);
        x.row(i) *= radius / norm;
      }
      break;
    }
  }
  if (!is_exact_identity(sigma_cov)) {
    const SpdRoots roots = spd_roots(sigma_cov);
    x = x * roots.sqrt;  // rows become S^{1/2} z (square root is symmetric)
  }
  return x;
}

Dataset gen_clean(Eigen::Index n, const FamilyDescriptor& family, const Eigen::VectorXd& beta_star,
                  const Eigen::MatrixXd& sigma_cov, CovariateDist dist, std::uint64_t seed) {
  if (n < 1) fail_invalid("gen_clean: cannot generate an empty dataset");
  const Eigen::Index d = beta_star.size();
  if (d < 1) fail_invalid("gen_clean: beta_star must have at least one entry");
  const GlmFamily fam = family.make();

  Rng rng(seed);
  Dataset ds;
  ds.x = gen_covariates(n, d, sigma_cov, dist, rng);
  ds.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) ds.y(i) = fam.sample_label(beta_star.dot(ds.x.row(i)), rng);
  ds.corrupted.assign(static_cast<std::size_t>(n), 0);
  ds.meta.family = family;
  ds.meta.beta_star = beta_star;
  ds.meta.sigma_cov = sigma_cov;
  ds.meta.seed = seed;
  ds.meta.epsilon_actual = 0.0;
  return ds;
}

std::string AdversarySpec::name() const {
  char buf[96];
  switch (attack) {
    case AttackKind::LargeOutlier:
      std::snprintf(buf, sizeof(buf), "large-outlier(scale=%g)", scale);
      return buf;
    case AttackKind::FlippedModel:
      return "flipped-model";
    case AttackKind::ConstantLabel:
      std::snprintf(buf, sizeof(buf), "constant-label(value=%g)", value);
      return buf;
    case AttackKind::LeverageSpike:
      std::snprintf(buf, sizeof(buf), "leverage-spike(magnitude=%g)", magnitude);
      return buf;
  }
  return "unknown";
}

namespace {

// Clamp an adversarial label into the family domain (count families round to
// the nearest admissible integer).
double clamp_label(const GlmFamily& fam, double y) {
  switch (fam.label_domain()) {
    case LabelDomain::RealLine:
      return y;
    case LabelDomain::NonNegativeIntegers:
      return std::max(0.0, std::round(y));
    case LabelDomain::IntegerRange:
      return std::min(static_cast<double>(fam.trials()), std::max(0.0, std::round(y)));
  }
  return y;
}

// Direction for the leverage spike: mostly along an axis orthogonal to
// beta_star, tilted toward it just enough that the decoy label magnitude
// |beta_star . (magnitude v)| lands near 2 — inside the clean label bulk, so
// plain trimming has no handle on the spiked rows.
Eigen::VectorXd auto_spike_direction(const Eigen::VectorXd& beta_star, double magnitude) {
  const Eigen::Index d = beta_star.size();
  const double bnorm = beta_star.norm();
  if (bnorm == 0.0) return Eigen::VectorXd::Unit(d, 0);
  const Eigen::VectorXd u = beta_star / bnorm;
  const double cos_a = std::min(1.0, 2.0 / (magnitude * bnorm));
  if (d == 1 || cos_a >= 1.0) return u;
  // pick the canonical axis least aligned with u and orthonormalize
  Eigen::Index least = 0;
  u.cwiseAbs().minCoeff(&least);
  Eigen::VectorXd w = Eigen::VectorXd::Unit(d, least) - u(least) * u;
  w.normalize();
  return cos_a * u + std::sqrt(1.0 - cos_a * cos_a) * w;
}

}  // namespace

Dataset corrupt(const Dataset& ds, const AdversarySpec& adv, Rng& rng) {
  const Eigen::Index n = ds.n();
  if (n < 1) fail_invalid("corrupt: dataset is empty");
  if (!(adv.epsilon >= 0.0 && adv.epsilon <= 0.5)) fail_invalid("corrupt: epsilon must lie in [0, 0.5]");
  if (adv.attack == AttackKind::LeverageSpike && adv.mode != CorruptionMode::Sample)
    fail_invalid("corrupt: leverage-spike alters covariates and requires sample mode");
  if (!ds.meta.beta_star) fail_invalid("corrupt: dataset metadata lacks beta_star");
  const Eigen::VectorXd& beta_star = *ds.meta.beta_star;
  if (beta_star.size() != ds.dim()) fail_invalid("corrupt: beta_star dimension disagrees with the covariates");
  const GlmFamily fam = ds.meta.family.make();

  Dataset out = ds;
  const auto k = static_cast<Eigen::Index>(std::floor(adv.epsilon * static_cast<double>(n)));
  if (k == 0) return out;

  // adaptive target choice: the floor(eps n) rows with largest |theta|
  Eigen::VectorXd theta = ds.x * beta_star;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    const double fa = std::fabs(theta(a));
    const double fb = std::fabs(theta(b));
    return fa != fb ? fa > fb : a < b;
  });
  std::vector<Eigen::Index> targets(order.begin(), order.begin() + k);
  std::sort(targets.begin(), targets.end());

  switch (adv.attack) {
    case AttackKind::LargeOutlier: {
      if (!(adv.scale > 0.0) || !std::isfinite(adv.scale)) fail_invalid("corrupt: large-outlier scale must be positive");
      double ref = 0.0;
      bool any_clean = false;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (ds.corrupted[static_cast<std::size_t>(i)]) continue;
        ref = std::max(ref, std::fabs(ds.y(i)));
        any_clean = true;
      }
      if (!any_clean) fail_invalid("corrupt: no clean rows left to reference");
      for (Eigen::Index i : targets) out.y(i) = clamp_label(fam, ref * adv.scale);
      break;
    }
    case AttackKind::FlippedModel:
      for (Eigen::Index i : targets) out.y(i) = fam.sample_label(-theta(i), rng);
      break;
    case AttackKind::ConstantLabel:
      if (!std::isfinite(adv.value)) fail_invalid("corrupt: constant-label value must be finite");
      for (Eigen::Index i : targets) out.y(i) = clamp_label(fam, adv.value);
      break;
    case AttackKind::LeverageSpike: {
      if (!(adv.magnitude > 0.0) || !std::isfinite(adv.magnitude))
        fail_invalid("corrupt: leverage-spike magnitude must be positive");
      Eigen::VectorXd v;
      if (adv.direction) {
        v = *adv.direction;
        if (v.size() != ds.dim()) fail_invalid("corrupt: leverage-spike direction has the wrong dimension");
        const double norm = v.norm();
        if (norm == 0.0) fail_invalid("corrupt: leverage-spike direction must be nonzero");
        v /= norm;
      } else {
        v = auto_spike_direction(beta_star, adv.magnitude);
      }
      const Eigen::VectorXd spike = adv.magnitude * v;
      const double decoy_theta = -beta_star.dot(spike);
      for (Eigen::Index i : targets) {
        out.x.row(i) = spike.transpose();
        out.y(i) = fam.sample_label(decoy_theta, rng);
      }
      break;
    }
  }

  for (Eigen::Index i : targets) out.corrupted[static_cast<std::size_t>(i)] = 1;
  const long long total = out.corrupted_count();
  if (2 * total > n) fail_invalid("corrupt: total corruption would exceed half the sample");
  out.meta.epsilon_actual = static_cast<double>(total) / static_cast<double>(n);
  return out;
}

}  // namespace trimglm
