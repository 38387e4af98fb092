#pragma once

#include <Eigen/Dense>
#include <optional>

#include "trimglm/dataset.hpp"
#include "trimglm/family.hpp"
#include "trimglm/rng.hpp"

namespace trimglm {

enum class CovariateDist {
  StdNormal,     // iid N(0,1) entries
  Rademacher,    // iid +-1 entries
  SphereScaled,  // uniform on the radius-sqrt(d) sphere (identity covariance)
};

// n x d design whose rows are base draws (identity covariance, sub-gaussian)
// transformed by the symmetric square root of sigma_cov. Row i consumes the
// stream before row i+1, so prefixes of a fixed-seed stream agree.
Eigen::MatrixXd gen_covariates(Eigen::Index n, Eigen::Index d, const Eigen::MatrixXd& sigma_cov, CovariateDist dist,
                               Rng& rng);

// Clean draw from the generative model: covariates as above, then labels
// y_i ~ f(. | beta_star . x_i) in row order. Records beta_star, sigma_cov and
// the seed in the metadata sidecar fields.
Dataset gen_clean(Eigen::Index n, const FamilyDescriptor& family, const Eigen::VectorXd& beta_star,
                  const Eigen::MatrixXd& sigma_cov, CovariateDist dist, std::uint64_t seed);

enum class CorruptionMode { LabelOnly, Sample };

enum class AttackKind {
  LargeOutlier,   // y <- (max clean |y|) * scale at the floor(eps n) largest-|theta| rows
  FlippedModel,   // y resampled at theta = -beta_star . x
  ConstantLabel,  // y <- value
  LeverageSpike,  // x <- magnitude * v, y consistent with -beta_star (sample mode only)
};

struct AdversarySpec {
  CorruptionMode mode = CorruptionMode::LabelOnly;
  AttackKind attack = AttackKind::LargeOutlier;
  double epsilon = 0.0;    // corrupted fraction; floor(eps*n) rows are altered
  double scale = 10.0;     // LargeOutlier
  double value = 0.0;      // ConstantLabel
  double magnitude = 25.0; // LeverageSpike
  // LeverageSpike direction; empty selects the automatic direction: tilted off
  // beta_star just enough that the decoy labels land inside the clean bulk.
  std::optional<Eigen::VectorXd> direction;

  std::string name() const;  // e.g. "large-outlier(scale=10)"
};

// Applies the attack to floor(eps*n) rows (chosen adaptively: the rows with
// largest |beta_star . x_i|, ties by index) and ORs the corruption mask.
// Composition over an already-corrupted dataset is allowed while the total
// mask stays at or below n/2. Labels are clamped to the family domain.
Dataset corrupt(const Dataset& ds, const AdversarySpec& adv, Rng& rng);

}  // namespace trimglm
