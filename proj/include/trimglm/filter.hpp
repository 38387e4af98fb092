#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "trimglm/dataset.hpp"
#include "trimglm/estimator.hpp"

namespace trimglm {

struct WhitenResult {
  Dataset data;               // x_i <- S^{-1/2} x_i, metadata mapped alongside
  Eigen::MatrixXd back_map;   // S^{-1/2}: beta = back_map * beta_whitened
};

// Whitens the covariates by the symmetric inverse square root of sigma_cov.
// Throws Numeric when sigma_cov is not positive definite (eigenvalue below
// 1e-12). Metadata beta_star is mapped to whitened coordinates and sigma_cov
// to the identity so the result is internally consistent.
WhitenResult whiten(const Dataset& ds, const Eigen::MatrixXd& sigma_cov);

struct FilterConfig {
  double epsilon = 0.0;
  double target_deviation = std::numeric_limits<double>::infinity();  // stop once ||M - I||_op <= this
  double removal_fraction_per_round = 0.0;  // fraction of the current set removed per round
  long long max_removed = 0;                // hard cap on total removals

  // target 4*eps*log(1/eps), fraction eps/10, cap floor(2*eps*n)
  static FilterConfig defaults(double epsilon, Eigen::Index n);
};

struct FilterReport {
  std::vector<Eigen::Index> kept;      // surviving row indices, ascending
  std::vector<double> deviation_trace; // ||M - I||_op at the start of each round
  long long removed_count = 0;
  bool cap_reached = false;            // stopped by max_removed, not the target
  bool non_monotone = false;           // some removal round failed to reduce the deviation
  double removal_recall = -1.0;        // vs. a known corruption mask; -1 when unknown

  std::string to_json() const;
};

// Iterative spectral filter on whitened covariates: while the empirical second
// moment deviates from the identity by more than the target in operator norm,
// scores each row by its squared projection on the top deviation eigenvector
// and removes the largest scores (ties by index).
FilterReport filter_covariates(const Eigen::MatrixXd& x_whitened, const FilterConfig& cfg);

// Full pipeline for corrupted samples with known covariance: whiten, filter,
// run the trimmed fit on the kept rows (the radius constrains the whitened
// coefficient), then map the estimate back to the original coordinates.
// Subset indices in the result refer to the original dataset rows.
struct SampleFit {
  FitResult fit;
  FilterReport report;
};
SampleFit fit_sample_corruption(const Dataset& ds, const GlmFamily& family, const Eigen::MatrixXd& sigma_cov,
                                const FilterConfig& filter_cfg, const EstimatorConfig& est_cfg);

}  // namespace trimglm
