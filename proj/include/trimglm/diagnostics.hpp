#pragma once

#include <Eigen/Dense>
#include <vector>

#include "trimglm/dataset.hpp"
#include "trimglm/estimator.hpp"
#include "trimglm/rng.hpp"

namespace trimglm {

// || S^{1/2} (beta_hat - beta_star) ||_2; sigma = nullptr means the identity.
double param_error(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_star,
                   const Eigen::MatrixXd* sigma = nullptr);

// Directional derivative of the trimmed mean log-likelihood at beta_hat along
// (beta_star - beta_hat), the subset being the (1-eps)n best-likelihood rows
// at beta_hat:  (1/n) sum_{i in S} grad log f(y_i | x_i.beta_hat) . v / ||v||.
// Near an approximate stationary point this is small. Errors when
// beta_star == beta_hat (no direction).
double stationarity_gap(const Dataset& ds, const GlmFamily& family, const Eigen::VectorXd& beta_hat,
                        const Eigen::VectorXd& beta_star, double epsilon);

struct ResilienceEstimate {
  double tau_hat = 0.0;
  int directions_used = 0;
};

// Lower bound on the mean-resilience constant of a point set: along each probe
// direction (top covariance eigenvector plus num_random_dirs random units) the
// worst size-(1-eps)n subset drops the floor(eps n) most extreme projections
// on either side; tau_hat is the largest mean shift found. Exact for d = 1.
ResilienceEstimate resilience_estimate(const Eigen::MatrixXd& points, double epsilon, int num_random_dirs, Rng& rng);

struct BruteForceResult {
  Eigen::VectorXd beta;
  double objective = 0.0;  // (1/n) * total NLL over the best subset
  std::vector<Eigen::Index> subset;
};

// Exact trimmed MLE by enumerating every size-(1-eps)n subset and solving the
// constrained MLE on each (grad_tol 1e-10). Guarded to n <= 20. Ties between
// subsets resolve to the lexicographically first, so results are deterministic.
BruteForceResult brute_force_trimmed_mle(const Dataset& ds, const GlmFamily& family, double epsilon, double radius);

}  // namespace trimglm
