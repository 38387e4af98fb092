#pragma once

#include <Eigen/Dense>
#include <limits>
#include <string>
#include <vector>

#include "trimglm/dataset.hpp"
#include "trimglm/family.hpp"

namespace trimglm {

struct InnerConfig {
  double grad_tol = 1e-8;            // projected-gradient stationarity tolerance
  int max_iters = 200;
  double backtrack_shrink = 0.5;
  double sufficient_decrease = 1e-4; // Armijo constant
};

struct EstimatorConfig {
  double epsilon = 0.0;  // trimming fraction, in [0, 0.25] so (1-2eps)n >= n/2
  double eta = 1e-8;     // minimum mean-NLL improvement per round, > 0
  double radius = std::numeric_limits<double>::infinity();  // ||beta|| constraint
  long long max_outer_iters = 1000;
  InnerConfig inner;
};

enum class Termination { EtaImprovement, MaxIters };

struct FitResult {
  Eigen::VectorXd beta_hat;
  // entry t is the mean NLL of beta^t on its own selected subset; the final
  // entry is the rejected last refit, so the sequence never increases
  std::vector<double> objective_trace;
  long long outer_iters = 0;
  Termination termination = Termination::EtaImprovement;
  std::vector<Eigen::Index> subset;  // final selected subset, ascending
  std::vector<std::string> warnings;

  std::string to_json() const;
};

// Indices of the (1-eps)n rows with smallest |y| (magnitude prune used to
// initialize the alternating loop); ties broken by index, output ascending.
std::vector<Eigen::Index> initial_prune(const Dataset& ds, double epsilon);

// The k indices of `base` with smallest per-point NLL at beta; ties broken by
// index, output ascending.
std::vector<Eigen::Index> select_subset(const Dataset& ds, const GlmFamily& family, const Eigen::VectorXd& beta,
                                        const std::vector<Eigen::Index>& base, Eigen::Index k);

// Minimizes the mean NLL over `subset` under ||beta|| <= radius: projected
// gradient descent with backtracking, switching to damped Newton steps while
// the subset Hessian is well conditioned (cond < 1e8, d <= 200). Warm-started
// at `warm`. Appends "singular-design" / "inner-non-convergence" to warnings.
Eigen::VectorXd constrained_mle(const Dataset& ds, const GlmFamily& family, const std::vector<Eigen::Index>& subset,
                                double radius, const InnerConfig& cfg, const Eigen::VectorXd& warm,
                                std::vector<std::string>* warnings = nullptr);

// (1/n) * sum of the (1-eps)n smallest per-point NLLs at beta.
double trimmed_objective(const Dataset& ds, const GlmFamily& family, const Eigen::VectorXd& beta, double epsilon);

// Alternating minimization: magnitude-prune to (1-eps)n, then repeatedly
// select the (1-2eps)n best-likelihood rows and refit, stopping once a round
// improves the mean NLL on the current subset by less than eta.
FitResult fit(const Dataset& ds, const GlmFamily& family, const EstimatorConfig& cfg);

// Parameter settings under which the error-rate guarantees hold, per family:
//   gaussian  eps=eps_c        eta=eps_c^2        R=inf
//   poisson   eps=2 eps_c      eta=eps_c^2/(d n)  R=radius_hint
//   binomial  eps=eps_c        eta=eps_c^2/m      R=radius_hint
//   custom    eps=eps_c        eta=eps_c^2        R=inf
// with max_outer_iters ten times the corresponding iteration bound.
EstimatorConfig theorem_config(const GlmFamily& family, double epsilon_c, Eigen::Index n, Eigen::Index d,
                               double radius_hint = std::numeric_limits<double>::infinity());

}  // namespace trimglm
