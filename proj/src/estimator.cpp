#include "trimglm/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "trimglm/errors.hpp"

namespace trimglm {

namespace {

constexpr double kThetaGuard = 695.0;  // beyond this exp-family terms overflow

// Mean NLL over subset rows; +inf when any theta leaves the guarded range so
// the line search backs off instead of overflowing.
double mean_nll(const Eigen::MatrixXd& xs, const Eigen::VectorXd& ys, const GlmFamily& fam,
                const Eigen::VectorXd& beta) {
  const Eigen::VectorXd theta = xs * beta;
  if (theta.size() > 0 && theta.cwiseAbs().maxCoeff() > kThetaGuard) return std::numeric_limits<double>::infinity();
  double total = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) total += fam.nll(ys(i), theta(i));
  return total / static_cast<double>(theta.size());
}

Eigen::VectorXd project_ball(const Eigen::VectorXd& v, double radius) {
  if (std::isinf(radius)) return v;
  if (radius == 0.0) return Eigen::VectorXd::Zero(v.size());
  const double norm = v.norm();
  return norm <= radius ? v : Eigen::VectorXd((radius / norm) * v);
}

void add_warning(std::vector<std::string>* warnings, const char* w) {
  if (!warnings) return;
  if (std::find(warnings->begin(), warnings->end(), w) == warnings->end()) warnings->emplace_back(w);
}

std::vector<Eigen::Index> smallest_k_by_value(const Eigen::VectorXd& values, const std::vector<Eigen::Index>& ids,
                                              Eigen::Index k) {
  std::vector<Eigen::Index> order(ids.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return values(a) != values(b) ? values(a) < values(b) : ids[static_cast<std::size_t>(a)] < ids[static_cast<std::size_t>(b)];
  });
  std::vector<Eigen::Index> out(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = ids[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<Eigen::Index> initial_prune(const Dataset& ds, double epsilon) {
  const Eigen::Index n = ds.n();
  if (n < 1) fail_invalid("initial_prune: dataset is empty");
  if (!(epsilon >= 0.0 && epsilon <= 0.5)) fail_invalid("initial_prune: epsilon must lie in [0, 0.5]");
  const auto keep = n - static_cast<Eigen::Index>(std::floor(epsilon * static_cast<double>(n)));
  std::vector<Eigen::Index> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), Eigen::Index{0});
  return smallest_k_by_value(ds.y.cwiseAbs(), ids, keep);
}

std::vector<Eigen::Index> select_subset(const Dataset& ds, const GlmFamily& family, const Eigen::VectorXd& beta,
                                        const std::vector<Eigen::Index>& base, Eigen::Index k) {
  if (k < 0 || k > static_cast<Eigen::Index>(base.size()))
    fail_invalid("select_subset: k must lie between 0 and the base size");
  if (beta.size() != ds.dim()) fail_invalid("select_subset: beta dimension disagrees with the covariates");
  Eigen::VectorXd nlls(static_cast<Eigen::Index>(base.size()));
  for (std::size_t j = 0; j < base.size(); ++j) {
    const Eigen::Index i = base[j];
    nlls(static_cast<Eigen::Index>(j)) = family.nll(ds.y(i), beta.dot(ds.x.row(i)));
  }
  return smallest_k_by_value(nlls, base, k);
}

Eigen::VectorXd constrained_mle(const Dataset& ds, const GlmFamily& family, const std::vector<Eigen::Index>& subset,
                                double radius, const InnerConfig& cfg, const Eigen::VectorXd& warm,
                                std::vector<std::string>* warnings) {
  if (subset.empty()) fail_invalid("constrained_mle: subset is empty");
  if (!(radius >= 0.0)) fail_invalid("constrained_mle: radius must be nonnegative (or infinite)");
  const Eigen::Index d = ds.dim();
  if (warm.size() != d) fail_invalid("constrained_mle: warm start has the wrong dimension");
  const auto m = static_cast<Eigen::Index>(subset.size());

  Eigen::MatrixXd xs(m, d);
  Eigen::VectorXd ys(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    xs.row(j) = ds.x.row(subset[static_cast<std::size_t>(j)]);
    ys(j) = ds.y(subset[static_cast<std::size_t>(j)]);
  }
  const double phi = family.dispersion();

  Eigen::VectorXd beta = project_ball(warm, radius);
  if (radius == 0.0) return beta;
  double f_cur = mean_nll(xs, ys, family, beta);
  if (!std::isfinite(f_cur)) {
    beta.setZero();
    f_cur = mean_nll(xs, ys, family, beta);
  }

  const bool try_newton = d <= 200;
  double grad_step = 1.0;  // adaptive first trial step for the gradient path
  bool converged = false;

  for (int it = 0; it < cfg.max_iters; ++it) {
    const Eigen::VectorXd theta = xs * beta;
    Eigen::VectorXd resid(m);  // (b'(theta) - y) / phi
    for (Eigen::Index j = 0; j < m; ++j) resid(j) = (family.b_prime(theta(j)) - ys(j)) / phi;
    const Eigen::VectorXd grad = xs.transpose() * resid / static_cast<double>(m);

    const double station = (beta - project_ball(beta - grad, radius)).norm();
    if (station <= cfg.grad_tol * std::max(1.0, grad.norm())) {
      converged = true;
      break;
    }

    Eigen::VectorXd direction = -grad;
    bool newton_dir = false;
    if (try_newton) {
      Eigen::VectorXd w(m);
      for (Eigen::Index j = 0; j < m; ++j) w(j) = family.hessian_weight(theta(j));
      const Eigen::MatrixXd hess =
          xs.transpose() * w.asDiagonal() * xs / static_cast<double>(m);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
      if (es.info() == Eigen::Success) {
        const double lo = es.eigenvalues().minCoeff();
        const double hi = es.eigenvalues().maxCoeff();
        if (lo > 0.0 && hi / lo < 1e8) {
          direction = -(es.eigenvectors() *
                        es.eigenvalues().cwiseInverse().asDiagonal() * (es.eigenvectors().transpose() * grad));
          newton_dir = true;
        } else {
          add_warning(warnings, "singular-design");
        }
      }
    }

    // backtracking on the projected step; Newton direction first, gradient as
    // the fallback
    bool accepted = false;
    for (int pass = 0; pass < 2 && !accepted; ++pass) {
      if (pass == 1) {
        if (newton_dir) {
          direction = -grad;
          newton_dir = false;
        } else {
          break;
        }
      }
      double alpha = newton_dir ? 1.0 : grad_step;
      while (alpha >= 1e-14) {
        const Eigen::VectorXd cand = project_ball(beta + alpha * direction, radius);
        const Eigen::VectorXd step = cand - beta;
        const double slope = grad.dot(step);
        if (slope < 0.0) {
          const double f_new = mean_nll(xs, ys, family, cand);
          if (f_new <= f_cur + cfg.sufficient_decrease * slope) {
            beta = cand;
            f_cur = f_new;
            accepted = true;
            if (!newton_dir) grad_step = std::min(alpha * 2.0, 1e6);
            break;
          }
        }
        alpha *= cfg.backtrack_shrink;
      }
    }
    if (!accepted) {
      // no descending step representable: numerically stationary
      converged = true;
      break;
    }
  }
  if (!converged) add_warning(warnings, "inner-non-convergence");
  return beta;
}

double trimmed_objective(const Dataset& ds, const GlmFamily& family, const Eigen::VectorXd& beta, double epsilon) {
  const Eigen::Index n = ds.n();
  if (n < 1) fail_invalid("trimmed_objective: dataset is empty");
  if (!(epsilon >= 0.0 && epsilon <= 0.5)) fail_invalid("trimmed_objective: epsilon must lie in [0, 0.5]");
  std::vector<Eigen::Index> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), Eigen::Index{0});
  const auto keep = n - static_cast<Eigen::Index>(std::floor(epsilon * static_cast<double>(n)));
  const std::vector<Eigen::Index> chosen = select_subset(ds, family, beta, ids, keep);
  double total = 0.0;
  for (Eigen::Index i : chosen) total += family.nll(ds.y(i), beta.dot(ds.x.row(i)));
  return total / static_cast<double>(n);
}

namespace {

double mean_nll_on(const Dataset& ds, const GlmFamily& fam, const Eigen::VectorXd& beta,
                   const std::vector<Eigen::Index>& subset) {
  double total = 0.0;
  for (Eigen::Index i : subset) total += fam.nll(ds.y(i), beta.dot(ds.x.row(i)));
  return total / static_cast<double>(ds.n());
}

}  // namespace

FitResult fit(const Dataset& ds, const GlmFamily& family, const EstimatorConfig& cfg) {
  const Eigen::Index n = ds.n();
  const Eigen::Index d = ds.dim();
  if (n < 1) fail_invalid("fit: dataset is empty");
  if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 0.25)) fail_invalid("fit: epsilon must lie in [0, 0.25]");
  if (!(cfg.eta > 0.0)) fail_invalid("fit: eta must be positive");
  if (!(cfg.radius > 0.0)) fail_invalid("fit: radius must be positive (or infinite)");
  if (cfg.max_outer_iters < 1) fail_invalid("fit: max_outer_iters must be at least 1");

  const auto drop2 = static_cast<Eigen::Index>(std::floor(2.0 * cfg.epsilon * static_cast<double>(n)));
  const Eigen::Index keep2 = n - drop2;
  if (keep2 < 1) fail_invalid("fit: insufficient data after trimming");

  const std::vector<Eigen::Index> pruned = initial_prune(ds, cfg.epsilon);
  FitResult res;
  res.beta_hat = Eigen::VectorXd::Zero(d);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  std::vector<Eigen::Index> current;
  for (long long t = 1; t <= cfg.max_outer_iters; ++t) {
    current = select_subset(ds, family, beta, pruned, keep2);
    const double obj_old = mean_nll_on(ds, family, beta, current);
    res.objective_trace.push_back(obj_old);
    const Eigen::VectorXd beta_next =
        constrained_mle(ds, family, current, cfg.radius, cfg.inner, beta, &res.warnings);
    const double obj_new = mean_nll_on(ds, family, beta_next, current);
    res.outer_iters = t;
    if (obj_new > obj_old - cfg.eta) {
      res.objective_trace.push_back(obj_new);
      res.beta_hat = beta;
      res.termination = Termination::EtaImprovement;
      res.subset = current;
      return res;
    }
    beta = beta_next;
  }
  res.beta_hat = beta;
  res.termination = Termination::MaxIters;
  res.subset = current;
  return res;
}

EstimatorConfig theorem_config(const GlmFamily& family, double epsilon_c, Eigen::Index n, Eigen::Index d,
                               double radius_hint) {
  if (!(epsilon_c >= 0.0 && epsilon_c <= 0.25)) fail_invalid("theorem_config: epsilon_c must lie in [0, 0.25]");
  if (n < 1 || d < 1) fail_invalid("theorem_config: n and d must be positive");
  EstimatorConfig cfg;
  const double e2 = epsilon_c * epsilon_c;
  const double eta_floor = 1e-12;
  switch (family.kind()) {
    case FamilyKind::Gaussian: {
      cfg.epsilon = epsilon_c;
      cfg.eta = std::max(e2, eta_floor);
      cfg.radius = std::numeric_limits<double>::infinity();
      const double s2 = std::min(1.0, family.sigma() * family.sigma());
      cfg.max_outer_iters = e2 > 0.0 ? static_cast<long long>(10.0 * std::ceil(1.0 / (s2 * e2))) : 1000;
      break;
    }
    case FamilyKind::Poisson: {
      if (!(radius_hint > 0.0) || std::isinf(radius_hint))
        fail_invalid("theorem_config: the poisson guarantee needs a finite positive radius_hint");
      cfg.epsilon = 2.0 * epsilon_c;
      cfg.eta = std::max(e2 / (static_cast<double>(d) * static_cast<double>(n)), eta_floor);
      cfg.radius = radius_hint;
      cfg.max_outer_iters =
          e2 > 0.0 ? static_cast<long long>(10.0 * std::ceil(static_cast<double>(d) * static_cast<double>(n) / e2))
                   : 1000;
      break;
    }
    case FamilyKind::Binomial: {
      if (!(radius_hint > 0.0) || std::isinf(radius_hint))
        fail_invalid("theorem_config: the binomial guarantee needs a finite positive radius_hint");
      cfg.epsilon = epsilon_c;
      cfg.eta = std::max(e2 / static_cast<double>(family.trials()), eta_floor);
      cfg.radius = radius_hint;
      const double m2 = static_cast<double>(family.trials()) * static_cast<double>(family.trials());
      cfg.max_outer_iters = e2 > 0.0 ? static_cast<long long>(10.0 * std::ceil(m2 / e2)) : 1000;
      break;
    }
    case FamilyKind::Custom: {
      cfg.epsilon = epsilon_c;
      cfg.eta = std::max(e2, eta_floor);
      cfg.radius = std::numeric_limits<double>::infinity();
      cfg.max_outer_iters =
          e2 > 0.0 ? static_cast<long long>(10.0 * std::ceil(std::log(1.0 / epsilon_c) / e2)) : 1000;
      break;
    }
  }
  if (cfg.epsilon > 0.25) fail_invalid("theorem_config: 2*epsilon_c exceeds the trimming limit 0.25 for this family");
  return cfg;
}

std::string FitResult::to_json() const {
  nlohmann::ordered_json j;
  j["beta_hat"] = std::vector<double>(beta_hat.data(), beta_hat.data() + beta_hat.size());
  j["objective_trace"] = objective_trace;
  j["outer_iters"] = outer_iters;
  j["termination"] = termination == Termination::EtaImprovement ? "eta-improvement" : "max-iters";
  j["subset_indices"] = subset;
  j["warnings"] = warnings;
  return j.dump(2);
}

}  // namespace trimglm
