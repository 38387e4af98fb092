#include "trimglm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "trimglm/errors.hpp"
#include "trimglm/linalg.hpp"

namespace trimglm {

double param_error(const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& beta_star, const Eigen::MatrixXd* sigma) {
  if (beta_hat.size() != beta_star.size()) fail_invalid("param_error: coefficient dimensions differ");
  const Eigen::VectorXd diff = beta_hat - beta_star;
  if (!sigma) return diff.norm();
  if (sigma->rows() != diff.size() || sigma->cols() != diff.size())
    fail_invalid("param_error: sigma must be d x d");
  const double q = diff.dot(*sigma * diff);
  return std::sqrt(std::max(0.0, q));
}

double stationarity_gap(const Dataset& ds, const GlmFamily& family, const Eigen::VectorXd& beta_hat,
                        const Eigen::VectorXd& beta_star, double epsilon) {
  const Eigen::Index n = ds.n();
  if (n < 1) fail_invalid("stationarity_gap: dataset is empty");
  if (!(epsilon >= 0.0 && epsilon <= 0.5)) fail_invalid("stationarity_gap: epsilon must lie in [0, 0.5]");
  if (beta_hat.size() != ds.dim() || beta_star.size() != ds.dim())
    fail_invalid("stationarity_gap: coefficient dimensions disagree with the covariates");
  const Eigen::VectorXd v = beta_star - beta_hat;
  const double vnorm = v.norm();
  if (vnorm == 0.0) fail_invalid("stationarity_gap: beta_star equals beta_hat, direction undefined");

  std::vector<Eigen::Index> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), Eigen::Index{0});
  const auto keep = n - static_cast<Eigen::Index>(std::floor(epsilon * static_cast<double>(n)));
  const std::vector<Eigen::Index> chosen = select_subset(ds, family, beta_hat, ids, keep);

  const double phi = family.dispersion();
  double acc = 0.0;
  for (Eigen::Index i : chosen) {
    const double theta = beta_hat.dot(ds.x.row(i));
    acc += (ds.y(i) - family.b_prime(theta)) / phi * (v.dot(ds.x.row(i)));
  }
  return acc / (vnorm * static_cast<double>(n));
}

namespace {

// Largest one-sided mean shift from dropping the k most extreme projections.
double directional_shift(std::vector<double> proj, Eigen::Index k) {
  const auto n = static_cast<Eigen::Index>(proj.size());
  std::sort(proj.begin(), proj.end());
  double total = 0.0;
  for (double p : proj) total += p;
  const double mean_all = total / static_cast<double>(n);
  double low = 0.0;
  double high = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    low += proj[static_cast<std::size_t>(i)];
    high += proj[static_cast<std::size_t>(n - 1 - i)];
  }
  const double kept = static_cast<double>(n - k);
  const double mean_drop_low = (total - low) / kept;    // drop the smallest: mean moves up
  const double mean_drop_high = (total - high) / kept;  // drop the largest: mean moves down
  return std::max(std::fabs(mean_drop_low - mean_all), std::fabs(mean_drop_high - mean_all));
}

}  // namespace

ResilienceEstimate resilience_estimate(const Eigen::MatrixXd& points, double epsilon, int num_random_dirs, Rng& rng) {
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n < 1 || d < 1) fail_invalid("resilience_estimate: empty point set");
  if (!(epsilon >= 0.0 && epsilon <= 0.5)) fail_invalid("resilience_estimate: epsilon must lie in [0, 0.5]");
  if (num_random_dirs < 0) fail_invalid("resilience_estimate: direction count must be nonnegative");

  ResilienceEstimate out;
  const auto k = static_cast<Eigen::Index>(std::floor(epsilon * static_cast<double>(n)));
  if (k == 0) {
    out.directions_used = num_random_dirs + 1;
    return out;
  }

  const Eigen::RowVectorXd mean = points.colwise().mean();
  const Eigen::MatrixXd centered = points.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n);

  std::vector<Eigen::VectorXd> dirs;
  dirs.push_back(sym_top_eig(cov, /*largest_abs=*/true).vector);
  for (int r = 0; r < num_random_dirs; ++r) {
    Eigen::VectorXd v(d);
    double norm = 0.0;
    do {
      for (Eigen::Index j = 0; j < d; ++j) v(j) = rng.normal();
      norm = v.norm();
    } while (norm == 0.0);
    dirs.push_back(v / norm);
  }

  for (const Eigen::VectorXd& v : dirs) {
    std::vector<double> proj(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) proj[static_cast<std::size_t>(i)] = v.dot(points.row(i));
    out.tau_hat = std::max(out.tau_hat, directional_shift(std::move(proj), k));
  }
  out.directions_used = static_cast<int>(dirs.size());
  return out;
}

BruteForceResult brute_force_trimmed_mle(const Dataset& ds, const GlmFamily& family, double epsilon, double radius) {
  const Eigen::Index n = ds.n();
  if (n < 1) fail_invalid("brute_force_trimmed_mle: dataset is empty");
  if (n > 20) fail_invalid("brute_force_trimmed_mle: enumeration is guarded to n <= 20");
  if (!(epsilon >= 0.0 && epsilon <= 0.5)) fail_invalid("brute_force_trimmed_mle: epsilon must lie in [0, 0.5]");
  const auto k = n - static_cast<Eigen::Index>(std::floor(epsilon * static_cast<double>(n)));
  if (k < 1) fail_invalid("brute_force_trimmed_mle: trimming leaves no rows");

  InnerConfig inner;
  inner.grad_tol = 1e-10;
  inner.max_iters = 500;
  const Eigen::VectorXd warm = Eigen::VectorXd::Zero(ds.dim());

  BruteForceResult best;
  best.objective = std::numeric_limits<double>::infinity();

  // lexicographic subset enumeration
  std::vector<Eigen::Index> subset(static_cast<std::size_t>(k));
  std::iota(subset.begin(), subset.end(), Eigen::Index{0});
  for (;;) {
    const Eigen::VectorXd beta = constrained_mle(ds, family, subset, radius, inner, warm, nullptr);
    double total = 0.0;
    for (Eigen::Index i : subset) total += family.nll(ds.y(i), beta.dot(ds.x.row(i)));
    const double obj = total / static_cast<double>(n);
    if (obj < best.objective) {
      best.objective = obj;
      best.beta = beta;
      best.subset = subset;
    }
    // advance to the next combination
    Eigen::Index pos = k - 1;
    while (pos >= 0 && subset[static_cast<std::size_t>(pos)] == n - k + pos) --pos;
    if (pos < 0) break;
    ++subset[static_cast<std::size_t>(pos)];
    for (Eigen::Index j = pos + 1; j < k; ++j)
      subset[static_cast<std::size_t>(j)] = subset[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

}  // namespace trimglm
