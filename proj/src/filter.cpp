#include "trimglm/filter.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "trimglm/errors.hpp"
#include "trimglm/linalg.hpp"

namespace trimglm {

WhitenResult whiten(const Dataset& ds, const Eigen::MatrixXd& sigma_cov) {
  const Eigen::Index d = ds.dim();
  if (sigma_cov.rows() != d || sigma_cov.cols() != d) fail_invalid("whiten: sigma_cov must be d x d");
  WhitenResult out;
  out.data = ds;
  const bool exact_identity =
      (sigma_cov - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff() == 0.0;
  if (exact_identity) {
    out.back_map = Eigen::MatrixXd::Identity(d, d);
    return out;
  }
  const SpdRoots roots = spd_roots(sigma_cov);
  out.back_map = roots.inv_sqrt;
  out.data.x = ds.x * roots.inv_sqrt;  // rows become S^{-1/2} x (symmetric root)
  if (ds.meta.beta_star) out.data.meta.beta_star = roots.sqrt * (*ds.meta.beta_star);
  out.data.meta.sigma_cov = Eigen::MatrixXd::Identity(d, d);
  return out;
}

FilterConfig FilterConfig::defaults(double epsilon, Eigen::Index n) {
  if (!(epsilon >= 0.0 && epsilon <= 0.5)) fail_invalid("filter defaults: epsilon must lie in [0, 0.5]");
  FilterConfig cfg;
  cfg.epsilon = epsilon;
  cfg.target_deviation =
      epsilon > 0.0 ? 4.0 * epsilon * std::log(1.0 / epsilon) : std::numeric_limits<double>::infinity();
  cfg.removal_fraction_per_round = epsilon / 10.0;
  cfg.max_removed = static_cast<long long>(std::floor(2.0 * epsilon * static_cast<double>(n)));
  return cfg;
}

FilterReport filter_covariates(const Eigen::MatrixXd& x, const FilterConfig& cfg) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n < 1 || d < 1) fail_invalid("filter_covariates: empty input");
  if (!(cfg.target_deviation > 0.0)) fail_invalid("filter_covariates: target_deviation must be positive");
  if (!(cfg.removal_fraction_per_round >= 0.0 && cfg.removal_fraction_per_round < 1.0))
    fail_invalid("filter_covariates: removal fraction must lie in [0, 1)");
  if (cfg.max_removed < 0) fail_invalid("filter_covariates: max_removed must be nonnegative");
  if (cfg.max_removed >= n) fail_invalid("filter_covariates: max_removed must leave at least one row");

  FilterReport rep;
  rep.kept.resize(static_cast<std::size_t>(n));
  std::iota(rep.kept.begin(), rep.kept.end(), Eigen::Index{0});
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);

  for (;;) {
    const auto m = static_cast<Eigen::Index>(rep.kept.size());
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
    for (Eigen::Index i : rep.kept) second.noalias() += x.row(i).transpose() * x.row(i);
    second /= static_cast<double>(m);
    const Eigen::MatrixXd dev_mat = second - eye;
    const double deviation = sym_op_norm(dev_mat);
    if (!rep.deviation_trace.empty() && deviation >= rep.deviation_trace.back()) rep.non_monotone = true;
    rep.deviation_trace.push_back(deviation);

    if (deviation <= cfg.target_deviation) break;
    if (rep.removed_count >= cfg.max_removed) {
      rep.cap_reached = true;
      break;
    }

    const auto budget = cfg.max_removed - rep.removed_count;
    auto r = static_cast<long long>(std::floor(cfg.removal_fraction_per_round * static_cast<double>(m)));
    r = std::max<long long>(r, 1);
    r = std::min(r, budget);

    // remove the rows projecting most on the top deviation direction
    const Eigen::VectorXd v = sym_top_eig(dev_mat, /*largest_abs=*/false).vector;
    std::vector<std::pair<double, Eigen::Index>> scored;
    scored.reserve(rep.kept.size());
    for (Eigen::Index i : rep.kept) {
      const double s = v.dot(x.row(i));
      scored.emplace_back(s * s, i);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<Eigen::Index> removed(static_cast<std::size_t>(r));
    for (long long i = 0; i < r; ++i) removed[static_cast<std::size_t>(i)] = scored[static_cast<std::size_t>(i)].second;
    std::sort(removed.begin(), removed.end());
    std::vector<Eigen::Index> next;
    next.reserve(rep.kept.size() - removed.size());
    std::set_difference(rep.kept.begin(), rep.kept.end(), removed.begin(), removed.end(), std::back_inserter(next));
    rep.kept = std::move(next);
    rep.removed_count += r;
  }
  return rep;
}

SampleFit fit_sample_corruption(const Dataset& ds, const GlmFamily& family, const Eigen::MatrixXd& sigma_cov,
                                const FilterConfig& filter_cfg, const EstimatorConfig& est_cfg) {
  const WhitenResult wh = whiten(ds, sigma_cov);

  SampleFit out;
  out.report = filter_covariates(wh.data.x, filter_cfg);
  if (ds.corrupted_count() > 0) {
    std::vector<std::uint8_t> kept_mask(static_cast<std::size_t>(ds.n()), 0);
    for (Eigen::Index i : out.report.kept) kept_mask[static_cast<std::size_t>(i)] = 1;
    long long caught = 0;
    for (Eigen::Index i = 0; i < ds.n(); ++i)
      if (ds.corrupted[static_cast<std::size_t>(i)] && !kept_mask[static_cast<std::size_t>(i)]) ++caught;
    out.report.removal_recall = static_cast<double>(caught) / static_cast<double>(ds.corrupted_count());
  }

  Dataset filtered;
  const auto m = static_cast<Eigen::Index>(out.report.kept.size());
  filtered.x.resize(m, ds.dim());
  filtered.y.resize(m);
  filtered.corrupted.resize(static_cast<std::size_t>(m));
  for (Eigen::Index j = 0; j < m; ++j) {
    const Eigen::Index i = out.report.kept[static_cast<std::size_t>(j)];
    filtered.x.row(j) = wh.data.x.row(i);
    filtered.y(j) = wh.data.y(i);
    filtered.corrupted[static_cast<std::size_t>(j)] = wh.data.corrupted[static_cast<std::size_t>(i)];
  }
  filtered.meta = wh.data.meta;

  out.fit = fit(filtered, family, est_cfg);
  out.fit.beta_hat = wh.back_map * out.fit.beta_hat;
  for (Eigen::Index& idx : out.fit.subset) idx = out.report.kept[static_cast<std::size_t>(idx)];
  return out;
}

std::string FilterReport::to_json() const {
  nlohmann::ordered_json j;
  j["kept"] = kept;
  j["deviation_trace"] = deviation_trace;
  j["removed_count"] = removed_count;
  j["cap_reached"] = cap_reached;
  j["non_monotone"] = non_monotone;
  if (removal_recall >= 0.0)
    j["removal_recall"] = removal_recall;
  else
    j["removal_recall"] = nullptr;
  return j.dump(2);
}

}  // namespace trimglm
