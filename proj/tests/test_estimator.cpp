#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "trimglm/diagnostics.hpp"
#include "trimglm/errors.hpp"
#include "trimglm/estimator.hpp"
#include "trimglm/synth.hpp"

using namespace trimglm;

namespace {

FamilyDescriptor gaussian_desc(double sigma = 1.0) {
  FamilyDescriptor f;
  f.kind = FamilyKind::Gaussian;
  f.sigma = sigma;
  return f;
}

Dataset manual_gaussian(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  Dataset ds;
  ds.x = x;
  ds.y = y;
  ds.corrupted.assign(static_cast<std::size_t>(x.rows()), 0);
  ds.meta.family = gaussian_desc();
  return ds;
}

Eigen::VectorXd ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return (x.transpose() * x).ldlt().solve(x.transpose() * y);
}

}  // namespace

TEST_CASE("initial_prune keeps the smallest labels, ties by index") {
  Eigen::MatrixXd x = Eigen::MatrixXd::Ones(6, 1);
  Eigen::VectorXd y(6);
  y << 0.0, 5.0, -3.0, 1.0, -6.0, 2.0;
  const Dataset ds = manual_gaussian(x, y);
  // eps = 1/3 drops floor(2) rows: the |y| = 6 and 5 entries
  const auto kept = initial_prune(ds, 1.0 / 3.0);
  CHECK(kept == std::vector<Eigen::Index>{0, 2, 3, 5});

  Eigen::VectorXd ties(4);
  ties << 1.0, -1.0, 2.0, 2.0;
  const Dataset ds2 = manual_gaussian(Eigen::MatrixXd::Ones(4, 1), ties);
  // one drop; |y| ties at 2 resolve toward dropping the later index
  const auto kept2 = initial_prune(ds2, 0.25);
  CHECK(kept2 == std::vector<Eigen::Index>{0, 1, 2});

  const auto all = initial_prune(ds, 0.0);
  CHECK(all.size() == 6);
}

TEST_CASE("select_subset matches a direct sort of the likelihoods") {
  Eigen::VectorXd beta_star(2);
  beta_star << 0.6, -0.4;
  const Dataset ds =
      gen_clean(12, gaussian_desc(), beta_star, Eigen::MatrixXd::Identity(2, 2), CovariateDist::StdNormal, 71);
  const GlmFamily fam = ds.meta.family.make();
  Eigen::VectorXd beta(2);
  beta << 0.2, 0.3;
  std::vector<Eigen::Index> base(12);
  std::iota(base.begin(), base.end(), Eigen::Index{0});

  const auto chosen = select_subset(ds, fam, beta, base, 7);
  REQUIRE(chosen.size() == 7);
  CHECK(std::is_sorted(chosen.begin(), chosen.end()));

  std::vector<std::pair<double, Eigen::Index>> nlls;
  for (Eigen::Index i = 0; i < 12; ++i) nlls.emplace_back(fam.nll(ds.y(i), beta.dot(ds.x.row(i))), i);
  std::sort(nlls.begin(), nlls.end());
  std::vector<Eigen::Index> expect;
  for (int i = 0; i < 7; ++i) expect.push_back(nlls[static_cast<std::size_t>(i)].second);
  std::sort(expect.begin(), expect.end());
  CHECK(chosen == expect);
}

TEST_CASE("gaussian constrained_mle equals least squares on the subset") {
  Eigen::VectorXd beta_star(3);
  beta_star << 1.0, -0.5, 0.25;
  const Dataset ds =
      gen_clean(50, gaussian_desc(1.5), beta_star, Eigen::MatrixXd::Identity(3, 3), CovariateDist::StdNormal, 73);
  const GlmFamily fam = ds.meta.family.make();
  std::vector<Eigen::Index> subset;
  for (Eigen::Index i = 5; i < 41; ++i) subset.push_back(i);

  InnerConfig cfg;
  const Eigen::VectorXd beta = constrained_mle(ds, fam, subset, std::numeric_limits<double>::infinity(), cfg,
                                               Eigen::VectorXd::Zero(3), nullptr);
  Eigen::MatrixXd xs(subset.size(), 3);
  Eigen::VectorXd ys(subset.size());
  for (std::size_t i = 0; i < subset.size(); ++i) {
    xs.row(static_cast<Eigen::Index>(i)) = ds.x.row(subset[i]);
    ys(static_cast<Eigen::Index>(i)) = ds.y(subset[i]);
  }
  CHECK((beta - ols(xs, ys)).norm() < 1e-7);
}

TEST_CASE("radius constraint binds with the gradient pointing inward") {
  Eigen::VectorXd beta_star(2);
  beta_star << 2.0, 0.0;
  const Dataset ds =
      gen_clean(200, gaussian_desc(), beta_star, Eigen::MatrixXd::Identity(2, 2), CovariateDist::StdNormal, 79);
  const GlmFamily fam = ds.meta.family.make();
  std::vector<Eigen::Index> subset(200);
  std::iota(subset.begin(), subset.end(), Eigen::Index{0});

  const Eigen::VectorXd unconstrained = ols(ds.x, ds.y);
  const double radius = 0.5 * unconstrained.norm();
  InnerConfig cfg;
  const Eigen::VectorXd beta =
      constrained_mle(ds, fam, subset, radius, cfg, Eigen::VectorXd::Zero(2), nullptr);
  CHECK(beta.norm() == doctest::Approx(radius).epsilon(1e-8));

  // KKT: the objective gradient is anti-parallel to beta at the boundary
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(2);
  for (Eigen::Index i : subset) grad += fam.nll_gradient(ds.y(i), ds.x.row(i), beta);
  grad /= static_cast<double>(subset.size());
  const Eigen::VectorXd tangential = grad - (grad.dot(beta) / beta.squaredNorm()) * beta;
  CHECK(tangential.norm() < 1e-6 * std::max(1.0, grad.norm()));
  CHECK(grad.dot(beta) < 0.0);
}

TEST_CASE("radius zero returns the zero vector") {
  Eigen::VectorXd beta_star(2);
  beta_star << 1.0, 1.0;
  const Dataset ds =
      gen_clean(20, gaussian_desc(), beta_star, Eigen::MatrixXd::Identity(2, 2), CovariateDist::StdNormal, 83);
  const GlmFamily fam = ds.meta.family.make();
  std::vector<Eigen::Index> subset(20);
  std::iota(subset.begin(), subset.end(), Eigen::Index{0});
  InnerConfig cfg;
  const Eigen::VectorXd beta = constrained_mle(ds, fam, subset, 0.0, cfg, Eigen::VectorXd::Zero(2), nullptr);
  CHECK(beta.norm() == 0.0);
}

TEST_CASE("poisson intercept model has the closed-form solution log(mean)") {
  FamilyDescriptor pf;
  pf.kind = FamilyKind::Poisson;
  Eigen::VectorXd beta_star(1);
  beta_star << 1.3;
  Dataset ds = gen_clean(30, pf, beta_star, Eigen::MatrixXd::Identity(1, 1), CovariateDist::StdNormal, 89);
  ds.x.setOnes();  // intercept-only design
  const GlmFamily fam = pf.make();
  std::vector<Eigen::Index> subset(30);
  std::iota(subset.begin(), subset.end(), Eigen::Index{0});
  InnerConfig cfg;
  const Eigen::VectorXd beta = constrained_mle(ds, fam, subset, std::numeric_limits<double>::infinity(), cfg,
                                               Eigen::VectorXd::Zero(1), nullptr);
  CHECK(beta(0) == doctest::Approx(std::log(ds.y.mean())).epsilon(1e-6));
}

TEST_CASE("binomial intercept model has the closed-form solution logit(mean/m)") {
  FamilyDescriptor bf;
  bf.kind = FamilyKind::Binomial;
  bf.m = 8;
  Eigen::VectorXd beta_star(1);
  beta_star << -0.3;
  Dataset ds = gen_clean(40, bf, beta_star, Eigen::MatrixXd::Identity(1, 1), CovariateDist::StdNormal, 97);
  ds.x.setOnes();
  const GlmFamily fam = bf.make();
  std::vector<Eigen::Index> subset(40);
  std::iota(subset.begin(), subset.end(), Eigen::Index{0});
  InnerConfig cfg;
  const Eigen::VectorXd beta = constrained_mle(ds, fam, subset, std::numeric_limits<double>::infinity(), cfg,
                                               Eigen::VectorXd::Zero(1), nullptr);
  const double p = ds.y.mean() / 8.0;
  CHECK(beta(0) == doctest::Approx(std::log(p / (1 - p))).epsilon(1e-6));
}

TEST_CASE("singular designs are flagged and the dead coordinate stays zero") {
  Eigen::MatrixXd x(12, 3);
  Rng rng(101);
  for (Eigen::Index i = 0; i < 12; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
    x(i, 2) = 0.0;  // no information in the third coordinate
  }
  Eigen::VectorXd y = x.col(0) - x.col(1);
  const Dataset ds = manual_gaussian(x, y);
  const GlmFamily fam = ds.meta.family.make();
  std::vector<Eigen::Index> subset(12);
  std::iota(subset.begin(), subset.end(), Eigen::Index{0});
  InnerConfig cfg;
  std::vector<std::string> warnings;
  const Eigen::VectorXd beta = constrained_mle(ds, fam, subset, std::numeric_limits<double>::infinity(), cfg,
                                               Eigen::VectorXd::Zero(3), &warnings);
  CHECK(beta(2) == 0.0);
  bool flagged = false;
  for (const std::string& w : warnings) flagged = flagged || w.find("singular-design") != std::string::npos;
  CHECK(flagged);
  // the identifiable part is still solved
  CHECK(beta(0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(beta(1) == doctest::Approx(-1.0).epsilon(1e-5));
}

TEST_CASE("trimmed_objective drops the worst rows and divides by n") {
  Eigen::VectorXd y(3);
  y << 0.0, 0.0, 10.0;
  const Dataset ds = manual_gaussian(Eigen::MatrixXd::Ones(3, 1), y);
  const GlmFamily fam = ds.meta.family.make();
  const Eigen::VectorXd beta = Eigen::VectorXd::Zero(1);
  // keeps the two zero-residual rows: 2 * log sqrt(2 pi) / 3
  CHECK(trimmed_objective(ds, fam, beta, 1.0 / 3.0) ==
        doctest::Approx(2.0 * 0.91893853320467274178 / 3.0).epsilon(1e-14));
  // eps = 0 keeps everything
  CHECK(trimmed_objective(ds, fam, beta, 0.0) ==
        doctest::Approx((2.0 * 0.91893853320467274178 + 50.0 + 0.91893853320467274178) / 3.0).epsilon(1e-12));
}

TEST_CASE("fit with eps zero reduces to the plain mle") {
  Eigen::VectorXd beta_star(2);
  beta_star << 0.7, -1.1;
  const Dataset ds =
      gen_clean(60, gaussian_desc(), beta_star, Eigen::MatrixXd::Identity(2, 2), CovariateDist::StdNormal, 103);
  const GlmFamily fam = ds.meta.family.make();
  EstimatorConfig cfg;
  cfg.epsilon = 0.0;
  cfg.eta = 1e-9;
  const FitResult res = fit(ds, fam, cfg);
  CHECK(res.termination == Termination::EtaImprovement);
  CHECK((res.beta_hat - ols(ds.x, ds.y)).norm() < 1e-7);
  CHECK(res.subset.size() == 60);
}

TEST_CASE("fit recovers clean coefficients and the trace never increases") {
  Eigen::VectorXd beta_star(3);
  beta_star << 1.0, 0.5, -0.5;
  const Dataset ds =
      gen_clean(400, gaussian_desc(), beta_star, Eigen::MatrixXd::Identity(3, 3), CovariateDist::StdNormal, 107);
  const GlmFamily fam = ds.meta.family.make();
  EstimatorConfig cfg;
  cfg.epsilon = 0.05;
  cfg.eta = 0.0025;
  const FitResult res = fit(ds, fam, cfg);
  CHECK((res.beta_hat - beta_star).norm() < 0.2);
  REQUIRE(res.objective_trace.size() >= 2);
  for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
    CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-12);
  CHECK(res.subset.size() == 400 - 40);
}

TEST_CASE("fit matches exhaustive enumeration on a separable instance") {
  Eigen::VectorXd y(8);
  y << 0.00, 0.04, 0.09, 0.15, -0.2, 0.3, 10.0, 12.0;
  const Dataset ds = manual_gaussian(Eigen::MatrixXd::Ones(8, 1), y);
  const GlmFamily fam = ds.meta.family.make();

  EstimatorConfig cfg;
  cfg.epsilon = 0.25;  // prune to 6, refit on the best 4
  cfg.eta = 1e-10;
  const FitResult res = fit(ds, fam, cfg);

  // same subset size for the exhaustive optimum: keep 8 - floor(0.5 * 8) = 4
  const BruteForceResult bf = brute_force_trimmed_mle(ds, fam, 0.5, std::numeric_limits<double>::infinity());
  CHECK(res.subset == bf.subset);
  CHECK(std::fabs(res.beta_hat(0) - bf.beta(0)) < 1e-8);
}

TEST_CASE("fit under corruption still tracks the truth, trace monotone") {
  Eigen::VectorXd beta_star(2);
  beta_star << 1.5, -1.0;
  Dataset ds =
      gen_clean(500, gaussian_desc(), beta_star, Eigen::MatrixXd::Identity(2, 2), CovariateDist::StdNormal, 109);
  AdversarySpec adv;
  adv.attack = AttackKind::LargeOutlier;
  adv.epsilon = 0.1;
  Rng rng(12);
  ds = corrupt(ds, adv, rng);

  const GlmFamily fam = ds.meta.family.make();
  EstimatorConfig cfg;
  cfg.epsilon = 0.1;
  cfg.eta = 1e-4;  // tight slack so the loop runs to a genuine stationary point
  const FitResult res = fit(ds, fam, cfg);
  CHECK((res.beta_hat - beta_star).norm() < 0.25);
  CHECK(res.outer_iters >= 3);
  for (std::size_t i = 1; i < res.objective_trace.size(); ++i)
    CHECK(res.objective_trace[i] <= res.objective_trace[i - 1] + 1e-12);

  // far better than the naive fit that keeps the planted outliers
  const Eigen::VectorXd naive = ols(ds.x, ds.y);
  CHECK((res.beta_hat - beta_star).norm() < 0.4 * (naive - beta_star).norm());
}

TEST_CASE("fit is deterministic and permutation equivariant") {
  Eigen::VectorXd beta_star(2);
  beta_star << 0.9, 0.4;
  Dataset ds =
      gen_clean(200, gaussian_desc(), beta_star, Eigen::MatrixXd::Identity(2, 2), CovariateDist::StdNormal, 113);
  AdversarySpec adv;
  adv.attack = AttackKind::ConstantLabel;
  adv.value = -3.0;
  adv.epsilon = 0.1;
  Rng rng(13);
  ds = corrupt(ds, adv, rng);
  const GlmFamily fam = ds.meta.family.make();
  EstimatorConfig cfg;
  cfg.epsilon = 0.1;
  cfg.eta = 0.01;

  const FitResult a = fit(ds, fam, cfg);
  const FitResult b = fit(ds, fam, cfg);
  CHECK((a.beta_hat - b.beta_hat).cwiseAbs().maxCoeff() == 0.0);  // bitwise repeatable

  Dataset rev = ds;
  const Eigen::Index n = ds.n();
  for (Eigen::Index i = 0; i < n; ++i) {
    rev.x.row(i) = ds.x.row(n - 1 - i);
    rev.y(i) = ds.y(n - 1 - i);
    rev.corrupted[static_cast<std::size_t>(i)] = ds.corrupted[static_cast<std::size_t>(n - 1 - i)];
  }
  const FitResult c = fit(rev, fam, cfg);
  CHECK((a.beta_hat - c.beta_hat).norm() < 1e-7);
}

TEST_CASE("fit validates its configuration") {
  Eigen::VectorXd beta_star(1);
  beta_star << 1.0;
  const Dataset ds =
      gen_clean(20, gaussian_desc(), beta_star, Eigen::MatrixXd::Identity(1, 1), CovariateDist::StdNormal, 127);
  const GlmFamily fam = ds.meta.family.make();
  EstimatorConfig cfg;

  cfg.epsilon = 0.3;
  CHECK_THROWS_AS(fit(ds, fam, cfg), Error);
  cfg.epsilon = -0.1;
  CHECK_THROWS_AS(fit(ds, fam, cfg), Error);
  cfg.epsilon = 0.1;

  cfg.eta = 0.0;
  CHECK_THROWS_AS(fit(ds, fam, cfg), Error);
  cfg.eta = -1.0;
  CHECK_THROWS_AS(fit(ds, fam, cfg), Error);
  cfg.eta = 1e-8;

  cfg.radius = 0.0;
  CHECK_THROWS_AS(fit(ds, fam, cfg), Error);
  cfg.radius = -2.0;
  CHECK_THROWS_AS(fit(ds, fam, cfg), Error);
  cfg.radius = std::numeric_limits<double>::infinity();

  cfg.max_outer_iters = 0;
  CHECK_THROWS_AS(fit(ds, fam, cfg), Error);
}

TEST_CASE("theorem_config maps contamination to the guaranteed settings") {
  const GlmFamily g = GlmFamily::gaussian(1.0);
  const EstimatorConfig gc = theorem_config(g, 0.1, 1000, 5);
  CHECK(gc.epsilon == doctest::Approx(0.1));
  CHECK(gc.eta == doctest::Approx(0.01));
  CHECK(std::isinf(gc.radius));
  CHECK(gc.max_outer_iters > 0);

  const GlmFamily p = GlmFamily::poisson();
  const EstimatorConfig pc = theorem_config(p, 0.05, 100, 5, 3.0);
  CHECK(pc.epsilon == doctest::Approx(0.1));  // doubled trimming for count data
  CHECK(pc.eta == doctest::Approx(0.0025 / 500.0));
  CHECK(pc.radius == doctest::Approx(3.0));

  const GlmFamily b = GlmFamily::binomial(16);
  const EstimatorConfig bc = theorem_config(b, 0.1, 1000, 5, 2.0);
  CHECK(bc.epsilon == doctest::Approx(0.1));
  CHECK(bc.eta == doctest::Approx(0.01 / 16.0));
  CHECK(bc.radius == doctest::Approx(2.0));

  // the doubled trimming level must stay within the feasible range
  CHECK_THROWS_AS(theorem_config(p, 0.15, 100, 5, 3.0), Error);
  // count families need a finite coefficient bound
  CHECK_THROWS_AS(theorem_config(p, 0.05, 100, 5), Error);
  CHECK_THROWS_AS(theorem_config(b, 0.05, 100, 5), Error);
  CHECK_THROWS_AS(theorem_config(g, 0.3, 100, 5), Error);
}

TEST_CASE("eta floor keeps termination meaningful at zero contamination") {
  const GlmFamily g = GlmFamily::gaussian(1.0);
  const EstimatorConfig gc = theorem_config(g, 0.0, 100, 2);
  CHECK(gc.eta > 0.0);
  CHECK(gc.epsilon == 0.0);
}
