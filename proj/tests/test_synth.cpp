#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "trimglm/dataset.hpp"
#include "trimglm/errors.hpp"
#include "trimglm/linalg.hpp"
#include "trimglm/synth.hpp"

using namespace trimglm;

namespace {

FamilyDescriptor gaussian_desc(double sigma = 1.0) {
  FamilyDescriptor f;
  f.kind = FamilyKind::Gaussian;
  f.sigma = sigma;
  return f;
}

FamilyDescriptor poisson_desc() {
  FamilyDescriptor f;
  f.kind = FamilyKind::Poisson;
  return f;
}

FamilyDescriptor binomial_desc(long long m) {
  FamilyDescriptor f;
  f.kind = FamilyKind::Binomial;
  f.m = m;
  return f;
}

std::filesystem::path temp_file(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "trimglm_synth_test";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("rademacher covariates are +-1") {
  Rng rng(3);
  const Eigen::MatrixXd x = gen_covariates(200, 4, Eigen::MatrixXd::Identity(4, 4), CovariateDist::Rademacher, rng);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) REQUIRE(std::fabs(x(i, j)) == 1.0);
}

TEST_CASE("sphere-scaled covariates have norm sqrt(d)") {
  Rng rng(5);
  const Eigen::MatrixXd x = gen_covariates(300, 6, Eigen::MatrixXd::Identity(6, 6), CovariateDist::SphereScaled, rng);
  for (Eigen::Index i = 0; i < x.rows(); ++i) REQUIRE(x.row(i).norm() == doctest::Approx(std::sqrt(6.0)).epsilon(1e-12));
}

TEST_CASE("standard normal covariates have near-identity second moment") {
  Rng rng(7);
  const Eigen::Index n = 20000, d = 4;
  const Eigen::MatrixXd x = gen_covariates(n, d, Eigen::MatrixXd::Identity(d, d), CovariateDist::StdNormal, rng);
  const Eigen::MatrixXd second = x.transpose() * x / static_cast<double>(n);
  CHECK(sym_op_norm(second - Eigen::MatrixXd::Identity(d, d)) < 0.1);
  CHECK(x.colwise().mean().norm() < 0.05);
}

TEST_CASE("covariance shaping matches the target") {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 4.0, 1.0, 1.0, 1.0;
  Rng rng(11);
  const Eigen::Index n = 40000;
  const Eigen::MatrixXd x = gen_covariates(n, 2, sigma, CovariateDist::StdNormal, rng);
  const Eigen::MatrixXd second = x.transpose() * x / static_cast<double>(n);
  CHECK(sym_op_norm(second - sigma) < 0.15);
}

TEST_CASE("non-positive-definite covariance is rejected") {
  Eigen::MatrixXd sigma(2, 2);
  sigma << 1.0, 2.0, 2.0, 1.0;  // eigenvalues 3 and -1
  Rng rng(13);
  CHECK_THROWS_AS(gen_covariates(10, 2, sigma, CovariateDist::StdNormal, rng), Error);
}

TEST_CASE("covariate generation is deterministic and prefix-stable") {
  Rng a(17), b(17);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd x1 = gen_covariates(50, 3, id, CovariateDist::StdNormal, a);
  const Eigen::MatrixXd x2 = gen_covariates(100, 3, id, CovariateDist::StdNormal, b);
  CHECK((x1 - x2.topRows(50)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gen_clean records metadata and stays in-domain") {
  Eigen::VectorXd beta(3);
  beta << 0.5, -0.3, 0.2;
  const Eigen::MatrixXd sigma = Eigen::MatrixXd::Identity(3, 3);
  const Dataset ds = gen_clean(500, poisson_desc(), beta, sigma, CovariateDist::StdNormal, 99);
  CHECK(ds.n() == 500);
  CHECK(ds.dim() == 3);
  CHECK(ds.meta.seed == 99);
  CHECK(ds.meta.epsilon_actual == 0.0);
  CHECK(ds.corrupted_count() == 0);
  REQUIRE(ds.meta.beta_star.has_value());
  CHECK((*ds.meta.beta_star - beta).norm() == 0.0);
  REQUIRE(ds.meta.sigma_cov.has_value());
  const GlmFamily fam = ds.meta.family.make();
  for (Eigen::Index i = 0; i < ds.n(); ++i) REQUIRE(fam.label_in_domain(ds.y(i)));
}

TEST_CASE("gen_clean labels track the conditional mean") {
  Eigen::VectorXd beta(2);
  beta << 1.0, 0.0;
  const Dataset ds =
      gen_clean(40000, gaussian_desc(), beta, Eigen::MatrixXd::Identity(2, 2), CovariateDist::StdNormal, 5);
  // regress y on x: the slope recovers beta at this sample size
  const Eigen::VectorXd slope = (ds.x.transpose() * ds.x).ldlt().solve(ds.x.transpose() * ds.y);
  CHECK((slope - beta).norm() < 0.02);
}

TEST_CASE("gen_clean is deterministic in the seed") {
  Eigen::VectorXd beta(2);
  beta << 0.3, 0.4;
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(2, 2);
  const Dataset a = gen_clean(100, binomial_desc(8), beta, id, CovariateDist::StdNormal, 42);
  const Dataset b = gen_clean(100, binomial_desc(8), beta, id, CovariateDist::StdNormal, 42);
  const Dataset c = gen_clean(100, binomial_desc(8), beta, id, CovariateDist::StdNormal, 43);
  CHECK((a.x - b.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.y - c.y).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("corrupt flips exactly floor(eps n) rows with the largest |theta|") {
  Eigen::VectorXd beta(1);
  beta << 1.0;
  Dataset ds = gen_clean(10, gaussian_desc(), beta, Eigen::MatrixXd::Identity(1, 1), CovariateDist::StdNormal, 21);
  AdversarySpec adv;
  adv.attack = AttackKind::ConstantLabel;
  adv.value = -4.0;
  adv.epsilon = 0.2;
  Rng rng(1);
  const Dataset out = corrupt(ds, adv, rng);
  CHECK(out.corrupted_count() == 2);
  CHECK(out.meta.epsilon_actual == doctest::Approx(0.2));

  // the two targets are the rows with the largest |x . beta|
  std::vector<std::pair<double, Eigen::Index>> mag;
  for (Eigen::Index i = 0; i < 10; ++i) mag.emplace_back(std::fabs(ds.x(i, 0)), i);
  std::sort(mag.begin(), mag.end(), [](auto a, auto b) { return a.first > b.first; });
  for (int t = 0; t < 2; ++t) {
    CHECK(out.corrupted[static_cast<std::size_t>(mag[t].second)] == 1);
    CHECK(out.y(mag[t].second) == -4.0);
  }
  // untouched rows keep their labels
  for (Eigen::Index i = 0; i < 10; ++i)
    if (!out.corrupted[static_cast<std::size_t>(i)]) CHECK(out.y(i) == ds.y(i));
}

TEST_CASE("large-outlier plants scale times the max clean label") {
  Eigen::VectorXd beta(2);
  beta << 1.0, 0.5;
  Dataset ds = gen_clean(50, gaussian_desc(), beta, Eigen::MatrixXd::Identity(2, 2), CovariateDist::StdNormal, 31);
  const double ref = ds.y.cwiseAbs().maxCoeff();
  AdversarySpec adv;
  adv.attack = AttackKind::LargeOutlier;
  adv.scale = 10.0;
  adv.epsilon = 0.1;
  Rng rng(2);
  const Dataset out = corrupt(ds, adv, rng);
  CHECK(out.corrupted_count() == 5);
  for (Eigen::Index i = 0; i < out.n(); ++i)
    if (out.corrupted[static_cast<std::size_t>(i)]) CHECK(out.y(i) == doctest::Approx(10.0 * ref).epsilon(1e-15));
}

TEST_CASE("constant labels are clamped to the family domain") {
  Eigen::VectorXd beta(1);
  beta << 0.2;
  Dataset ds = gen_clean(20, binomial_desc(4), beta, Eigen::MatrixXd::Identity(1, 1), CovariateDist::StdNormal, 33);
  AdversarySpec adv;
  adv.attack = AttackKind::ConstantLabel;
  adv.value = 99.7;
  adv.epsilon = 0.25;
  Rng rng(3);
  const Dataset out = corrupt(ds, adv, rng);
  for (Eigen::Index i = 0; i < out.n(); ++i)
    if (out.corrupted[static_cast<std::size_t>(i)]) CHECK(out.y(i) == 4.0);
}

TEST_CASE("flipped-model labels stay in-domain and the mask is exact") {
  Eigen::VectorXd beta(2);
  beta << 0.8, -0.6;
  Dataset ds = gen_clean(40, poisson_desc(), beta, Eigen::MatrixXd::Identity(2, 2), CovariateDist::StdNormal, 35);
  AdversarySpec adv;
  adv.attack = AttackKind::FlippedModel;
  adv.epsilon = 0.25;
  Rng rng(4);
  const Dataset out = corrupt(ds, adv, rng);
  CHECK(out.corrupted_count() == 10);
  const GlmFamily fam = out.meta.family.make();
  for (Eigen::Index i = 0; i < out.n(); ++i) REQUIRE(fam.label_in_domain(out.y(i)));
}

TEST_CASE("corruption composes by OR-ing the masks") {
  Eigen::VectorXd beta(2);
  beta << 1.0, 1.0;
  Dataset ds = gen_clean(40, gaussian_desc(), beta, Eigen::MatrixXd::Identity(2, 2), CovariateDist::StdNormal, 37);
  AdversarySpec first;
  first.attack = AttackKind::LargeOutlier;
  first.epsilon = 0.1;
  AdversarySpec second;
  second.attack = AttackKind::ConstantLabel;
  second.value = 0.0;
  second.epsilon = 0.1;
  Rng rng(5);
  const Dataset once = corrupt(ds, first, rng);
  const Dataset twice = corrupt(once, second, rng);
  // both attacks target the same largest-|theta| rows, so the mask stays at 4
  CHECK(twice.corrupted_count() == 4);
  CHECK(twice.meta.epsilon_actual == doctest::Approx(0.1));
}

TEST_CASE("total corruption beyond half the sample is refused") {
  // half the rows are already marked; one more corrupted row crosses n/2
  Dataset ds;
  ds.x.resize(10, 1);
  ds.x.col(0).setLinSpaced(10, 0.1, 1.0);  // row 9 has the largest |theta|
  ds.y = Eigen::VectorXd::Zero(10);
  ds.corrupted.assign(10, 0);
  for (int i = 0; i < 5; ++i) ds.corrupted[static_cast<std::size_t>(i)] = 1;
  ds.meta.family = gaussian_desc();
  Eigen::VectorXd beta(1);
  beta << 1.0;
  ds.meta.beta_star = beta;
  ds.meta.epsilon_actual = 0.5;

  AdversarySpec adv;
  adv.attack = AttackKind::ConstantLabel;
  adv.value = 1.0;
  adv.epsilon = 0.1;  // targets row 9, pushing the total to 6 of 10
  Rng rng(6);
  CHECK_THROWS_AS(corrupt(ds, adv, rng), Error);
}

TEST_CASE("epsilon zero is a no-op") {
  Eigen::VectorXd beta(2);
  beta << 0.5, 0.5;
  Dataset ds = gen_clean(30, gaussian_desc(), beta, Eigen::MatrixXd::Identity(2, 2), CovariateDist::StdNormal, 41);
  AdversarySpec adv;
  adv.attack = AttackKind::LargeOutlier;
  adv.epsilon = 0.0;
  Rng rng(7);
  const Dataset out = corrupt(ds, adv, rng);
  CHECK(out.corrupted_count() == 0);
  CHECK((out.y - ds.y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("corrupt validates its inputs") {
  Eigen::VectorXd beta(1);
  beta << 1.0;
  Dataset ds = gen_clean(10, gaussian_desc(), beta, Eigen::MatrixXd::Identity(1, 1), CovariateDist::StdNormal, 43);
  Rng rng(8);

  AdversarySpec bad_eps;
  bad_eps.epsilon = 0.6;
  CHECK_THROWS_AS(corrupt(ds, bad_eps, rng), Error);

  AdversarySpec spike;
  spike.attack = AttackKind::LeverageSpike;
  spike.epsilon = 0.2;
  spike.mode = CorruptionMode::LabelOnly;  // covariate attack needs sample mode
  CHECK_THROWS_AS(corrupt(ds, spike, rng), Error);

  Dataset no_truth = ds;
  no_truth.meta.beta_star.reset();
  AdversarySpec ok;
  ok.epsilon = 0.2;
  CHECK_THROWS_AS(corrupt(no_truth, ok, rng), Error);
}

TEST_CASE("leverage-spike plants rows of the requested magnitude") {
  Eigen::VectorXd beta(3);
  beta << 1.0, 0.0, 0.0;
  Dataset ds = gen_clean(50, gaussian_desc(), beta, Eigen::MatrixXd::Identity(3, 3), CovariateDist::StdNormal, 45);
  AdversarySpec adv;
  adv.attack = AttackKind::LeverageSpike;
  adv.mode = CorruptionMode::Sample;
  adv.epsilon = 0.1;
  adv.magnitude = 25.0;
  Rng rng(9);
  const Dataset out = corrupt(ds, adv, rng);
  CHECK(out.corrupted_count() == 5);
  for (Eigen::Index i = 0; i < out.n(); ++i)
    if (out.corrupted[static_cast<std::size_t>(i)])
      CHECK(out.x.row(i).norm() == doctest::Approx(25.0).epsilon(1e-12));

  // the automatic direction keeps the decoy natural parameter small
  for (Eigen::Index i = 0; i < out.n(); ++i)
    if (out.corrupted[static_cast<std::size_t>(i)])
      CHECK(std::fabs(beta.dot(out.x.row(i))) == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("leverage-spike honors an explicit direction") {
  Eigen::VectorXd beta(2);
  beta << 1.0, 1.0;
  Dataset ds = gen_clean(30, gaussian_desc(), beta, Eigen::MatrixXd::Identity(2, 2), CovariateDist::StdNormal, 47);
  AdversarySpec adv;
  adv.attack = AttackKind::LeverageSpike;
  adv.mode = CorruptionMode::Sample;
  adv.epsilon = 0.1;
  adv.magnitude = 10.0;
  Eigen::VectorXd dir(2);
  dir << 0.0, 2.0;  // normalized internally
  adv.direction = dir;
  Rng rng(10);
  const Dataset out = corrupt(ds, adv, rng);
  for (Eigen::Index i = 0; i < out.n(); ++i)
    if (out.corrupted[static_cast<std::size_t>(i)]) {
      CHECK(out.x(i, 0) == doctest::Approx(0.0));
      CHECK(out.x(i, 1) == doctest::Approx(10.0));
    }
}

TEST_CASE("save and load round-trip bit-exactly") {
  Eigen::VectorXd beta(2);
  beta << 0.123456789012345, -1.0 / 3.0;
  Eigen::MatrixXd sigma(2, 2);
  sigma << 2.0, 0.25, 0.25, 1.0;
  Dataset ds = gen_clean(25, gaussian_desc(0.7), beta, sigma, CovariateDist::StdNormal, 49);
  AdversarySpec adv;
  adv.attack = AttackKind::LargeOutlier;
  adv.epsilon = 0.2;
  Rng rng(11);
  ds = corrupt(ds, adv, rng);

  const auto path = temp_file("roundtrip.csv");
  save_dataset(ds, path.string());
  const Dataset back = load_dataset(path.string());

  CHECK(back.n() == ds.n());
  CHECK(back.dim() == ds.dim());
  CHECK((back.x - ds.x).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.y - ds.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.corrupted == ds.corrupted);
  CHECK(back.meta.seed == ds.meta.seed);
  CHECK(back.meta.epsilon_actual == ds.meta.epsilon_actual);
  REQUIRE(back.meta.beta_star.has_value());
  CHECK((*back.meta.beta_star - beta).cwiseAbs().maxCoeff() == 0.0);
  REQUIRE(back.meta.sigma_cov.has_value());
  CHECK((*back.meta.sigma_cov - sigma).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.meta.family.kind == FamilyKind::Gaussian);
  CHECK(back.meta.family.sigma == 0.7);
}

TEST_CASE("count-family labels survive the round trip exactly") {
  Eigen::VectorXd beta(1);
  beta << 0.4;
  const Dataset ds =
      gen_clean(30, binomial_desc(16), beta, Eigen::MatrixXd::Identity(1, 1), CovariateDist::StdNormal, 51);
  const auto path = temp_file("binomial.csv");
  save_dataset(ds, path.string());
  const Dataset back = load_dataset(path.string());
  CHECK((back.y - ds.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.meta.family.m == 16);
}

TEST_CASE("loading without the sidecar fails with an io error") {
  Eigen::VectorXd beta(1);
  beta << 1.0;
  const Dataset ds = gen_clean(5, gaussian_desc(), beta, Eigen::MatrixXd::Identity(1, 1), CovariateDist::StdNormal, 53);
  const auto path = temp_file("nosidecar.csv");
  save_dataset(ds, path.string());
  std::filesystem::remove(sidecar_path(path.string()));
  try {
    load_dataset(path.string());
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Io);
  }
}

TEST_CASE("malformed files are rejected with line information") {
  const auto csv = temp_file("bad.csv");
  const auto meta = sidecar_path(csv.string());
  {
    std::ofstream m(meta);
    m << R"({"schema_version": 1, "family": "gaussian", "params": {"sigma": 1.0},)"
      << R"( "beta_star": null, "sigma_cov": null, "seed": 0, "epsilon_actual": 0.0})" << '\n';
  }

  SUBCASE("wrong header") {
    std::ofstream f(csv);
    f << "a,b,c\n1,2,0\n";
    f.close();
    CHECK_THROWS_AS(load_dataset(csv.string()), Error);
  }
  SUBCASE("non-numeric field") {
    std::ofstream f(csv);
    f << "x1,y,corrupted\n1.0,2.0,0\noops,1.0,0\n";
    f.close();
    try {
      load_dataset(csv.string());
      FAIL("expected an exception");
    } catch (const Error& e) {
      const std::string msg = e.what();
      CHECK(msg.find("oops") != std::string::npos);
      CHECK(msg.find(":3") != std::string::npos);  // file:line of the bad field
    }
  }
  SUBCASE("mask outside {0,1}") {
    std::ofstream f(csv);
    f << "x1,y,corrupted\n1.0,2.0,2\n";
    f.close();
    CHECK_THROWS_AS(load_dataset(csv.string()), Error);
  }
  SUBCASE("missing column") {
    std::ofstream f(csv);
    f << "x1,y,corrupted\n1.0,2.0\n";
    f.close();
    CHECK_THROWS_AS(load_dataset(csv.string()), Error);
  }
}

TEST_CASE("label domain is enforced at load time") {
  const auto csv = temp_file("domain.csv");
  {
    std::ofstream m(sidecar_path(csv.string()));
    m << R"({"schema_version": 1, "family": "poisson", "params": {},)"
      << R"( "beta_star": null, "sigma_cov": null, "seed": 0, "epsilon_actual": 0.0})" << '\n';
    std::ofstream f(csv);
    f << "x1,y,corrupted\n1.0,2.5,0\n";
  }
  CHECK_THROWS_AS(load_dataset(csv.string()), Error);
}

TEST_CASE("sidecar epsilon consistency is enforced") {
  const auto csv = temp_file("eps.csv");
  {
    std::ofstream m(sidecar_path(csv.string()));
    m << R"({"schema_version": 1, "family": "gaussian", "params": {"sigma": 1.0},)"
      << R"( "beta_star": null, "sigma_cov": null, "seed": 0, "epsilon_actual": 0.5})" << '\n';
    std::ofstream f(csv);
    f << "x1,y,corrupted\n1.0,2.0,0\n0.5,1.0,0\n";  // zero corrupted rows, sidecar says half
  }
  CHECK_THROWS_AS(load_dataset(csv.string()), Error);
}
