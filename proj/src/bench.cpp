#include "trimglm/bench.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <thread>

#include "trimglm/diagnostics.hpp"
#include "trimglm/errors.hpp"
#include "trimglm/filter.hpp"

namespace trimglm {

using json = nlohmann::ordered_json;

Eigen::MatrixXd SigmaSpec::resolve(Eigen::Index d) const {
  switch (kind) {
    case Kind::Identity:
      return Eigen::MatrixXd::Identity(d, d);
    case Kind::Diagonal: {
      if (static_cast<Eigen::Index>(diag.size()) != d)
        fail_invalid("bench plan: sigma_cov diagonal length disagrees with a size entry's d");
      Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
      for (Eigen::Index j = 0; j < d; ++j) s(j, j) = diag[static_cast<std::size_t>(j)];
      return s;
    }
    case Kind::Full:
      if (full.rows() != d || full.cols() != d)
        fail_invalid("bench plan: sigma_cov shape disagrees with a size entry's d");
      return full;
  }
  fail_invalid("bench plan: unresolved sigma_cov");
}

namespace {

void require_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* key : allowed)
      if (item.key() == key) ok = true;
    if (!ok) fail_invalid(std::string("bench plan: unknown key '") + item.key() + "' in " + where);
  }
}

FamilyDescriptor parse_family(const json& j) {
  require_keys(j, {"kind", "sigma", "m"}, "families[]");
  const std::string kind = j.value("kind", std::string());
  FamilyDescriptor f;
  if (kind == "gaussian") {
    f.kind = FamilyKind::Gaussian;
    f.sigma = j.value("sigma", 1.0);
  } else if (kind == "poisson") {
    f.kind = FamilyKind::Poisson;
  } else if (kind == "binomial") {
    f.kind = FamilyKind::Binomial;
    if (!j.contains("m")) fail_invalid("bench plan: binomial family requires m");
    f.m = j["m"].get<long long>();
  } else {
    fail_invalid("bench plan: family kind must be gaussian, poisson or binomial");
  }
  f.make();  // validate parameters now
  return f;
}

AttackKind parse_attack(const std::string& s) {
  if (s == "large-outlier") return AttackKind::LargeOutlier;
  if (s == "flipped-model") return AttackKind::FlippedModel;
  if (s == "constant-label") return AttackKind::ConstantLabel;
  if (s == "leverage-spike") return AttackKind::LeverageSpike;
  fail_invalid("bench plan: unknown attack '" + s + "'");
}

}  // namespace

BenchPlan load_bench_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_io("bench plan: cannot open '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail_invalid("bench plan: '" + path + "' is not valid JSON: " + e.what());
  }
  require_keys(j,
               {"schema_version", "mode", "families", "epsilons", "sizes", "adversaries", "trials", "root_seed",
                "beta_norm", "sigma_cov", "cov_dist", "radius", "record_wall_time"},
               "the plan");
  if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
    fail_invalid("bench plan: an integer schema_version is required");
  if (j["schema_version"].get<int>() != 1) fail_invalid("bench plan: unsupported schema_version (expected 1)");

  BenchPlan plan;
  const std::string mode = j.value("mode", std::string("label"));
  if (mode == "label")
    plan.mode = CorruptionMode::LabelOnly;
  else if (mode == "sample")
    plan.mode = CorruptionMode::Sample;
  else
    fail_invalid("bench plan: mode must be 'label' or 'sample'");

  if (!j.contains("families") || !j["families"].is_array() || j["families"].empty())
    fail_invalid("bench plan: families must be a nonempty array");
  for (const json& f : j["families"]) plan.families.push_back(parse_family(f));

  if (!j.contains("epsilons") || !j["epsilons"].is_array() || j["epsilons"].empty())
    fail_invalid("bench plan: epsilons must be a nonempty array");
  for (const json& e : j["epsilons"]) {
    const double eps = e.get<double>();
    if (!(eps >= 0.0 && eps <= 0.25)) fail_invalid("bench plan: epsilons must lie in [0, 0.25]");
    plan.epsilons.push_back(eps);
  }

  if (!j.contains("sizes") || !j["sizes"].is_array() || j["sizes"].empty())
    fail_invalid("bench plan: sizes must be a nonempty array");
  for (const json& s : j["sizes"]) {
    require_keys(s, {"n", "d"}, "sizes[]");
    BenchSize sz;
    sz.n = s.value("n", Eigen::Index{0});
    sz.d = s.value("d", Eigen::Index{0});
    if (sz.n < 1 || sz.d < 1) fail_invalid("bench plan: sizes need positive n and d");
    plan.sizes.push_back(sz);
  }

  if (!j.contains("adversaries") || !j["adversaries"].is_array() || j["adversaries"].empty())
    fail_invalid("bench plan: adversaries must be a nonempty array");
  for (const json& a : j["adversaries"]) {
    require_keys(a, {"attack", "scale", "value", "magnitude"}, "adversaries[]");
    BenchAdversary adv;
    adv.attack = parse_attack(a.value("attack", std::string()));
    adv.scale = a.value("scale", 10.0);
    adv.value = a.value("value", 0.0);
    adv.magnitude = a.value("magnitude", 25.0);
    if (adv.attack == AttackKind::LeverageSpike && plan.mode != CorruptionMode::Sample)
      fail_invalid("bench plan: leverage-spike requires mode 'sample'");
    plan.adversaries.push_back(adv);
  }

  plan.trials = j.value("trials", 1);
  if (plan.trials < 1) fail_invalid("bench plan: trials must be at least 1");
  plan.root_seed = j.value("root_seed", std::uint64_t{0});
  plan.beta_norm = j.value("beta_norm", 1.0);
  if (!(plan.beta_norm >= 0.0)) fail_invalid("bench plan: beta_norm must be nonnegative");

  if (j.contains("sigma_cov") && !j["sigma_cov"].is_null()) {
    const json& s = j["sigma_cov"];
    if (s.is_string() && s.get<std::string>() == "identity") {
      plan.sigma.kind = SigmaSpec::Kind::Identity;
    } else if (s.is_object() && s.contains("diag")) {
      require_keys(s, {"diag"}, "sigma_cov");
      plan.sigma.kind = SigmaSpec::Kind::Diagonal;
      for (const json& v : s["diag"]) plan.sigma.diag.push_back(v.get<double>());
    } else if (s.is_array()) {
      plan.sigma.kind = SigmaSpec::Kind::Full;
      const std::size_t d = s.size();
      plan.sigma.full.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
      for (std::size_t r = 0; r < d; ++r) {
        if (!s[r].is_array() || s[r].size() != d) fail_invalid("bench plan: sigma_cov matrix rows are ragged");
        for (std::size_t c = 0; c < d; ++c)
          plan.sigma.full(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = s[r][c].get<double>();
      }
    } else {
      fail_invalid("bench plan: sigma_cov must be \"identity\", {\"diag\": [...]} or a matrix");
    }
  }

  const std::string dist = j.value("cov_dist", std::string("std-normal"));
  if (dist == "std-normal")
    plan.cov_dist = CovariateDist::StdNormal;
  else if (dist == "rademacher")
    plan.cov_dist = CovariateDist::Rademacher;
  else if (dist == "sphere-scaled")
    plan.cov_dist = CovariateDist::SphereScaled;
  else
    fail_invalid("bench plan: cov_dist must be std-normal, rademacher or sphere-scaled");

  if (j.contains("radius") && !j["radius"].is_null()) {
    const double r = j["radius"].get<double>();
    if (!(r > 0.0)) fail_invalid("bench plan: radius must be positive");
    plan.radius = r;
  }
  plan.record_wall_time = j.value("record_wall_time", false);
  return plan;
}

namespace {

struct TrialRow {
  std::string family;
  double epsilon_c = 0.0;
  Eigen::Index n = 0;
  Eigen::Index d = 0;
  std::string adversary;
  int trial = 0;
  std::uint64_t seed = 0;
  double error_l2 = std::numeric_limits<double>::quiet_NaN();
  double error_sigma_norm = std::numeric_limits<double>::quiet_NaN();
  long long outer_iters = 0;
  double wall_ms = 0.0;
  double naive_error = std::numeric_limits<double>::quiet_NaN();
  bool failed = false;
  std::string message;
  std::size_t cell = 0;  // flat cell id for the summary
};

struct CellKey {
  std::size_t family_idx, eps_idx, size_idx, adv_idx;
};

double radius_hint_for(double beta_norm) { return beta_norm > 0.0 ? 2.0 * beta_norm : 1.0; }

void run_trial(const BenchPlan& plan, const CellKey& key, int trial, TrialRow& row) {
  const FamilyDescriptor& fd = plan.families[key.family_idx];
  const double eps_c = plan.epsilons[key.eps_idx];
  const BenchSize& size = plan.sizes[key.size_idx];
  const BenchAdversary& badv = plan.adversaries[key.adv_idx];

  const std::uint64_t seed = derive_seed(
      plan.root_seed, {key.family_idx, key.eps_idx, key.size_idx, key.adv_idx, static_cast<std::uint64_t>(trial)});
  row.seed = seed;
  const GlmFamily fam = fd.make();

  Rng rng_beta(derive_seed(seed, {0}));
  const std::uint64_t gen_seed = derive_seed(seed, {1});
  Rng rng_corrupt(derive_seed(seed, {2}));

  Eigen::VectorXd beta_star = Eigen::VectorXd::Zero(size.d);
  if (plan.beta_norm > 0.0) {
    double norm = 0.0;
    do {
      for (Eigen::Index jj = 0; jj < size.d; ++jj) beta_star(jj) = rng_beta.normal();
      norm = beta_star.norm();
    } while (norm == 0.0);
    beta_star *= plan.beta_norm / norm;
  }

  const Eigen::MatrixXd sigma = plan.sigma.resolve(size.d);
  Dataset ds = gen_clean(size.n, fd, beta_star, sigma, plan.cov_dist, gen_seed);

  AdversarySpec adv;
  adv.mode = plan.mode;
  adv.attack = badv.attack;
  adv.epsilon = eps_c;
  adv.scale = badv.scale;
  adv.value = badv.value;
  adv.magnitude = badv.magnitude;
  ds = corrupt(ds, adv, rng_corrupt);

  EstimatorConfig cfg = theorem_config(fam, eps_c, size.n, size.d, plan.radius.value_or(radius_hint_for(plan.beta_norm)));
  if (plan.radius) cfg.radius = *plan.radius;

  const auto t0 = std::chrono::steady_clock::now();
  FitResult fitres;
  if (plan.mode == CorruptionMode::Sample) {
    fitres = fit_sample_corruption(ds, fam, sigma, FilterConfig::defaults(eps_c, size.n), cfg).fit;
  } else {
    fitres = fit(ds, fam, cfg);
  }
  const auto t1 = std::chrono::steady_clock::now();
  if (plan.record_wall_time)
    row.wall_ms = std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 - t0).count();

  row.error_l2 = param_error(fitres.beta_hat, beta_star, nullptr);
  row.error_sigma_norm = param_error(fitres.beta_hat, beta_star, &sigma);
  row.outer_iters = fitres.outer_iters;

  // untrimmed constrained MLE over everything, the baseline the estimator must beat
  std::vector<Eigen::Index> all(static_cast<std::size_t>(size.n));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  const Eigen::VectorXd naive =
      constrained_mle(ds, fam, all, cfg.radius, cfg.inner, Eigen::VectorXd::Zero(size.d), nullptr);
  row.naive_error = param_error(naive, beta_star, &sigma);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// least-squares slope of log(err) against log(eps)
std::optional<double> loglog_slope(const std::vector<std::pair<double, double>>& pts) {
  std::vector<std::pair<double, double>> usable;
  for (const auto& [eps, err] : pts)
    if (eps > 0.0 && err > 0.0 && std::isfinite(err)) usable.emplace_back(std::log(eps), std::log(err));
  if (usable.size() < 2) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (const auto& [x, y] : usable) {
    mx += x;
    my += y;
  }
  mx /= static_cast<double>(usable.size());
  my /= static_cast<double>(usable.size());
  double num = 0.0, den = 0.0;
  for (const auto& [x, y] : usable) {
    num += (x - mx) * (y - my);
    den += (x - mx) * (x - mx);
  }
  if (den == 0.0) return std::nullopt;
  return num / den;
}

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

BenchResult run_bench(const BenchPlan& plan, const std::string& out_dir, int threads) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) fail_io("run_bench: cannot create output directory '" + out_dir + "'");

  struct Task {
    CellKey key;
    int trial;
  };
  std::vector<Task> tasks;
  std::size_t cell_count = 0;
  for (std::size_t fi = 0; fi < plan.families.size(); ++fi)
    for (std::size_t ei = 0; ei < plan.epsilons.size(); ++ei)
      for (std::size_t si = 0; si < plan.sizes.size(); ++si)
        for (std::size_t ai = 0; ai < plan.adversaries.size(); ++ai) {
          for (int t = 0; t < plan.trials; ++t) tasks.push_back({{fi, ei, si, ai}, t});
          ++cell_count;
        }

  std::vector<TrialRow> rows(tasks.size());
  std::atomic<std::size_t> next{0};
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t pool =
      std::min<std::size_t>(tasks.size(), threads > 0 ? static_cast<std::size_t>(threads) : hw);

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      TrialRow& row = rows[i];
      const FamilyDescriptor& fd = plan.families[task.key.family_idx];
      const BenchAdversary& badv = plan.adversaries[task.key.adv_idx];
      AdversarySpec label;
      label.attack = badv.attack;
      label.scale = badv.scale;
      label.value = badv.value;
      label.magnitude = badv.magnitude;
      row.family = fd.name();
      row.epsilon_c = plan.epsilons[task.key.eps_idx];
      row.n = plan.sizes[task.key.size_idx].n;
      row.d = plan.sizes[task.key.size_idx].d;
      row.adversary = label.name();
      row.trial = task.trial;
      row.cell = ((task.key.family_idx * plan.epsilons.size() + task.key.eps_idx) * plan.sizes.size() +
                  task.key.size_idx) *
                     plan.adversaries.size() +
                 task.key.adv_idx;
      try {
        run_trial(plan, task.key, task.trial, row);
      } catch (const std::exception& e) {
        row.failed = true;
        row.message = e.what();
      }
    }
  };
  if (pool <= 1) {
    worker();
  } else {
    std::vector<std::thread> workers;
    workers.reserve(pool);
    for (std::size_t t = 0; t < pool; ++t) workers.emplace_back(worker);
    for (std::thread& t : workers) t.join();
  }

  BenchResult result;
  result.csv_path = (std::filesystem::path(out_dir) / "bench.csv").string();
  result.summary_path = (std::filesystem::path(out_dir) / "bench_summary.json").string();

  std::ofstream csv(result.csv_path);
  if (!csv) fail_io("run_bench: cannot open '" + result.csv_path + "' for writing");
  csv << "family,epsilon_c,n,d,adversary,trial,seed,error_l2,error_sigma_norm,outer_iters,wall_time_ms,naive_error\n";
  for (const TrialRow& r : rows) {
    csv << r.family << ',' << format_g(r.epsilon_c) << ',' << r.n << ',' << r.d << ',' << r.adversary << ','
        << r.trial << ',' << r.seed << ',' << format_g(r.error_l2) << ',' << format_g(r.error_sigma_norm) << ','
        << r.outer_iters << ',';
    if (plan.record_wall_time) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.3f", r.wall_ms);
      csv << buf;
    } else {
      csv << 0;
    }
    csv << ',' << format_g(r.naive_error) << '\n';
  }
  if (!csv) fail_io("run_bench: write to '" + result.csv_path + "' failed");
  csv.close();

  // summary: per-cell medians, then slopes across epsilon
  json cells = json::array();
  std::vector<std::vector<double>> med_l2(cell_count), med_sig(cell_count), med_naive(cell_count);
  std::vector<std::vector<long long>> iters(cell_count);
  std::vector<long long> fails(cell_count, 0);
  json failures = json::array();
  for (const TrialRow& r : rows) {
    if (r.failed) {
      ++fails[r.cell];
      json f;
      f["family"] = r.family;
      f["epsilon_c"] = r.epsilon_c;
      f["n"] = r.n;
      f["d"] = r.d;
      f["adversary"] = r.adversary;
      f["trial"] = r.trial;
      f["message"] = r.message;
      failures.push_back(f);
      continue;
    }
    med_l2[r.cell].push_back(r.error_l2);
    med_sig[r.cell].push_back(r.error_sigma_norm);
    med_naive[r.cell].push_back(r.naive_error);
    iters[r.cell].push_back(r.outer_iters);
  }

  // med_l2 keyed by flat cell id; rebuild the labels in the same loop order
  std::size_t cell = 0;
  std::vector<double> cell_median_l2(cell_count), cell_median_sig(cell_count);
  for (std::size_t fi = 0; fi < plan.families.size(); ++fi)
    for (std::size_t ei = 0; ei < plan.epsilons.size(); ++ei)
      for (std::size_t si = 0; si < plan.sizes.size(); ++si)
        for (std::size_t ai = 0; ai < plan.adversaries.size(); ++ai) {
          AdversarySpec label;
          label.attack = plan.adversaries[ai].attack;
          label.scale = plan.adversaries[ai].scale;
          label.value = plan.adversaries[ai].value;
          label.magnitude = plan.adversaries[ai].magnitude;
          json c;
          c["family"] = plan.families[fi].name();
          c["epsilon_c"] = plan.epsilons[ei];
          c["n"] = plan.sizes[si].n;
          c["d"] = plan.sizes[si].d;
          c["adversary"] = label.name();
          c["trials"] = plan.trials;
          c["failures"] = fails[cell];
          cell_median_l2[cell] = median_of(med_l2[cell]);
          cell_median_sig[cell] = median_of(med_sig[cell]);
          const double ml2 = cell_median_l2[cell];
          const double msig = cell_median_sig[cell];
          const double mnv = median_of(med_naive[cell]);
          c["median_error_l2"] = std::isfinite(ml2) ? json(ml2) : json(nullptr);
          c["median_error_sigma_norm"] = std::isfinite(msig) ? json(msig) : json(nullptr);
          c["median_naive_error"] = std::isfinite(mnv) ? json(mnv) : json(nullptr);
          std::vector<double> it(iters[cell].begin(), iters[cell].end());
          const double mit = median_of(it);
          c["median_outer_iters"] = std::isfinite(mit) ? json(mit) : json(nullptr);
          if (fails[cell] >= plan.trials) result.any_cell_failed = true;
          cells.push_back(c);
          ++cell;
        }

  json slopes = json::array();
  for (std::size_t fi = 0; fi < plan.families.size(); ++fi)
    for (std::size_t si = 0; si < plan.sizes.size(); ++si)
      for (std::size_t ai = 0; ai < plan.adversaries.size(); ++ai) {
        std::vector<std::pair<double, double>> pts_l2, pts_sig;
        for (std::size_t ei = 0; ei < plan.epsilons.size(); ++ei) {
          const std::size_t id =
              ((fi * plan.epsilons.size() + ei) * plan.sizes.size() + si) * plan.adversaries.size() + ai;
          pts_l2.emplace_back(plan.epsilons[ei], cell_median_l2[id]);
          pts_sig.emplace_back(plan.epsilons[ei], cell_median_sig[id]);
        }
        AdversarySpec label;
        label.attack = plan.adversaries[ai].attack;
        label.scale = plan.adversaries[ai].scale;
        label.value = plan.adversaries[ai].value;
        label.magnitude = plan.adversaries[ai].magnitude;
        json s;
        s["family"] = plan.families[fi].name();
        s["n"] = plan.sizes[si].n;
        s["d"] = plan.sizes[si].d;
        s["adversary"] = label.name();
        const auto sl2 = loglog_slope(pts_l2);
        const auto ssig = loglog_slope(pts_sig);
        s["slope_error_l2"] = sl2 ? json(*sl2) : json(nullptr);
        s["slope_error_sigma_norm"] = ssig ? json(*ssig) : json(nullptr);
        slopes.push_back(s);
      }

  json summary;
  summary["schema_version"] = 1;
  summary["mode"] = plan.mode == CorruptionMode::Sample ? "sample" : "label";
  summary["cells"] = cells;
  summary["slopes"] = slopes;
  summary["failures"] = failures;
  result.summary_json = summary.dump(2);

  std::ofstream sj(result.summary_path);
  if (!sj) fail_io("run_bench: cannot open '" + result.summary_path + "' for writing");
  sj << result.summary_json << '\n';
  if (!sj) fail_io("run_bench: write to '" + result.summary_path + "' failed");
  return result;
}

}  // namespace trimglm
