// Command-line front end. Everything here goes through the public C interface
// in trimglm.h; the C++ core stays behind the shared library boundary.

#include <cinttypes>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trimglm.h"

namespace {

[[noreturn]] void die(tg_status status) {
  std::fprintf(stderr, "error: %s\n", tg_last_error());
  std::exit(static_cast<int>(status));
}

void check(tg_status status) {
  if (status != TG_OK) die(status);
}

// unique_ptr deleters for the C handles
struct FamilyDel { void operator()(tg_family* p) const { tg_family_free(p); } };
struct DatasetDel { void operator()(tg_dataset* p) const { tg_dataset_free(p); } };
struct FitDel { void operator()(tg_fit_result* p) const { tg_fit_result_free(p); } };
struct ReportDel { void operator()(tg_filter_report* p) const { tg_filter_report_free(p); } };
struct StrDel { void operator()(char* p) const { tg_string_free(p); } };

using FamilyPtr = std::unique_ptr<tg_family, FamilyDel>;
using DatasetPtr = std::unique_ptr<tg_dataset, DatasetDel>;
using FitPtr = std::unique_ptr<tg_fit_result, FitDel>;
using ReportPtr = std::unique_ptr<tg_filter_report, ReportDel>;
using StrPtr = std::unique_ptr<char, StrDel>;

std::string out_dir_default() {
  const char* env = std::getenv("TRIMGLM_OUT_DIR");
  return env && *env ? env : ".";
}

std::string join_out_dir(const std::string& name) {
  const std::string dir = out_dir_default();
  if (dir == ".") return name;
  return dir + "/" + name;
}

FamilyPtr make_family(const std::string& family, double sigma, long long m) {
  tg_family* fam = nullptr;
  if (family == "gaussian")
    check(tg_family_gaussian(sigma, &fam));
  else if (family == "poisson")
    check(tg_family_poisson(&fam));
  else if (family == "binomial")
    check(tg_family_binomial(m, &fam));
  else {
    std::fprintf(stderr, "error: unknown family '%s' (gaussian, poisson, binomial)\n", family.c_str());
    std::exit(2);
  }
  return FamilyPtr(fam);
}

tg_attack parse_attack(const std::string& s) {
  if (s == "large-outlier") return TG_ATTACK_LARGE_OUTLIER;
  if (s == "flipped-model") return TG_ATTACK_FLIPPED_MODEL;
  if (s == "constant-label") return TG_ATTACK_CONSTANT_LABEL;
  if (s == "leverage-spike") return TG_ATTACK_LEVERAGE_SPIKE;
  std::fprintf(stderr, "error: unknown attack '%s'\n", s.c_str());
  std::exit(2);
}

std::string format_vec(const std::vector<double>& v) {
  std::string s;
  char buf[40];
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.10g", v[i]);
    if (i) s += ' ';
    s += buf;
  }
  return s;
}

std::vector<double> fit_beta(const tg_fit_result* fit) {
  std::vector<double> beta(static_cast<std::size_t>(tg_fit_result_dim(fit)));
  check(tg_fit_result_beta(fit, beta.data()));
  return beta;
}

void print_fit_summary(const tg_dataset* ds, const tg_fit_result* fit, const tg_filter_report* report,
                       double gap_epsilon) {
  StrPtr term;
  {
    char* raw = nullptr;
    check(tg_fit_result_termination(fit, &raw));
    term.reset(raw);
  }
  const std::vector<double> beta = fit_beta(fit);
  std::printf("termination: %s after %lld rounds\n", term.get(), tg_fit_result_outer_iters(fit));
  std::printf("subset size: %lld of %lld rows\n", tg_fit_result_subset_size(fit), tg_dataset_rows(ds));
  if (report) {
    std::printf("filter: removed %lld rows in %lld rounds, final deviation %.6g\n",
                tg_filter_report_removed_count(report), tg_filter_report_rounds(report),
                tg_filter_report_final_deviation(report));
    const double recall = tg_filter_report_removal_recall(report);
    if (recall >= 0.0) std::printf("filter removal recall: %.4g\n", recall);
  }
  std::printf("beta_hat: %s\n", format_vec(beta).c_str());

  const long long d = tg_dataset_dim(ds);
  if (tg_dataset_has_beta_star(ds) && d == static_cast<long long>(beta.size())) {
    double err = 0.0;
    check(tg_param_error(ds, beta.data(), nullptr, d, 0, &err));
    std::printf("error_l2: %.10g\n", err);
    if (tg_dataset_has_sigma_cov(ds)) {
      double serr = 0.0;
      check(tg_param_error(ds, beta.data(), nullptr, d, 1, &serr));
      std::printf("error_sigma_norm: %.10g\n", serr);
    }
    double gap = 0.0;
    tg_family* fam = nullptr;
    check(tg_dataset_family(ds, &fam));
    FamilyPtr fam_guard(fam);
    const tg_status gs = tg_stationarity_gap(ds, fam, beta.data(), nullptr, d, gap_epsilon, &gap);
    if (gs == TG_OK) std::printf("stationarity_gap: %.10g\n", gap);
  }

  const long long warnings = tg_fit_result_warning_count(fit);
  for (long long i = 0; i < warnings; ++i) {
    char* raw = nullptr;
    check(tg_fit_result_warning(fit, i, &raw));
    StrPtr w(raw);
    std::printf("warning: %s\n", w.get());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    std::fprintf(stderr, "error: cannot open '%s' for writing\n", path.c_str());
    std::exit(4);
  }
  out << text;
  if (!out.flush()) {
    std::fprintf(stderr, "error: write to '%s' failed\n", path.c_str());
    std::exit(4);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trimmed maximum-likelihood estimation for GLMs with corrupted data"};
  app.require_subcommand(1);

  // ---- gen ----------------------------------------------------------------
  auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset, optionally corrupted");
  std::string g_family = "gaussian";
  double g_sigma = 1.0;
  long long g_m = 1;
  long long g_n = 1000, g_d = 5;
  std::uint64_t g_seed = 1;
  std::vector<double> g_beta;
  double g_beta_norm = 1.0;
  std::vector<double> g_cov_diag;
  std::string g_cov_dist = "std-normal";
  std::string g_attack = "none";
  double g_epsilon = 0.1, g_scale = 10.0, g_value = 0.0, g_magnitude = 25.0;
  std::vector<double> g_direction;
  std::string g_mode = "label";
  std::uint64_t g_adv_seed = 0;
  bool g_adv_seed_set = false;
  std::string g_out;
  gen->add_option("--family", g_family, "gaussian, poisson or binomial")->capture_default_str();
  gen->add_option("--sigma", g_sigma, "gaussian noise scale")->capture_default_str();
  gen->add_option("--m", g_m, "binomial trial count")->capture_default_str();
  gen->add_option("--n", g_n, "number of rows")->capture_default_str();
  gen->add_option("--d", g_d, "covariate dimension")->capture_default_str();
  gen->add_option("--seed", g_seed, "generation seed")->capture_default_str();
  gen->add_option("--beta", g_beta, "true coefficients (d values; default: random with --beta-norm)");
  gen->add_option("--beta-norm", g_beta_norm, "norm of the random true coefficients")->capture_default_str();
  gen->add_option("--cov-diag", g_cov_diag, "diagonal of the covariate covariance (default identity)");
  gen->add_option("--cov-dist", g_cov_dist, "std-normal, rademacher or sphere-scaled")->capture_default_str();
  gen->add_option("--attack", g_attack,
                  "none, large-outlier, flipped-model, constant-label or leverage-spike")
      ->capture_default_str();
  gen->add_option("--epsilon", g_epsilon, "corrupted fraction")->capture_default_str();
  gen->add_option("--scale", g_scale, "large-outlier scale")->capture_default_str();
  gen->add_option("--value", g_value, "constant-label value")->capture_default_str();
  gen->add_option("--magnitude", g_magnitude, "leverage-spike row norm")->capture_default_str();
  gen->add_option("--direction", g_direction, "leverage-spike direction (d values; default automatic)");
  gen->add_option("--mode", g_mode, "corruption mode: label or sample")->capture_default_str();
  gen->add_option("--adv-seed", g_adv_seed, "corruption seed (default: seed + 1)")
      ->each([&](const std::string&) { g_adv_seed_set = true; });
  gen->add_option("--out", g_out, "output CSV path (default: $TRIMGLM_OUT_DIR/data.csv)");

  // ---- fit ----------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand("fit", "Run the trimmed estimator on a dataset file");
  std::string f_data;
  std::string f_mode = "label";
  double f_eps_c = -1.0;
  double f_epsilon = -1.0, f_eta = -1.0, f_radius = -1.0, f_radius_hint = -1.0;
  long long f_max_outer = -1;
  std::string f_json;
  fit_cmd->add_option("--data", f_data, "dataset CSV (with .meta.json sidecar)")->required();
  fit_cmd->add_option("--mode", f_mode, "label (trimmed fit) or sample (filter first)")->capture_default_str();
  fit_cmd->add_option("--epsilon-c", f_eps_c,
                      "contamination rate; derives the guarantee settings (default: the recorded rate)");
  fit_cmd->add_option("--epsilon", f_epsilon, "override the trimming level");
  fit_cmd->add_option("--eta", f_eta, "override the termination slack");
  fit_cmd->add_option("--radius", f_radius, "override the constraint radius");
  fit_cmd->add_option("--radius-hint", f_radius_hint,
                      "bound on the true coefficient norm (default: from the recorded truth)");
  fit_cmd->add_option("--max-outer", f_max_outer, "override the outer iteration cap");
  fit_cmd->add_option("--json", f_json, "also write the fit result as JSON to this path");

  // ---- filter ---------------------------------------------------------------
  auto* filter_cmd = app.add_subcommand("filter", "Spectral covariate filter; writes the surviving rows");
  std::string l_data;
  double l_epsilon = 0.1, l_target = -1.0, l_fraction = -1.0;
  long long l_max_removed = -1;
  std::string l_out, l_json;
  filter_cmd->add_option("--data", l_data, "dataset CSV (with .meta.json sidecar)")->required();
  filter_cmd->add_option("--epsilon", l_epsilon, "corrupted fraction")->capture_default_str();
  filter_cmd->add_option("--target", l_target, "deviation target (default 4*eps*log(1/eps))");
  filter_cmd->add_option("--fraction", l_fraction, "removal fraction per round (default eps/10)");
  filter_cmd->add_option("--max-removed", l_max_removed, "removal cap (default floor(2*eps*n))");
  filter_cmd->add_option("--out", l_out, "output CSV path (default: $TRIMGLM_OUT_DIR/filtered.csv)");
  filter_cmd->add_option("--json", l_json, "also write the filter report as JSON to this path");

  // ---- bench ----------------------------------------------------------------
  auto* bench_cmd = app.add_subcommand("bench", "Run a Monte Carlo benchmark plan");
  std::string b_plan, b_out_dir;
  int b_threads = 0;
  bench_cmd->add_option("--plan", b_plan, "benchmark plan JSON")->required();
  bench_cmd->add_option("--out-dir", b_out_dir, "output directory (default: $TRIMGLM_OUT_DIR)");
  bench_cmd->add_option("--threads", b_threads, "worker threads (default: automatic)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (gen->parsed()) {
    FamilyPtr fam = make_family(g_family, g_sigma, g_m);
    tg_gen_config cfg{};
    cfg.n = g_n;
    cfg.d = g_d;
    cfg.beta_star = nullptr;
    cfg.beta_norm = g_beta_norm;
    if (!g_beta.empty()) {
      if (static_cast<long long>(g_beta.size()) != g_d) {
        std::fprintf(stderr, "error: --beta needs exactly %lld values\n", g_d);
        return 2;
      }
      cfg.beta_star = g_beta.data();
    }
    std::vector<double> cov;
    cfg.sigma_cov = nullptr;
    if (!g_cov_diag.empty()) {
      if (static_cast<long long>(g_cov_diag.size()) != g_d) {
        std::fprintf(stderr, "error: --cov-diag needs exactly %lld values\n", g_d);
        return 2;
      }
      cov.assign(static_cast<std::size_t>(g_d) * static_cast<std::size_t>(g_d), 0.0);
      for (long long j = 0; j < g_d; ++j)
        cov[static_cast<std::size_t>(j) * static_cast<std::size_t>(g_d) + static_cast<std::size_t>(j)] =
            g_cov_diag[static_cast<std::size_t>(j)];
      cfg.sigma_cov = cov.data();
    }
    if (g_cov_dist == "std-normal")
      cfg.cov_dist = TG_COV_STD_NORMAL;
    else if (g_cov_dist == "rademacher")
      cfg.cov_dist = TG_COV_RADEMACHER;
    else if (g_cov_dist == "sphere-scaled")
      cfg.cov_dist = TG_COV_SPHERE_SCALED;
    else {
      std::fprintf(stderr, "error: unknown cov-dist '%s'\n", g_cov_dist.c_str());
      return 2;
    }
    cfg.seed = g_seed;

    tg_dataset* raw = nullptr;
    check(tg_generate(fam.get(), &cfg, &raw));
    DatasetPtr ds(raw);

    if (g_attack != "none") {
      tg_adversary adv{};
      adv.mode = g_mode == "sample" ? TG_MODE_SAMPLE : TG_MODE_LABEL;
      if (g_mode != "label" && g_mode != "sample") {
        std::fprintf(stderr, "error: unknown mode '%s'\n", g_mode.c_str());
        return 2;
      }
      adv.attack = parse_attack(g_attack);
      adv.epsilon = g_epsilon;
      adv.scale = g_scale;
      adv.value = g_value;
      adv.magnitude = g_magnitude;
      adv.direction = nullptr;
      if (!g_direction.empty()) {
        if (static_cast<long long>(g_direction.size()) != g_d) {
          std::fprintf(stderr, "error: --direction needs exactly %lld values\n", g_d);
          return 2;
        }
        adv.direction = g_direction.data();
      }
      adv.seed = g_adv_seed_set ? g_adv_seed : g_seed + 1;
      tg_dataset* corrupted = nullptr;
      check(tg_corrupt(ds.get(), &adv, &corrupted));
      ds.reset(corrupted);
    }

    const std::string out = g_out.empty() ? join_out_dir("data.csv") : g_out;
    check(tg_dataset_save(ds.get(), out.c_str()));
    std::printf("wrote %s (%lld rows, dim %lld, corrupted fraction %.6g)\n", out.c_str(),
                tg_dataset_rows(ds.get()), tg_dataset_dim(ds.get()), tg_dataset_epsilon_actual(ds.get()));
    return 0;
  }

  if (fit_cmd->parsed()) {
    tg_dataset* raw = nullptr;
    check(tg_dataset_load(f_data.c_str(), &raw));
    DatasetPtr ds(raw);
    tg_family* fraw = nullptr;
    check(tg_dataset_family(ds.get(), &fraw));
    FamilyPtr fam(fraw);

    const long long n = tg_dataset_rows(ds.get());
    const long long d = tg_dataset_dim(ds.get());
    const double eps_c = f_eps_c >= 0.0 ? f_eps_c : tg_dataset_epsilon_actual(ds.get());

    double radius_hint = std::numeric_limits<double>::infinity();
    if (f_radius_hint > 0.0) {
      radius_hint = f_radius_hint;
    } else if (tg_dataset_has_beta_star(ds.get())) {
      std::vector<double> bs(static_cast<std::size_t>(d));
      check(tg_dataset_beta_star(ds.get(), bs.data()));
      double sq = 0.0;
      for (double b : bs) sq += b * b;
      radius_hint = 2.0 * std::sqrt(sq);
    }

    tg_fit_config cfg{};
    check(tg_fit_config_theorem(fam.get(), eps_c, n, d, radius_hint, &cfg));
    if (f_epsilon >= 0.0) cfg.epsilon = f_epsilon;
    if (f_eta > 0.0) cfg.eta = f_eta;
    if (f_radius > 0.0) cfg.radius = f_radius;
    if (f_max_outer > 0) cfg.max_outer_iters = f_max_outer;

    StrPtr famname;
    {
      char* nm = nullptr;
      check(tg_family_name(fam.get(), &nm));
      famname.reset(nm);
    }
    std::printf("family: %s\n", famname.get());
    std::printf("rows: %lld  dim: %lld  recorded corrupted fraction: %.6g\n", n, d,
                tg_dataset_epsilon_actual(ds.get()));
    std::printf("config: epsilon=%.6g eta=%.6g radius=%.6g max_outer=%lld\n", cfg.epsilon, cfg.eta,
                cfg.radius, cfg.max_outer_iters);

    FitPtr fit;
    ReportPtr report;
    if (f_mode == "sample") {
      tg_filter_config fcfg{};
      fcfg.epsilon = eps_c;
      fcfg.target_deviation = -1.0;
      fcfg.removal_fraction = -1.0;
      fcfg.max_removed = -1;
      tg_fit_result* fr = nullptr;
      tg_filter_report* rep = nullptr;
      check(tg_fit_sample(ds.get(), fam.get(), &fcfg, &cfg, &fr, &rep));
      fit.reset(fr);
      report.reset(rep);
    } else if (f_mode == "label") {
      tg_fit_result* fr = nullptr;
      check(tg_fit(ds.get(), fam.get(), &cfg, &fr));
      fit.reset(fr);
    } else {
      std::fprintf(stderr, "error: unknown mode '%s'\n", f_mode.c_str());
      return 2;
    }

    print_fit_summary(ds.get(), fit.get(), report.get(), 2.0 * cfg.epsilon);

    if (!f_json.empty()) {
      char* js = nullptr;
      check(tg_fit_result_to_json(fit.get(), &js));
      StrPtr fit_json(js);
      std::string text;
      if (report) {
        char* rs = nullptr;
        check(tg_filter_report_to_json(report.get(), &rs));
        StrPtr rep_json(rs);
        text = std::string("{\"fit\": ") + fit_json.get() + ", \"filter\": " + rep_json.get() + "}\n";
      } else {
        text = std::string(fit_json.get()) + "\n";
      }
      write_text(f_json, text);
      std::printf("wrote %s\n", f_json.c_str());
    }
    return 0;
  }

  if (filter_cmd->parsed()) {
    tg_dataset* raw = nullptr;
    check(tg_dataset_load(l_data.c_str(), &raw));
    DatasetPtr ds(raw);

    tg_filter_config cfg{};
    cfg.epsilon = l_epsilon;
    cfg.target_deviation = l_target;
    cfg.removal_fraction = l_fraction;
    cfg.max_removed = l_max_removed;

    tg_dataset* kept_raw = nullptr;
    tg_filter_report* rep_raw = nullptr;
    check(tg_filter(ds.get(), &cfg, &kept_raw, &rep_raw));
    DatasetPtr kept(kept_raw);
    ReportPtr report(rep_raw);

    const std::string out = l_out.empty() ? join_out_dir("filtered.csv") : l_out;
    check(tg_dataset_save(kept.get(), out.c_str()));
    std::printf("kept %lld of %lld rows (%lld removed in %lld rounds, final deviation %.6g)\n",
                tg_filter_report_kept_count(report.get()), tg_dataset_rows(ds.get()),
                tg_filter_report_removed_count(report.get()), tg_filter_report_rounds(report.get()),
                tg_filter_report_final_deviation(report.get()));
    const double recall = tg_filter_report_removal_recall(report.get());
    if (recall >= 0.0) std::printf("removal recall: %.4g\n", recall);
    if (tg_filter_report_cap_reached(report.get())) std::printf("note: removal cap reached before the target\n");
    std::printf("wrote %s\n", out.c_str());

    if (!l_json.empty()) {
      char* rs = nullptr;
      check(tg_filter_report_to_json(report.get(), &rs));
      StrPtr rep_json(rs);
      write_text(l_json, std::string(rep_json.get()) + "\n");
      std::printf("wrote %s\n", l_json.c_str());
    }
    return 0;
  }

  if (bench_cmd->parsed()) {
    const std::string out_dir = b_out_dir.empty() ? out_dir_default() : b_out_dir;
    char* csv = nullptr;
    char* summary = nullptr;
    int any_failed = 0;
    check(tg_bench_run(b_plan.c_str(), out_dir.c_str(), b_threads, &csv, &summary, &any_failed));
    StrPtr csv_guard(csv), summary_guard(summary);
    std::printf("wrote %s\n", csv);
    std::printf("wrote %s\n", summary);
    if (any_failed) {
      std::fprintf(stderr, "error: at least one benchmark configuration produced no successful trial\n");
      return 3;
    }
    return 0;
  }

  return 2;
}
