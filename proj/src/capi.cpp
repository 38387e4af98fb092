// C binding. Exceptions from the core library are converted to status codes
// here and never cross the ABI; the message lands in a thread-local buffer.

#include "trimglm.h"

#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "trimglm/bench.hpp"
#include "trimglm/dataset.hpp"
#include "trimglm/diagnostics.hpp"
#include "trimglm/errors.hpp"
#include "trimglm/estimator.hpp"
#include "trimglm/family.hpp"
#include "trimglm/filter.hpp"
#include "trimglm/synth.hpp"

struct tg_family {
  trimglm::FamilyDescriptor desc;
  trimglm::GlmFamily fam;
};

struct tg_dataset {
  trimglm::Dataset ds;
  mutable std::vector<double> x_rowmajor;  // materialized on first tg_dataset_x
};

struct tg_fit_result {
  trimglm::FitResult r;
};

struct tg_filter_report {
  trimglm::FilterReport r;
};

namespace {

thread_local std::string g_last_error;

tg_status set_error(tg_status code, const std::string& msg) {
  g_last_error = msg;
  return code;
}

tg_status from_exception(const trimglm::Error& e) {
  switch (e.code()) {
    case trimglm::ErrorCode::InvalidArgument:
      return set_error(TG_EINVAL, e.what());
    case trimglm::ErrorCode::Numeric:
      return set_error(TG_ENUMERIC, e.what());
    case trimglm::ErrorCode::Io:
      return set_error(TG_EIO, e.what());
  }
  return set_error(TG_EINVAL, e.what());
}

template <typename Fn>
tg_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const trimglm::Error& e) {
    return from_exception(e);
  } catch (const std::bad_alloc&) {
    return set_error(TG_ENUMERIC, "out of memory");
  } catch (const std::exception& e) {
    return set_error(TG_ENUMERIC, std::string("internal error: ") + e.what());
  }
}

tg_status require(bool cond, const char* msg) { return cond ? TG_OK : set_error(TG_EINVAL, msg); }

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

tg_status string_out(const std::string& s, char** out) {
  *out = copy_string(s);
  return *out ? TG_OK : set_error(TG_ENUMERIC, "out of memory");
}

Eigen::MatrixXd rowmajor_to_matrix(const double* p, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(p, rows, cols);
}

trimglm::EstimatorConfig to_estimator_config(const tg_fit_config* cfg) {
  trimglm::EstimatorConfig out;
  out.epsilon = cfg->epsilon;
  out.eta = cfg->eta;
  out.radius = cfg->radius;
  out.max_outer_iters = cfg->max_outer_iters;
  if (cfg->inner_grad_tol > 0.0) out.inner.grad_tol = cfg->inner_grad_tol;
  if (cfg->inner_max_iters > 0) out.inner.max_iters = cfg->inner_max_iters;
  return out;
}

trimglm::FilterConfig to_filter_config(const tg_filter_config* cfg, Eigen::Index n) {
  trimglm::FilterConfig out = trimglm::FilterConfig::defaults(cfg->epsilon, n);
  if (cfg->target_deviation > 0.0) out.target_deviation = cfg->target_deviation;
  if (cfg->removal_fraction > 0.0) out.removal_fraction_per_round = cfg->removal_fraction;
  if (cfg->max_removed >= 0) out.max_removed = cfg->max_removed;
  return out;
}

// Rows of ds selected by kept, in the original coordinates, with the
// corrupted-fraction metadata recomputed for the surviving rows.
trimglm::Dataset subset_rows(const trimglm::Dataset& ds, const std::vector<Eigen::Index>& kept) {
  trimglm::Dataset out;
  const Eigen::Index m = static_cast<Eigen::Index>(kept.size());
  out.x.resize(m, ds.dim());
  out.y.resize(m);
  out.corrupted.resize(static_cast<std::size_t>(m));
  long long bad = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index src = kept[static_cast<std::size_t>(i)];
    out.x.row(i) = ds.x.row(src);
    out.y(i) = ds.y(src);
    out.corrupted[static_cast<std::size_t>(i)] = ds.corrupted[static_cast<std::size_t>(src)];
    bad += out.corrupted[static_cast<std::size_t>(i)] ? 1 : 0;
  }
  out.meta = ds.meta;
  out.meta.epsilon_actual = m > 0 ? static_cast<double>(bad) / static_cast<double>(m) : 0.0;
  return out;
}

const Eigen::MatrixXd& require_sigma(const trimglm::Dataset& ds) {
  if (!ds.meta.sigma_cov)
    trimglm::fail_invalid("covariance required: the dataset does not record sigma_cov");
  return *ds.meta.sigma_cov;
}

}  // namespace

extern "C" {

const char* tg_last_error(void) { return g_last_error.c_str(); }

void tg_string_free(char* s) { std::free(s); }

/* ---- families ----------------------------------------------------------- */

tg_status tg_family_gaussian(double sigma, tg_family** out) {
  if (tg_status s = require(out != nullptr, "tg_family_gaussian: out is null")) return s;
  return guarded([&] {
    trimglm::FamilyDescriptor d;
    d.kind = trimglm::FamilyKind::Gaussian;
    d.sigma = sigma;
    *out = new tg_family{d, d.make()};
    return TG_OK;
  });
}

tg_status tg_family_poisson(tg_family** out) {
  if (tg_status s = require(out != nullptr, "tg_family_poisson: out is null")) return s;
  return guarded([&] {
    trimglm::FamilyDescriptor d;
    d.kind = trimglm::FamilyKind::Poisson;
    *out = new tg_family{d, d.make()};
    return TG_OK;
  });
}

tg_status tg_family_binomial(long long m, tg_family** out) {
  if (tg_status s = require(out != nullptr, "tg_family_binomial: out is null")) return s;
  return guarded([&] {
    trimglm::FamilyDescriptor d;
    d.kind = trimglm::FamilyKind::Binomial;
    d.m = m;
    *out = new tg_family{d, d.make()};
    return TG_OK;
  });
}

void tg_family_free(tg_family* fam) { delete fam; }

tg_status tg_family_name(const tg_family* fam, char** out) {
  if (tg_status s = require(fam && out, "tg_family_name: null argument")) return s;
  return guarded([&] { return string_out(fam->fam.name(), out); });
}

tg_status tg_family_nll(const tg_family* fam, double y, double theta, double* out) {
  if (tg_status s = require(fam && out, "tg_family_nll: null argument")) return s;
  return guarded([&] {
    fam->fam.require_label(y);
    *out = fam->fam.nll(y, theta);
    return TG_OK;
  });
}

tg_status tg_family_mean(const tg_family* fam, double theta, double* out) {
  if (tg_status s = require(fam && out, "tg_family_mean: null argument")) return s;
  return guarded([&] {
    *out = fam->fam.mean(theta);
    return TG_OK;
  });
}

tg_status tg_family_variance(const tg_family* fam, double theta, double* out) {
  if (tg_status s = require(fam && out, "tg_family_variance: null argument")) return s;
  return guarded([&] {
    *out = fam->fam.conditional_variance(theta);
    return TG_OK;
  });
}

/* ---- generation and corruption ------------------------------------------ */

tg_status tg_generate(const tg_family* fam, const tg_gen_config* cfg, tg_dataset** out) {
  if (tg_status s = require(fam && cfg && out, "tg_generate: null argument")) return s;
  return guarded([&] {
    if (cfg->n < 1 || cfg->d < 1) trimglm::fail_invalid("tg_generate: n and d must be positive");
    const Eigen::Index n = cfg->n, d = cfg->d;

    Eigen::VectorXd beta(d);
    std::uint64_t gen_seed = cfg->seed;
    if (cfg->beta_star) {
      beta = Eigen::Map<const Eigen::VectorXd>(cfg->beta_star, d);
    } else {
      if (!(cfg->beta_norm >= 0.0)) trimglm::fail_invalid("tg_generate: beta_norm must be nonnegative");
      beta.setZero();
      if (cfg->beta_norm > 0.0) {
        trimglm::Rng rng(trimglm::derive_seed(cfg->seed, {0}));
        double norm = 0.0;
        do {
          for (Eigen::Index j = 0; j < d; ++j) beta(j) = rng.normal();
          norm = beta.norm();
        } while (norm == 0.0);
        beta *= cfg->beta_norm / norm;
      }
      gen_seed = trimglm::derive_seed(cfg->seed, {1});
    }

    const Eigen::MatrixXd sigma =
        cfg->sigma_cov ? rowmajor_to_matrix(cfg->sigma_cov, d, d) : Eigen::MatrixXd::Identity(d, d);

    trimglm::CovariateDist dist;
    switch (cfg->cov_dist) {
      case TG_COV_STD_NORMAL:
        dist = trimglm::CovariateDist::StdNormal;
        break;
      case TG_COV_RADEMACHER:
        dist = trimglm::CovariateDist::Rademacher;
        break;
      case TG_COV_SPHERE_SCALED:
        dist = trimglm::CovariateDist::SphereScaled;
        break;
      default:
        trimglm::fail_invalid("tg_generate: unknown cov_dist");
    }

    auto* handle = new tg_dataset{trimglm::gen_clean(n, fam->desc, beta, sigma, dist, gen_seed), {}};
    *out = handle;
    return TG_OK;
  });
}

tg_status tg_corrupt(const tg_dataset* in, const tg_adversary* adv, tg_dataset** out) {
  if (tg_status s = require(in && adv && out, "tg_corrupt: null argument")) return s;
  return guarded([&] {
    trimglm::AdversarySpec spec;
    switch (adv->mode) {
      case TG_MODE_LABEL:
        spec.mode = trimglm::CorruptionMode::LabelOnly;
        break;
      case TG_MODE_SAMPLE:
        spec.mode = trimglm::CorruptionMode::Sample;
        break;
      default:
        trimglm::fail_invalid("tg_corrupt: unknown mode");
    }
    switch (adv->attack) {
      case TG_ATTACK_LARGE_OUTLIER:
        spec.attack = trimglm::AttackKind::LargeOutlier;
        break;
      case TG_ATTACK_FLIPPED_MODEL:
        spec.attack = trimglm::AttackKind::FlippedModel;
        break;
      case TG_ATTACK_CONSTANT_LABEL:
        spec.attack = trimglm::AttackKind::ConstantLabel;
        break;
      case TG_ATTACK_LEVERAGE_SPIKE:
        spec.attack = trimglm::AttackKind::LeverageSpike;
        break;
      default:
        trimglm::fail_invalid("tg_corrupt: unknown attack");
    }
    spec.epsilon = adv->epsilon;
    spec.scale = adv->scale;
    spec.value = adv->value;
    spec.magnitude = adv->magnitude;
    if (adv->direction)
      spec.direction = Eigen::Map<const Eigen::VectorXd>(adv->direction, in->ds.dim());
    trimglm::Rng rng(adv->seed);
    *out = new tg_dataset{trimglm::corrupt(in->ds, spec, rng), {}};
    return TG_OK;
  });
}

/* ---- dataset handles ------------------------------------------------------ */

tg_status tg_dataset_save(const tg_dataset* ds, const char* path) {
  if (tg_status s = require(ds && path, "tg_dataset_save: null argument")) return s;
  return guarded([&] {
    trimglm::save_dataset(ds->ds, path);
    return TG_OK;
  });
}

tg_status tg_dataset_load(const char* path, tg_dataset** out) {
  if (tg_status s = require(path && out, "tg_dataset_load: null argument")) return s;
  return guarded([&] {
    *out = new tg_dataset{trimglm::load_dataset(path), {}};
    return TG_OK;
  });
}

void tg_dataset_free(tg_dataset* ds) { delete ds; }

long long tg_dataset_rows(const tg_dataset* ds) { return ds ? ds->ds.n() : 0; }

long long tg_dataset_dim(const tg_dataset* ds) { return ds ? ds->ds.dim() : 0; }

tg_status tg_dataset_x(const tg_dataset* ds, const double** out) {
  if (tg_status s = require(ds && out, "tg_dataset_x: null argument")) return s;
  return guarded([&] {
    if (ds->x_rowmajor.empty()) {
      const Eigen::Index n = ds->ds.n(), d = ds->ds.dim();
      ds->x_rowmajor.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          ds->x_rowmajor.data(), n, d) = ds->ds.x;
    }
    *out = ds->x_rowmajor.data();
    return TG_OK;
  });
}

tg_status tg_dataset_y(const tg_dataset* ds, const double** out) {
  if (tg_status s = require(ds && out, "tg_dataset_y: null argument")) return s;
  *out = ds->ds.y.data();
  return TG_OK;
}

tg_status tg_dataset_corrupted(const tg_dataset* ds, const uint8_t** out) {
  if (tg_status s = require(ds && out, "tg_dataset_corrupted: null argument")) return s;
  *out = ds->ds.corrupted.data();
  return TG_OK;
}

double tg_dataset_epsilon_actual(const tg_dataset* ds) { return ds ? ds->ds.meta.epsilon_actual : 0.0; }

tg_status tg_dataset_family(const tg_dataset* ds, tg_family** out) {
  if (tg_status s = require(ds && out, "tg_dataset_family: null argument")) return s;
  return guarded([&] {
    *out = new tg_family{ds->ds.meta.family, ds->ds.meta.family.make()};
    return TG_OK;
  });
}

int tg_dataset_has_beta_star(const tg_dataset* ds) { return ds && ds->ds.meta.beta_star ? 1 : 0; }

tg_status tg_dataset_beta_star(const tg_dataset* ds, double* out) {
  if (tg_status s = require(ds && out, "tg_dataset_beta_star: null argument")) return s;
  if (!ds->ds.meta.beta_star) return set_error(TG_EINVAL, "tg_dataset_beta_star: not recorded");
  Eigen::Map<Eigen::VectorXd>(out, ds->ds.meta.beta_star->size()) = *ds->ds.meta.beta_star;
  return TG_OK;
}

int tg_dataset_has_sigma_cov(const tg_dataset* ds) { return ds && ds->ds.meta.sigma_cov ? 1 : 0; }

tg_status tg_dataset_sigma_cov(const tg_dataset* ds, double* out) {
  if (tg_status s = require(ds && out, "tg_dataset_sigma_cov: null argument")) return s;
  if (!ds->ds.meta.sigma_cov) return set_error(TG_EINVAL, "tg_dataset_sigma_cov: not recorded");
  const Eigen::MatrixXd& sc = *ds->ds.meta.sigma_cov;
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out, sc.rows(), sc.cols()) = sc;
  return TG_OK;
}

/* ---- fitting --------------------------------------------------------------- */

tg_status tg_fit_config_theorem(const tg_family* fam, double eps_c, long long n, long long d,
                                double radius_hint, tg_fit_config* out) {
  if (tg_status s = require(fam && out, "tg_fit_config_theorem: null argument")) return s;
  return guarded([&] {
    const trimglm::EstimatorConfig cfg = trimglm::theorem_config(fam->fam, eps_c, n, d, radius_hint);
    out->epsilon = cfg.epsilon;
    out->eta = cfg.eta;
    out->radius = cfg.radius;
    out->max_outer_iters = cfg.max_outer_iters;
    out->inner_grad_tol = cfg.inner.grad_tol;
    out->inner_max_iters = cfg.inner.max_iters;
    return TG_OK;
  });
}

tg_status tg_fit(const tg_dataset* ds, const tg_family* fam, const tg_fit_config* cfg, tg_fit_result** out) {
  if (tg_status s = require(ds && fam && cfg && out, "tg_fit: null argument")) return s;
  return guarded([&] {
    *out = new tg_fit_result{trimglm::fit(ds->ds, fam->fam, to_estimator_config(cfg))};
    return TG_OK;
  });
}

void tg_fit_result_free(tg_fit_result* r) { delete r; }

long long tg_fit_result_dim(const tg_fit_result* r) { return r ? r->r.beta_hat.size() : 0; }

tg_status tg_fit_result_beta(const tg_fit_result* r, double* out) {
  if (tg_status s = require(r && out, "tg_fit_result_beta: null argument")) return s;
  Eigen::Map<Eigen::VectorXd>(out, r->r.beta_hat.size()) = r->r.beta_hat;
  return TG_OK;
}

long long tg_fit_result_outer_iters(const tg_fit_result* r) { return r ? r->r.outer_iters : 0; }

tg_status tg_fit_result_termination(const tg_fit_result* r, char** out) {
  if (tg_status s = require(r && out, "tg_fit_result_termination: null argument")) return s;
  return string_out(r->r.termination == trimglm::Termination::EtaImprovement ? "eta-improvement" : "max-iters",
                    out);
}

long long tg_fit_result_trace_len(const tg_fit_result* r) {
  return r ? static_cast<long long>(r->r.objective_trace.size()) : 0;
}

tg_status tg_fit_result_trace(const tg_fit_result* r, double* out) {
  if (tg_status s = require(r && out, "tg_fit_result_trace: null argument")) return s;
  std::memcpy(out, r->r.objective_trace.data(), r->r.objective_trace.size() * sizeof(double));
  return TG_OK;
}

long long tg_fit_result_subset_size(const tg_fit_result* r) {
  return r ? static_cast<long long>(r->r.subset.size()) : 0;
}

tg_status tg_fit_result_subset(const tg_fit_result* r, long long* out) {
  if (tg_status s = require(r && out, "tg_fit_result_subset: null argument")) return s;
  for (std::size_t i = 0; i < r->r.subset.size(); ++i) out[i] = r->r.subset[i];
  return TG_OK;
}

long long tg_fit_result_warning_count(const tg_fit_result* r) {
  return r ? static_cast<long long>(r->r.warnings.size()) : 0;
}

tg_status tg_fit_result_warning(const tg_fit_result* r, long long i, char** out) {
  if (tg_status s = require(r && out, "tg_fit_result_warning: null argument")) return s;
  if (i < 0 || i >= static_cast<long long>(r->r.warnings.size()))
    return set_error(TG_EINVAL, "tg_fit_result_warning: index out of range");
  return string_out(r->r.warnings[static_cast<std::size_t>(i)], out);
}

tg_status tg_fit_result_to_json(const tg_fit_result* r, char** out) {
  if (tg_status s = require(r && out, "tg_fit_result_to_json: null argument")) return s;
  return guarded([&] { return string_out(r->r.to_json(), out); });
}

/* ---- filtering --------------------------------------------------------------- */

tg_status tg_filter(const tg_dataset* ds, const tg_filter_config* cfg, tg_dataset** out_kept,
                    tg_filter_report** out_report) {
  if (tg_status s = require(ds && cfg, "tg_filter: null argument")) return s;
  return guarded([&] {
    const Eigen::MatrixXd& sigma = require_sigma(ds->ds);
    const trimglm::WhitenResult w = trimglm::whiten(ds->ds, sigma);
    trimglm::FilterReport rep = trimglm::filter_covariates(w.data.x, to_filter_config(cfg, ds->ds.n()));

    long long planted = 0;
    for (std::uint8_t f : ds->ds.corrupted) planted += f ? 1 : 0;
    if (planted > 0) {
      long long surviving = 0;
      for (Eigen::Index i : rep.kept) surviving += ds->ds.corrupted[static_cast<std::size_t>(i)] ? 1 : 0;
      rep.removal_recall = static_cast<double>(planted - surviving) / static_cast<double>(planted);
    }

    if (out_kept) *out_kept = new tg_dataset{subset_rows(ds->ds, rep.kept), {}};
    if (out_report) *out_report = new tg_filter_report{std::move(rep)};
    return TG_OK;
  });
}

tg_status tg_fit_sample(const tg_dataset* ds, const tg_family* fam, const tg_filter_config* fcfg,
                        const tg_fit_config* cfg, tg_fit_result** out_fit, tg_filter_report** out_report) {
  if (tg_status s = require(ds && fam && fcfg && cfg && out_fit, "tg_fit_sample: null argument")) return s;
  return guarded([&] {
    const Eigen::MatrixXd& sigma = require_sigma(ds->ds);
    trimglm::SampleFit sf = trimglm::fit_sample_corruption(ds->ds, fam->fam, sigma,
                                                           to_filter_config(fcfg, ds->ds.n()),
                                                           to_estimator_config(cfg));
    *out_fit = new tg_fit_result{std::move(sf.fit)};
    if (out_report) *out_report = new tg_filter_report{std::move(sf.report)};
    return TG_OK;
  });
}

void tg_filter_report_free(tg_filter_report* r) { delete r; }

long long tg_filter_report_kept_count(const tg_filter_report* r) {
  return r ? static_cast<long long>(r->r.kept.size()) : 0;
}

tg_status tg_filter_report_kept(const tg_filter_report* r, long long* out) {
  if (tg_status s = require(r && out, "tg_filter_report_kept: null argument")) return s;
  for (std::size_t i = 0; i < r->r.kept.size(); ++i) out[i] = r->r.kept[i];
  return TG_OK;
}

long long tg_filter_report_removed_count(const tg_filter_report* r) { return r ? r->r.removed_count : 0; }

long long tg_filter_report_rounds(const tg_filter_report* r) {
  return r ? static_cast<long long>(r->r.deviation_trace.size()) : 0;
}

tg_status tg_filter_report_deviation_trace(const tg_filter_report* r, double* out) {
  if (tg_status s = require(r && out, "tg_filter_report_deviation_trace: null argument")) return s;
  std::memcpy(out, r->r.deviation_trace.data(), r->r.deviation_trace.size() * sizeof(double));
  return TG_OK;
}

double tg_filter_report_final_deviation(const tg_filter_report* r) {
  if (!r || r->r.deviation_trace.empty()) return std::numeric_limits<double>::quiet_NaN();
  return r->r.deviation_trace.back();
}

double tg_filter_report_removal_recall(const tg_filter_report* r) { return r ? r->r.removal_recall : -1.0; }

int tg_filter_report_cap_reached(const tg_filter_report* r) { return r && r->r.cap_reached ? 1 : 0; }

tg_status tg_filter_report_to_json(const tg_filter_report* r, char** out) {
  if (tg_status s = require(r && out, "tg_filter_report_to_json: null argument")) return s;
  return guarded([&] { return string_out(r->r.to_json(), out); });
}

/* ---- diagnostics ----------------------------------------------------------------- */

tg_status tg_param_error(const tg_dataset* ds, const double* beta_hat, const double* beta_star,
                         long long d, int sigma_norm, double* out) {
  if (tg_status s = require(ds && beta_hat && out, "tg_param_error: null argument")) return s;
  return guarded([&] {
    if (d != ds->ds.dim()) trimglm::fail_invalid("tg_param_error: d disagrees with the dataset");
    const Eigen::Map<const Eigen::VectorXd> bh(beta_hat, d);
    Eigen::VectorXd bs;
    if (beta_star) {
      bs = Eigen::Map<const Eigen::VectorXd>(beta_star, d);
    } else if (ds->ds.meta.beta_star) {
      bs = *ds->ds.meta.beta_star;
    } else {
      trimglm::fail_invalid("tg_param_error: dataset records no true coefficients");
    }
    const Eigen::MatrixXd* sigma = nullptr;
    if (sigma_norm) sigma = &require_sigma(ds->ds);
    *out = trimglm::param_error(bh, bs, sigma);
    return TG_OK;
  });
}

tg_status tg_stationarity_gap(const tg_dataset* ds, const tg_family* fam, const double* beta_hat,
                              const double* beta_star, long long d, double epsilon, double* out) {
  if (tg_status s = require(ds && fam && beta_hat && out, "tg_stationarity_gap: null argument")) return s;
  return guarded([&] {
    if (d != ds->ds.dim()) trimglm::fail_invalid("tg_stationarity_gap: d disagrees with the dataset");
    const Eigen::Map<const Eigen::VectorXd> bh(beta_hat, d);
    Eigen::VectorXd bs;
    if (beta_star) {
      bs = Eigen::Map<const Eigen::VectorXd>(beta_star, d);
    } else if (ds->ds.meta.beta_star) {
      bs = *ds->ds.meta.beta_star;
    } else {
      trimglm::fail_invalid("tg_stationarity_gap: dataset records no true coefficients");
    }
    *out = trimglm::stationarity_gap(ds->ds, fam->fam, bh, bs, epsilon);
    return TG_OK;
  });
}

tg_status tg_resilience_estimate(const double* pts, long long n, long long d, double epsilon,
                                 int num_random_dirs, uint64_t seed, double* tau_hat, long long* dirs_used) {
  if (tg_status s = require(pts && tau_hat, "tg_resilience_estimate: null argument")) return s;
  return guarded([&] {
    if (n < 1 || d < 1) trimglm::fail_invalid("tg_resilience_estimate: n and d must be positive");
    const Eigen::MatrixXd points = rowmajor_to_matrix(pts, n, d);
    trimglm::Rng rng(seed);
    const trimglm::ResilienceEstimate est = trimglm::resilience_estimate(points, epsilon, num_random_dirs, rng);
    *tau_hat = est.tau_hat;
    if (dirs_used) *dirs_used = est.directions_used;
    return TG_OK;
  });
}

/* ---- benchmark ---------------------------------------------------------------------- */

tg_status tg_bench_run(const char* plan_path, const char* out_dir, int threads, char** csv_path,
                       char** summary_path, int* any_cell_failed) {
  if (tg_status s = require(plan_path && out_dir, "tg_bench_run: null argument")) return s;
  return guarded([&] {
    const trimglm::BenchPlan plan = trimglm::load_bench_plan(plan_path);
    const trimglm::BenchResult res = trimglm::run_bench(plan, out_dir, threads);
    if (csv_path) {
      if (tg_status s = string_out(res.csv_path, csv_path)) return s;
    }
    if (summary_path) {
      if (tg_status s = string_out(res.summary_path, summary_path)) return s;
    }
    if (any_cell_failed) *any_cell_failed = res.any_cell_failed ? 1 : 0;
    return TG_OK;
  });
}

} /* extern "C" */
