/* trimglm.h — C interface to the trimmed-GLM estimation library.
 *
 * Every function that can fail returns a tg_status; TG_OK means success and
 * anything else leaves a human-readable explanation in tg_last_error(), which
 * is thread-local and valid until the next failing call on the same thread.
 * Objects returned through tg_*** out-parameters are owned by the caller and
 * must be released with the matching tg_*_free. Strings returned through
 * char** out-parameters are heap copies; release them with tg_string_free.
 *
 * Matrices cross this boundary in row-major order. Datasets are immutable
 * once created; corruption and filtering return new handles.
 */
#ifndef TRIMGLM_H
#define TRIMGLM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tg_status {
  TG_OK = 0,
  TG_EINVAL = 2,   /* bad argument or malformed input */
  TG_ENUMERIC = 3, /* numerical failure (singular matrix, divergence, ...) */
  TG_EIO = 4       /* file could not be read or written */
} tg_status;

/* Message for the most recent failure on this thread ("" if none). */
const char* tg_last_error(void);

void tg_string_free(char* s);

typedef struct tg_family tg_family;
typedef struct tg_dataset tg_dataset;
typedef struct tg_fit_result tg_fit_result;
typedef struct tg_filter_report tg_filter_report;

/* ---- exponential-family models ---------------------------------------- */

tg_status tg_family_gaussian(double sigma, tg_family** out);
tg_status tg_family_poisson(tg_family** out);
tg_status tg_family_binomial(long long m, tg_family** out);
void tg_family_free(tg_family* fam);

tg_status tg_family_name(const tg_family* fam, char** out);
/* Negative log-likelihood of label y at natural parameter theta. */
tg_status tg_family_nll(const tg_family* fam, double y, double theta, double* out);
tg_status tg_family_mean(const tg_family* fam, double theta, double* out);
tg_status tg_family_variance(const tg_family* fam, double theta, double* out);

/* ---- synthetic data ---------------------------------------------------- */

typedef enum tg_cov_dist {
  TG_COV_STD_NORMAL = 0,
  TG_COV_RADEMACHER = 1,
  TG_COV_SPHERE_SCALED = 2
} tg_cov_dist;

typedef struct tg_gen_config {
  long long n;
  long long d;
  /* Length-d coefficient vector, or NULL to draw one uniformly at random
   * with norm beta_norm (from a sub-stream of seed, so results stay
   * reproducible either way). */
  const double* beta_star;
  double beta_norm;
  /* Row-major d*d covariance of the covariates, or NULL for identity. */
  const double* sigma_cov;
  tg_cov_dist cov_dist;
  uint64_t seed;
} tg_gen_config;

tg_status tg_generate(const tg_family* fam, const tg_gen_config* cfg, tg_dataset** out);

typedef enum tg_corruption_mode { TG_MODE_LABEL = 0, TG_MODE_SAMPLE = 1 } tg_corruption_mode;

typedef enum tg_attack {
  TG_ATTACK_LARGE_OUTLIER = 0,
  TG_ATTACK_FLIPPED_MODEL = 1,
  TG_ATTACK_CONSTANT_LABEL = 2,
  TG_ATTACK_LEVERAGE_SPIKE = 3
} tg_attack;

typedef struct tg_adversary {
  tg_corruption_mode mode;
  tg_attack attack;
  double epsilon;   /* fraction of rows to corrupt, in [0, 0.5] */
  double scale;     /* large-outlier: multiple of the max clean |y| */
  double value;     /* constant-label: the planted label */
  double magnitude; /* leverage-spike: norm of the planted covariate rows */
  /* Optional length-d spike direction for leverage-spike; NULL chooses a
   * direction nearly aligned with the true coefficients automatically. */
  const double* direction;
  uint64_t seed;
} tg_adversary;

tg_status tg_corrupt(const tg_dataset* in, const tg_adversary* adv, tg_dataset** out);

/* ---- dataset handles and files ----------------------------------------- */

/* Writes <path> as CSV plus a <path>.meta.json sidecar; load requires both. */
tg_status tg_dataset_save(const tg_dataset* ds, const char* path);
tg_status tg_dataset_load(const char* path, tg_dataset** out);
void tg_dataset_free(tg_dataset* ds);

long long tg_dataset_rows(const tg_dataset* ds);
long long tg_dataset_dim(const tg_dataset* ds);
/* Borrowed pointers, valid while the handle lives. x is row-major n*d. */
tg_status tg_dataset_x(const tg_dataset* ds, const double** out);
tg_status tg_dataset_y(const tg_dataset* ds, const double** out);
tg_status tg_dataset_corrupted(const tg_dataset* ds, const uint8_t** out);
double tg_dataset_epsilon_actual(const tg_dataset* ds);
tg_status tg_dataset_family(const tg_dataset* ds, tg_family** out);

int tg_dataset_has_beta_star(const tg_dataset* ds);
tg_status tg_dataset_beta_star(const tg_dataset* ds, double* out /* length d */);
int tg_dataset_has_sigma_cov(const tg_dataset* ds);
tg_status tg_dataset_sigma_cov(const tg_dataset* ds, double* out /* row-major d*d */);

/* ---- trimmed maximum likelihood ---------------------------------------- */

typedef struct tg_fit_config {
  double epsilon;            /* trimming level, in [0, 0.25] */
  double eta;                /* termination slack, > 0 */
  double radius;             /* constraint ball; INFINITY for unconstrained */
  long long max_outer_iters; /* >= 1 */
  double inner_grad_tol;     /* <= 0 for the default */
  long long inner_max_iters; /* <= 0 for the default */
} tg_fit_config;

/* Fills cfg with the settings the error guarantees call for at contamination
 * rate eps_c and problem size (n, d). radius_hint should be an upper bound on
 * the norm of the true coefficients; pass INFINITY when unknown (only the
 * Gaussian family accepts that). */
tg_status tg_fit_config_theorem(const tg_family* fam, double eps_c, long long n, long long d,
                                double radius_hint, tg_fit_config* out);

tg_status tg_fit(const tg_dataset* ds, const tg_family* fam, const tg_fit_config* cfg,
                 tg_fit_result** out);

void tg_fit_result_free(tg_fit_result* r);
long long tg_fit_result_dim(const tg_fit_result* r);
tg_status tg_fit_result_beta(const tg_fit_result* r, double* out /* length dim */);
long long tg_fit_result_outer_iters(const tg_fit_result* r);
/* "eta-improvement" or "max-iters". */
tg_status tg_fit_result_termination(const tg_fit_result* r, char** out);
long long tg_fit_result_trace_len(const tg_fit_result* r);
tg_status tg_fit_result_trace(const tg_fit_result* r, double* out);
long long tg_fit_result_subset_size(const tg_fit_result* r);
tg_status tg_fit_result_subset(const tg_fit_result* r, long long* out);
long long tg_fit_result_warning_count(const tg_fit_result* r);
tg_status tg_fit_result_warning(const tg_fit_result* r, long long i, char** out);
tg_status tg_fit_result_to_json(const tg_fit_result* r, char** out);

/* ---- covariate filtering (sample corruption) ---------------------------- */

typedef struct tg_filter_config {
  double epsilon;
  double target_deviation;  /* <= 0 for the default 4*eps*log(1/eps) */
  double removal_fraction;  /* <= 0 for the default eps/10 */
  long long max_removed;    /* < 0 for the default floor(2*eps*n) */
} tg_filter_config;

/* Whitens with the covariance recorded in the dataset (required), prunes
 * high-leverage rows until the whitened second moment is near identity, and
 * returns the surviving rows of the original dataset. */
tg_status tg_filter(const tg_dataset* ds, const tg_filter_config* cfg, tg_dataset** out_kept,
                    tg_filter_report** out_report);

/* Filtering followed by the trimmed fit, with the estimate mapped back to the
 * original coordinates. The dataset must carry its covariance. */
tg_status tg_fit_sample(const tg_dataset* ds, const tg_family* fam, const tg_filter_config* fcfg,
                        const tg_fit_config* cfg, tg_fit_result** out_fit,
                        tg_filter_report** out_report);

void tg_filter_report_free(tg_filter_report* r);
long long tg_filter_report_kept_count(const tg_filter_report* r);
tg_status tg_filter_report_kept(const tg_filter_report* r, long long* out);
long long tg_filter_report_removed_count(const tg_filter_report* r);
long long tg_filter_report_rounds(const tg_filter_report* r);
tg_status tg_filter_report_deviation_trace(const tg_filter_report* r, double* out);
double tg_filter_report_final_deviation(const tg_filter_report* r);
/* Fraction of planted rows removed; -1 when the dataset had no mask. */
double tg_filter_report_removal_recall(const tg_filter_report* r);
int tg_filter_report_cap_reached(const tg_filter_report* r);
tg_status tg_filter_report_to_json(const tg_filter_report* r, char** out);

/* ---- diagnostics --------------------------------------------------------- */

/* Distance between beta_hat and the reference coefficients (beta_star, or the
 * dataset's recorded truth when beta_star is NULL). sigma_norm != 0 measures
 * in the covariance norm recorded in the dataset. */
tg_status tg_param_error(const tg_dataset* ds, const double* beta_hat, const double* beta_star,
                         long long d, int sigma_norm, double* out);

/* Mean trimmed-likelihood score along the direction from beta_hat toward the
 * reference coefficients; near zero when beta_hat is a trimmed stationary
 * point. epsilon sets the trimmed subset size. */
tg_status tg_stationarity_gap(const tg_dataset* ds, const tg_family* fam, const double* beta_hat,
                              const double* beta_star, long long d, double epsilon, double* out);

/* Largest shift of the empirical mean of pts (n rows, d columns, row-major)
 * achievable by deleting a floor(epsilon*n)-row subset, probed along the top
 * principal direction plus num_random_dirs random ones. */
tg_status tg_resilience_estimate(const double* pts, long long n, long long d, double epsilon,
                                 int num_random_dirs, uint64_t seed, double* tau_hat,
                                 long long* dirs_used);

/* ---- benchmark harness ---------------------------------------------------- */

/* Runs the Monte Carlo plan at plan_path, writing bench.csv and
 * bench_summary.json into out_dir. threads <= 0 picks automatically.
 * any_cell_failed is set to 1 when some configuration produced no successful
 * trial at all (the run still completes and the files are still written). */
tg_status tg_bench_run(const char* plan_path, const char* out_dir, int threads, char** csv_path,
                       char** summary_path, int* any_cell_failed);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TRIMGLM_H */
