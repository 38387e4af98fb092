#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trimglm/dataset.hpp"
#include "trimglm/synth.hpp"

namespace trimglm {

struct BenchSize {
  Eigen::Index n = 0;
  Eigen::Index d = 0;
};

// Covariance requested by a plan; resolved against each size's d.
struct SigmaSpec {
  enum class Kind { Identity, Diagonal, Full } kind = Kind::Identity;
  std::vector<double> diag;
  Eigen::MatrixXd full;

  Eigen::MatrixXd resolve(Eigen::Index d) const;
};

struct BenchAdversary {
  AttackKind attack = AttackKind::LargeOutlier;
  double scale = 10.0;
  double value = 0.0;
  double magnitude = 25.0;
};

struct BenchPlan {
  CorruptionMode mode = CorruptionMode::LabelOnly;
  std::vector<FamilyDescriptor> families;
  std::vector<double> epsilons;      // contamination levels eps_c
  std::vector<BenchSize> sizes;
  std::vector<BenchAdversary> adversaries;
  int trials = 1;
  std::uint64_t root_seed = 0;
  double beta_norm = 1.0;
  SigmaSpec sigma;
  CovariateDist cov_dist = CovariateDist::StdNormal;
  std::optional<double> radius;      // overrides the per-family default constraint
  bool record_wall_time = false;     // off by default so runs are byte-reproducible
};

// Reads a JSON plan (schema_version 1). Unknown keys are rejected so typos in
// hand-edited plans fail loudly.
BenchPlan load_bench_plan(const std::string& path);

struct BenchResult {
  std::string csv_path;
  std::string summary_path;
  std::string summary_json;
  bool any_cell_failed = false;
};

// Runs every (family, epsilon, size, adversary, trial) cell on a small work
// pool. The per-trial seed is derived from the root seed and the cell indices,
// so results are independent of scheduling and thread count. Writes
// bench.csv (header family,epsilon_c,n,d,adversary,trial,seed,error_l2,
// error_sigma_norm,outer_iters,wall_time_ms,naive_error) and
// bench_summary.json (per-cell medians plus log-log error slopes across
// epsilon) into out_dir.
BenchResult run_bench(const BenchPlan& plan, const std::string& out_dir, int threads = 0);

}  // namespace trimglm
