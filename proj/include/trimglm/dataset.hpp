#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trimglm/family.hpp"

namespace trimglm {

// Serializable family identity (custom families carry callbacks and are not
// serializable; datasets only ever declare the three built-ins).
struct FamilyDescriptor {
  FamilyKind kind = FamilyKind::Gaussian;
  double sigma = 1.0;  // gaussian
  long long m = 1;     // binomial

  GlmFamily make() const;
  std::string name() const { return make().name(); }
};

struct DatasetMeta {
  FamilyDescriptor family;
  std::optional<Eigen::VectorXd> beta_star;   // generating coefficient, if known
  std::optional<Eigen::MatrixXd> sigma_cov;   // covariate covariance, if known
  std::uint64_t seed = 0;
  double epsilon_actual = 0.0;                // corrupted_count / n
};

struct Dataset {
  Eigen::MatrixXd x;                   // n x d covariates
  Eigen::VectorXd y;                   // n labels
  std::vector<std::uint8_t> corrupted; // n flags
  DatasetMeta meta;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }
  long long corrupted_count() const;
};

// CSV (columns x1..xd, y, corrupted; 17 significant digits, integer labels for
// the count families) plus a JSON sidecar at sidecar_path(path) holding
// {schema_version, family, params, beta_star, sigma_cov, seed, epsilon_actual}.
// A dataset round-trips bit-exactly through save/load.
std::string sidecar_path(const std::string& csv_path);
void save_dataset(const Dataset& ds, const std::string& csv_path);
Dataset load_dataset(const std::string& csv_path);

}  // namespace trimglm
