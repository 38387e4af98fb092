#include "trimglm/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "trimglm/errors.hpp"

namespace trimglm {

using json = nlohmann::ordered_json;

GlmFamily FamilyDescriptor::make() const {
  switch (kind) {
    case FamilyKind::Gaussian:
      return GlmFamily::gaussian(sigma);
    case FamilyKind::Poisson:
      return GlmFamily::poisson();
    case FamilyKind::Binomial:
      return GlmFamily::binomial(m);
    case FamilyKind::Custom:
      break;
  }
  fail_invalid("custom families have no serializable descriptor");
}

long long Dataset::corrupted_count() const {
  long long k = 0;
  for (std::uint8_t f : corrupted) k += f ? 1 : 0;
  return k;
}

std::string sidecar_path(const std::string& csv_path) { return csv_path + ".meta.json"; }

namespace {

const char* kind_label(FamilyKind k) {
  switch (k) {
    case FamilyKind::Gaussian:
      return "gaussian";
    case FamilyKind::Poisson:
      return "poisson";
    case FamilyKind::Binomial:
      return "binomial";
    case FamilyKind::Custom:
      return "custom";
  }
  return "unknown";
}

json vec_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::VectorXd vec_from_json(const json& a, const char* what) {
  if (!a.is_array()) fail_invalid(std::string("sidecar: ") + what + " must be an array");
  Eigen::VectorXd v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (!a[i].is_number()) fail_invalid(std::string("sidecar: ") + what + " must hold numbers");
    v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd mat_from_json(const json& a, const char* what) {
  if (!a.is_array() || a.empty()) fail_invalid(std::string("sidecar: ") + what + " must be a nonempty array of rows");
  const std::size_t rows = a.size();
  const std::size_t cols = a[0].is_array() ? a[0].size() : 0;
  Eigen::MatrixXd m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!a[i].is_array() || a[i].size() != cols) fail_invalid(std::string("sidecar: ") + what + " rows are ragged");
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = a[i][j].get<double>();
  }
  return m;
}

void format_double(char* buf, std::size_t cap, double v) { std::snprintf(buf, cap, "%.17g", v); }

}  // namespace

void save_dataset(const Dataset& ds, const std::string& csv_path) {
  const Eigen::Index n = ds.n();
  const Eigen::Index d = ds.dim();
  if (ds.y.size() != n || static_cast<Eigen::Index>(ds.corrupted.size()) != n)
    fail_invalid("save_dataset: x, y and corrupted mask disagree on the row count");
  if (ds.meta.family.kind == FamilyKind::Custom) fail_invalid("save_dataset: custom families cannot be serialized");

  const bool integer_labels = ds.meta.family.kind == FamilyKind::Poisson || ds.meta.family.kind == FamilyKind::Binomial;

  std::ofstream out(csv_path);
  if (!out) fail_io("save_dataset: cannot open '" + csv_path + "' for writing");
  for (Eigen::Index j = 0; j < d; ++j) out << 'x' << (j + 1) << ',';
  out << "y,corrupted\n";
  char buf[64];
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      format_double(buf, sizeof(buf), ds.x(i, j));
      out << buf << ',';
    }
    if (integer_labels) {
      std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(ds.y(i)));
      out << buf;
    } else {
      format_double(buf, sizeof(buf), ds.y(i));
      out << buf;
    }
    out << ',' << (ds.corrupted[static_cast<std::size_t>(i)] ? 1 : 0) << '\n';
  }
  if (!out) fail_io("save_dataset: write to '" + csv_path + "' failed");
  out.close();

  json side;
  side["schema_version"] = 1;
  side["family"] = kind_label(ds.meta.family.kind);
  json params = json::object();
  if (ds.meta.family.kind == FamilyKind::Gaussian) params["sigma"] = ds.meta.family.sigma;
  if (ds.meta.family.kind == FamilyKind::Binomial) params["m"] = ds.meta.family.m;
  side["params"] = params;
  side["beta_star"] = ds.meta.beta_star ? vec_to_json(*ds.meta.beta_star) : json(nullptr);
  side["sigma_cov"] = ds.meta.sigma_cov ? mat_to_json(*ds.meta.sigma_cov) : json(nullptr);
  side["seed"] = ds.meta.seed;
  side["epsilon_actual"] = ds.meta.epsilon_actual;

  const std::string spath = sidecar_path(csv_path);
  std::ofstream sout(spath);
  if (!sout) fail_io("save_dataset: cannot open '" + spath + "' for writing");
  sout << side.dump(2) << '\n';
  if (!sout) fail_io("save_dataset: write to '" + spath + "' failed");
}

namespace {

double parse_number(const std::string& tok, std::size_t line_no, const std::string& path) {
  const char* s = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(s, &end);
  if (end == s || *end != '\0') {
    std::ostringstream msg;
    msg << "load_dataset: malformed numeric field '" << tok << "' at " << path << ":" << line_no;
    fail_invalid(msg.str());
  }
  return v;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Dataset load_dataset(const std::string& csv_path) {
  const std::string spath = sidecar_path(csv_path);
  std::ifstream sin(spath);
  if (!sin) fail_io("load_dataset: missing metadata sidecar '" + spath + "'");
  json side;
  try {
    sin >> side;
  } catch (const json::exception& e) {
    fail_invalid("load_dataset: sidecar '" + spath + "' is not valid JSON: " + e.what());
  }
  if (!side.contains("schema_version") || !side["schema_version"].is_number_integer())
    fail_invalid("load_dataset: sidecar lacks an integer schema_version");
  if (side["schema_version"].get<int>() != 1)
    fail_invalid("load_dataset: unsupported schema_version (expected 1)");

  DatasetMeta meta;
  const std::string fam = side.value("family", std::string());
  if (fam == "gaussian") {
    meta.family.kind = FamilyKind::Gaussian;
    if (!side.contains("params") || !side["params"].contains("sigma"))
      fail_invalid("load_dataset: gaussian sidecar requires params.sigma");
    meta.family.sigma = side["params"]["sigma"].get<double>();
  } else if (fam == "poisson") {
    meta.family.kind = FamilyKind::Poisson;
  } else if (fam == "binomial") {
    meta.family.kind = FamilyKind::Binomial;
    if (!side.contains("params") || !side["params"].contains("m"))
      fail_invalid("load_dataset: binomial sidecar requires params.m");
    meta.family.m = side["params"]["m"].get<long long>();
  } else {
    fail_invalid("load_dataset: unknown family '" + fam + "' in sidecar");
  }
  if (side.contains("beta_star") && !side["beta_star"].is_null())
    meta.beta_star = vec_from_json(side["beta_star"], "beta_star");
  if (side.contains("sigma_cov") && !side["sigma_cov"].is_null())
    meta.sigma_cov = mat_from_json(side["sigma_cov"], "sigma_cov");
  meta.seed = side.value("seed", std::uint64_t{0});
  meta.epsilon_actual = side.value("epsilon_actual", 0.0);

  std::ifstream in(csv_path);
  if (!in) fail_io("load_dataset: cannot open '" + csv_path + "'");
  std::string line;
  if (!std::getline(in, line)) fail_invalid("load_dataset: '" + csv_path + "' is empty");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 3 || header[header.size() - 2] != "y" || header.back() != "corrupted")
    fail_invalid("load_dataset: header must be x1,...,xd,y,corrupted");
  const std::size_t d = header.size() - 2;
  for (std::size_t j = 0; j < d; ++j) {
    if (header[j] != "x" + std::to_string(j + 1)) fail_invalid("load_dataset: header must be x1,...,xd,y,corrupted");
  }

  const GlmFamily family = meta.family.make();
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<std::uint8_t> mask;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() && in.eof()) break;
    const std::vector<std::string> tok = split_csv_line(line);
    if (tok.size() != d + 2) {
      std::ostringstream msg;
      msg << "load_dataset: expected " << d + 2 << " fields but found " << tok.size() << " at " << csv_path << ":"
          << line_no;
      fail_invalid(msg.str());
    }
    for (std::size_t j = 0; j < d; ++j) xs.push_back(parse_number(tok[j], line_no, csv_path));
    const double y = parse_number(tok[d], line_no, csv_path);
    if (!family.label_in_domain(y)) {
      std::ostringstream msg;
      msg << "load_dataset: label " << tok[d] << " outside the " << kind_label(meta.family.kind) << " domain at "
          << csv_path << ":" << line_no;
      fail_invalid(msg.str());
    }
    ys.push_back(y);
    const std::string& c = tok[d + 1];
    if (c != "0" && c != "1") {
      std::ostringstream msg;
      msg << "load_dataset: corrupted flag must be 0 or 1 at " << csv_path << ":" << line_no;
      fail_invalid(msg.str());
    }
    mask.push_back(c == "1" ? 1 : 0);
  }

  const std::size_t n = ys.size();
  if (n == 0) fail_invalid("load_dataset: '" + csv_path + "' holds no data rows");
  Dataset ds;
  ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  ds.y.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) ds.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = xs[i * d + j];
    ds.y(static_cast<Eigen::Index>(i)) = ys[i];
  }
  ds.corrupted = std::move(mask);
  ds.meta = std::move(meta);

  if (ds.meta.beta_star && ds.meta.beta_star->size() != ds.dim())
    fail_invalid("load_dataset: beta_star dimension disagrees with the covariate count");
  if (ds.meta.sigma_cov && (ds.meta.sigma_cov->rows() != ds.dim() || ds.meta.sigma_cov->cols() != ds.dim()))
    fail_invalid("load_dataset: sigma_cov shape disagrees with the covariate count");
  const double expected = ds.meta.epsilon_actual * static_cast<double>(n);
  if (std::fabs(static_cast<double>(ds.corrupted_count()) - expected) > 0.5 + 1e-9)
    fail_invalid("load_dataset: corrupted mask disagrees with epsilon_actual in the sidecar");
  return ds;
}

}  // namespace trimglm
