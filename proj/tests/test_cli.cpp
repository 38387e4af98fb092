// Drives the installed command-line binary as a subprocess and checks exit
// codes, output files, and the printed summaries. The binary location comes
// in through TRIMGLM_CLI_PATH at compile time.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <sys/wait.h>

using nlohmann::json;

namespace {

struct RunResult {
  int status = -1;
  std::string out;
  std::string err;
};

std::filesystem::path temp_dir(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "trimglm_cli_test" / name;
  std::filesystem::create_directories(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run(const std::string& args, const std::string& env = "") {
  static int counter = 0;
  const auto dir = temp_dir("io");
  const auto out_path = dir / ("out" + std::to_string(counter) + ".txt");
  const auto err_path = dir / ("err" + std::to_string(counter) + ".txt");
  ++counter;

  std::string cmd;
  if (!env.empty()) cmd += env + " ";
  cmd += std::string(TRIMGLM_CLI_PATH) + " " + args;
  cmd += " > " + out_path.string() + " 2> " + err_path.string();

  RunResult r;
  const int raw = std::system(cmd.c_str());
  r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  return r;
}

}  // namespace

TEST_CASE("gen writes a dataset with its sidecar") {
  const auto dir = temp_dir("gen");
  const RunResult r = run("gen --family gaussian --n 400 --d 3 --seed 11 --attack large-outlier --epsilon 0.1",
                          "TRIMGLM_OUT_DIR=" + dir.string());
  CAPTURE(r.err);
  CHECK(r.status == 0);
  CHECK(r.out.find("wrote") != std::string::npos);
  CHECK(r.out.find("corrupted fraction 0.1") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "data.csv"));
  CHECK(std::filesystem::exists(dir / "data.csv.meta.json"));
}

TEST_CASE("fit reports the trimmed estimate") {
  const auto dir = temp_dir("fit");
  const std::string data = (dir / "data.csv").string();
  REQUIRE(run("gen --n 600 --d 3 --seed 21 --attack large-outlier --epsilon 0.1 --out " + data).status == 0);

  const std::string fit_json = (dir / "fit.json").string();
  const RunResult r = run("fit --data " + data + " --json " + fit_json);
  CAPTURE(r.err);
  CHECK(r.status == 0);
  CHECK(r.out.find("termination: eta-improvement") != std::string::npos);
  CHECK(r.out.find("beta_hat:") != std::string::npos);
  CHECK(r.out.find("error_l2:") != std::string::npos);
  CHECK(r.out.find("stationarity_gap:") != std::string::npos);

  const json js = json::parse(slurp(fit_json));
  CHECK(js["termination"] == "eta-improvement");
  CHECK(js["objective_trace"].is_array());
}

TEST_CASE("fit on a missing file exits with the io code") {
  const RunResult r = run("fit --data /nonexistent/data.csv");
  CHECK(r.status == 4);
  CHECK(r.err.find("error:") != std::string::npos);
}

TEST_CASE("bad arguments exit with the usage code") {
  CHECK(run("gen --attack totally-bogus").status == 2);
  CHECK(run("gen --unknown-flag 3").status == 2);
  CHECK(run("").status != 0);  // a subcommand is required
  CHECK(run("fit").status == 2);  // --data is required
}

TEST_CASE("filter strips spiked rows and writes the survivors") {
  const auto dir = temp_dir("filter");
  const std::string data = (dir / "spiked.csv").string();
  REQUIRE(run("gen --n 700 --d 3 --seed 31 --attack leverage-spike --mode sample --epsilon 0.05 "
              "--magnitude 25 --out " +
              data)
              .status == 0);

  const std::string out = (dir / "filtered.csv").string();
  const RunResult r = run("filter --data " + data + " --epsilon 0.05 --out " + out);
  CAPTURE(r.err);
  CHECK(r.status == 0);
  CHECK(r.out.find("kept") != std::string::npos);
  CHECK(r.out.find("removal recall") != std::string::npos);
  CHECK(std::filesystem::exists(out));
  CHECK(std::filesystem::exists(out + ".meta.json"));

  // the surviving file loads and fits in plain label mode
  const RunResult fit = run("fit --data " + out);
  CAPTURE(fit.err);
  CHECK(fit.status == 0);

  // end-to-end sample-mode fit prints the filter stage
  const RunResult sample = run("fit --data " + data + " --mode sample");
  CAPTURE(sample.err);
  CHECK(sample.status == 0);
  CHECK(sample.out.find("filter: removed") != std::string::npos);
}

TEST_CASE("sample-mode fit refuses data without a recorded covariance") {
  const auto dir = temp_dir("nocov");
  const std::string data = (dir / "data.csv").string();
  REQUIRE(run("gen --n 80 --d 2 --seed 41 --out " + data).status == 0);

  const std::string side_path = data + ".meta.json";
  json side = json::parse(slurp(side_path));
  side["sigma_cov"] = nullptr;
  {
    std::ofstream out(side_path);
    out << side.dump(2);
  }

  const RunResult r = run("fit --data " + data + " --mode sample --epsilon-c 0.05");
  CHECK(r.status == 2);
  CHECK(r.err.find("covariance") != std::string::npos);
}

TEST_CASE("bench runs a plan reproducibly") {
  const auto dir = temp_dir("bench");
  const json plan = {{"schema_version", 1},
                     {"mode", "label"},
                     {"families", json::array({{{"kind", "gaussian"}, {"sigma", 1.0}}})},
                     {"epsilons", {0.05, 0.1}},
                     {"sizes", json::array({{{"n", 250}, {"d", 2}}})},
                     {"adversaries", json::array({{{"attack", "large-outlier"}, {"scale", 10.0}}})},
                     {"trials", 2},
                     {"root_seed", 17},
                     {"beta_norm", 1.0}};
  const std::string plan_path = (dir / "plan.json").string();
  {
    std::ofstream out(plan_path);
    out << plan.dump(2);
  }

  const auto out1 = temp_dir("bench/run1");
  const auto out2 = temp_dir("bench/run2");
  const RunResult r1 = run("bench --plan " + plan_path + " --out-dir " + out1.string());
  CAPTURE(r1.err);
  CHECK(r1.status == 0);
  CHECK(std::filesystem::exists(out1 / "bench.csv"));
  CHECK(std::filesystem::exists(out1 / "bench_summary.json"));

  const RunResult r2 = run("bench --plan " + plan_path + " --out-dir " + out2.string() + " --threads 2");
  CHECK(r2.status == 0);
  CHECK(slurp(out1 / "bench.csv") == slurp(out2 / "bench.csv"));
  CHECK(slurp(out1 / "bench_summary.json") == slurp(out2 / "bench_summary.json"));
}

TEST_CASE("bench rejects a malformed plan") {
  const auto dir = temp_dir("badplan");
  const std::string plan_path = (dir / "plan.json").string();
  {
    std::ofstream out(plan_path);
    out << R"({"schema_version": 1, "mode": "label", "familees": []})";
  }
  const RunResult r = run("bench --plan " + plan_path);
  CHECK(r.status == 2);
  CHECK(r.err.find("familees") != std::string::npos);
}
