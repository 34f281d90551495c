#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

// BENCH_EXE is injected by the build as the path to the locg-bench binary.

namespace fs = std::filesystem;

namespace {

int run_cmd(const std::string& cmd) {
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
#ifdef _WIN32
  return rc;
#else
  return WEXITSTATUS(rc);
#endif
}

fs::path fresh_dir(const char* name) {
  const fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

int count_lines(const std::string& s) {
  int n = 0;
  for (char c : s)
    if (c == '\n') ++n;
  return n;
}

const std::string bench = std::string("\"") + BENCH_EXE + "\"";

}  // namespace

TEST_CASE("run: produces trace/rate/timing/summary with the exact header") {
  const fs::path out = fresh_dir("locg_cli_run");
  const int rc = run_cmd(bench +
                         " run --problem outlier_cluster --n 120 --nb 1 --me 1"
                         " --mh 1 --seed 1 --max-iter 200 --out " +
                         out.string() + " > /dev/null 2>&1");
  CHECK(rc == 0);
  const fs::path trace = out / "outlier_cluster_nb1me1mh1_seed1_trace.csv";
  REQUIRE(fs::exists(trace));
  CHECK(fs::exists(out / "outlier_cluster_nb1me1mh1_seed1_rate.csv"));
  CHECK(fs::exists(out / "outlier_cluster_nb1me1mh1_seed1_timing.csv"));
  CHECK(fs::exists(out / "outlier_cluster_nb1me1mh1_seed1_summary.json"));
  const std::string body = slurp(trace);
  CHECK(body.rfind("iter,rho_1,resnorm_1,err_rel_1,sigma,ratio_two_step,"
                   "ratio_vs_bound\n", 0) == 0);
  CHECK(count_lines(body) >= 10);
  const std::string summary =
      slurp(out / "outlier_cluster_nb1me1mh1_seed1_summary.json");
  CHECK(summary.find("\"outcome\"") != std::string::npos);
  CHECK(summary.find("\"problem\"") != std::string::npos);
}

TEST_CASE("run: explicitly empty --triples is a usage error (exit 2)") {
  const fs::path out = fresh_dir("locg_cli_empty");
  const int rc = run_cmd(bench +
                         " run --problem laplacian2d --N 6 --triples \"\" --out " +
                         out.string() + " > /dev/null 2>&1");
  CHECK(rc == 2);
}

TEST_CASE("run: unknown problem name fails with a nonzero exit") {
  const fs::path out = fresh_dir("locg_cli_badprob");
  const int rc = run_cmd(bench + " run --problem no_such_problem --out " +
                         out.string() + " > /dev/null 2>&1");
  CHECK(rc != 0);
}

TEST_CASE("run: byte-identical outputs across repeated invocations") {
  const fs::path a = fresh_dir("locg_cli_det_a");
  const fs::path b = fresh_dir("locg_cli_det_b");
  const std::string args =
      " run --problem outlier_cluster --n 120 --nb 2 --me 1 --mh 1 --seed 3"
      " --max-iter 150 --out ";
  REQUIRE(run_cmd(bench + args + a.string() + " > /dev/null 2>&1") == 0);
  REQUIRE(run_cmd(bench + args + b.string() + " > /dev/null 2>&1") == 0);
  const std::string stem = "outlier_cluster_nb2me1mh1_seed3";
  CHECK(slurp(a / (stem + "_trace.csv")) == slurp(b / (stem + "_trace.csv")));
  CHECK(slurp(a / (stem + "_rate.csv")) == slurp(b / (stem + "_rate.csv")));
  CHECK(slurp(a / (stem + "_summary.json")) == slurp(b / (stem + "_summary.json")));
}

TEST_CASE("run: paper13 expands to thirteen trials") {
  const fs::path out = fresh_dir("locg_cli_paper13");
  const int rc = run_cmd(bench +
                         " run --problem laplacian2d --N 8 --triples paper13"
                         " --seed 2 --max-iter 120 --out " +
                         out.string() + " > /dev/null 2>&1");
  CHECK(rc == 0);
  int traces = 0;
  for (const auto& e : fs::directory_iterator(out)) {
    const std::string n = e.path().filename().string();
    if (n.size() > 10 && n.substr(n.size() - 10) == "_trace.csv") ++traces;
  }
  CHECK(traces == 13);
}

TEST_CASE("sigma-table: renders and writes the table file") {
  const fs::path out = fresh_dir("locg_cli_sigma");
  const int rc = run_cmd(bench +
                         " sigma-table --problem outlier_cluster --n 120"
                         " --triples \"1,1,0;1,1,1\" --seed 1 --max-iter 200"
                         " --out " +
                         out.string() + " > /dev/null 2>&1");
  CHECK(rc == 0);
  const fs::path table = out / "sigma_table.txt";
  REQUIRE(fs::exists(table));
  const std::string body = slurp(table);
  CHECK(!body.empty());
  // sigma - 1 is identically zero for both (1,1,0) and (1,1,1)
  CHECK(body.find("0") != std::string::npos);
  CHECK(body.find("insufficient") == std::string::npos);
}

TEST_CASE("plot: emits an SVG next to the trace") {
  const fs::path out = fresh_dir("locg_cli_plot");
  REQUIRE(run_cmd(bench +
                  " run --problem outlier_cluster --n 120 --nb 1 --me 1 --mh 1"
                  " --seed 1 --max-iter 200 --out " +
                  out.string() + " > /dev/null 2>&1") == 0);
  const fs::path trace = out / "outlier_cluster_nb1me1mh1_seed1_trace.csv";
  const int rc = run_cmd(bench + " plot " + trace.string() + " > /dev/null 2>&1");
  CHECK(rc == 0);
  const fs::path svg = out / "outlier_cluster_nb1me1mh1_seed1.svg";
  REQUIRE(fs::exists(svg));
  const std::string body = slurp(svg);
  CHECK(body.find("<svg") != std::string::npos);
}

TEST_CASE("plot: malformed trace file fails with exit 1") {
  const fs::path out = fresh_dir("locg_cli_badplot");
  const fs::path bad = out / "garbage_trace.csv";
  std::ofstream(bad) << "this,is,not\na,trace,file\n";
  const int rc = run_cmd(bench + " plot " + bad.string() + " > /dev/null 2>&1");
  CHECK(rc == 1);
}

TEST_CASE("verify: all step identities pass on a healthy run") {
  const fs::path out = fresh_dir("locg_cli_verify");
  const int rc = run_cmd(bench +
                         " verify --problem outlier_cluster --n 120 --nb 1"
                         " --me 1 --mh 1 --seed 1 --max-iter 200 --out " +
                         out.string() + " > /dev/null 2>&1");
  CHECK(rc == 0);
}

TEST_CASE("no subcommand is a usage error") {
  CHECK(run_cmd(bench + " > /dev/null 2>&1") != 0);
}
