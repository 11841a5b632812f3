#define DOCTEST_CONFIG_IMPLEMENT
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"

namespace {

std::string g_cli;  // path to the command-line binary, from argv

struct RunResult {
  int exit_code{};
  std::string output;
};

RunResult run(const std::string& args) {
  std::string cmd = "\"" + g_cli + "\" " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  while (std::size_t n = fread(buf, 1, sizeof(buf), pipe))
    r.output.append(buf, n);
  int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
  REQUIRE(out.good());
}

std::filesystem::path tmp_dir() {
  auto dir = std::filesystem::current_path() / "cli_test_tmp";
  std::filesystem::create_directories(dir);
  return dir;
}

std::string quotes4() {
  return "spot,2.0,1.0\n1.0,1.0\n1.8,0.28\n2.2,0.08\n3.0,0.0\n";
}

}  // namespace

TEST_CASE("check: exit codes follow the arbitrage verdict") {
  auto dir = tmp_dir();
  write_file(dir / "q4.csv", quotes4());
  write_file(dir / "weak.csv", "spot,2.0,1.0\n1.0,1.0\n2.0,0.2\n3.0,0.2\n");
  write_file(dir / "mf.csv", "spot,2.0,1.0\n1.0,1.0\n2.0,0.6\n3.0,0.0\n");

  auto ok = run("check " + (dir / "q4.csv").string());
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("verdict NONE") != std::string::npos);

  auto weak = run("check " + (dir / "weak.csv").string());
  CHECK(weak.exit_code == 2);
  CHECK(weak.output.find("verdict WEAK") != std::string::npos);
  CHECK(weak.output.find("witness if") != std::string::npos);

  auto mf = run("check " + (dir / "mf.csv").string());
  CHECK(mf.exit_code == 3);
  CHECK(mf.output.find("verdict MODEL_FREE") != std::string::npos);
  CHECK(mf.output.find("butterfly") != std::string::npos);

  auto missing = run("check " + (dir / "nosuch.csv").string());
  CHECK(missing.exit_code == 1);
  CHECK(missing.output.find("cannot open") != std::string::npos);
}

TEST_CASE("bounds: finite and continuum values with hedges") {
  auto dir = tmp_dir();
  write_file(dir / "q4.csv", quotes4());
  std::string base = "bounds " + (dir / "q4.csv").string() +
                     " --lo 1.2 --hi 2.8";

  auto fin = run(base);
  CHECK(fin.exit_code == 0);
  CHECK(fin.output.find("lower 0.733333333333 strikes 1.8 2.2") !=
        std::string::npos);
  CHECK(fin.output.find("upper 1 term I") != std::string::npos);
  CHECK(fin.output.find("attained yes") != std::string::npos);
  CHECK(fin.output.find("hedge subhedge II (K1=1.8, K2=2.2)") !=
        std::string::npos);

  auto cont = run(base + " --continuum");
  CHECK(cont.exit_code == 0);
  CHECK(cont.output.find("lower 0.733333333333") != std::string::npos);
  CHECK(cont.output.find("upper 0.8 term I") != std::string::npos);
  CHECK(cont.output.find("superhedge I (corridor digital)") !=
        std::string::npos);

  // inconsistent quotes refuse to produce bounds
  write_file(dir / "mf.csv", "spot,2.0,1.0\n1.0,1.0\n2.0,0.6\n3.0,0.0\n");
  auto bad = run("bounds " + (dir / "mf.csv").string() + " --lo 1.2 --hi 2.8");
  CHECK(bad.exit_code == 3);
  CHECK(bad.output.find("MODEL_FREE") != std::string::npos);
}

TEST_CASE("verify: simulated extremal embeddings hit the analytic bounds") {
  auto dir = tmp_dir();
  write_file(dir / "q4.csv", quotes4());
  auto r = run("verify " + (dir / "q4.csv").string() +
               " --lo 1.2 --hi 2.8 --paths 8000 --dt 1e-3");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("upper-analytic 0.8") != std::string::npos);
  CHECK(r.output.find("lower-analytic 0.733333333333") != std::string::npos);
  CHECK(r.output.find("upper-within-3se yes") != std::string::npos);
  CHECK(r.output.find("lower-within-3se yes") != std::string::npos);
}

TEST_CASE("surface: tab-separated bound grid") {
  auto dir = tmp_dir();
  write_file(dir / "q4.csv", quotes4());
  auto r = run("surface " + (dir / "q4.csv").string() + " --nodes 9");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("lo\thi\tlower\tupper") != std::string::npos);
  // the corner row with the corridor collapsed at the spot prices at zero
  CHECK(r.output.find("0.9\t2\t0\t0") != std::string::npos);
}

TEST_CASE("backtest: config file, artifacts, determinism") {
  auto dir = tmp_dir();
  write_file(dir / "bt.cfg",
             "# small smoke study\n"
             "s0=2.006\nv0=0.00169\nkappa=0.559\ntheta=0.001352\n"
             "xi=0.0676\nrho=0.076\nmaturity=0.5\n"
             "barrier_lo=1.95\nbarrier_hi=2.05\n"
             "strikes=1.70,1.81,1.9364,2.0636,2.19,2.30\n"
             "paths=200\nseed=20260824\n");
  auto out_dir = dir / "bt_out";
  auto r1 = run("backtest " + (dir / "bt.cfg").string() + " --out " +
                out_dir.string());
  CHECK(r1.exit_code == 0);
  CHECK(r1.output.find("robust") != std::string::npos);
  CHECK(r1.output.find("delta") != std::string::npos);
  CHECK(std::filesystem::exists(out_dir / "report.txt"));
  CHECK(std::filesystem::exists(out_dir / "cdf.tsv"));

  auto r2 = run("backtest " + (dir / "bt.cfg").string());
  CHECK(r2.exit_code == 0);
  // byte-identical summary on a repeated run with the same seed
  CHECK(r1.output.substr(0, r2.output.size()) == r2.output);

  write_file(dir / "bad.cfg", "s0=2.0\n");
  auto bad = run("backtest " + (dir / "bad.cfg").string());
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("missing config key") != std::string::npos);
}

int main(int argc, char** argv) {
  doctest::Context ctx;
  int forwarded = argc;
  if (argc > 1 && argv[argc - 1][0] != '-') {
    g_cli = argv[argc - 1];
    forwarded = argc - 1;
  }
  if (g_cli.empty()) {
    std::fprintf(stderr, "usage: test_cli [doctest options] <cli-binary>\n");
    return 1;
  }
  ctx.applyCommandLine(forwarded, argv);
  return ctx.run();
}
