#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

// End-to-end checks of the command-line tool. The binary path arrives via the
// RDT_CLI environment variable set by CTest.

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_cli(const std::string& args) {
  const char* cli = std::getenv("RDT_CLI");
  REQUIRE(cli != nullptr);
  const std::string out_path = "cli_stdout.tmp";
  const std::string err_path = "cli_stderr.tmp";
  const std::string cmd =
      std::string(cli) + " " + args + " >" + out_path + " 2>" + err_path;
  const int status = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = (status >= 256) ? status / 256 : status;
  r.out = slurp(out_path);
  r.err = slurp(err_path);
  std::remove(out_path.c_str());
  std::remove(err_path.c_str());
  return r;
}

}  // namespace

TEST_CASE("cli: cutoff and exit codes") {
  const auto ok = run_cli("binomial cutoff --n 227 --rule exact --pi-t 0.96 --alpha 0.05");
  CHECK(ok.exit_code == 0);
  CHECK(ok.out == "n\tc\n227\t4\n");

  const auto bad = run_cli(
      "binomial assurance --n 0 --rule exact --pi-t 0.96 --alpha 0.05 "
      "--design p:beta:78,2 m:gamma:200,1 --draws 1000 --seed 1");
  CHECK(bad.exit_code == 2);

  const auto unreachable = run_cli(
      "binomial find-n --rule exact --pi-t 0.96 --alpha 0.05 --gamma 0.95 "
      "--n-max 100 --design p:beta:78,2 m:gamma:200,1 --draws 2000 --seed 1");
  CHECK(unreachable.exit_code == 3);
}

TEST_CASE("cli: find-n reproduces the worked sample size") {
  const auto r = run_cli(
      "binomial find-n --rule exact --pi-t 0.96 --alpha 0.05 --gamma 0.5 "
      "--design p:beta:78,2 m:gamma:200,1 --seed 1 --draws 100000 --n-max 400 "
      "--workers 2");
  REQUIRE(r.exit_code == 0);
  std::istringstream is(r.out);
  std::string header;
  std::getline(is, header);
  CHECK(header == "n\tassurance\tse\tcutoff");
  int n = 0;
  is >> n;
  CHECK(n >= 222);
  CHECK(n <= 232);
}

TEST_CASE("cli: byte-identical output across runs and worker counts") {
  const std::string base =
      "binomial find-n --rule exact --pi-t 0.96 --alpha 0.05 --gamma 0.5 "
      "--design p:beta:78,2 m:gamma:200,1 --seed 7 --draws 20000 --n-max 400";
  const auto a = run_cli(base + " --workers 1");
  const auto b = run_cli(base + " --workers 2");
  const auto c = run_cli(base + " --workers 1");
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out == c.out);
}

TEST_CASE("cli: risk subcommands") {
  const auto cls = run_cli("risk classical --n 20 --c 20 --pi0 0.96 --pi1 0.9");
  CHECK(cls.exit_code == 0);
  CHECK(cls.out == "producer\tconsumer\n0\t1\n");

  const auto plan = run_cli(
      "risk find-plan --pi0 0.96 --pi1 0.9 --alpha-max 1 --beta-max 1 --n-max 20 "
      "--design p:beta:78,2 m:gamma:200,1 --draws 2000 --seed 3");
  CHECK(plan.exit_code == 0);
}

TEST_CASE("cli: elicit sceptical") {
  const auto r = run_cli("elicit sceptical --pi-t 0.96 --delta 0.05 --b 2 --precision 9");
  REQUIRE(r.exit_code == 0);
  std::istringstream is(r.out);
  std::string header;
  std::getline(is, header);
  double alpha = 0.0;
  is >> alpha;
  CHECK(alpha == Catch::Approx(8.2211920266).margin(1e-5));
}

TEST_CASE("cli: config file mirrors flags and flags win") {
  {
    std::ofstream cfg("cli_cfg.tmp");
    cfg << "[binomial.cutoff]\nn=100\nrule=exact\npi-t=0.96\nalpha=0.05\n";
  }
  const auto from_file = run_cli("binomial cutoff --config cli_cfg.tmp");
  CHECK(from_file.exit_code == 0);
  CHECK(from_file.out.find("100\t") != std::string::npos);
  const auto overridden = run_cli("binomial cutoff --config cli_cfg.tmp --n 227");
  CHECK(overridden.out == "n\tc\n227\t4\n");
  std::remove("cli_cfg.tmp");
}

TEST_CASE("cli: weibull analyze on a small dataset") {
  {
    std::ofstream csv("cli_vessels.tmp.csv");
    csv << "location,stress,time,censored\n";
    // two stresses, one spool; lives near the vessel-shaped truth
    csv << "s1,27.0,322,0\ns1,27.0,501,0\ns1,27.0,240,0\ns1,27.0,791,0\n";
    csv << "s1,29.0,49,0\ns1,29.0,88,0\ns1,29.0,33,0\ns1,29.0,120,1\n";
  }
  {
    std::ofstream prior("cli_prior.tmp");
    prior << "[regression]\nmu0 = -40\nmu1 = 1\ns00 = 1\ns01 = 0\ns11 = 0.01\n"
          << "[shape]\na_beta = 20\nb_beta = 13\n[location]\na_eps = 2\nb_eps = 2\n";
  }
  const auto r = run_cli(
      "weibull analyze --data cli_vessels.tmp.csv --prior cli_prior.tmp "
      "--target q=0.5,tau=4000,s=25,delta=0.05 --mcmc-iters 3000 --mcmc-burnin 500 "
      "--seed 11");
  REQUIRE(r.exit_code == 0);
  std::istringstream is(r.out);
  std::string header;
  std::getline(is, header);
  CHECK(header == "r_q\tpass");
  double rq = -1.0;
  int pass = -1;
  is >> rq >> pass;
  CHECK(rq >= 0.0);
  CHECK(rq <= 1.0);
  CHECK((pass == 0 || pass == 1));
  std::remove("cli_vessels.tmp.csv");
  std::remove("cli_prior.tmp");
}

TEST_CASE("cli: help lists defaults") {
  const auto r = run_cli("binomial find-n --help");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("--gamma") != std::string::npos);
  CHECK(r.out.find("default 0.5") != std::string::npos);
}
