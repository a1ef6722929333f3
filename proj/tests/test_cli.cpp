#include <doctest.h>

#include "chaoscope/io.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace chaoscope;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(CHAOSCOPE_CLI) + " " + args + " 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::string out;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) out.append(buf, n);
  const int status = pclose(p);
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

fs::path scratch() {
  const auto d = fs::temp_directory_path() / "chaoscope_cli_test";
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("exit codes") {
  CHECK(run("--help").code == 0);
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("percolate --mean-field 3").code == 2);                  // missing --v
  CHECK(run("percolate --mean-field 3 --v 0 --engine nope").code == 2);
  CHECK(run("bound --theorem max --mean-field 4").code == 2);        // missing --k
  CHECK(run("bound --theorem max --k 2 --mean-field 4").code == 0);
  // a reference value above the bound is a failed check
  CHECK(run("bound --theorem max --k 2 --mean-field 4 --oracle 100").code == 1);
  CHECK(run("verify --suite generator --instances 2 --seed 1").code == 0);
}

TEST_CASE("matrix report and round trip") {
  const auto dir = scratch();
  const auto path = (dir / "mf.json").string();
  const auto r = run("matrix --mean-field 10 --save " + path + " --v 0,1,2");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["delta"].get<double>() == doctest::Approx(1.0 / 9).epsilon(1e-15));
  CHECK(j["rows_ok"] == true);
  CHECK(j["vertices"].size() == 10);
  CHECK(fs::exists(path + ".manifest.json"));
  const auto again = run("matrix --load " + path);
  CHECK(nlohmann::json::parse(again.out)["p_xi"] == j["p_xi"]);
  CHECK(Mat(load_matrix(path).sparse()) == build_mean_field(10).dense());
}

TEST_CASE("random walk table from a graph file") {
  const auto dir = scratch();
  const auto g = dir / "star.txt";
  std::ofstream(g) << "0 1\n0 2\n0 3\n";
  const auto r = run("matrix --random-walk " + g.string() + " --format csv");
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("i,degree,delta_i,row_sum,col_sum\n0,3,0.3333333333333333,1,3\n", 0) == 0);
}

TEST_CASE("malformed files report line numbers") {
  const auto dir = scratch();
  const auto m = dir / "bad.csv";
  std::ofstream(m) << "0,0.5\n0.5,oops\n";
  CHECK(run("matrix --load " + m.string()).code == 2);
  const std::string cmd = std::string(CHAOSCOPE_CLI) + " matrix --load " + m.string() + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  char buf[512] = {};
  const auto n = fread(buf, 1, sizeof buf - 1, p);
  pclose(p);
  CHECK(std::string(buf, n).find("line 2") != std::string::npos);
}

TEST_CASE("er matrices are reproducible from the seed") {
  const auto a = run("matrix --er 300 0.05 --seed 7 --format csv");
  const auto b = run("matrix --er 300 0.05 --seed 7 --format csv");
  const auto c = run("matrix --er 300 0.05 --seed 8 --format csv");
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
}

TEST_CASE("percolate: closed form, t = 0 and Monte Carlo row") {
  const auto dir = scratch();
  const auto m = dir / "pair.csv";
  std::ofstream(m) << "0,1\n0,0\n";
  const auto r = run("percolate --matrix " + m.string() + " --v 0 --t 0,0.5,2");
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  REQUIRE(j.size() == 3);
  CHECK(j[0]["value"].get<double>() == 1.0);
  CHECK(j[1]["value"].get<double>() == doctest::Approx(2 - std::exp(-0.5)).epsilon(1e-12));
  CHECK(j[2]["value"].get<double>() == doctest::Approx(2 - std::exp(-2.0)).epsilon(1e-12));
  const auto mc = nlohmann::json::parse(
      run("percolate --matrix " + m.string() + " --v 0 --t 2 --engine mc --reps 20000 --seed 4").out);
  CHECK(std::abs(mc[0]["value"].get<double>() - (2 - std::exp(-2.0))) < 4 * mc[0]["stderr"].get<double>());
}

TEST_CASE("stochastic commands are identical across thread counts") {
  for (const std::string cmd :
       {"percolate --mean-field 6 --v 0 --t 0.5,1 --engine mc --reps 4000 --seed 3",
        "percolate --mean-field 6 --v 0 --t 1 --engine fpp --reps 4000 --seed 3",
        "gaussian --n 9 --seed 2 --T 0.3 --avg-k 3 --avg-mode sample --reps 3000",
        "simulate --linear --n 3 --dt 0.01 --T 0.5 --samples 2000 --seed 5",
        "simulate --drift kuramoto --mode projection --n 3 --dt 0.01 --T 0.5 --samples 500 --seed 5"}) {
    const auto one = run("--threads 1 " + cmd);
    const auto four = run("--threads 4 " + cmd);
    CHECK(one.code == 0);
    CHECK(one.out == four.out);
  }
}

TEST_CASE("thread count from the environment") {
  const auto a = run("percolate --mean-field 5 --v 0 --engine mc --reps 2000 --seed 1");
  const std::string cmd = "env CHAOSCOPE_THREADS=3 " + std::string(CHAOSCOPE_CLI) +
                          " percolate --mean-field 5 --v 0 --engine mc --reps 2000 --seed 1 2>/dev/null";
  FILE* p = popen(cmd.c_str(), "r");
  std::string out;
  char buf[4096];
  for (std::size_t n; (n = fread(buf, 1, sizeof buf, p)) > 0;) out.append(buf, n);
  CHECK(pclose(p) == 0);
  CHECK(out == a.out);
}

TEST_CASE("outputs carry a manifest; CSV can come with a gnuplot script") {
  const auto dir = scratch();
  const auto out = (dir / "est.csv").string();
  REQUIRE(run("--format csv --emit-gnuplot --out " + out + " percolate --mean-field 4 --v 0 --t 0.5,1").code == 0);
  CHECK(slurp(out).rfind("engine,functional,v,t,value", 0) == 0);
  CHECK(fs::exists(out + ".gp"));
  const auto man = nlohmann::json::parse(slurp(out + ".manifest.json"));
  CHECK(man["subcommand"] == "percolate");
  CHECK(man["parameters"]["v"] == "0");
  CHECK(man["parameters"]["engine"] == "exact");
  CHECK(man.contains("wall_clock_seconds"));
  CHECK(man["version"].is_string());
}

TEST_CASE("gaussian, bound and simulate examples") {
  const auto g = nlohmann::json::parse(run("gaussian --n 8 --seed 3 --T 0.3 --avg-k 2").out);
  const auto& avg = g["average"];
  CHECK(avg["sandwich_lower"].get<double>() <= avg["average"].get<double>());
  CHECK(avg["average"].get<double>() <= avg["sandwich_upper"].get<double>());

  const auto dir = scratch();
  const auto m = (dir / "m.json").string();
  REQUIRE(run("matrix --mean-field 10 --save " + m).code == 0);
  const auto b = nlohmann::json::parse(run("bound --theorem max --k 5 --matrix " + m).out);
  CHECK(b["theorem"] == "max");
  CHECK(b["structural"].get<double>() == doctest::Approx((5.0 / 9 + 1) * 25.0 / 81).epsilon(1e-14));

  const auto batch = dir / "batch.csv";
  std::ofstream(batch) << "theorem,k,v\nmax,3,\navg,3,\nsetwise,,0 1 2\nfeynman-kac,,0 4\n";
  const auto br = run("bound --format csv --matrix " + m + " --batch " + batch.string());
  CHECK(br.code == 0);
  CHECK(std::count(br.out.begin(), br.out.end(), '\n') == 5);

  const auto s = run("simulate --linear --n 3 --dt 0.01 --T 0.5 --samples 20000 --seed 1 --format csv");
  REQUIRE(s.code == 0);
  CHECK(s.out.rfind("i,j,mean_i,cov,stderr,sigma_T,euler,z\n", 0) == 0);
}
