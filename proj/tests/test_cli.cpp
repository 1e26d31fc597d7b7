#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "subest/geometry.hpp"
#include "subest/io.hpp"

namespace fs = std::filesystem;
using namespace subest;

namespace {

const fs::path kRoot = fs::temp_directory_path() / "subspace_est_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(SUBSPACE_EST_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path fresh(const std::string& name) {
  const fs::path dir = kRoot / name;
  fs::remove_all(dir);
  return dir;
}

std::string out_flag(const fs::path& dir) { return " --out " + dir.string(); }

nlohmann::json read_json(const fs::path& path) { return nlohmann::json::parse(io::read_text(path)); }

}  // namespace

TEST_CASE("simulate writes the instance and is deterministic") {
  const fs::path a = fresh("sim_a"), b = fresh("sim_b");
  const std::string args = "simulate --family denoising --p1 12 --p2 9 --r 2 --t 4 --seed 3";
  // Same resolved settings, including the output directory: run, set aside, rerun.
  REQUIRE(run(args + out_flag(a)) == 0);
  fs::rename(a, b);
  REQUIRE(run(args + out_flag(a)) == 0);
  const auto y = io::read_matrix_csv(a / "Y.csv");
  CHECK(y.rows() == 12);
  CHECK(y.cols() == 9);
  CHECK(io::read_matrix_csv(a / "U_truth.csv").cols() == 2);
  CHECK(io::read_matrix_csv(a / "V_truth.csv").rows() == 9);
  for (const char* f : {"Y.csv", "U_truth.csv", "V_truth.csv", "spectrum.csv", "resolved_simulate.txt"})
    CHECK(io::read_text(a / f) == io::read_text(b / f));
}

TEST_CASE("sparse truth and estimate report") {
  const fs::path sim = fresh("sparse_sim"), est = fresh("sparse_est");
  REQUIRE(run("simulate --p1 30 --p2 20 --t 20 --constraint sparse:k=3 --seed 4" + out_flag(sim)) == 0);
  const auto u = io::read_matrix_csv(sim / "U_truth.csv");
  CHECK((u.array() != 0.0).count() <= 3);
  REQUIRE(run("estimate --in " + sim.string() + out_flag(est)) == 0);
  const auto report = read_json(est / "report.json");
  CHECK(report.contains("objective"));
  CHECK(report.contains("iterations"));
  CHECK(report.contains("converged"));
  const double d = report.at("d_to_truth").get<double>();
  CHECK(d >= 0.0);
  CHECK(d <= 0.5);
  const auto u_hat = io::read_matrix_csv(est / "U_hat.csv");
  CHECK((u_hat.array() != 0.0).count() <= 3);
  CHECK(std::abs(subspace_distance(u_hat, u) - d) <= 1e-12);
}

TEST_CASE("usage errors") {
  const fs::path sim = fresh("big_sim"), est = fresh("big_est");
  REQUIRE(run("simulate --family clustering --n 25 --p 10 --seed 5" + out_flag(sim)) == 0);
  CHECK(run("estimate --method exhaustive --in " + sim.string() + out_flag(est)) == 2);

  const fs::path cfg_dir = fresh("cfg");
  fs::create_directories(cfg_dir);
  io::write_text(cfg_dir / "bad.txt", "p1 = 10\nnot_a_key = 3\n");
  CHECK(run("simulate --config " + (cfg_dir / "bad.txt").string() + out_flag(fresh("cfg_out"))) == 2);
  CHECK(run("simulate --p1 10") == 2);
  CHECK(run("no_such_command") == 2);
  CHECK(run("--version") == 0);
}

TEST_CASE("config files are overridden by flags") {
  const fs::path dir = fresh("cfg_override");
  fs::create_directories(dir);
  io::write_text(dir / "cfg.txt", "p1 = 7\np2 = 5\nt = 3\n");
  REQUIRE(run("simulate --config " + (dir / "cfg.txt").string() + " --p2 6" + out_flag(dir / "out")) == 0);
  const auto y = io::read_matrix_csv(dir / "out" / "Y.csv");
  CHECK(y.rows() == 7);
  CHECK(y.cols() == 6);
}

TEST_CASE("sweep output") {
  const fs::path dir = fresh("sweep");
  REQUIRE(run("sweep --p1 20 --p2 15 --constraint nonneg --trials 5 --t-logspace 1,100,8" + out_flag(dir)) == 0);
  const std::string text = io::read_text(dir / "sweep.csv");
  CHECK(text.substr(0, text.find('\n')) == "family,p1,p2,n,p,r,k,t,sigma,trials,seed,mean_d,stderr,theory_rate");
  std::size_t lines = 0;
  for (char c : text) lines += c == '\n';
  CHECK(lines == 9);

  const fs::path fit = fresh("sweep_fit");
  REQUIRE(run("sweep --p1 20 --p2 15 --constraint nonneg --trials 5 --t_logspace 1,1000,8 --fit true" +
              out_flag(fit)) == 0);
  const auto j = read_json(fit / "fit.json");
  CHECK(j.contains("t_break"));
}

TEST_CASE("oracle and risk outputs") {
  const fs::path dir = fresh("oracle");
  REQUIRE(run("oracle --trials 40 --seed 6" + out_flag(dir)) == 0);
  const auto j = read_json(dir / "oracle.json");
  CHECK(j.at("trials").get<int>() == 40);
  CHECK(j.at("agree_count").get<int>() >= 38);

  const fs::path risk = fresh("risk");
  REQUIRE(run("risk --p1 15 --p2 10 --trials 20 --threads 2" + out_flag(risk)) == 0);
  const auto r = read_json(risk / "risk.json");
  CHECK(r.at("trials").get<int>() == 20);
  CHECK(r.at("spec_digest").get<std::string>().size() == 16);
  CHECK(r.at("mean_distance").get<double>() <= std::sqrt(2.0));
}

TEST_CASE("entropy and packing outputs") {
  const fs::path dir = fresh("entropy");
  REQUIRE(run("entropy --p 2 --constraint signs --budget 50" + out_flag(dir)) == 0);
  const auto j = read_json(dir / "entropy.json");
  CHECK(j.at("dudley").get<double>() == 0.0);
  CHECK(j.at("epsilons").size() == 24);
  CHECK(j.at("log_cover").size() == 24);

  const fs::path pack = fresh("packing");
  REQUIRE(run("packing --kind signs --n 16 --d 4" + out_flag(pack)) == 0);
  const auto m = read_json(pack / "manifest.json");
  CHECK(fs::exists(pack / "center.csv"));
  CHECK(fs::exists(pack / "member_00000.csv"));
  CHECK(m.contains("kind"));
}
