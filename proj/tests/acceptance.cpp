// Acceptance suite: one PASS/FAIL line per criterion; exits non-zero if any
// criterion fails. Tolerances and runtime limits are fixed below.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "subest/entropy.hpp"
#include "subest/harness.hpp"
#include "subest/io.hpp"

namespace fs = std::filesystem;
using namespace subest;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

Index between(Rng& rng, Index lo, Index hi) { return lo + Index(rng.below(std::uint64_t(hi - lo + 1))); }

// 1. Gram identity and Procrustes sandwich.
Outcome geometry_identities() {
  constexpr double kTol = 1e-9;
  Rng rng(101);
  double worst_identity = 0, worst_sandwich = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index p = between(rng, 2, 50);
    const Index r = between(rng, 1, std::min<Index>(5, p));
    const Frame a(oracle::random_frame(p, r, rng));
    const Frame b(oracle::random_frame(p, r, rng));
    const double d = subspace_distance(a, b);
    const double gram = 2.0 * (double(r) - (a.matrix().transpose() * b.matrix()).squaredNorm());
    worst_identity = std::max(worst_identity, std::abs(d * d - gram));
    const double res = procrustes_align(a, b).residual;
    worst_sandwich = std::max({worst_sandwich, d / std::sqrt(2.0) - res, res - d});
  }
  return {worst_identity <= kTol && worst_sandwich <= kTol,
          fmt("max |d^2 - gram| = %.2e, max sandwich excess = %.2e", worst_identity, worst_sandwich)};
}

// 2. Quadratic-form sandwiches in squared and shifted modes.
Outcome quadratic_sandwiches() {
  constexpr double kSlack = 1e-9;
  Rng rng(202);
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Index p = between(rng, 2, 50);
    const Index r = between(rng, 1, std::min<Index>(5, p));
    const Frame u(oracle::random_frame(p, r, rng));
    const Frame w(oracle::random_frame(p, r, rng));
    VectorXd lambda(r);
    for (Index i = 0; i < r; ++i) lambda(i) = 0.5 + 5.0 * rng.uniform();
    std::sort(lambda.data(), lambda.data() + r, std::greater<>());
    const double hi = lambda(0), lo = lambda(r - 1);
    const SpectrumSpec<double> spec(lambda, std::sqrt(hi * lo), std::sqrt(hi / lo) + 1.0);
    const double d2 = std::pow(subspace_distance(u, w), 2);
    const double squared = quadratic_form_gap(u, spec, w, QuadraticMode<double>::squared());
    const double shifted = quadratic_form_gap(u, spec, w, QuadraticMode<double>::shifted(0.2 + rng.uniform()));
    violations += squared < lo * lo / 2 * d2 - kSlack || squared > hi * hi / 2 * d2 + kSlack;
    violations += shifted < lo / 2 * d2 - kSlack || shifted > hi / 2 * d2 + kSlack;
  }
  return {violations == 0, fmt("%d violations over 2000 checks", violations)};
}

// 3. Closed-form spiked Wishart KL against the generic Gaussian KL.
Outcome kl_equivalence() {
  constexpr double kRelTol = 1e-8;
  Rng rng(303);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index p = between(rng, 2, 20);
    const Index r = between(rng, 1, std::min<Index>(3, p - 1));
    const double t = 0.2 + 5.0 * rng.uniform();
    const double sigma = 0.3 + 2.0 * rng.uniform();
    const Index n = between(rng, 1, 200);
    const Frame ui(oracle::random_frame(p, r, rng));
    const Frame uj(oracle::random_frame(p, r, rng));
    const MatrixXd id = MatrixXd::Identity(p, p);
    const MatrixXd ci = t * ui.matrix() * ui.matrix().transpose() + sigma * sigma * id;
    const MatrixXd cj = t * uj.matrix() * uj.matrix().transpose() + sigma * sigma * id;
    const double generic = double(n) * kl_gaussian_generic(VectorXd::Zero(p), ci, VectorXd::Zero(p), cj);
    const double closed = kl_spiked_wishart(ui, uj, t, sigma, n);
    worst = std::max(worst, std::abs(closed - generic) / std::max(std::abs(generic), 1e-300));
  }
  return {worst <= kRelTol, fmt("max relative gap = %.2e", worst)};
}

// 4. Sign and non-negative projections against brute force.
Outcome projection_optimality() {
  Rng rng(404);
  int sign_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Index n = between(rng, 1, 12);
    const MatrixXd u = rng.gaussian(n, 1);
    const Frame proj = project(ConstraintSet::sign_vectors(n), u);
    const VectorXd best = oracle::sign_argmin(u.col(0));
    sign_mismatch += subspace_distance(proj.matrix(), MatrixXd(best)) > 1e-12;
  }
  int beaten = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Index p = between(rng, 2, 6);
    const auto set = ConstraintSet::non_negative(p, 1);
    MatrixXd u = rng.gaussian(p, 1);
    u /= u.norm();
    const double d = oracle::projector_distance(u, project(set, u).matrix());
    for (int c = 0; c < 100000; ++c) {
      MatrixXd g = rng.gaussian(p, 1).cwiseAbs();
      g /= g.norm();
      if (oracle::projector_distance(u, g) < d - 1e-12) {
        ++beaten;
        break;
      }
    }
  }
  return {sign_mismatch == 0 && beaten == 0,
          fmt("sign mismatches %d/100, non-negative trials beaten %d/20", sign_mismatch, beaten)};
}

// 5. Clustering: iterative projection agrees with exhaustive search.
Outcome clustering_agreement() {
  ModelSpec m;
  m.family = ModelFamily::Clustering;
  m.n = 10;
  m.p = 30;
  m.noise_sd = 1.0;
  m.spectrum = SpectrumSpec<double>::flat(1, clustering_snr(20.0, 1.0, 10, 30));
  m.seed = 505;
  const OracleSummary s = clustering_oracle(m, EstimatorConfig{}, 200);
  const double ratio = double(s.agree_count) / s.trials;
  return {ratio >= 0.95, fmt("agreement %d/%d = %.3f (need >= 0.95)", s.agree_count, s.trials, ratio)};
}

// 6. Two regimes of the non-negative SVD risk in t.
Outcome phase_transition() {
  ModelSpec m;
  m.family = ModelFamily::Denoising;
  m.p1 = 200;
  m.p2 = 400;
  m.noise_sd = 1.0;
  m.spectrum = SpectrumSpec<double>::flat(1, 1.0);
  m.seed = 606;
  std::vector<Knobs> grid;
  for (int i = 0; i < 12; ++i) grid.push_back(Knobs{.t = 2.0 * std::pow(1000.0, i / 11.0)});
  const auto rows = sweep(grid, m, ConstraintSet::non_negative(200, 1), EstimatorConfig{}, 200);
  std::string risks;
  for (const auto& row : rows) risks += fmt("%.3g ", row.risk.mean_distance);
  const PhaseTransition pt = detect_phase_transition(rows);
  const double ratio = pt.t_break / std::sqrt(400.0);
  const bool ok = pt.slope_high >= -1.3 && pt.slope_high <= -0.7 && pt.slope_low >= -2.4 && pt.slope_low <= -1.6 &&
                  ratio >= 1.0 / 3.0 && ratio <= 3.0;
  return {ok, fmt("slope_low %.3f (need [-2.4,-1.6]), slope_high %.3f (need [-1.3,-0.7]), t_break %.3g "
                  "(need within x3 of 20); risks: %s",
                  pt.slope_low, pt.slope_high, pt.t_break, risks.c_str())};
}

// 7. Sparse SVD risk against the sparsity complexity.
Outcome sparse_rate() {
  ModelSpec m;
  m.family = ModelFamily::Denoising;
  m.p1 = 200;
  m.p2 = 100;
  m.noise_sd = 1.0;
  m.spectrum = SpectrumSpec<double>::flat(1, 60.0);
  m.seed = 707;
  std::vector<Knobs> grid;
  for (Index k : {5, 10, 20, 40}) grid.push_back(Knobs{.k = k});
  const auto rows = sweep(grid, m, ConstraintSet::sparse(200, 1, 5), EstimatorConfig{}, 300);
  std::vector<double> xs, ys;
  for (const auto& row : rows) {
    const double k = double(row.k);
    xs.push_back(std::sqrt(k * std::log(std::numbers::e * 200.0 / k)) + std::sqrt(k));
    ys.push_back(row.risk.mean_distance);
  }
  const RateFit fit = fit_rate(xs, ys);
  return {std::abs(fit.slope - 1.0) <= 0.25,
          fmt("slope %.3f (need 1.00 +- 0.25), risks %.4f %.4f %.4f %.4f", fit.slope, ys[0], ys[1], ys[2], ys[3])};
}

// 8. Clustering risk below and above the consistency threshold.
Outcome consistency_limit() {
  ModelSpec m;
  m.family = ModelFamily::Clustering;
  m.n = 64;
  m.p = 256;
  m.noise_sd = 1.0;
  m.seed = 808;
  const auto set = ConstraintSet::sign_vectors(64);
  m.spectrum = SpectrumSpec<double>::flat(1, clustering_snr(0.1, 1.0, 64, 256));
  const RiskEstimate weak = monte_carlo_risk(m, set, EstimatorConfig{}, 200);
  m.spectrum = SpectrumSpec<double>::flat(1, clustering_snr(20.0, 1.0, 64, 256));
  const RiskEstimate strong = monte_carlo_risk(m, set, EstimatorConfig{}, 200);
  const double ratio = weak.mean_distance / std::max(strong.mean_distance, 1e-300);
  return {weak.mean_distance >= 5.0 * strong.mean_distance,
          fmt("risk %.4f vs %.4f, ratio %.3g (need >= 5)", weak.mean_distance, strong.mean_distance, ratio)};
}

// 9. Empirical entropy ratios and codebook contracts.
Outcome entropy_scaling() {
  constexpr std::size_t kBudget = 3000;
  const auto grid = default_epsilon_grid();
  auto delta2 = [&](const ConstraintSet& set, std::uint64_t seed) {
    const double v = dudley_estimate(set, random_member(set, derive_seed(seed, 0)), grid, kBudget,
                                     derive_seed(seed, 1)).dudley_value;
    return v * v;
  };
  auto within2 = [](double observed, double predicted) {
    return observed >= predicted / 2.0 && observed <= predicted * 2.0;
  };

  const double sparse_ratio = delta2(ConstraintSet::sparse(128, 1, 16), 91) / delta2(ConstraintSet::sparse(128, 1, 4), 92);
  const double sparse_pred = (16.0 * std::log(128.0 * std::numbers::e / 16.0)) / (4.0 * std::log(128.0 * std::numbers::e / 4.0));
  const double nn_ratio = delta2(ConstraintSet::non_negative(128, 1), 93) / delta2(ConstraintSet::non_negative(32, 1), 94);
  Rng rng(95);
  const Frame q16(oracle::random_frame(64, 16, rng));
  const Frame q4(oracle::random_frame(64, 4, rng));
  const double sub_ratio = delta2(ConstraintSet::subspace(q16, 1), 96) / delta2(ConstraintSet::subspace(q4, 1), 97);

  bool codes = true;
  for (auto [n, d] : {std::pair<Index, Index>{16, 4}, {32, 8}}) {
    const auto code = vg_codebook(n, d, 1'000'000, 98);
    codes = codes && code.size() >= vg_size_bound(n, double(d));
    for (std::size_t i = 0; i < code.size(); ++i) {
      codes = codes && std::count(code[i].begin(), code[i].end(), 1) == d;
      for (std::size_t j = i + 1; j < code.size(); ++j) {
        int ham = 0;
        for (Index b = 0; b < n; ++b) ham += code[i][b] != code[j][b];
        codes = codes && 2 * ham >= d;
      }
    }
  }
  const bool ok = within2(sparse_ratio, sparse_pred) && within2(nn_ratio, 4.0) && within2(sub_ratio, 4.0) && codes;
  return {ok, fmt("sparse %.3f (pred %.3f), non-negative %.3f (pred 4), subspace %.3f (pred 4), codebooks %s",
                  sparse_ratio, sparse_pred, nn_ratio, sub_ratio, codes ? "ok" : "FAILED")};
}

// 10. Packing constructions at the default parameters.
Outcome packing_invariants() {
  std::vector<std::pair<std::string, PackingSet>> sets;
  sets.emplace_back("sparse(64,1,8,0.5)", sparse_packing_construction(64, 1, 8, 0.5, 1001));
  sets.emplace_back("nonneg(64,1,0.5)", non_negative_packing_construction(64, 1, 0.5, 1002));
  sets.emplace_back("signs(16,4)", sign_packing_construction(16, 4, 1003));
  sets.emplace_back("signs(32,8)", sign_packing_construction(32, 8, 1004));
  sets.emplace_back("local(6,1,0.5,0.5)", greedy_local_packing(ConstraintSet::unconstrained(6, 1),
                                                               Frame::canonical(6, 1), 0.5, 0.5, 5000, 1005));
  int failures = 0;
  std::string sizes;
  for (const auto& [name, set] : sets) {
    failures += !set.satisfies_invariants();
    sizes += fmt("%s:%zu ", name.c_str(), set.members.size());
  }
  return {failures == 0, fmt("%d failing sets; sizes %s", failures, sizes.c_str())};
}

// 11. Repeated CLI commands produce identical files.
int run_cli(const std::string& args) {
  const std::string cmd = std::string(SUBSPACE_EST_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "subspace_est_acceptance";
  fs::remove_all(root);
  const fs::path sim = root / "sim";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"simulate", "simulate --family wishart --p 20 --n 50 --r 2 --t 3 --constraint sparse:k=5 --seed 11"},
      {"estimate", "estimate --in " + sim.string() + " --seed 12"},
      {"risk", "risk --p1 30 --p2 20 --constraint nonneg --trials 40 --seed 13"},
      {"sweep", "sweep --p1 20 --p2 15 --constraint nonneg --trials 10 --t_logspace 1,1000,8 --fit true --seed 14"},
      {"entropy", "entropy --p 16 --constraint sparse:k=3 --budget 300 --seed 15"},
      {"oracle", "oracle --trials 20 --seed 16"},
      {"packing", "packing --kind sparse --seed 17"},
  };
  if (run_cli(commands[0].second + " --out " + sim.string()) != 0) return {false, "simulate setup failed"};
  int mismatches = 0, files = 0;
  std::string failed;
  for (const auto& [name, args] : commands) {
    // Both runs write to the same directory so that the resolved settings are
    // identical; the first output is set aside in between. The second run
    // uses a single worker, so thread scheduling cannot leak into outputs.
    const fs::path a = root / name, b = root / (name + "_first");
    const bool first_ok = run_cli(args + " --out " + a.string()) == 0;
    if (first_ok) fs::rename(a, b);
    if (!first_ok || run_cli(args + " --threads 1 --out " + a.string()) != 0) {
      failed += name + " ";
      ++mismatches;
      continue;
    }
    for (const auto& entry : fs::directory_iterator(a)) {
      ++files;
      const fs::path other = b / entry.path().filename();
      if (!fs::exists(other) || io::read_text(entry.path()) != io::read_text(other)) {
        ++mismatches;
        failed += entry.path().filename().string() + " ";
      }
    }
  }
  fs::remove_all(root);
  return {mismatches == 0, fmt("%d files compared over %zu commands, %d mismatches %s", files, commands.size(),
                               mismatches, failed.c_str())};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "geometry identities", 10, geometry_identities},
      {2, "quadratic-form sandwiches", 10, quadratic_sandwiches},
      {3, "KL oracle equivalence", 5, kl_equivalence},
      {4, "projection optimality", 60, projection_optimality},
      {5, "clustering oracle agreement", 60, clustering_agreement},
      {6, "non-negative SVD phase transition", 600, phase_transition},
      {7, "sparse SVD rate shape", 600, sparse_rate},
      {8, "clustering consistency limit", 300, consistency_limit},
      {9, "entropy scaling", 300, entropy_scaling},
      {10, "packing constructions", 60, packing_invariants},
      {11, "CLI determinism", 300, cli_determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_seconds;
    const bool pass = out.pass && in_time;
    failed += !pass;
    std::printf("%s #%d %s: %s; %.1f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", c.id, c.name, out.detail.c_str(),
                secs, c.limit_seconds, in_time ? "" : " OVER TIME");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
