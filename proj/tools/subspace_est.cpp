// Command-line front end: simulate, estimate, risk, sweep, entropy, oracle and
// packing. Every command resolves its settings from defaults, an optional
// key=value config file and flags (flags win), and writes the resolved
// settings next to its outputs.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "subest/entropy.hpp"
#include "subest/estimators.hpp"
#include "subest/harness.hpp"
#include "subest/io.hpp"

#ifndef SUBSPACE_EST_VERSION
#define SUBSPACE_EST_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace subest;
using Eigen::Index;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

struct Key {
  std::string name;
  std::string fallback;  // empty: no default
  std::string help;
};

const std::vector<Key> kModelKeys = {
    {"family", "denoising", "denoising | wishart | wigner | clustering"},
    {"p1", "40", "rows of the denoising signal"},
    {"p2", "30", "columns of the denoising signal"},
    {"n", "100", "samples (wishart) or points (clustering)"},
    {"p", "40", "dimension (wishart, wigner, clustering)"},
    {"r", "1", "rank"},
    {"t", "5", "signal strength of the flat spectrum"},
    {"sigma", "1", "noise standard deviation"},
    {"constraint", "", "none | sparse:k=N | nonneg | signs | subspace:qfile=PATH"},
};

const std::vector<Key> kEstimatorKeys = {
    {"method", "iterative", "iterative | exhaustive | spectral"},
    {"max_iter", "200", "iteration cap"},
    {"tol", "1e-8", "stopping tolerance on successive iterates"},
    {"init", "spectral", "spectral | random"},
};

std::vector<Key> join(std::initializer_list<std::vector<Key>> parts) {
  std::vector<Key> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// Config keys use underscores; the flag is dashed, with the underscore
// spelling kept as an alias.
std::string flag_of(const std::string& key) {
  std::string f = "--" + key;
  for (char& c : f)
    if (c == '_') c = '-';
  return key.find('_') == std::string::npos ? f : f + ",--" + key;
}

/// Settings of one command: registered keys, flag values and the merge with a
/// config file.
class Settings {
 public:
  Settings(CLI::App* cmd, std::vector<Key> keys) : keys_(std::move(keys)) {
    keys_.push_back({"seed", "0", "master seed"});
    keys_.push_back({"out", "", "output directory"});
    for (const Key& k : keys_) {
      cmd->add_option(flag_of(k.name), flags_[k.name], k.help)->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    }
    cmd->add_option("--config", config_path_, "key=value settings file; flags override it");
    cmd->add_option("--threads", threads_, "worker cap (default: SUBSPACE_EST_THREADS or all cores)");
  }

  void resolve() {
    for (const Key& k : keys_)
      if (!k.fallback.empty()) values_[k.name] = k.fallback;
    if (config_path_) {
      for (const auto& [key, value] : io::parse_key_values(io::read_text(*config_path_))) {
        const bool known = std::any_of(keys_.begin(), keys_.end(), [&](const Key& k) { return k.name == key; });
        require(known, ErrorKind::InvalidArgument, "unknown config key '" + key + "'");
        values_[key] = value;
      }
    }
    for (const auto& [key, value] : flags_)
      if (value) values_[key] = *value;
    require(has("out"), ErrorKind::InvalidArgument, "--out is required");
  }

  bool has(const std::string& key) const { return values_.count(key) && !values_.at(key).empty(); }
  void set(const std::string& key, std::string value) { values_[key] = std::move(value); }
  void set_default(const std::string& key, std::string value) {
    if (!has(key)) values_[key] = std::move(value);
  }

  std::string str(const std::string& key) const {
    require(has(key), ErrorKind::InvalidArgument, "missing setting '" + key + "'");
    return values_.at(key);
  }
  long long integer(const std::string& key) const { return parse_int(key, str(key)); }
  double real(const std::string& key) const { return parse_real(key, str(key)); }
  std::uint64_t seed() const {
    const std::string s = str("seed");
    try {
      std::size_t used = 0;
      const auto v = std::stoull(s, &used);
      if (used == s.size() && s.find('-') == std::string::npos) return v;
    } catch (const std::logic_error&) {
    }
    throw Error(ErrorKind::InvalidArgument, "seed must be a non-negative integer, got '" + s + "'");
  }
  bool boolean(const std::string& key) const {
    const std::string s = str(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw Error(ErrorKind::InvalidArgument, key + " must be true or false");
  }
  std::vector<double> reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& item : items(key)) out.push_back(parse_real(key, item));
    return out;
  }
  std::vector<long long> integers(const std::string& key) const {
    std::vector<long long> out;
    for (const auto& item : items(key)) out.push_back(parse_int(key, item));
    return out;
  }

  fs::path out_dir() const { return fs::path(str("out")); }

  unsigned threads() const {
    if (threads_) return *threads_;
    if (const char* env = std::getenv("SUBSPACE_EST_THREADS")) return unsigned(parse_int("SUBSPACE_EST_THREADS", env));
    return 0;
  }

  /// Resolved settings in registration order.
  std::string resolved_text() const {
    std::string out;
    for (const Key& k : keys_)
      if (has(k.name)) out += k.name + "=" + values_.at(k.name) + "\n";
    return out;
  }

  void persist(const std::string& command) const {
    fs::create_directories(out_dir());
    io::write_text(out_dir() / ("resolved_" + command + ".txt"), resolved_text());
  }

 private:
  std::vector<std::string> items(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream in(str(key));
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(item);
    require(!out.empty(), ErrorKind::InvalidArgument, key + " is an empty list");
    return out;
  }
  static long long parse_int(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(s, &used);
      if (used == s.size()) return v;
    } catch (const std::logic_error&) {
    }
    throw Error(ErrorKind::InvalidArgument, key + " must be an integer, got '" + s + "'");
  }
  static double parse_real(const std::string& key, const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size() && std::isfinite(v)) return v;
    } catch (const std::logic_error&) {
    }
    throw Error(ErrorKind::InvalidArgument, key + " must be a number, got '" + s + "'");
  }

  std::vector<Key> keys_;
  std::map<std::string, std::optional<std::string>> flags_;
  std::map<std::string, std::string> values_;
  std::optional<std::string> config_path_;
  std::optional<unsigned> threads_;
};

void write_json(const fs::path& path, const json& j) { io::write_text(path, j.dump(2) + "\n"); }

ModelSpec model_from(Settings& s) {
  ModelSpec m;
  m.family = parse_family(s.str("family"));
  m.p1 = s.integer("p1");
  m.p2 = s.integer("p2");
  m.n = s.integer("n");
  m.p = s.integer("p");
  const Index r = s.integer("r");
  require(r >= 1, ErrorKind::InvalidArgument, "r must be positive");
  m.spectrum = SpectrumSpec<double>::flat(r, s.real("t"));
  m.noise_sd = s.real("sigma");
  m.seed = s.seed();
  s.set_default("constraint", m.family == ModelFamily::Clustering ? "signs" : "none");
  m.validate();
  return m;
}

EstimatorConfig estimator_from(const Settings& s) {
  EstimatorConfig cfg;
  cfg.method = parse_method(s.str("method"));
  cfg.max_iter = int(s.integer("max_iter"));
  cfg.tol = s.real("tol");
  const std::string init = s.str("init");
  require(init == "spectral" || init == "random", ErrorKind::InvalidArgument,
          "init must be spectral or random");
  cfg.init = init == "spectral" ? InitKind::Spectral : InitKind::Random;
  cfg.seed = derive_seed(s.seed(), 7);
  return cfg;
}

int run_simulate(Settings& s) {
  const ModelSpec model = model_from(s);
  const ConstraintSet set = parse_constraint(s.str("constraint"), model.ambient_dim(), model.rank());
  const SampledInstance inst = sample_instance(model, set);
  s.persist("simulate");
  const fs::path out = s.out_dir();
  io::write_matrix_csv(out / "Y.csv", inst.observation);
  io::write_matrix_csv(out / "U_truth.csv", inst.truth_left.matrix());
  io::write_matrix_csv(out / "spectrum.csv", inst.truth_spectrum.values());
  if (inst.truth_right) io::write_matrix_csv(out / "V_truth.csv", inst.truth_right->matrix());
  if (inst.labels.size() > 0) io::write_matrix_csv(out / "labels.csv", inst.labels);
  return 0;
}

int run_estimate(Settings& s) {
  const fs::path in(s.str("in"));
  const fs::path sim_config = in / "resolved_simulate.txt";
  std::map<std::string, std::string> sim;
  if (fs::exists(sim_config)) sim = io::parse_key_values(io::read_text(sim_config));
  for (const char* key : {"family", "r", "constraint"}) {
    if (!s.has(key) && sim.count(key)) s.set(key, sim.at(key));
  }
  s.set_default("family", "denoising");
  s.set_default("r", "1");
  s.set_default("constraint", "none");

  const ModelFamily family = parse_family(s.str("family"));
  const Index r = s.integer("r");
  const Eigen::MatrixXd y = io::read_matrix_csv(in / "Y.csv");
  const Index dim = family == ModelFamily::Wishart ? y.cols() : y.rows();
  const ConstraintSet set = parse_constraint(s.str("constraint"), dim, r);
  const EstimatorConfig cfg = estimator_from(s);

  std::optional<Frame> truth;
  if (fs::exists(in / "U_truth.csv")) truth = Frame(io::read_matrix_csv(in / "U_truth.csv"), 1e-8);
  SampledInstance inst{family, y, truth ? *truth : Frame::canonical(dim, r), std::nullopt,
                       SpectrumSpec<double>::flat(r, 1.0), Eigen::VectorXd()};
  const Estimate est = estimate(inst, set, cfg);

  s.persist("estimate");
  io::write_matrix_csv(s.out_dir() / "U_hat.csv", est.frame.matrix());
  json report = {{"objective", est.objective}, {"iterations", est.iterations}, {"converged", est.converged}};
  if (truth) report["d_to_truth"] = subspace_distance(est.frame, *truth);
  write_json(s.out_dir() / "report.json", report);
  return 0;
}

int run_risk(Settings& s) {
  const ModelSpec model = model_from(s);
  const ConstraintSet set = parse_constraint(s.str("constraint"), model.ambient_dim(), model.rank());
  const EstimatorConfig cfg = estimator_from(s);
  const RiskEstimate risk = monte_carlo_risk(model, set, cfg, int(s.integer("trials")), s.threads());
  s.persist("risk");
  write_json(s.out_dir() / "risk.json", {{"mean_distance", risk.mean_distance},
                                          {"stderr", risk.std_error},
                                          {"trials", risk.trials},
                                          {"spec_digest", risk.spec_digest},
                                          {"seed", risk.seed}});
  return 0;
}

int run_sweep(Settings& s) {
  const ModelSpec base = model_from(s);
  const ConstraintSet set = parse_constraint(s.str("constraint"), base.ambient_dim(), base.rank());
  const EstimatorConfig cfg = estimator_from(s);

  std::vector<double> ts;
  require(!(s.has("t_grid") && s.has("t_logspace")), ErrorKind::InvalidArgument,
          "give either t_grid or t_logspace");
  if (s.has("t_grid")) ts = s.reals("t_grid");
  if (s.has("t_logspace")) {
    const auto spec = s.reals("t_logspace");
    require(spec.size() == 3 && spec[0] > 0 && spec[1] > spec[0] && spec[2] >= 2 && spec[2] == std::floor(spec[2]),
            ErrorKind::InvalidArgument, "t_logspace is lo,hi,count with 0 < lo < hi and count >= 2");
    const int count = int(spec[2]);
    for (int i = 0; i < count; ++i) ts.push_back(spec[0] * std::pow(spec[1] / spec[0], double(i) / (count - 1)));
  }

  // Cartesian product; the last listed knob varies fastest.
  std::vector<Knobs> grid{Knobs{}};
  auto expand = [&grid](const auto& values, auto assign) {
    std::vector<Knobs> next;
    for (const Knobs& g : grid)
      for (const auto& v : values) {
        Knobs k = g;
        assign(k, v);
        next.push_back(k);
      }
    grid = std::move(next);
  };
  const std::vector<std::pair<const char*, std::optional<Index> Knobs::*>> index_knobs = {
      {"p1_grid", &Knobs::p1}, {"p2_grid", &Knobs::p2}, {"n_grid", &Knobs::n},
      {"p_grid", &Knobs::p},   {"r_grid", &Knobs::r},   {"k_grid", &Knobs::k}};
  for (const auto& [key, member] : index_knobs)
    if (s.has(key)) expand(s.integers(key), [member = member](Knobs& k, long long v) { k.*member = Index(v); });
  if (s.has("sigma_grid")) expand(s.reals("sigma_grid"), [](Knobs& k, double v) { k.sigma = v; });
  if (!ts.empty()) expand(ts, [](Knobs& k, double v) { k.t = v; });

  const bool fit = s.boolean("fit");
  const std::vector<SweepRow> rows = sweep(grid, base, set, cfg, int(s.integer("trials")), s.threads());
  std::optional<PhaseTransition> pt;
  if (fit) {
    require(grid.size() == ts.size(), ErrorKind::InvalidArgument, "fit needs a sweep over t alone");
    pt = detect_phase_transition(rows);
  }
  s.persist("sweep");
  io::write_text(s.out_dir() / "sweep.csv", format_sweep_csv(rows));
  if (pt) {
    write_json(s.out_dir() / "fit.json", {{"slope_low", pt->slope_low},
                                           {"slope_high", pt->slope_high},
                                           {"t_break", pt->t_break},
                                           {"r_squared_low", pt->r_squared_low},
                                           {"r_squared_high", pt->r_squared_high}});
  }
  return 0;
}

int run_entropy(Settings& s) {
  const Index p = s.integer("p");
  const Index r = s.integer("r");
  const ConstraintSet set = parse_constraint(s.str("constraint"), p, r);
  const std::vector<double> grid = s.has("epsilons") ? s.reals("epsilons") : default_epsilon_grid();
  const std::uint64_t seed = s.seed();
  const Frame center = random_member(set, derive_seed(seed, 0));
  const EntropyEstimate est = dudley_estimate(set, center, grid, std::size_t(s.integer("budget")), derive_seed(seed, 1));
  s.persist("entropy");
  write_json(s.out_dir() / "entropy.json", {{"epsilons", est.epsilons},
                                             {"log_cover", est.log_covering},
                                             {"dudley", est.dudley_value},
                                             {"dudley_prime", est.dudley_prime},
                                             {"budget", est.budget}});
  return 0;
}

int run_oracle(Settings& s) {
  ModelSpec model;
  model.family = ModelFamily::Clustering;
  model.n = s.integer("n");
  model.p = s.integer("p");
  model.noise_sd = s.real("sigma");
  model.seed = s.seed();
  s.set_default("t", io::format_double(clustering_snr(20.0, model.noise_sd, model.n, model.p)));
  model.spectrum = SpectrumSpec<double>::flat(1, s.real("t"));
  EstimatorConfig cfg;
  cfg.max_iter = int(s.integer("max_iter"));
  cfg.tol = s.real("tol");
  const OracleSummary summary = clustering_oracle(model, cfg, int(s.integer("trials")));
  s.persist("oracle");
  write_json(s.out_dir() / "oracle.json", {{"trials", summary.trials},
                                            {"agree_count", summary.agree_count},
                                            {"mean_d_gap", summary.mean_d_gap}});
  return 0;
}

int run_packing(Settings& s) {
  const std::string kind = s.str("kind");
  const std::uint64_t seed = s.seed();
  auto build = [&]() -> PackingSet {
    if (kind == "sparse")
      return sparse_packing_construction(s.integer("p1"), s.integer("r"), s.integer("k"), s.real("epsilon"), seed);
    if (kind == "nonneg") return non_negative_packing_construction(s.integer("p1"), s.integer("r"), s.real("epsilon"), seed);
    if (kind == "signs") return sign_packing_construction(s.integer("n"), s.integer("d"), seed);
    throw Error(ErrorKind::InvalidArgument, "kind must be sparse, nonneg or signs");
  };
  const PackingSet set = build();
  s.persist("packing");
  const fs::path out = s.out_dir();
  io::write_matrix_csv(out / "center.csv", set.center.matrix());
  json files = json::array();
  for (std::size_t i = 0; i < set.members.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "member_%05zu.csv", i);
    io::write_matrix_csv(out / name, set.members[i].matrix());
    files.push_back(name);
  }
  const double min_pair = set.min_pairwise_distance();
  write_json(out / "manifest.json", {{"kind", kind},
                                      {"center", "center.csv"},
                                      {"epsilon", set.radius},
                                      {"separation", set.separation},
                                      {"alpha", set.alpha},
                                      {"count", set.members.size()},
                                      {"min_pairwise_distance", std::isfinite(min_pair) ? json(min_pair) : json()},
                                      {"max_center_distance", set.max_center_distance()},
                                      {"members", files}});
  return 0;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return kExitIo;
    case ErrorKind::RankDeficient:
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::DegenerateInput:
    case ErrorKind::BudgetExhausted: return kExitNumerical;
    default: return kExitUsage;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured principal subspace estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("subspace_est ") + SUBSPACE_EST_VERSION);

  struct Command {
    CLI::App* app;
    std::unique_ptr<Settings> settings;
    int (*run)(Settings&);
  };
  std::vector<Command> commands;
  auto add = [&](const char* name, const char* help, std::vector<Key> keys, int (*run)(Settings&)) {
    CLI::App* cmd = app.add_subcommand(name, help);
    commands.push_back({cmd, std::make_unique<Settings>(cmd, std::move(keys)), run});
  };

  add("simulate", "sample one instance of a model", kModelKeys, run_simulate);
  add("estimate", "estimate the principal subspace of a simulated or user instance",
      join({{{"in", "", "input directory holding Y.csv"},
             {"family", "", "model family (default: from the input directory)"},
             {"r", "", "rank (default: from the input directory)"},
             {"constraint", "", "constraint (default: from the input directory)"}},
            kEstimatorKeys}),
      run_estimate);
  add("risk", "Monte Carlo risk of an estimator",
      join({kModelKeys, kEstimatorKeys, {{"trials", "100", "Monte Carlo trials"}}}), run_risk);
  add("sweep", "Monte Carlo risk over a grid of settings",
      join({kModelKeys, kEstimatorKeys,
            {{"trials", "100", "Monte Carlo trials per row"},
             {"t_grid", "", "comma list of t"},
             {"t_logspace", "", "lo,hi,count geometric t grid"},
             {"sigma_grid", "", "comma list of sigma"},
             {"p1_grid", "", "comma list of p1"},
             {"p2_grid", "", "comma list of p2"},
             {"n_grid", "", "comma list of n"},
             {"p_grid", "", "comma list of p"},
             {"r_grid", "", "comma list of r"},
             {"k_grid", "", "comma list of sparsity levels"},
             {"fit", "false", "two-segment fit of risk against t"}}}),
      run_sweep);
  add("entropy", "empirical entropy integrals of a constraint set",
      {{"p", "32", "dimension"},
       {"r", "1", "rank"},
       {"constraint", "none", "constraint"},
       {"budget", "1000", "sampled members"},
       {"epsilons", "", "comma list of radii (default: 24 points in [0.01, sqrt 2])"}},
      run_entropy);
  add("oracle", "iterative projection against exhaustive search on clustering instances",
      {{"n", "10", "points"},
       {"p", "30", "dimension"},
       {"sigma", "1", "noise standard deviation"},
       {"t", "", "signal strength (default: t^2 = 20 sigma^2 (sqrt(pn) + n))"},
       {"trials", "200", "instances"},
       {"max_iter", "200", "iteration cap"},
       {"tol", "1e-8", "stopping tolerance"}},
      run_oracle);
  add("packing", "export an explicit local packing set",
      {{"kind", "sparse", "sparse | nonneg | signs"},
       {"p1", "64", "rows (sparse, nonneg)"},
       {"r", "1", "rank (sparse, nonneg)"},
       {"k", "8", "sparsity (sparse)"},
       {"epsilon", "0.5", "radius parameter (sparse, nonneg)"},
       {"n", "32", "length (signs)"},
       {"d", "8", "codeword weight (signs)"}},
      run_packing);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  for (auto& c : commands) {
    if (!c.app->parsed()) continue;
    try {
      c.settings->resolve();
      return c.run(*c.settings);
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return exit_code(e.kind());
    } catch (const fs::filesystem_error& e) {
      std::cerr << "error (Io): " << e.what() << "\n";
      return kExitIo;
    }
  }
  return kExitUsage;
}
