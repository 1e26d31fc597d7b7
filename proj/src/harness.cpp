#include "subest/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "subest/io.hpp"

namespace subest {

using Eigen::Index;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, v);
  return buf;
}

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

ConstraintSet reshape(const ConstraintSet& set, Index p, Index r, std::optional<Index> k) {
  return std::visit(
      [&](const auto& c) -> ConstraintSet {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, constraint::Sparse>) {
          return ConstraintSet::sparse(p, r, k.value_or(c.k));
        } else {
          require(!k.has_value(), ErrorKind::InvalidArgument,
                  "the k knob applies to sparse constraints only");
          if constexpr (std::is_same_v<T, constraint::Unconstrained>) {
            return ConstraintSet::unconstrained(p, r);
          } else if constexpr (std::is_same_v<T, constraint::NonNegative>) {
            return ConstraintSet::non_negative(p, r);
          } else if constexpr (std::is_same_v<T, constraint::SignVectors>) {
            require(r == 1, ErrorKind::InvalidArgument, "sign vectors are rank one");
            return ConstraintSet::sign_vectors(p);
          } else {
            require(p == set.rows(), ErrorKind::InvalidArgument,
                    "a subspace constraint cannot change dimension");
            return ConstraintSet::subspace(c.basis, r);
          }
        }
      },
      set.kind());
}

struct LineFit {
  double slope = 0, intercept = 0, r_squared = 0, slope_stderr = 0, ssr = 0;
};

LineFit ols(const std::vector<double>& x, const std::vector<double>& y, std::size_t lo, std::size_t hi) {
  const double n = double(hi - lo);
  double mx = 0, my = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0, scale = 0;
  for (std::size_t i = lo; i < hi; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
    scale += x[i] * x[i];
  }
  require(sxx > 1e-24 * std::max(1.0, scale), ErrorKind::DegenerateInput, "x values are constant");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  for (std::size_t i = lo; i < hi; ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    f.ssr += e * e;
  }
  f.r_squared = syy > 0 ? std::max(0.0, 1.0 - f.ssr / syy) : 1.0;
  f.slope_stderr = n > 2 ? std::sqrt(f.ssr / (n - 2) / sxx) : 0.0;
  return f;
}

std::vector<double> logs(const std::vector<double>& v, const char* what) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    require(v[i] > 0 && std::isfinite(v[i]), ErrorKind::DegenerateInput,
            std::string(what) + " values must be positive and finite");
    out[i] = std::log(v[i]);
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

}  // namespace

std::string spec_digest(const ModelSpec& model, const ConstraintSet& set, const EstimatorConfig& cfg) {
  std::ostringstream s;
  s << to_string(model.family) << '|' << model.p1 << '|' << model.p2 << '|' << model.n << '|'
    << model.p << '|' << io::format_double(model.noise_sd) << '|' << model.seed << '|';
  for (Index i = 0; i < model.spectrum.rank(); ++i) s << io::format_double(model.spectrum.values()(i)) << ',';
  s << '|';
  for (Index i = 0; i < model.mean.size(); ++i) s << io::format_double(model.mean(i)) << ',';
  s << '|' << set.describe() << '|' << set.rows() << '|' << set.rank();
  if (const auto* sub = std::get_if<constraint::Subspace>(&set.kind())) {
    for (Index j = 0; j < sub->basis.cols(); ++j)
      for (Index i = 0; i < sub->basis.rows(); ++i) s << io::format_double(sub->basis(i, j)) << ',';
  }
  s << '|' << to_string(cfg.method) << '|' << cfg.max_iter << '|' << io::format_double(cfg.tol) << '|'
    << static_cast<int>(cfg.init) << '|' << cfg.seed;
  return hex64(fnv1a(s.str()));
}

double run_trial(const ModelSpec& model, const ConstraintSet& set, const EstimatorConfig& cfg,
                 int trial_index) {
  require(trial_index >= 0, ErrorKind::InvalidArgument, "trial index must be non-negative");
  const std::uint64_t stream = derive_seed(model.seed, std::uint64_t(trial_index));
  ModelSpec trial_model = model;
  trial_model.seed = stream;
  EstimatorConfig trial_cfg = cfg;
  trial_cfg.seed = derive_seed(derive_seed(cfg.seed, std::uint64_t(trial_index)), 3);

  const SampledInstance instance = sample_instance(trial_model, set);
  const Estimate est = estimate(instance, set, trial_cfg);
  const double loss = subspace_distance(est.frame, instance.truth_left);
  const double bound = std::sqrt(2.0 * double(set.rank())) + 1e-9;
  if (!(loss <= bound))
    throw Error(ErrorKind::DegenerateInput, "loss " + io::format_double(loss) + " exceeds √(2r)");
  return loss;
}

std::vector<double> trial_losses(const ModelSpec& model, const ConstraintSet& set,
                                 const EstimatorConfig& cfg, int trials, unsigned threads) {
  require(trials >= 1, ErrorKind::InvalidArgument, "trials must be positive");
  std::vector<double> losses(static_cast<std::size_t>(trials));
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = std::min<unsigned>(workers, static_cast<unsigned>(trials));

  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (int i = next++; i < trials; i = next++) {
      try {
        losses[std::size_t(i)] = run_trial(model, set, cfg, i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = trials;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return losses;
}

RiskEstimate monte_carlo_risk(const ModelSpec& model, const ConstraintSet& set,
                              const EstimatorConfig& cfg, int trials, unsigned threads) {
  require(trials >= 2, ErrorKind::InvalidArgument, "monte_carlo_risk needs at least two trials");
  const std::vector<double> losses = trial_losses(model, set, cfg, trials, threads);
  double sum = 0;
  for (double l : losses) sum += l;
  const double mean = sum / trials;
  double ss = 0;
  for (double l : losses) ss += (l - mean) * (l - mean);
  const double sd = std::sqrt(ss / (trials - 1));
  return {mean, sd / std::sqrt(double(trials)), trials, spec_digest(model, set, cfg), model.seed};
}

Index constraint_size(const ConstraintSet& set) {
  if (const auto* s = std::get_if<constraint::Sparse>(&set.kind())) return s->k;
  if (const auto* s = std::get_if<constraint::Subspace>(&set.kind())) return s->basis.cols();
  return set.rows();
}

double theory_rate(const ModelSpec& model, const ConstraintSet& set) {
  const double p = double(set.rows());
  const double r = double(set.rank());
  const double k = double(constraint_size(set));
  const double sigma = model.noise_sd;
  const double s2 = sigma * sigma;
  const double t = model.spectrum.smallest();

  double root_zeta = std::sqrt(p * r);
  if (set.is<constraint::Sparse>()) {
    root_zeta = std::sqrt(k * std::log(std::numbers::e * p / k)) + std::sqrt(k);
  } else if (set.is<constraint::NonNegative>() || set.is<constraint::SignVectors>()) {
    root_zeta = std::sqrt(p);
  } else if (set.is<constraint::Subspace>()) {
    root_zeta = std::sqrt(k);
  }

  double rate = 1.0;
  switch (model.family) {
    case ModelFamily::Denoising:
      rate = sigma * std::sqrt(t * t + s2 * double(model.p2)) / (t * t) * root_zeta;
      break;
    case ModelFamily::Wishart:
      rate = sigma * std::sqrt(t + s2) / (t * std::sqrt(double(model.n))) * root_zeta;
      break;
    case ModelFamily::Wigner: rate = sigma * root_zeta / t; break;
    case ModelFamily::Clustering:
      rate = sigma * std::sqrt((t * t + s2 * double(model.p)) * double(model.n)) / (t * t);
      break;
  }
  return std::min(rate, 1.0);
}

std::vector<SweepRow> sweep(const std::vector<Knobs>& grid, const ModelSpec& base,
                            const ConstraintSet& set, const EstimatorConfig& cfg, int trials,
                            unsigned threads) {
  require(!grid.empty(), ErrorKind::InvalidArgument, "sweep grid is empty");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const Knobs& knobs : grid) {
    ModelSpec model = base;
    if (knobs.p1) model.p1 = *knobs.p1;
    if (knobs.p2) model.p2 = *knobs.p2;
    if (knobs.n) model.n = *knobs.n;
    if (knobs.p) model.p = *knobs.p;
    if (knobs.sigma) model.noise_sd = *knobs.sigma;
    if (knobs.r) {
      model.spectrum = SpectrumSpec<double>::flat(*knobs.r, knobs.t.value_or(model.spectrum.scale()),
                                                  model.spectrum.conditioning());
    } else if (knobs.t) {
      const double factor = *knobs.t / model.spectrum.scale();
      model.spectrum = SpectrumSpec<double>(model.spectrum.values() * factor, *knobs.t,
                                            model.spectrum.conditioning());
    }
    const ConstraintSet row_set = reshape(set, model.ambient_dim(), model.rank(), knobs.k);

    SweepRow row;
    row.family = model.family;
    row.p1 = model.p1;
    row.p2 = model.p2;
    row.n = model.n;
    row.p = model.p;
    row.r = model.rank();
    row.k = constraint_size(row_set);
    row.t = model.spectrum.scale();
    row.sigma = model.noise_sd;
    row.risk = monte_carlo_risk(model, row_set, cfg, trials, threads);
    row.theory_rate = theory_rate(model, row_set);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = std::string(kSweepHeader) + "\n";
  for (const SweepRow& r : rows) {
    out += std::string(to_string(r.family)) + ',' + std::to_string(r.p1) + ',' + std::to_string(r.p2) +
           ',' + std::to_string(r.n) + ',' + std::to_string(r.p) + ',' + std::to_string(r.r) + ',' +
           std::to_string(r.k) + ',' + io::format_double(r.t) + ',' + io::format_double(r.sigma) + ',' +
           std::to_string(r.risk.trials) + ',' + std::to_string(r.risk.seed) + ',' +
           io::format_double(r.risk.mean_distance) + ',' + io::format_double(r.risk.std_error) + ',' +
           io::format_double(r.theory_rate) + '\n';
  }
  return out;
}

std::vector<SweepRow> parse_sweep_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  require(std::getline(in, line) && line == kSweepHeader, ErrorKind::InvalidArgument,
          "sweep CSV header mismatch");
  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    require(f.size() == 14, ErrorKind::InvalidArgument, "sweep CSV row needs 14 fields: " + line);
    try {
      SweepRow r;
      r.family = parse_family(f[0]);
      r.p1 = std::stoll(f[1]);
      r.p2 = std::stoll(f[2]);
      r.n = std::stoll(f[3]);
      r.p = std::stoll(f[4]);
      r.r = std::stoll(f[5]);
      r.k = std::stoll(f[6]);
      r.t = std::stod(f[7]);
      r.sigma = std::stod(f[8]);
      r.risk.trials = std::stoi(f[9]);
      r.risk.seed = std::stoull(f[10]);
      r.risk.mean_distance = std::stod(f[11]);
      r.risk.std_error = std::stod(f[12]);
      r.theory_rate = std::stod(f[13]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::InvalidArgument, "malformed sweep CSV row: " + line);
    }
  }
  return rows;
}

RateFit fit_rate(const std::vector<double>& xs, const std::vector<double>& ys) {
  require(xs.size() == ys.size(), ErrorKind::DimensionMismatch, "fit_rate: xs and ys differ in length");
  require(xs.size() >= 3, ErrorKind::InvalidArgument, "fit_rate needs at least three points");
  const auto lx = logs(xs, "x");
  const auto ly = logs(ys, "y");
  const LineFit f = ols(lx, ly, 0, lx.size());
  return {f.slope, f.intercept, f.r_squared, f.slope_stderr};
}

PhaseTransition detect_phase_transition(const std::vector<double>& ts, const std::vector<double>& risks) {
  require(ts.size() == risks.size(), ErrorKind::DimensionMismatch, "t and risk lengths differ");
  require(ts.size() >= 8, ErrorKind::DegenerateInput, "phase detection needs at least 8 rows");
  for (std::size_t i = 1; i < ts.size(); ++i)
    require(ts[i] > ts[i - 1], ErrorKind::DegenerateInput, "rows must be sorted by increasing t");
  const auto lx = logs(ts, "t");
  const auto ly = logs(risks, "risk");
  require(lx.back() - lx.front() >= 2.0 * std::log(10.0) - 1e-12, ErrorKind::DegenerateInput,
          "t must span at least two decades");

  const std::size_t n = ts.size();
  PhaseTransition best;
  double best_ssr = std::numeric_limits<double>::infinity();
  for (std::size_t s = 2; s + 2 <= n; ++s) {
    const LineFit low = ols(lx, ly, 0, s);
    const LineFit high = ols(lx, ly, s, n);
    const double ssr = low.ssr + high.ssr;
    if (ssr < best_ssr) {
      best_ssr = ssr;
      best = {std::sqrt(ts[s - 1] * ts[s]), low.slope, high.slope, low.r_squared, high.r_squared, s};
    }
  }
  return best;
}

PhaseTransition detect_phase_transition(const std::vector<SweepRow>& rows) {
  std::vector<double> ts, risks;
  for (const auto& r : rows) {
    ts.push_back(r.t);
    risks.push_back(r.risk.mean_distance);
  }
  return detect_phase_transition(ts, risks);
}

OracleSummary clustering_oracle(const ModelSpec& model, const EstimatorConfig& cfg, int trials) {
  require(model.family == ModelFamily::Clustering, ErrorKind::InvalidArgument,
          "the oracle comparison runs on the clustering model");
  require(trials >= 1, ErrorKind::InvalidArgument, "trials must be positive");
  const ConstraintSet set = ConstraintSet::sign_vectors(model.n);
  EstimatorConfig iterative = cfg;
  iterative.method = EstimatorMethod::IterativeProjection;
  iterative.init = InitKind::Spectral;
  OracleSummary out{trials, 0, 0.0};
  double gap_sum = 0;
  for (int i = 0; i < trials; ++i) {
    ModelSpec trial = model;
    trial.seed = derive_seed(model.seed, std::uint64_t(i));
    const SampledInstance instance = sample_instance(trial, set);
    const Eigen::MatrixXd m = build_objective_matrix(instance, ModelFamily::Clustering);
    const Frame fast = iterative_projection_estimate(m, set, iterative).frame;
    const Frame exact = exhaustive_argmax(set, m);
    const double gap = subspace_distance(fast, exact);
    if (gap <= 1e-9) ++out.agree_count;
    gap_sum += gap;
  }
  out.mean_d_gap = gap_sum / trials;
  return out;
}

double clustering_snr(double factor, double sigma, Index n, Index p) {
  return std::sqrt(factor * sigma * sigma * (std::sqrt(double(p) * double(n)) + double(n)));
}

}  // namespace subest
