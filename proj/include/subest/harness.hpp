#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "subest/constraints.hpp"
#include "subest/estimators.hpp"
#include "subest/models.hpp"

namespace subest {

struct RiskEstimate {
  double mean_distance = 0;
  double std_error = 0;  // sample sd / √trials
  int trials = 0;
  std::string spec_digest;  // 16 hex digits identifying (model, constraint, config)
  std::uint64_t seed = 0;
};

/// FNV-1a digest over the canonical text of the model, the constraint and the
/// estimator configuration.
std::string spec_digest(const ModelSpec& model, const ConstraintSet& set, const EstimatorConfig& cfg);

/// One Monte Carlo trial: the instance is sampled with seed
/// derive_seed(model.seed, trial_index) and the estimator seed is derived from
/// that too. Returns d(Û, U); throws if the loss exceeds √(2r).
double run_trial(const ModelSpec& model, const ConstraintSet& set, const EstimatorConfig& cfg,
                 int trial_index);

/// Losses of trials [0, trials), computed on up to `threads` workers
/// (0 = hardware concurrency) and returned in trial order.
std::vector<double> trial_losses(const ModelSpec& model, const ConstraintSet& set,
                                 const EstimatorConfig& cfg, int trials, unsigned threads = 0);

RiskEstimate monte_carlo_risk(const ModelSpec& model, const ConstraintSet& set,
                              const EstimatorConfig& cfg, int trials, unsigned threads = 0);

/// Overrides applied to the base model for one sweep row. `t` scales the flat
/// spectrum (its conditioning is kept); `k` rebuilds a sparse constraint.
struct Knobs {
  std::optional<double> t, sigma;
  std::optional<Eigen::Index> p1, p2, n, p, k, r;
};

struct SweepRow {
  ModelFamily family = ModelFamily::Denoising;
  Eigen::Index p1 = 0, p2 = 0, n = 0, p = 0, r = 0, k = 0;
  double t = 0, sigma = 0;
  RiskEstimate risk;
  double theory_rate = 0;
};

/// Constant-free minimax rate of the family and constraint, capped at 1.
/// `t` is the smallest spectrum value (λ_r).
double theory_rate(const ModelSpec& model, const ConstraintSet& set);

/// Effective sparsity k reported in sweep rows: k for sparse and subspace
/// sets, the ambient dimension otherwise.
Eigen::Index constraint_size(const ConstraintSet& set);

std::vector<SweepRow> sweep(const std::vector<Knobs>& grid, const ModelSpec& base,
                            const ConstraintSet& set, const EstimatorConfig& cfg, int trials,
                            unsigned threads = 0);

inline constexpr const char* kSweepHeader =
    "family,p1,p2,n,p,r,k,t,sigma,trials,seed,mean_d,stderr,theory_rate";

std::string format_sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& text);

struct RateFit {
  double slope = 0;
  double intercept = 0;
  double r_squared = 0;
  double slope_stderr = 0;
};

/// Ordinary least squares of ln y on ln x.
RateFit fit_rate(const std::vector<double>& xs, const std::vector<double>& ys);

struct PhaseTransition {
  double t_break = 0;
  double slope_low = 0;
  double slope_high = 0;
  double r_squared_low = 0;
  double r_squared_high = 0;
  std::size_t split = 0;  // rows [0, split) form the low segment
};

/// Two-segment log-log fit of mean_d against t. Every split between
/// consecutive rows with at least two rows per side is tried; the smallest
/// total squared residual wins (earliest split on ties) and t_break is the
/// geometric midpoint of the two rows around it.
PhaseTransition detect_phase_transition(const std::vector<double>& ts, const std::vector<double>& risks);
PhaseTransition detect_phase_transition(const std::vector<SweepRow>& rows);

struct OracleSummary {
  int trials = 0;
  int agree_count = 0;  // trials with d(iterative, exhaustive) <= 1e-9
  double mean_d_gap = 0;
};

/// Clustering instances with seeds derive_seed(model.seed, i): projected power
/// iteration (spectral start) against the exhaustive sign-vector argmax.
OracleSummary clustering_oracle(const ModelSpec& model, const EstimatorConfig& cfg, int trials);

/// t with t² = factor·σ²(√(pn) + n), the clustering SNR scale.
double clustering_snr(double factor, double sigma, Eigen::Index n, Eigen::Index p);

}  // namespace subest
