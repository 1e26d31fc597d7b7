#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "subest/constraints.hpp"
#include "subest/models.hpp"

namespace subest {

enum class EstimatorMethod { IterativeProjection, Exhaustive, Spectral };
enum class InitKind { Spectral, Provided, Random };

std::string_view to_string(EstimatorMethod method);
EstimatorMethod parse_method(std::string_view text);

struct EstimatorConfig {
  EstimatorMethod method = EstimatorMethod::IterativeProjection;
  int max_iter = 200;
  double tol = 1e-8;  // on d between successive iterates
  InitKind init = InitKind::Spectral;
  std::optional<Frame> initial_frame;  // InitKind::Provided
  std::uint64_t seed = 0;              // InitKind::Random and rank-collapse restarts
};

/// Largest size of a sign-vector set that exhaustive_argmax will enumerate.
inline constexpr Eigen::Index kExhaustiveMaxDim = 20;
/// Fresh random starts allowed when M·U loses column rank.
inline constexpr int kMaxRestarts = 5;

struct IterativeResult {
  Frame frame;                     // best visited iterate
  std::vector<double> trace_path;  // objective of every visited iterate
  int iterations = 0;
  bool converged = false;
  int restarts = 0;
};

struct Estimate {
  Frame frame;
  double objective = 0;
  int iterations = 0;
  bool converged = true;
};

/// YYᵀ for Denoising and Clustering, the sample covariance for Wishart, Y for
/// Wigner. The estimator is the constrained maximizer of tr(UᵀMU).
Eigen::MatrixXd build_objective_matrix(const SampledInstance& instance, ModelFamily family);

/// tr(UᵀMU).
double objective(const Eigen::MatrixXd& u, const Eigen::MatrixXd& m);
inline double objective(const Frame& u, const Eigen::MatrixXd& m) { return objective(u.matrix(), m); }

/// Projected orthogonal iteration: G = M·U, thin QR, project onto the set.
///
/// M is shifted by max(0, -λ_min(M))·I internally so that the power step
/// targets the algebraically largest eigenvalues; the shift leaves the
/// constrained argmax unchanged. The iterate with the largest objective is
/// returned.
IterativeResult iterative_projection_estimate(const Eigen::MatrixXd& m, const ConstraintSet& set,
                                              const EstimatorConfig& cfg);

/// Global maximizer of tr(UᵀMU) over sign vectors of length n <= 20, one
/// representative per ±u pair (first entry positive); ties go to the
/// lexicographically smallest sign pattern with + before -.
Frame exhaustive_argmax(const ConstraintSet& set, const Eigen::MatrixXd& m);

/// Eigenvectors of the r largest eigenvalues. Near-equal eigenvalues are
/// ordered by the position of the eigenvector's largest-magnitude entry, and
/// that entry is made positive.
Frame spectral_estimate(const Eigen::MatrixXd& m, Eigen::Index r);

Estimate estimate(const SampledInstance& instance, const ConstraintSet& set,
                  const EstimatorConfig& cfg);

}  // namespace subest
