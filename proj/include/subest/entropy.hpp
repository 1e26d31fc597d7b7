#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "subest/constraints.hpp"
#include "subest/geometry.hpp"

namespace subest {

/// Constant c in log M >= c·d·log(n/d) for constant-weight binary codes.
inline constexpr double kVarshamovGilbertConstant = 0.233;

using Codeword = std::vector<std::uint8_t>;

/// ceil(exp(c · weight · ln(n / weight))) with c = 0.233; `weight` may be
/// fractional.
std::size_t vg_size_bound(Eigen::Index n, double weight);

/// Randomized greedy constant-weight code: words of length n with exactly d
/// ones and pairwise Hamming distance >= d/2. Draws at most `attempts`
/// candidates and stops once `target` words (default vg_size_bound(n, d))
/// are accepted; throws BudgetExhausted otherwise.
std::vector<Codeword> vg_codebook(Eigen::Index n, Eigen::Index d, std::uint64_t attempts,
                                  std::uint64_t seed,
                                  std::optional<std::size_t> target = std::nullopt);

/// Local packing set around `center`: members within `radius` of the center,
/// pairwise separated by more than `separation` (= alpha · radius).
struct PackingSet {
  Frame center;
  double radius = 0;
  double separation = 0;
  double alpha = 0;
  std::vector<Frame> members;

  double max_center_distance() const;
  /// +infinity for fewer than two members.
  double min_pairwise_distance() const;
  /// Ball containment and pairwise separation, each with `slack`.
  bool satisfies_invariants(double slack = 1e-9) const;
};

/// Block-diagonal frames diag(v, I_{r-1}) padded with a zero row, where
/// v = (√(1-ε²), ε·ω/√w), ω a weight-w codeword of length p1-r-1 and
/// w = floor(k/e). An (ε/2)-packing of the √2·ε ball around diag(e₁, I_{r-1})
/// inside the k-sparse frames.
PackingSet sparse_packing_construction(Eigen::Index p1, Eigen::Index r, Eigen::Index k,
                                       double epsilon, std::uint64_t seed = 0);

/// The same block construction with weight floor((p1-r-1)/4); all members are
/// non-negative.
PackingSet non_negative_packing_construction(Eigen::Index p1, Eigen::Index r, double epsilon,
                                             std::uint64_t seed = 0);

/// Sign vectors (2ω - 1)/√n for ω in a weight-d code plus the zero word,
/// centered at -1/√n. Separation √(d/n), radius 2√2·√(d/n).
PackingSet sign_packing_construction(Eigen::Index n, Eigen::Index d, std::uint64_t seed = 0);

/// Greedy packing of the ball B(center, ε) ∩ C from `budget` random members:
/// a candidate inside the ball is admitted when it is farther than α·ε from
/// every admitted frame. The center is admitted first. The size is a lower
/// estimate of the local packing number.
PackingSet greedy_local_packing(const ConstraintSet& set, const Frame& center, double epsilon,
                                double alpha, std::uint64_t budget, std::uint64_t seed);

using FrameSampler = std::function<Frame(std::uint64_t)>;

/// A finite sample from a set together with all pairwise distances, used to
/// build greedy nets at several radii over one sample stream.
class SampleCloud {
 public:
  /// Sample i is sampler(derive_seed(seed, i)); distance is d.
  static SampleCloud frames(const FrameSampler& sampler, std::size_t budget, std::uint64_t seed);

  /// Elements (WWᵀ - UUᵀ)/‖WWᵀ - UUᵀ‖_F of the normalized difference set
  /// around `base`, with W drawn from the sampler (draws with d(W, U) < 1e-9
  /// are skipped); distance is the Frobenius distance.
  static SampleCloud directions(const FrameSampler& sampler, const Frame& base,
                                std::size_t budget, std::uint64_t seed);

  std::size_t size() const { return static_cast<std::size_t>(distances_.rows()); }
  double distance(std::size_t i, std::size_t j) const { return distances_(i, j); }

  /// Greedy ε-net in sample order: a point becomes a center iff it is at
  /// distance >= ε from all current centers. Returns the center count.
  std::size_t greedy_net(double epsilon) const;

  /// Greedy packing: admit iff the distance to every admitted point exceeds
  /// `separation`.
  std::size_t greedy_packing(double separation) const;

 private:
  explicit SampleCloud(Eigen::MatrixXd distances) : distances_(std::move(distances)) {}
  Eigen::MatrixXd distances_;
};

/// Greedy-net estimate of the ε-covering number of the set sampled by
/// `sampler`, in the distance d.
std::size_t covering_number_estimate(const FrameSampler& sampler, double epsilon,
                                     std::size_t budget, std::uint64_t seed);

/// Same, for the normalized difference set around `base` in Frobenius distance.
std::size_t covering_number_estimate(const FrameSampler& sampler, const Frame& base,
                                     double epsilon, std::size_t budget, std::uint64_t seed);

struct EntropyEstimate {
  std::vector<double> epsilons;
  std::vector<double> log_covering;
  double dudley_value = 0;  // ∫ √(log N) dε
  double dudley_prime = 0;  // ∫ log N dε
  std::size_t budget = 0;
};

/// 24 geometric points from 0.01 to √2.
std::vector<double> default_epsilon_grid();

/// Empirical entropy integrals of the normalized difference set of `set`
/// around `u`, by the trapezoid rule over `epsilon_grid`. log N is made
/// non-increasing in ε by a running maximum from the largest radius down.
EntropyEstimate dudley_estimate(const ConstraintSet& set, const Frame& u,
                                const std::vector<double>& epsilon_grid, std::size_t budget,
                                std::uint64_t seed);

}  // namespace subest
