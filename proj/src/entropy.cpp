#include "subest/entropy.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "subest/random.hpp"

namespace subest {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr std::uint64_t kCodebookAttempts = 1'000'000;

using PackedWord = std::vector<std::uint64_t>;

PackedWord random_word(Index n, Index d, Rng& rng, std::vector<Index>& scratch) {
  scratch.resize(n);
  std::iota(scratch.begin(), scratch.end(), Index{0});
  PackedWord word((n + 63) / 64, 0);
  for (Index i = 0; i < d; ++i) {
    const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - i)));
    std::swap(scratch[i], scratch[j]);
    word[scratch[i] / 64] |= std::uint64_t{1} << (scratch[i] % 64);
  }
  return word;
}

Index hamming(const PackedWord& a, const PackedWord& b) {
  Index h = 0;
  for (std::size_t i = 0; i < a.size(); ++i) h += std::popcount(a[i] ^ b[i]);
  return h;
}

Codeword unpack(const PackedWord& w, Index n) {
  Codeword out(n, 0);
  for (Index i = 0; i < n; ++i) out[i] = static_cast<std::uint8_t>((w[i / 64] >> (i % 64)) & 1U);
  return out;
}

// diag(v, I_{r-1}) embedded in p1 rows, with v = (√(1-ε²), ε·ω/√w).
Frame block_member(Index p1, Index r, double epsilon, const Codeword* word, Index weight) {
  MatrixXd u = MatrixXd::Zero(p1, r);
  u(0, 0) = word ? std::sqrt(1.0 - epsilon * epsilon) : 1.0;
  if (word) {
    const double level = epsilon / std::sqrt(double(weight));
    for (std::size_t i = 0; i < word->size(); ++i)
      if ((*word)[i]) u(1 + Index(i), 0) = level;
  }
  // v occupies rows [0, p1 - r); the identity block follows; the last row is zero.
  for (Index j = 1; j < r; ++j) u(p1 - r + j - 1, j) = 1.0;
  return Frame(std::move(u));
}

PackingSet block_packing(Index p1, Index r, double epsilon, Index weight, std::size_t target,
                         std::uint64_t seed) {
  const Index n = p1 - r - 1;
  const auto code = vg_codebook(n, weight, kCodebookAttempts, seed, target);
  PackingSet set{block_member(p1, r, epsilon, nullptr, weight), std::sqrt(2.0) * epsilon,
                 epsilon / 2.0, 1.0 / (2.0 * std::sqrt(2.0)), {}};
  set.members.reserve(code.size());
  for (const auto& w : code) set.members.push_back(block_member(p1, r, epsilon, &w, weight));
  return set;
}

// Pairwise distance matrix from stacked frames P = [W_1 ... W_B] (p × B·r).
MatrixXd pairwise_overlaps(const MatrixXd& stacked, Index r) {
  const Index b = stacked.cols() / r;
  const MatrixXd gram = stacked.transpose() * stacked;
  if (r == 1) return gram.cwiseAbs2();
  MatrixXd overlaps(b, b);
  for (Index i = 0; i < b; ++i)
    for (Index j = 0; j < b; ++j) overlaps(i, j) = gram.block(i * r, j * r, r, r).squaredNorm();
  return overlaps;
}

}  // namespace

std::size_t vg_size_bound(Index n, double weight) {
  return static_cast<std::size_t>(
      std::ceil(std::exp(kVarshamovGilbertConstant * weight * std::log(double(n) / weight))));
}

std::vector<Codeword> vg_codebook(Index n, Index d, std::uint64_t attempts, std::uint64_t seed,
                                  std::optional<std::size_t> target) {
  require(d >= 1 && 4 * d <= n, ErrorKind::InvalidArgument, "vg_codebook needs 1 <= d <= n/4");
  const std::size_t goal = target.value_or(vg_size_bound(n, double(d)));
  Rng rng(seed);
  std::vector<PackedWord> accepted;
  std::vector<Index> scratch;
  for (std::uint64_t a = 0; a < attempts && accepted.size() < goal; ++a) {
    PackedWord w = random_word(n, d, rng, scratch);
    const bool separated = std::all_of(accepted.begin(), accepted.end(),
                                       [&](const PackedWord& v) { return 2 * hamming(w, v) >= d; });
    if (separated) accepted.push_back(std::move(w));
  }
  require(accepted.size() >= goal, ErrorKind::BudgetExhausted,
          "codebook reached " + std::to_string(accepted.size()) + " of " + std::to_string(goal) +
              " words; retry with a fresh seed");
  std::vector<Codeword> out;
  out.reserve(accepted.size());
  for (const auto& w : accepted) out.push_back(unpack(w, n));
  return out;
}

double PackingSet::max_center_distance() const {
  double worst = 0;
  for (const auto& m : members) worst = std::max(worst, subspace_distance(center, m));
  return worst;
}

double PackingSet::min_pairwise_distance() const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < members.size(); ++i)
    for (std::size_t j = i + 1; j < members.size(); ++j)
      best = std::min(best, subspace_distance(members[i], members[j]));
  return best;
}

bool PackingSet::satisfies_invariants(double slack) const {
  return max_center_distance() <= radius + slack && min_pairwise_distance() > separation - slack;
}

PackingSet sparse_packing_construction(Index p1, Index r, Index k, double epsilon,
                                       std::uint64_t seed) {
  require(r >= 1 && k >= 2 && p1 > r + 1, ErrorKind::InfeasibleParameters,
          "sparse packing needs r >= 1, k >= 2 and p1 > r + 1");
  require(epsilon > 0 && epsilon < 1, ErrorKind::InfeasibleParameters, "epsilon must be in (0, 1)");
  const Index n = p1 - r - 1;
  const double real_weight = double(k) / std::numbers::e;
  const Index weight = std::max<Index>(1, static_cast<Index>(std::floor(real_weight)));
  require(4.0 * real_weight <= double(n) && 4 * weight <= n, ErrorKind::InfeasibleParameters,
          "sparse packing needs k/e <= (p1 - r - 1)/4");
  const auto target = static_cast<std::size_t>(std::ceil(std::exp(
      kVarshamovGilbertConstant * real_weight * std::log(std::numbers::e * double(n) / double(k)))));
  return block_packing(p1, r, epsilon, weight, target, seed);
}

PackingSet non_negative_packing_construction(Index p1, Index r, double epsilon, std::uint64_t seed) {
  require(r >= 1 && p1 - r - 1 >= 4, ErrorKind::InfeasibleParameters,
          "non-negative packing needs p1 - r - 1 >= 4");
  require(epsilon > 0 && epsilon < 1, ErrorKind::InfeasibleParameters, "epsilon must be in (0, 1)");
  const Index n = p1 - r - 1;
  const Index weight = n / 4;
  return block_packing(p1, r, epsilon, weight, vg_size_bound(n, double(weight)), seed);
}

PackingSet sign_packing_construction(Index n, Index d, std::uint64_t seed) {
  require(d >= 1 && 4 * d <= n, ErrorKind::InfeasibleParameters, "sign packing needs 1 <= d <= n/4");
  const double level = 1.0 / std::sqrt(double(n));
  const auto code = vg_codebook(n, d, kCodebookAttempts, seed);
  auto member = [&](const Codeword* w) {
    MatrixXd u = MatrixXd::Constant(n, 1, -level);
    if (w)
      for (Index i = 0; i < n; ++i)
        if ((*w)[i]) u(i, 0) = level;
    return Frame(std::move(u));
  };
  const double unit = std::sqrt(double(d) / double(n));
  PackingSet set{member(nullptr), 2.0 * std::sqrt(2.0) * unit, unit, 1.0 / (2.0 * std::sqrt(2.0)), {}};
  set.members.push_back(member(nullptr));
  for (const auto& w : code) set.members.push_back(member(&w));
  return set;
}

PackingSet greedy_local_packing(const ConstraintSet& set, const Frame& center, double epsilon,
                                double alpha, std::uint64_t budget, std::uint64_t seed) {
  require(alpha > 0 && alpha < 1, ErrorKind::InvalidArgument, "alpha must be in (0, 1)");
  require(epsilon > 0, ErrorKind::InvalidArgument, "epsilon must be positive");
  detail::check_same_shape(center.rows(), center.cols(), set.rows(), set.rank(), "greedy_local_packing");
  const double separation = alpha * epsilon;
  PackingSet out{center, epsilon, separation, alpha, {center}};
  Rng rng(seed);
  for (std::uint64_t b = 0; b < budget; ++b) {
    Frame w = random_member(set, rng);
    if (subspace_distance(w, center) > epsilon) continue;
    const bool separated = std::all_of(out.members.begin(), out.members.end(), [&](const Frame& m) {
      return subspace_distance(w, m) > separation;
    });
    if (separated) out.members.push_back(std::move(w));
  }
  return out;
}

SampleCloud SampleCloud::frames(const FrameSampler& sampler, std::size_t budget, std::uint64_t seed) {
  require(budget >= 1, ErrorKind::InvalidArgument, "budget must be positive");
  const Frame first = sampler(derive_seed(seed, 0));
  const Index p = first.rows();
  const Index r = first.cols();
  MatrixXd stacked(p, Index(budget) * r);
  stacked.leftCols(r) = first.matrix();
  for (std::size_t i = 1; i < budget; ++i) {
    const Frame w = sampler(derive_seed(seed, i));
    detail::check_same_shape(w.rows(), w.cols(), p, r, "SampleCloud::frames");
    stacked.middleCols(Index(i) * r, r) = w.matrix();
  }
  const MatrixXd overlaps = pairwise_overlaps(stacked, r);
  MatrixXd dist = (2.0 * (double(r) - overlaps.array())).max(0.0).sqrt().matrix();
  dist.diagonal().setZero();
  return SampleCloud(std::move(dist));
}

SampleCloud SampleCloud::directions(const FrameSampler& sampler, const Frame& base,
                                    std::size_t budget, std::uint64_t seed) {
  require(budget >= 1, ErrorKind::InvalidArgument, "budget must be positive");
  const Index p = base.rows();
  const Index r = base.cols();
  std::vector<Frame> kept;
  kept.reserve(budget);
  for (std::size_t i = 0; i < budget; ++i) {
    Frame w = sampler(derive_seed(seed, i));
    detail::check_same_shape(w.rows(), w.cols(), p, r, "SampleCloud::directions");
    if (subspace_distance(w, base) >= 1e-9) kept.push_back(std::move(w));
  }
  const Index b = Index(kept.size());
  MatrixXd stacked(p, b * r);
  for (Index i = 0; i < b; ++i) stacked.middleCols(i * r, r) = kept[i].matrix();
  const MatrixXd overlaps = pairwise_overlaps(stacked, r);
  // a_i = ‖UᵀW_i‖², ‖W_iW_iᵀ - UUᵀ‖² = 2(r - a_i).
  VectorXd a(b), norms(b);
  for (Index i = 0; i < b; ++i) {
    a(i) = (base.matrix().transpose() * kept[i].matrix()).squaredNorm();
    norms(i) = std::sqrt(std::max(0.0, 2.0 * (double(r) - a(i))));
  }
  MatrixXd dist(b, b);
  for (Index j = 0; j < b; ++j) {
    for (Index i = 0; i < b; ++i) {
      const double inner = (overlaps(i, j) - a(i) - a(j) + double(r)) / (norms(i) * norms(j));
      dist(i, j) = i == j ? 0.0 : std::sqrt(std::max(0.0, 2.0 - 2.0 * inner));
    }
  }
  return SampleCloud(std::move(dist));
}

std::size_t SampleCloud::greedy_net(double epsilon) const {
  std::vector<Index> centers;
  for (Index i = 0; i < distances_.rows(); ++i) {
    const bool far = std::all_of(centers.begin(), centers.end(),
                                 [&](Index c) { return distances_(i, c) >= epsilon; });
    if (far) centers.push_back(i);
  }
  return centers.size();
}

std::size_t SampleCloud::greedy_packing(double separation) const {
  std::vector<Index> admitted;
  for (Index i = 0; i < distances_.rows(); ++i) {
    const bool far = std::all_of(admitted.begin(), admitted.end(),
                                 [&](Index c) { return distances_(i, c) > separation; });
    if (far) admitted.push_back(i);
  }
  return admitted.size();
}

std::size_t covering_number_estimate(const FrameSampler& sampler, double epsilon, std::size_t budget,
                                     std::uint64_t seed) {
  require(epsilon > 0, ErrorKind::InvalidArgument, "epsilon must be positive");
  return SampleCloud::frames(sampler, budget, seed).greedy_net(epsilon);
}

std::size_t covering_number_estimate(const FrameSampler& sampler, const Frame& base, double epsilon,
                                     std::size_t budget, std::uint64_t seed) {
  require(epsilon > 0, ErrorKind::InvalidArgument, "epsilon must be positive");
  return SampleCloud::directions(sampler, base, budget, seed).greedy_net(epsilon);
}

std::vector<double> default_epsilon_grid() {
  constexpr int kPoints = 24;
  const double lo = 0.01;
  const double hi = std::sqrt(2.0);
  std::vector<double> grid(kPoints);
  for (int i = 0; i < kPoints; ++i) grid[i] = lo * std::pow(hi / lo, double(i) / (kPoints - 1));
  grid.back() = hi;
  return grid;
}

EntropyEstimate dudley_estimate(const ConstraintSet& set, const Frame& u,
                                const std::vector<double>& epsilon_grid, std::size_t budget,
                                std::uint64_t seed) {
  require(!epsilon_grid.empty(), ErrorKind::InvalidArgument, "epsilon grid is empty");
  for (std::size_t i = 0; i < epsilon_grid.size(); ++i) {
    require(epsilon_grid[i] > 0 && (i == 0 || epsilon_grid[i] > epsilon_grid[i - 1]),
            ErrorKind::InvalidArgument, "epsilon grid must be positive and increasing");
  }
  const FrameSampler sampler = [&set](std::uint64_t s) { return random_member(set, s); };
  const SampleCloud cloud = SampleCloud::directions(sampler, u, budget, seed);

  EntropyEstimate est;
  est.epsilons = epsilon_grid;
  est.budget = budget;
  est.log_covering.resize(epsilon_grid.size(), 0.0);
  if (cloud.size() > 0) {
    for (std::size_t i = 0; i < epsilon_grid.size(); ++i)
      est.log_covering[i] = std::log(double(cloud.greedy_net(epsilon_grid[i])));
  }
  for (std::size_t i = epsilon_grid.size() - 1; i-- > 0;)
    est.log_covering[i] = std::max(est.log_covering[i], est.log_covering[i + 1]);

  for (std::size_t i = 0; i + 1 < epsilon_grid.size(); ++i) {
    const double width = epsilon_grid[i + 1] - epsilon_grid[i];
    est.dudley_value +=
        0.5 * width * (std::sqrt(est.log_covering[i]) + std::sqrt(est.log_covering[i + 1]));
    est.dudley_prime += 0.5 * width * (est.log_covering[i] + est.log_covering[i + 1]);
  }
  return est;
}

}  // namespace subest
