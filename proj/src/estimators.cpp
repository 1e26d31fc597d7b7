#include "subest/estimators.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

namespace subest {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

void check_square_symmetric(const MatrixXd& m, Index p, const char* where) {
  require(m.rows() == m.cols(), ErrorKind::DimensionMismatch, std::string(where) + ": M must be square");
  require(m.rows() == p, ErrorKind::DimensionMismatch,
          std::string(where) + ": M has " + std::to_string(m.rows()) + " rows, constraint has " +
              std::to_string(p));
  const double scale = 1.0 + m.cwiseAbs().maxCoeff();
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * scale, ErrorKind::InvalidArgument,
          std::string(where) + ": M must be symmetric");
}

Frame spectral_from(const Eigen::SelfAdjointEigenSolver<MatrixXd>& es, Index r) {
  const VectorXd& values = es.eigenvalues();
  const MatrixXd& vectors = es.eigenvectors();
  const Index p = values.size();
  require(r >= 1 && r <= p, ErrorKind::InvalidArgument, "spectral_estimate needs 1 <= r <= p");

  std::vector<Index> argmax(p);
  for (Index j = 0; j < p; ++j) vectors.col(j).cwiseAbs().maxCoeff(&argmax[j]);

  std::vector<Index> order(p);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return values(a) > values(b); });
  const double tie = 1e-12 * std::max(1.0, values.cwiseAbs().maxCoeff());
  for (Index start = 0; start < p;) {
    Index stop = start + 1;
    while (stop < p && values(order[stop - 1]) - values(order[stop]) <= tie) ++stop;
    std::stable_sort(order.begin() + start, order.begin() + stop,
                     [&](Index a, Index b) { return argmax[a] < argmax[b]; });
    start = stop;
  }

  MatrixXd u(p, r);
  for (Index j = 0; j < r; ++j) {
    const Index col = order[j];
    u.col(j) = vectors.col(col);
    if (u(argmax[col], j) < 0) u.col(j) = -u.col(j);
  }
  return Frame(std::move(u));
}

}  // namespace

std::string_view to_string(EstimatorMethod method) {
  switch (method) {
    case EstimatorMethod::IterativeProjection: return "iterative";
    case EstimatorMethod::Exhaustive: return "exhaustive";
    case EstimatorMethod::Spectral: return "spectral";
  }
  return "unknown";
}

EstimatorMethod parse_method(std::string_view text) {
  if (text == "iterative") return EstimatorMethod::IterativeProjection;
  if (text == "exhaustive") return EstimatorMethod::Exhaustive;
  if (text == "spectral") return EstimatorMethod::Spectral;
  throw Error(ErrorKind::InvalidArgument, "unknown method '" + std::string(text) + "'");
}

MatrixXd build_objective_matrix(const SampledInstance& instance, ModelFamily family) {
  require(instance.family == family, ErrorKind::DimensionMismatch,
          "instance was sampled from a different model family");
  const MatrixXd& y = instance.observation;
  switch (family) {
    case ModelFamily::Denoising:
    case ModelFamily::Clustering: {
      MatrixXd m(y.rows(), y.rows());
      m.setZero();
      m.selfadjointView<Eigen::Lower>().rankUpdate(y);
      return m.selfadjointView<Eigen::Lower>();
    }
    case ModelFamily::Wishart: return sample_covariance(y);
    case ModelFamily::Wigner:
      require(y.rows() == y.cols(), ErrorKind::DimensionMismatch, "wigner observation must be square");
      return y;
  }
  return y;
}

double objective(const MatrixXd& u, const MatrixXd& m) {
  require(m.rows() == m.cols() && m.rows() == u.rows(), ErrorKind::DimensionMismatch,
          "objective: M and U disagree in p");
  return (u.transpose() * (m * u)).trace();
}

Frame spectral_estimate(const MatrixXd& m, Index r) {
  require(m.rows() == m.cols(), ErrorKind::DimensionMismatch, "spectral_estimate: M must be square");
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(m);
  return spectral_from(es, r);
}

IterativeResult iterative_projection_estimate(const MatrixXd& m, const ConstraintSet& set,
                                              const EstimatorConfig& cfg) {
  check_square_symmetric(m, set.rows(), "iterative_projection_estimate");
  require(cfg.max_iter >= 1 && cfg.tol > 0, ErrorKind::InvalidArgument,
          "max_iter must be positive and tol positive");
  const Index p = set.rows();
  const Index r = set.rank();

  const bool want_vectors = cfg.init == InitKind::Spectral;
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(
      m, want_vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
  const double shift = std::max(0.0, -es.eigenvalues()(0));
  MatrixXd shifted = m;
  if (shift > 0) shifted.diagonal().array() += shift;

  Rng restart_rng(derive_seed(cfg.seed, 0x5eed));
  std::optional<Frame> current;
  switch (cfg.init) {
    case InitKind::Spectral: current = project(set, spectral_from(es, r)); break;
    case InitKind::Provided:
      require(cfg.initial_frame.has_value(), ErrorKind::InvalidArgument,
              "provided init requires an initial frame");
      detail::check_same_shape(cfg.initial_frame->rows(), cfg.initial_frame->cols(), p, r,
                               "initial frame");
      current = contains(set, *cfg.initial_frame, 1e-8) ? *cfg.initial_frame
                                                         : project(set, *cfg.initial_frame);
      break;
    case InitKind::Random: current = random_member(set, cfg.seed); break;
  }

  IterativeResult result{*current, {objective(*current, m)}, 0, false, 0};
  double best = result.trace_path.front();

  while (result.iterations < cfg.max_iter) {
    ++result.iterations;
    std::optional<Frame> next;
    try {
      next = project(set, orthonormalize(shifted * current->matrix()));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::RankDeficient && e.kind() != ErrorKind::DegenerateInput) throw;
      if (result.restarts == kMaxRestarts)
        throw Error(ErrorKind::RankDeficient,
                    "M*U lost column rank after " + std::to_string(kMaxRestarts) + " restarts");
      ++result.restarts;
      current = random_member(set, restart_rng);
      result.trace_path.push_back(objective(*current, m));
      if (result.trace_path.back() > best) {
        best = result.trace_path.back();
        result.frame = *current;
      }
      continue;
    }
    const double value = objective(*next, m);
    result.trace_path.push_back(value);
    if (value > best) {
      best = value;
      result.frame = *next;
    }
    const double step = subspace_distance(*next, *current);
    current = std::move(next);
    if (step < cfg.tol) {
      result.converged = true;
      break;
    }
  }
  return result;
}

Frame exhaustive_argmax(const ConstraintSet& set, const MatrixXd& m) {
  require(set.is<constraint::SignVectors>(), ErrorKind::InvalidArgument,
          "exhaustive search needs a finite sign-vector set");
  const Index n = set.rows();
  require(n <= kExhaustiveMaxDim, ErrorKind::TooLarge,
          "exhaustive search over 2^" + std::to_string(n - 1) + " sign vectors exceeds n = " +
              std::to_string(kExhaustiveMaxDim));
  check_square_symmetric(m, n, "exhaustive_argmax");

  // Coordinate 0 is fixed to +. Coordinate i >= 1 is negative iff bit (i - 1)
  // of `mask` is set; the lexicographic key reads coordinate 1 as the most
  // significant bit.
  auto key_of = [n](std::uint64_t mask) {
    std::uint64_t key = 0;
    for (Index i = 1; i < n; ++i) key = (key << 1) | ((mask >> (i - 1)) & 1U);
    return key;
  };
  auto exact_value = [&m](const VectorXd& s) { return s.dot(m * s); };

  VectorXd s = VectorXd::Ones(n);
  VectorXd ms = m * s;
  double value = s.dot(ms);
  std::uint64_t mask = 0;

  VectorXd best_s = s;
  double best_value = exact_value(s);
  std::uint64_t best_key = 0;
  const double tie = 1e-12 * (1.0 + m.cwiseAbs().sum());
  const double screen = 1e-8 * (1.0 + m.cwiseAbs().sum());

  const std::uint64_t count = std::uint64_t{1} << (n - 1);
  for (std::uint64_t g = 1; g < count; ++g) {
    const int bit = std::countr_zero(g);
    const Index i = bit + 1;
    // Flipping s_i changes sᵀMs by -4 s_i (Σ_{j≠i} M_ij s_j).
    value -= 4.0 * s(i) * (ms(i) - m(i, i) * s(i));
    ms -= 2.0 * s(i) * m.col(i);
    s(i) = -s(i);
    mask ^= std::uint64_t{1} << bit;
    if ((g & 0xFFF) == 0) {
      ms = m * s;
      value = s.dot(ms);
    }
    if (value < best_value - screen) continue;
    const double exact = exact_value(s);
    const std::uint64_t key = key_of(mask);
    if (exact > best_value + tie || (exact >= best_value - tie && key < best_key)) {
      best_value = exact;
      best_key = key;
      best_s = s;
    }
    // Resynchronize the running value to keep drift bounded.
    value = exact;
  }
  return Frame(MatrixXd(best_s / std::sqrt(double(n))));
}

Estimate estimate(const SampledInstance& instance, const ConstraintSet& set,
                  const EstimatorConfig& cfg) {
  const MatrixXd m = build_objective_matrix(instance, instance.family);
  switch (cfg.method) {
    case EstimatorMethod::IterativeProjection: {
      IterativeResult it = iterative_projection_estimate(m, set, cfg);
      const double obj = objective(it.frame, m);
      return {std::move(it.frame), obj, it.iterations, it.converged};
    }
    case EstimatorMethod::Exhaustive: {
      Frame f = exhaustive_argmax(set, m);
      const double obj = objective(f, m);
      return {std::move(f), obj, 0, true};
    }
    case EstimatorMethod::Spectral: {
      Frame f = project(set, spectral_estimate(m, set.rank()));
      const double obj = objective(f, m);
      return {std::move(f), obj, 0, true};
    }
  }
  throw Error(ErrorKind::InvalidArgument, "unknown estimator method");
}

}  // namespace subest
