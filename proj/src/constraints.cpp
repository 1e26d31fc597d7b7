#include "subest/constraints.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "subest/io.hpp"

namespace subest {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr int kNonNegativeRounds = 50;
constexpr double kNonNegativeStep = 1e-10;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Frame orthonormalize_or_degenerate(const MatrixXd& m, const char* what) {
  try {
    return orthonormalize(m);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::RankDeficient)
      throw Error(ErrorKind::DegenerateInput, std::string(what) + ": no feasible projection");
    throw;
  }
}

// Polar factor A·Bᵀ of m = A S Bᵀ; the closest orthonormal matrix in Frobenius norm.
MatrixXd polar_factor(const MatrixXd& m) {
  const Eigen::JacobiSVD<MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return svd.matrixU() * svd.matrixV().transpose();
}

// Flip each column toward the orientation with more positive mass, then clip.
MatrixXd oriented_clip(const MatrixXd& x) {
  MatrixXd out(x.rows(), x.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    const VectorXd pos = x.col(j).cwiseMax(0.0);
    const VectorXd neg = (-x.col(j)).cwiseMax(0.0);
    out.col(j) = neg.squaredNorm() > pos.squaredNorm() ? neg : pos;
  }
  return out;
}

Frame project_non_negative_rank_one(const VectorXd& u) {
  const VectorXd pos = u.cwiseMax(0.0);
  const VectorXd neg = (-u).cwiseMax(0.0);
  // max over unit g >= 0 of |uᵀg| is max(‖u₊‖, ‖u₋‖), attained at the normalized part.
  const VectorXd& best = neg.norm() > pos.norm() ? neg : pos;
  const double norm = best.norm();
  MatrixXd g = MatrixXd::Zero(u.size(), 1);
  if (norm > 0) {
    g.col(0) = best / norm;
  } else {
    require(u.size() > 0 && u.cwiseAbs().maxCoeff() > 0, ErrorKind::DegenerateInput,
            "non-negative projection of the zero vector");
    Index arg = 0;
    u.maxCoeff(&arg);
    g(arg, 0) = 1.0;
  }
  return Frame(std::move(g));
}

// Non-negative orthonormal columns have pairwise disjoint supports, so the
// final step assigns each row to one column and normalizes.
MatrixXd disjoint_support_rounding(const MatrixXd& x) {
  const Index p = x.rows();
  const Index r = x.cols();
  const MatrixXd c = oriented_clip(x);
  std::vector<Index> owner(p, -1);
  std::vector<Index> count(r, 0);
  for (Index i = 0; i < p; ++i) {
    Index j_best = -1;
    double v_best = 0.0;
    for (Index j = 0; j < r; ++j) {
      if (c(i, j) > v_best) {
        v_best = c(i, j);
        j_best = j;
      }
    }
    if (j_best >= 0) {
      owner[i] = j_best;
      ++count[j_best];
    }
  }
  for (Index j = 0; j < r; ++j) {
    if (count[j] > 0) continue;
    Index i_best = -1;
    double v_best = -1.0;
    for (Index i = 0; i < p; ++i) {
      const bool free_row = owner[i] < 0 || count[owner[i]] >= 2;
      if (free_row && std::abs(x(i, j)) > v_best) {
        v_best = std::abs(x(i, j));
        i_best = i;
      }
    }
    if (owner[i_best] >= 0) --count[owner[i_best]];
    owner[i_best] = j;
    count[j] = 1;
  }
  MatrixXd g = MatrixXd::Zero(p, r);
  for (Index i = 0; i < p; ++i) {
    if (owner[i] >= 0) g(i, owner[i]) = c(i, owner[i]);
  }
  for (Index j = 0; j < r; ++j) {
    const double norm = g.col(j).norm();
    if (norm > 0) {
      g.col(j) /= norm;
    } else {
      // The only owned row has a zero clipped value; use it as a unit entry.
      for (Index i = 0; i < p; ++i)
        if (owner[i] == j) g(i, j) = 1.0;
    }
  }
  return g;
}

Frame project_non_negative(const MatrixXd& u) {
  if (u.cols() == 1) return project_non_negative_rank_one(u.col(0));
  require(u.cwiseAbs().maxCoeff() > 0, ErrorKind::DegenerateInput,
          "non-negative projection of the zero matrix");
  MatrixXd x = u;
  for (int round = 0; round < kNonNegativeRounds; ++round) {
    const MatrixXd clipped = oriented_clip(x);
    if (Eigen::JacobiSVD<MatrixXd>(clipped).singularValues().minCoeff() <= 1e-12) break;
    const MatrixXd next = polar_factor(clipped);
    const double step = (next - x).norm();
    x = next;
    if (step < kNonNegativeStep) break;
  }
  return Frame(disjoint_support_rounding(x));
}

Frame project_sparse(const MatrixXd& u, Index k) {
  const Index p = u.rows();
  const VectorXd row_norms = u.rowwise().norm();
  std::vector<Index> order(p);
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return row_norms(a) > row_norms(b); });
  MatrixXd block(k, u.cols());
  for (Index i = 0; i < k; ++i) block.row(i) = u.row(order[i]);
  const Frame q = orthonormalize_or_degenerate(block, "sparse");
  MatrixXd g = MatrixXd::Zero(p, u.cols());
  for (Index i = 0; i < k; ++i) g.row(order[i]) = q.matrix().row(i);
  return Frame(std::move(g));
}

}  // namespace

ConstraintSet::ConstraintSet(Kind kind, Index p, Index r) : kind_(std::move(kind)), p_(p), r_(r) {
  require(r >= 1 && p >= r, ErrorKind::InvalidArgument, "constraint needs 1 <= r <= p");
  std::visit(overloaded{
                 [](const constraint::Unconstrained&) {},
                 [&](const constraint::Sparse& s) {
                   require(s.k >= r && s.k <= p, ErrorKind::InvalidArgument,
                           "sparse constraint needs r <= k <= p");
                 },
                 [](const constraint::NonNegative&) {},
                 [&](const constraint::Subspace& s) {
                   const Index k = s.basis.cols();
                   require(s.basis.rows() == p, ErrorKind::DimensionMismatch,
                           "subspace basis must have p rows");
                   require(r < k && k < p, ErrorKind::InvalidArgument,
                           "subspace constraint needs r < k < p");
                 },
                 [&](const constraint::SignVectors&) {
                   require(r == 1, ErrorKind::InvalidArgument, "sign vectors are rank one");
                 },
             },
             kind_);
}

ConstraintSet ConstraintSet::unconstrained(Index p, Index r) {
  return {constraint::Unconstrained{}, p, r};
}
ConstraintSet ConstraintSet::sparse(Index p, Index r, Index k) {
  return {constraint::Sparse{k}, p, r};
}
ConstraintSet ConstraintSet::non_negative(Index p, Index r) {
  return {constraint::NonNegative{}, p, r};
}
ConstraintSet ConstraintSet::subspace(Frame basis, Index r) {
  const Index p = basis.rows();
  return {constraint::Subspace{std::move(basis)}, p, r};
}
ConstraintSet ConstraintSet::sign_vectors(Index n) { return {constraint::SignVectors{}, n, 1}; }

std::string ConstraintSet::describe() const {
  return std::visit(
      overloaded{
          [](const constraint::Unconstrained&) { return std::string("none"); },
          [](const constraint::Sparse& s) { return "sparse:k=" + std::to_string(s.k); },
          [](const constraint::NonNegative&) { return std::string("nonneg"); },
          [](const constraint::Subspace& s) { return "subspace:k=" + std::to_string(s.basis.cols()); },
          [](const constraint::SignVectors&) { return std::string("signs"); },
      },
      kind_);
}

bool contains(const ConstraintSet& set, const MatrixXd& u, double tol) {
  detail::check_same_shape(u.rows(), u.cols(), set.rows(), set.rank(), "contains");
  return std::visit(
      overloaded{
          [](const constraint::Unconstrained&) { return true; },
          [&](const constraint::Sparse& s) {
            for (Index j = 0; j < u.cols(); ++j) {
              if ((u.col(j).array().abs() > tol).count() > s.k) return false;
            }
            return true;
          },
          [&](const constraint::NonNegative&) { return u.minCoeff() >= -tol; },
          [&](const constraint::Subspace& s) {
            const MatrixXd& q = s.basis.matrix();
            return (u - q * (q.transpose() * u)).cwiseAbs().maxCoeff() <= tol;
          },
          [&](const constraint::SignVectors&) {
            const double level = 1.0 / std::sqrt(double(u.rows()));
            return ((u.array().abs() - level).abs() <= tol).all();
          },
      },
      set.kind());
}

Frame project(const ConstraintSet& set, const MatrixXd& u) {
  detail::check_same_shape(u.rows(), u.cols(), set.rows(), set.rank(), "project");
  return std::visit(
      overloaded{
          [&](const constraint::Unconstrained&) {
            return orthonormalize_or_degenerate(u, "unconstrained");
          },
          [&](const constraint::Sparse& s) { return project_sparse(u, s.k); },
          [&](const constraint::NonNegative&) { return project_non_negative(u); },
          [&](const constraint::Subspace& s) {
            const MatrixXd& q = s.basis.matrix();
            return orthonormalize_or_degenerate(q * (q.transpose() * u), "subspace");
          },
          [&](const constraint::SignVectors&) {
            const double level = 1.0 / std::sqrt(double(u.rows()));
            MatrixXd g = u.unaryExpr([level](double x) { return x < 0 ? -level : level; });
            return Frame(std::move(g));
          },
      },
      set.kind());
}

Frame null_space_basis(const MatrixXd& a) {
  const Index p = a.rows();
  const Index m = a.cols();
  require(m >= 1 && m < p, ErrorKind::InvalidArgument, "null_space_basis needs 1 <= p-k < p");
  const Eigen::JacobiSVD<MatrixXd> svd(a, Eigen::ComputeFullU);
  const VectorXd sv = svd.singularValues();
  require(sv(0) > 0 && sv(m - 1) > 1e-10 * sv(0), ErrorKind::RankDeficient,
          "constraint matrix does not have full column rank");
  return Frame(svd.matrixU().rightCols(p - m));
}

Frame haar_frame(Index p, Index r, Rng& rng) {
  // A Gaussian p×r matrix has full column rank with probability one.
  return orthonormalize(rng.gaussian(p, r));
}

Frame random_member(const ConstraintSet& set, Rng& rng) {
  const Index p = set.rows();
  const Index r = set.rank();
  return std::visit(
      overloaded{
          [&](const constraint::Unconstrained&) { return haar_frame(p, r, rng); },
          [&](const constraint::Sparse& s) {
            std::vector<Index> idx(p);
            std::iota(idx.begin(), idx.end(), Index{0});
            for (Index i = 0; i < s.k; ++i) {
              const Index j = i + static_cast<Index>(rng.below(static_cast<std::uint64_t>(p - i)));
              std::swap(idx[i], idx[j]);
            }
            std::sort(idx.begin(), idx.begin() + s.k);
            const Frame block = haar_frame(s.k, r, rng);
            MatrixXd g = MatrixXd::Zero(p, r);
            for (Index i = 0; i < s.k; ++i) g.row(idx[i]) = block.matrix().row(i);
            return Frame(std::move(g));
          },
          [&](const constraint::NonNegative&) {
            return project_non_negative(rng.gaussian(p, r).cwiseAbs());
          },
          [&](const constraint::Subspace& s) {
            const Frame w = haar_frame(s.basis.cols(), r, rng);
            return orthonormalize(s.basis.matrix() * w.matrix());
          },
          [&](const constraint::SignVectors&) {
            const double level = 1.0 / std::sqrt(double(p));
            MatrixXd g(p, 1);
            for (Index i = 0; i < p; ++i) g(i, 0) = level * rng.sign();
            return Frame(std::move(g));
          },
      },
      set.kind());
}

Frame random_member(const ConstraintSet& set, std::uint64_t seed) {
  Rng rng(seed);
  return random_member(set, rng);
}

ConstraintSet parse_constraint(std::string_view text, Index p, Index r) {
  const std::string s(text);
  if (s == "none") return ConstraintSet::unconstrained(p, r);
  if (s == "nonneg") return ConstraintSet::non_negative(p, r);
  if (s == "signs") {
    require(r == 1, ErrorKind::InvalidArgument, "signs constraint requires r = 1");
    return ConstraintSet::sign_vectors(p);
  }
  if (s.rfind("sparse:k=", 0) == 0) {
    const std::string value = s.substr(9);
    Index k = 0;
    try {
      std::size_t used = 0;
      k = static_cast<Index>(std::stol(value, &used));
      require(used == value.size(), ErrorKind::InvalidArgument, "");
    } catch (const std::exception&) {
      throw Error(ErrorKind::InvalidArgument, "bad sparsity in '" + s + "'");
    }
    return ConstraintSet::sparse(p, r, k);
  }
  if (s.rfind("subspace:qfile=", 0) == 0) {
    const MatrixXd q = io::read_matrix_csv(s.substr(15));
    return ConstraintSet::subspace(Frame(q, 1e-8), r);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown constraint '" + s + "'");
}

}  // namespace subest
