#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include <Eigen/Dense>

#include "subest/geometry.hpp"
#include "subest/random.hpp"

namespace subest {

namespace constraint {

/// Every column has at most k non-zero entries.
struct Sparse {
  Eigen::Index k;
};
/// Every entry is non-negative.
struct NonNegative {};
/// Columns lie in span(Q) for an orthonormal p×k basis Q.
struct Subspace {
  Frame basis;
};
/// Rank one with entries ±1/√p.
struct SignVectors {};
struct Unconstrained {};

}  // namespace constraint

/// A structural subset of O(p, r).
class ConstraintSet {
 public:
  using Kind = std::variant<constraint::Unconstrained, constraint::Sparse, constraint::NonNegative,
                            constraint::Subspace, constraint::SignVectors>;

  ConstraintSet(Kind kind, Eigen::Index p, Eigen::Index r);

  static ConstraintSet unconstrained(Eigen::Index p, Eigen::Index r);
  static ConstraintSet sparse(Eigen::Index p, Eigen::Index r, Eigen::Index k);
  static ConstraintSet non_negative(Eigen::Index p, Eigen::Index r);
  static ConstraintSet subspace(Frame basis, Eigen::Index r);
  static ConstraintSet sign_vectors(Eigen::Index n);

  const Kind& kind() const noexcept { return kind_; }
  Eigen::Index rows() const noexcept { return p_; }
  Eigen::Index rank() const noexcept { return r_; }

  template <typename T>
  bool is() const noexcept {
    return std::holds_alternative<T>(kind_);
  }

  /// Compact textual form: "none", "sparse:k=10", "nonneg", "signs",
  /// "subspace:k=K".
  std::string describe() const;

 private:
  Kind kind_;
  Eigen::Index p_;
  Eigen::Index r_;
};

/// Membership with entrywise tolerance. `u` need not be orthonormal; only the
/// structural condition is tested.
bool contains(const ConstraintSet& set, const Eigen::MatrixXd& u, double tol);
inline bool contains(const ConstraintSet& set, const Frame& u, double tol) {
  return contains(set, u.matrix(), tol);
}

/// Nearest member of `set` in the subspace distance d (exact for signs,
/// subspace, unconstrained and non-negative rank one; a heuristic for sparse
/// and non-negative rank > 1).
Frame project(const ConstraintSet& set, const Eigen::MatrixXd& u);
inline Frame project(const ConstraintSet& set, const Frame& u) { return project(set, u.matrix()); }

/// Orthonormal basis of the orthogonal complement of col(A), A of shape
/// p×(p-k) and rank p-k.
Frame null_space_basis(const Eigen::MatrixXd& a);

/// Haar-distributed frame on O(p, r) via QR of a Gaussian matrix.
Frame haar_frame(Eigen::Index p, Eigen::Index r, Rng& rng);

Frame random_member(const ConstraintSet& set, Rng& rng);
Frame random_member(const ConstraintSet& set, std::uint64_t seed);

/// Parses the CLI form: "none", "sparse:k=10", "nonneg", "signs",
/// "subspace:qfile=PATH" (Q read as CSV).
ConstraintSet parse_constraint(std::string_view text, Eigen::Index p, Eigen::Index r);

}  // namespace subest
