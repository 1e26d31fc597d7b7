#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "subest/error.hpp"

namespace subest {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Entrywise tolerance on |FᵀF - I| accepted for a frame.
template <typename Scalar>
constexpr Scalar frame_tolerance() {
  if constexpr (sizeof(Scalar) >= sizeof(double)) {
    return Scalar(1e-10);
  } else {
    return Scalar(1e-4);
  }
}

namespace detail {

inline void check_same_shape(Eigen::Index p1, Eigen::Index r1, Eigen::Index p2, Eigen::Index r2,
                             const char* where) {
  if (p1 != p2 || r1 != r2) {
    throw Error(ErrorKind::DimensionMismatch,
                std::string(where) + ": shapes " + std::to_string(p1) + "x" + std::to_string(r1) +
                    " and " + std::to_string(p2) + "x" + std::to_string(r2));
  }
}

}  // namespace detail

/// A p×r matrix with orthonormal columns, i.e. a point of O(p, r).
///
/// The invariant is checked on construction, so any OrthonormalFrame in hand
/// satisfies |FᵀF - I|_max <= frame_tolerance<Scalar>().
template <typename Scalar_>
class OrthonormalFrame {
 public:
  using Scalar = Scalar_;
  using Matrix = MatrixX<Scalar>;

  explicit OrthonormalFrame(Matrix entries, Scalar tol = frame_tolerance<Scalar>())
      : entries_(std::move(entries)) {
    require(entries_.cols() >= 1 && entries_.rows() >= entries_.cols(),
            ErrorKind::InvalidArgument,
            "frame must satisfy 1 <= r <= p, got " + std::to_string(entries_.rows()) + "x" +
                std::to_string(entries_.cols()));
    const Matrix gram = entries_.transpose() * entries_;
    const Scalar err =
        (gram - Matrix::Identity(entries_.cols(), entries_.cols())).cwiseAbs().maxCoeff();
    require(err <= tol, ErrorKind::ConstraintViolation,
            "columns are not orthonormal (Gram error " + std::to_string(double(err)) + ")");
  }

  /// First r canonical basis vectors of R^p.
  static OrthonormalFrame canonical(Eigen::Index p, Eigen::Index r) {
    return OrthonormalFrame(Matrix::Identity(p, r));
  }

  const Matrix& matrix() const noexcept { return entries_; }
  Eigen::Index rows() const noexcept { return entries_.rows(); }
  Eigen::Index cols() const noexcept { return entries_.cols(); }
  Scalar operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

 private:
  Matrix entries_;
};

using Frame = OrthonormalFrame<double>;

/// Diagonal signal magnitudes λ₁ >= ... >= λ_r > 0 with scale t and
/// conditioning constant L: t/L <= λ_r and λ₁ <= L·t.
template <typename Scalar>
class SpectrumSpec {
 public:
  SpectrumSpec(VectorX<Scalar> values, Scalar scale, Scalar conditioning)
      : values_(std::move(values)), scale_(scale), conditioning_(conditioning) {
    require(values_.size() >= 1, ErrorKind::InvalidArgument, "spectrum must be non-empty");
    require(scale_ > 0, ErrorKind::InvalidArgument, "spectrum scale must be positive");
    require(conditioning_ > 1, ErrorKind::InvalidArgument, "conditioning constant must exceed 1");
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      require(values_(i) > 0, ErrorKind::InvalidArgument, "spectrum values must be positive");
      if (i > 0)
        require(values_(i) <= values_(i - 1), ErrorKind::InvalidArgument,
                "spectrum values must be non-increasing");
    }
    // Relative slack so that flat spectra built from t itself are accepted.
    const Scalar slack = Scalar(1e-12) * scale_;
    require(values_(0) <= conditioning_ * scale_ + slack, ErrorKind::InvalidArgument,
            "largest value exceeds L*t");
    require(values_(values_.size() - 1) >= scale_ / conditioning_ - slack,
            ErrorKind::InvalidArgument, "smallest value below t/L");
  }

  /// λ₁ = ... = λ_r = t.
  static SpectrumSpec flat(Eigen::Index r, Scalar t, Scalar conditioning = Scalar(2)) {
    return SpectrumSpec(VectorX<Scalar>::Constant(r, t), t, conditioning);
  }

  const VectorX<Scalar>& values() const noexcept { return values_; }
  Eigen::Index rank() const noexcept { return values_.size(); }
  Scalar scale() const noexcept { return scale_; }
  Scalar conditioning() const noexcept { return conditioning_; }
  Scalar largest() const { return values_(0); }
  Scalar smallest() const { return values_(values_.size() - 1); }

 private:
  VectorX<Scalar> values_;
  Scalar scale_;
  Scalar conditioning_;
};

/// Thin QR orthonormal factor of a full-column-rank matrix, with the sign
/// convention that the triangular factor has a non-negative diagonal.
template <typename Derived>
OrthonormalFrame<typename Derived::Scalar> orthonormalize(const Eigen::MatrixBase<Derived>& m) {
  using Scalar = typename Derived::Scalar;
  using Matrix = MatrixX<Scalar>;
  const Eigen::Index p = m.rows();
  const Eigen::Index r = m.cols();
  require(r >= 1 && p >= r, ErrorKind::InvalidArgument, "orthonormalize needs 1 <= r <= p");

  const Matrix a = m;
  const VectorX<Scalar> sv = Eigen::JacobiSVD<Matrix>(a).singularValues();
  require(sv(0) > Scalar(0) && sv(r - 1) > Scalar(1e-12) * sv(0), ErrorKind::RankDeficient,
          "matrix does not have full column rank");

  const Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(p, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    if (qr.matrixQR()(j, j) < Scalar(0)) q.col(j) = -q.col(j);
  }
  return OrthonormalFrame<Scalar>(std::move(q));
}

/// d(U1, U2) = ‖U1U1ᵀ - U2U2ᵀ‖_F, equal to √(2(r - ‖U1ᵀU2‖_F²)) by the Gram
/// identity; see the body for the evaluation order.
template <typename D1, typename D2>
typename D1::Scalar subspace_distance(const Eigen::MatrixBase<D1>& u1,
                                      const Eigen::MatrixBase<D2>& u2) {
  using Scalar = typename D1::Scalar;
  detail::check_same_shape(u1.rows(), u1.cols(), u2.rows(), u2.cols(), "subspace_distance");
  // Each residual ‖U − WWᵀU‖²_F equals r − ‖U1ᵀU2‖²_F, so the sum is d². This
  // form has no cancellation near d = 0, and the sum is exactly symmetric.
  using Matrix = MatrixX<Scalar>;
  // Entries are plain dot products, so swapping the arguments yields the exact
  // transpose.
  const Eigen::Index r = u1.cols();
  Matrix cross(r, r);
  for (Eigen::Index j = 0; j < r; ++j)
    for (Eigen::Index i = 0; i < r; ++i) cross(i, j) = u1.col(i).dot(u2.col(j));
  const Matrix cross_t = cross.transpose();
  const Scalar left = (u2 - u1 * cross).squaredNorm();
  const Scalar right = (u1 - u2 * cross_t).squaredNorm();
  return std::sqrt(left + right);
}

template <typename Scalar>
Scalar subspace_distance(const OrthonormalFrame<Scalar>& u1, const OrthonormalFrame<Scalar>& u2) {
  return subspace_distance(u1.matrix(), u2.matrix());
}

template <typename Scalar>
struct ProcrustesResult {
  MatrixX<Scalar> rotation;
  Scalar residual;
};

/// Orthogonal O minimizing ‖U1 - U2·O‖_F, from the SVD of U2ᵀU1.
template <typename Scalar>
ProcrustesResult<Scalar> procrustes_align(const OrthonormalFrame<Scalar>& u1,
                                          const OrthonormalFrame<Scalar>& u2) {
  using Matrix = MatrixX<Scalar>;
  detail::check_same_shape(u1.rows(), u1.cols(), u2.rows(), u2.cols(), "procrustes_align");
  const Matrix cross = u2.matrix().transpose() * u1.matrix();
  const Eigen::JacobiSVD<Matrix> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix rotation = svd.matrixU() * svd.matrixV().transpose();
  // Evaluated directly: the closed form √(2r - 2 tr Σ) loses half the digits
  // near zero.
  const Scalar residual = (u1.matrix() - u2.matrix() * rotation).norm();
  return {std::move(rotation), residual};
}

template <typename Scalar>
MatrixX<Scalar> projection_matrix(const OrthonormalFrame<Scalar>& u) {
  return u.matrix() * u.matrix().transpose();
}

/// Which trace inner product quadratic_form_gap evaluates.
template <typename Scalar>
struct QuadraticMode {
  enum class Kind { Squared, Linear, Shifted };
  Kind kind = Kind::Squared;
  Scalar noise_variance = 0;  // σ², Shifted only

  static QuadraticMode squared() { return {Kind::Squared, 0}; }
  static QuadraticMode linear() { return {Kind::Linear, 0}; }
  static QuadraticMode shifted(Scalar sigma2) { return {Kind::Shifted, sigma2}; }
};

/// ⟨UΓ²Uᵀ, UUᵀ - WWᵀ⟩ (squared), ⟨UΓUᵀ, ·⟩ (linear) or ⟨σ²I + UΓUᵀ, ·⟩
/// (shifted). The σ² term is tr(UUᵀ - WWᵀ)·σ² = 0, but it is still applied so
/// that the value is computed as written.
template <typename Scalar>
Scalar quadratic_form_gap(const OrthonormalFrame<Scalar>& u, const SpectrumSpec<Scalar>& spectrum,
                          const OrthonormalFrame<Scalar>& w, QuadraticMode<Scalar> mode) {
  detail::check_same_shape(u.rows(), u.cols(), w.rows(), w.cols(), "quadratic_form_gap");
  require(spectrum.rank() == u.cols(), ErrorKind::DimensionMismatch,
          "quadratic_form_gap: spectrum rank differs from frame rank");
  using Kind = typename QuadraticMode<Scalar>::Kind;
  const VectorX<Scalar> weights = mode.kind == Kind::Squared
                                      ? VectorX<Scalar>(spectrum.values().array().square())
                                      : spectrum.values();
  const MatrixX<Scalar> cross = w.matrix().transpose() * u.matrix();
  // tr(UΛUᵀUUᵀ) - tr(UΛUᵀWWᵀ) = Σλ - ‖WᵀU Λ^{1/2}‖²
  Scalar value = weights.sum() - (cross * weights.cwiseSqrt().asDiagonal()).squaredNorm();
  if (mode.kind == Kind::Shifted) {
    const Scalar trace_gap = Scalar(u.cols()) - w.matrix().squaredNorm();
    value += mode.noise_variance * trace_gap;
  }
  return value;
}

}  // namespace subest
