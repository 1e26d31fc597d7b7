#include "subest/models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace subest {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string_view to_string(ModelFamily family) {
  switch (family) {
    case ModelFamily::Denoising: return "denoising";
    case ModelFamily::Wishart: return "wishart";
    case ModelFamily::Wigner: return "wigner";
    case ModelFamily::Clustering: return "clustering";
  }
  return "unknown";
}

ModelFamily parse_family(std::string_view text) {
  if (text == "denoising") return ModelFamily::Denoising;
  if (text == "wishart") return ModelFamily::Wishart;
  if (text == "wigner") return ModelFamily::Wigner;
  if (text == "clustering") return ModelFamily::Clustering;
  throw Error(ErrorKind::InvalidArgument, "unknown model family '" + std::string(text) + "'");
}

Index ModelSpec::ambient_dim() const {
  switch (family) {
    case ModelFamily::Denoising: return p1;
    case ModelFamily::Wishart: return p;
    case ModelFamily::Wigner: return p;
    case ModelFamily::Clustering: return n;
  }
  return 0;
}

Index ModelSpec::observation_rows() const {
  switch (family) {
    case ModelFamily::Denoising: return p1;
    case ModelFamily::Wishart: return n;
    case ModelFamily::Wigner: return p;
    case ModelFamily::Clustering: return n;
  }
  return 0;
}

Index ModelSpec::observation_cols() const {
  switch (family) {
    case ModelFamily::Denoising: return p2;
    case ModelFamily::Wishart: return p;
    case ModelFamily::Wigner: return p;
    case ModelFamily::Clustering: return p;
  }
  return 0;
}

void ModelSpec::validate() const {
  require(noise_sd > 0, ErrorKind::InvalidArgument, "noise_sd must be positive");
  const Index r = rank();
  switch (family) {
    case ModelFamily::Denoising:
      require(p1 >= 1 && p2 >= 1, ErrorKind::InvalidArgument, "denoising needs p1, p2 >= 1");
      require(r <= std::min(p1, p2), ErrorKind::InvalidArgument, "rank exceeds min(p1, p2)");
      break;
    case ModelFamily::Wishart:
      require(n >= 1 && p >= 1, ErrorKind::InvalidArgument, "wishart needs n, p >= 1");
      require(r <= p, ErrorKind::InvalidArgument, "rank exceeds p");
      require(mean.size() == 0 || mean.size() == p, ErrorKind::DimensionMismatch,
              "mean must have length p");
      break;
    case ModelFamily::Wigner:
      require(p >= 1, ErrorKind::InvalidArgument, "wigner needs p >= 1");
      require(r <= p, ErrorKind::InvalidArgument, "rank exceeds p");
      break;
    case ModelFamily::Clustering:
      require(n >= 1 && p >= 1, ErrorKind::InvalidArgument, "clustering needs n, p >= 1");
      require(r == 1, ErrorKind::InvalidArgument, "clustering is rank one");
      break;
  }
}

SampledInstance sample_instance(const ModelSpec& spec, const ConstraintSet& set,
                                const std::optional<Frame>& truth,
                                const std::optional<Frame>& right) {
  spec.validate();
  const Index dim = spec.ambient_dim();
  const Index r = spec.rank();
  require(set.rows() == dim && set.rank() == r, ErrorKind::DimensionMismatch,
          "constraint shape does not match the model");
  if (spec.family == ModelFamily::Clustering) {
    require(set.is<constraint::SignVectors>(), ErrorKind::InvalidArgument,
            "clustering truth must be a sign vector");
  }

  Rng truth_rng(derive_seed(spec.seed, 0));
  Rng right_rng(derive_seed(spec.seed, 1));
  Rng noise_rng(derive_seed(spec.seed, 2));

  std::optional<Frame> u;
  if (truth) {
    detail::check_same_shape(truth->rows(), truth->cols(), dim, r, "sample_instance truth");
    require(contains(set, *truth, 1e-8), ErrorKind::ConstraintViolation,
            "truth frame is not a member of the constraint set");
    u = *truth;
  } else {
    u = random_member(set, truth_rng);
  }
  const MatrixXd& um = u->matrix();
  const VectorXd& lambda = spec.spectrum.values();
  const double sigma = spec.noise_sd;

  SampledInstance out{spec.family, MatrixXd(), *u, std::nullopt, spec.spectrum, VectorXd()};

  switch (spec.family) {
    case ModelFamily::Denoising: {
      std::optional<Frame> v;
      if (right) {
        detail::check_same_shape(right->rows(), right->cols(), spec.p2, r, "sample_instance right");
        v = *right;
      } else {
        v = haar_frame(spec.p2, r, right_rng);
      }
      out.observation = um * lambda.asDiagonal() * v->matrix().transpose() +
                        noise_rng.gaussian(spec.p1, spec.p2, sigma);
      out.truth_right = std::move(v);
      break;
    }
    case ModelFamily::Wishart: {
      const VectorXd root = lambda.cwiseSqrt();
      const MatrixXd latent = noise_rng.gaussian(r, spec.n);
      const MatrixXd noise = noise_rng.gaussian(spec.p, spec.n, sigma);
      MatrixXd rows_t = um * root.asDiagonal() * latent + noise;
      if (spec.mean.size() == spec.p) rows_t.colwise() += spec.mean;
      out.observation = rows_t.transpose();
      break;
    }
    case ModelFamily::Wigner: {
      MatrixXd z(spec.p, spec.p);
      for (Index j = 0; j < spec.p; ++j) {
        for (Index i = 0; i <= j; ++i) {
          z(i, j) = sigma * noise_rng.normal();
          z(j, i) = z(i, j);
        }
      }
      out.observation = um * lambda.asDiagonal() * um.transpose() + z;
      // Symmetrize the signal part bit-exactly as well.
      out.observation = (0.5 * (out.observation + out.observation.transpose())).eval();
      break;
    }
    case ModelFamily::Clustering: {
      const VectorXd h = um.col(0) * std::sqrt(double(spec.n));
      VectorXd direction = right_rng.gaussian(spec.p, 1).col(0);
      direction.normalize();
      const VectorXd theta = direction * (lambda(0) / std::sqrt(double(spec.n)));
      out.observation = h * theta.transpose() + noise_rng.gaussian(spec.n, spec.p, sigma);
      out.truth_right = Frame(MatrixXd(direction));
      out.labels = h.array().sign().matrix();
      break;
    }
  }
  return out;
}

MatrixXd sample_covariance(const MatrixXd& rows) {
  require(rows.rows() >= 2, ErrorKind::TooFewRows, "sample covariance needs at least two rows");
  const Eigen::RowVectorXd mean = rows.colwise().mean();
  const MatrixXd centered = rows.rowwise() - mean;
  MatrixXd cov = (centered.transpose() * centered) / double(rows.rows());
  return 0.5 * (cov + cov.transpose());
}

double kl_spiked_wishart(const Frame& ui, const Frame& uj, double t, double sigma, Index n) {
  detail::check_same_shape(ui.rows(), ui.cols(), uj.rows(), uj.cols(), "kl_spiked_wishart");
  require(t > 0 && sigma > 0 && n > 0, ErrorKind::InvalidArgument,
          "kl_spiked_wishart needs positive t, sigma, n");
  // r - ‖UiᵀUj‖² = d²/2, taken from the symmetric distance.
  const double d = subspace_distance(ui, uj);
  const double gap = 0.5 * d * d;
  const double s2 = sigma * sigma;
  return double(n) * t * t * gap / (2.0 * s2 * (s2 + t));
}

double kl_gaussian_generic(const VectorXd& mean0, const MatrixXd& cov0, const VectorXd& mean1,
                           const MatrixXd& cov1) {
  const Index p = cov0.rows();
  require(cov0.cols() == p && cov1.rows() == p && cov1.cols() == p && mean0.size() == p &&
              mean1.size() == p,
          ErrorKind::DimensionMismatch, "kl_gaussian_generic shapes");
  for (const MatrixXd* cov : {&cov0, &cov1}) {
    require((*cov - cov->transpose()).cwiseAbs().maxCoeff() <= 1e-10 * (1 + cov->cwiseAbs().maxCoeff()),
            ErrorKind::NotPositiveDefinite, "covariance is not symmetric");
    const VectorXd ev = Eigen::SelfAdjointEigenSolver<MatrixXd>(*cov, Eigen::EigenvaluesOnly).eigenvalues();
    require(ev(p - 1) > 0 && ev(0) > 1e-12 * ev(p - 1), ErrorKind::NotPositiveDefinite,
            "covariance is not positive definite");
  }
  const Eigen::LLT<MatrixXd> llt0(cov0);
  const Eigen::LLT<MatrixXd> llt1(cov1);
  const double logdet0 = 2.0 * llt0.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double logdet1 = 2.0 * llt1.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const double trace_term = llt1.solve(cov0).trace();
  const VectorXd diff = mean1 - mean0;
  const double quad = diff.dot(llt1.solve(diff));
  return std::max(0.0, 0.5 * (trace_term + quad - double(p) + logdet1 - logdet0));
}

double kl_denoising_fixed(const Frame& ui, const Frame& uj, const Frame& v0,
                          const SpectrumSpec<double>& spectrum, double sigma) {
  detail::check_same_shape(ui.rows(), ui.cols(), uj.rows(), uj.cols(), "kl_denoising_fixed");
  require(v0.cols() == ui.cols() && spectrum.rank() == ui.cols(), ErrorKind::DimensionMismatch,
          "kl_denoising_fixed: rank mismatch");
  require(sigma > 0, ErrorKind::InvalidArgument, "sigma must be positive");
  const auto aligned = procrustes_align(ui, uj);
  const MatrixXd diff = ui.matrix() - uj.matrix() * aligned.rotation;
  const MatrixXd mean_gap = diff * spectrum.values().asDiagonal() * v0.matrix().transpose();
  return mean_gap.squaredNorm() / (2.0 * sigma * sigma);
}

}  // namespace subest
