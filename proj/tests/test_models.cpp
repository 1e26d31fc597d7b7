#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "subest/estimators.hpp"
#include "subest/models.hpp"

using namespace subest;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

ModelSpec spec_of(ModelFamily family, double t, double sigma, std::uint64_t seed) {
  ModelSpec m;
  m.family = family;
  m.p1 = 30;
  m.p2 = 20;
  m.n = 40;
  m.p = 25;
  m.spectrum = SpectrumSpec<double>::flat(family == ModelFamily::Clustering ? 1 : 2, t);
  m.noise_sd = sigma;
  m.seed = seed;
  return m;
}

ConstraintSet free_set(const ModelSpec& m) {
  if (m.family == ModelFamily::Clustering) return ConstraintSet::sign_vectors(m.n);
  return ConstraintSet::unconstrained(m.ambient_dim(), m.rank());
}

// Covariance of one spiked Gaussian row, vectorized for the generic KL.
MatrixXd spiked_cov(const MatrixXd& u, double t, double sigma) {
  return t * u * u.transpose() + sigma * sigma * MatrixXd::Identity(u.rows(), u.rows());
}

}  // namespace

TEST_CASE("observation shapes and determinism") {
  for (auto family : {ModelFamily::Denoising, ModelFamily::Wishart, ModelFamily::Wigner, ModelFamily::Clustering}) {
    const ModelSpec m = spec_of(family, 3.0, 1.0, 11);
    const auto a = sample_instance(m, free_set(m));
    const auto b = sample_instance(m, free_set(m));
    CHECK(a.observation.rows() == m.observation_rows());
    CHECK(a.observation.cols() == m.observation_cols());
    CHECK(a.observation == b.observation);
    CHECK(a.truth_left.matrix() == b.truth_left.matrix());
  }
}

TEST_CASE("wigner observation is exactly symmetric") {
  const ModelSpec m = spec_of(ModelFamily::Wigner, 4.0, 1.0, 3);
  const auto inst = sample_instance(m, free_set(m));
  CHECK(inst.observation == inst.observation.transpose());
}

TEST_CASE("noiseless denoising recovers the truth") {
  const ModelSpec m = spec_of(ModelFamily::Denoising, 5.0, 1e-12, 4);
  const auto inst = sample_instance(m, free_set(m));
  const Eigen::JacobiSVD<MatrixXd> svd(inst.observation, Eigen::ComputeThinU);
  const Frame top(MatrixXd(svd.matrixU().leftCols(2)), 1e-8);
  CHECK(subspace_distance(top, inst.truth_left) < 1e-6);
}

TEST_CASE("truth frames respect the constraint") {
  const ModelSpec m = spec_of(ModelFamily::Denoising, 2.0, 1.0, 5);
  const auto set = ConstraintSet::sparse(30, 2, 4);
  const auto inst = sample_instance(m, set);
  CHECK(contains(set, inst.truth_left, 1e-8));
  CHECK_THROWS_AS(sample_instance(m, ConstraintSet::non_negative(30, 2), Frame(MatrixXd(-Frame::canonical(30, 2).matrix()))),
                  Error);
  const auto clustering = spec_of(ModelFamily::Clustering, 2.0, 1.0, 6);
  CHECK_THROWS_AS(sample_instance(clustering, ConstraintSet::unconstrained(40, 1)), Error);
}

TEST_CASE("clustering labels and signal strength") {
  const ModelSpec m = spec_of(ModelFamily::Clustering, 7.0, 1e-12, 8);
  const auto inst = sample_instance(m, free_set(m));
  CHECK((inst.labels.array().abs() == 1.0).all());
  CHECK((inst.labels / std::sqrt(40.0) - inst.truth_left.matrix().col(0)).cwiseAbs().maxCoeff() < 1e-15);
  const Eigen::JacobiSVD<MatrixXd> svd(inst.observation);
  CHECK(svd.singularValues()(0) == doctest::Approx(7.0).epsilon(1e-9));
}

TEST_CASE("wishart sample covariance follows the law of large numbers") {
  ModelSpec m;
  m.family = ModelFamily::Wishart;
  m.n = 50000;
  m.p = 5;
  m.spectrum = SpectrumSpec<double>::flat(1, 2.0);
  m.noise_sd = 1.0;
  m.seed = 9;
  const auto inst = sample_instance(m, ConstraintSet::unconstrained(5, 1));
  const MatrixXd target = spiked_cov(inst.truth_left.matrix(), 2.0, 1.0);
  CHECK((sample_covariance(inst.observation) - target).norm() <= 0.05 * target.norm());
  CHECK((build_objective_matrix(inst, ModelFamily::Wishart) - target).norm() <= 0.05 * target.norm());
}

TEST_CASE("wishart mean shifts the rows") {
  ModelSpec m;
  m.family = ModelFamily::Wishart;
  m.n = 20000;
  m.p = 3;
  m.spectrum = SpectrumSpec<double>::flat(1, 1.0);
  m.mean = VectorXd::Constant(3, 5.0);
  m.seed = 10;
  const auto inst = sample_instance(m, ConstraintSet::unconstrained(3, 1));
  CHECK((inst.observation.colwise().mean().transpose() - m.mean).cwiseAbs().maxCoeff() < 0.05);
}

TEST_CASE("denoising noise has variance sigma squared") {
  ModelSpec m;
  m.family = ModelFamily::Denoising;
  m.p1 = 1000;
  m.p2 = 1000;
  m.spectrum = SpectrumSpec<double>::flat(1, 1e-9);
  m.noise_sd = 1.5;
  m.seed = 12;
  const auto inst = sample_instance(m, ConstraintSet::unconstrained(1000, 1));
  const double s2 = oracle::second_moment(inst.observation);
  // sd of a χ²₁·σ² draw is √2σ²; the standard error over 10⁶ entries is √2σ²/1000.
  CHECK(std::abs(s2 - 2.25) <= 3.0 * std::sqrt(2.0) * 2.25 / 1000.0);
}

TEST_CASE("sample covariance") {
  MatrixXd same(3, 2);
  same << 1, 2, 1, 2, 1, 2;
  CHECK(sample_covariance(same).cwiseAbs().maxCoeff() == 0.0);

  MatrixXd pair(2, 3);
  pair << 1, -2, 3, -1, 2, -3;
  const VectorXd a = pair.row(0).transpose();
  CHECK((sample_covariance(pair) - a * a.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(sample_covariance(MatrixXd::Ones(1, 3)), Error);

  Rng rng(13);
  const int n = 40000;
  MatrixXd chol(3, 3);
  chol << 1, 0, 0, 0.5, 1, 0, -0.3, 0.2, 0.7;
  const MatrixXd sigma = chol * chol.transpose();
  const MatrixXd rows = (chol * rng.gaussian(3, n)).transpose();
  const MatrixXd cov = sample_covariance(rows);
  CHECK((cov - (1.0 - 1.0 / n) * sigma).norm() <= 0.05 * sigma.norm());
  CHECK(Eigen::SelfAdjointEigenSolver<MatrixXd>(cov).eigenvalues().minCoeff() >= -1e-10);
}

TEST_CASE("objective matrices in the noiseless limit") {
  const ModelSpec d = spec_of(ModelFamily::Denoising, 3.0, 1e-300, 14);
  const auto di = sample_instance(d, free_set(d));
  const MatrixXd u = di.truth_left.matrix();
  CHECK((build_objective_matrix(di, ModelFamily::Denoising) - 9.0 * u * u.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(build_objective_matrix(di, ModelFamily::Wigner), Error);

  const ModelSpec w = spec_of(ModelFamily::Wigner, 3.0, 1e-300, 15);
  const auto wi = sample_instance(w, free_set(w));
  const MatrixXd uw = wi.truth_left.matrix();
  CHECK((build_objective_matrix(wi, ModelFamily::Wigner) - 3.0 * uw * uw.transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("spiked wishart KL closed form") {
  const Frame e1 = Frame::canonical(3, 1);
  MatrixXd e2m = MatrixXd::Zero(3, 1);
  e2m(1, 0) = 1;
  const Frame e2(e2m);
  CHECK(kl_spiked_wishart(e1, e1, 1.0, 1.0, 10) == 0.0);
  CHECK(kl_spiked_wishart(e1, e2, 1.0, 1.0, 10) == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(kl_spiked_wishart(e1, e2, 1.0, 1.0, 20) == 2.0 * kl_spiked_wishart(e1, e2, 1.0, 1.0, 10));
  // The same value from the generic formula: n copies of one row.
  const double generic = 10.0 * kl_gaussian_generic(VectorXd::Zero(3), spiked_cov(e1.matrix(), 1.0, 1.0),
                                                     VectorXd::Zero(3), spiked_cov(e2.matrix(), 1.0, 1.0));
  CHECK(generic == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("spiked wishart KL agrees with the generic Gaussian KL") {
  Rng rng(16);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = 2 + Eigen::Index(rng.below(19));
    const auto r = 1 + Eigen::Index(rng.below(std::min<std::uint64_t>(3, p - 1)));
    const double t = 0.2 + 5.0 * rng.uniform();
    const double sigma = 0.3 + 2.0 * rng.uniform();
    const Eigen::Index n = 1 + Eigen::Index(rng.below(200));
    const Frame ui(oracle::random_frame(p, r, rng));
    const Frame uj(oracle::random_frame(p, r, rng));
    const double closed = kl_spiked_wishart(ui, uj, t, sigma, n);
    const double generic = double(n) * kl_gaussian_generic(VectorXd::Zero(p), spiked_cov(ui.matrix(), t, sigma),
                                                           VectorXd::Zero(p), spiked_cov(uj.matrix(), t, sigma));
    CHECK(std::abs(closed - generic) <= 1e-8 * std::max(1e-12, std::abs(generic)));
    CHECK(closed == kl_spiked_wishart(uj, ui, t, sigma, n));
    const double cap = double(n) * t * t * double(r) / (2 * sigma * sigma * (sigma * sigma + t));
    CHECK(closed <= cap * (1 + 1e-12));
  }
}

TEST_CASE("generic Gaussian KL") {
  const MatrixXd one = MatrixXd::Identity(1, 1);
  CHECK(kl_gaussian_generic(VectorXd::Zero(1), one, VectorXd::Ones(1), one) == doctest::Approx(0.5));
  Rng rng(17);
  const MatrixXd a = rng.gaussian(4, 4);
  const MatrixXd spd = a * a.transpose() + MatrixXd::Identity(4, 4);
  const VectorXd mu = rng.gaussian(4, 1).col(0);
  CHECK(std::abs(kl_gaussian_generic(mu, spd, mu, spd)) <= 1e-10);
  CHECK(kl_gaussian_generic(mu, spd, VectorXd::Zero(4), MatrixXd::Identity(4, 4)) >= -1e-10);
  MatrixXd singular = MatrixXd::Zero(2, 2);
  singular(0, 0) = 1;
  CHECK_THROWS_AS(kl_gaussian_generic(VectorXd::Zero(2), singular, VectorXd::Zero(2), MatrixXd::Identity(2, 2)), Error);
}

TEST_CASE("denoising KL with a fixed right frame") {
  Rng rng(18);
  const double sigma = 1.3;
  const Frame v0(oracle::random_frame(6, 1, rng));
  const Frame ui(oracle::random_frame(5, 1, rng));
  const Frame uj(oracle::random_frame(5, 1, rng));
  const auto spec = SpectrumSpec<double>::flat(1, 2.0);
  CHECK(kl_denoising_fixed(ui, ui, v0, spec, sigma) <= 1e-20);

  const double c = uj.matrix().col(0).dot(ui.matrix().col(0));
  const VectorXd diff = ui.matrix().col(0) - uj.matrix().col(0) * (c / std::abs(c));
  CHECK(kl_denoising_fixed(ui, uj, v0, spec, sigma) ==
        doctest::Approx(4.0 * diff.squaredNorm() / (2 * sigma * sigma)).epsilon(1e-12));

  // Brute force: vec(Y) ~ N(vec(U'ΓV₀ᵀ), σ²I) for the two aligned means.
  const Frame wi(oracle::random_frame(4, 2, rng));
  const Frame wj(oracle::random_frame(4, 2, rng));
  const Frame v2(oracle::random_frame(3, 2, rng));
  Eigen::VectorXd lambda(2);
  lambda << 3.0, 2.0;
  const SpectrumSpec<double> spec2(lambda, 2.5, 2.0);
  const auto align = procrustes_align(wi, wj);
  const MatrixXd mi = wi.matrix() * lambda.asDiagonal() * v2.matrix().transpose();
  const MatrixXd mj = wj.matrix() * align.rotation * lambda.asDiagonal() * v2.matrix().transpose();
  const VectorXd vi = Eigen::Map<const VectorXd>(mi.data(), mi.size());
  const VectorXd vj = Eigen::Map<const VectorXd>(mj.data(), mj.size());
  const MatrixXd cov = sigma * sigma * MatrixXd::Identity(12, 12);
  CHECK(kl_denoising_fixed(wi, wj, v2, spec2, sigma) ==
        doctest::Approx(kl_gaussian_generic(vi, cov, vj, cov)).epsilon(1e-10));
}
