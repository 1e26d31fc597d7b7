#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include <Eigen/Dense>

#include "subest/constraints.hpp"
#include "subest/geometry.hpp"

namespace subest {

enum class ModelFamily { Denoising, Wishart, Wigner, Clustering };

std::string_view to_string(ModelFamily family);
ModelFamily parse_family(std::string_view text);

/// Generative model and its dimensions.
///
/// Denoising observes a p1×p2 matrix UΓVᵀ + Z. Wishart observes n rows of
/// N(μ, UΓUᵀ + σ²I) in R^p. Wigner observes the symmetric p×p matrix
/// UΓUᵀ + Z. Clustering observes the n×p matrix hθᵀ + Z with labels h ∈ {±1}ⁿ,
/// so U = h/√n lives in R^n and √n‖θ‖ equals the leading spectrum value.
struct ModelSpec {
  ModelFamily family = ModelFamily::Denoising;
  Eigen::Index p1 = 0;
  Eigen::Index p2 = 0;
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  SpectrumSpec<double> spectrum = SpectrumSpec<double>::flat(1, 1.0);
  double noise_sd = 1.0;
  Eigen::VectorXd mean;  // Wishart only; empty means zero
  std::uint64_t seed = 0;

  Eigen::Index rank() const { return spectrum.rank(); }
  /// Row count of the truth frame U.
  Eigen::Index ambient_dim() const;
  Eigen::Index observation_rows() const;
  Eigen::Index observation_cols() const;
  void validate() const;
};

struct SampledInstance {
  ModelFamily family;
  Eigen::MatrixXd observation;
  Frame truth_left;
  std::optional<Frame> truth_right;
  SpectrumSpec<double> truth_spectrum;
  Eigen::VectorXd labels;  // Clustering only
};

/// Draws one observation. The truth frame is `truth` when given (it must lie
/// in `set`), otherwise a random member of `set`. Denoising accepts a fixed
/// right frame through `right`; otherwise V is Haar.
///
/// Sub-streams of spec.seed: 0 for the truth, 1 for the right frame, 2 for the
/// noise. Changing σ or t therefore keeps U, V and the standardized noise fixed.
SampledInstance sample_instance(const ModelSpec& spec, const ConstraintSet& set,
                                const std::optional<Frame>& truth = std::nullopt,
                                const std::optional<Frame>& right = std::nullopt);

/// (1/n) Σ (Yᵢ - Ȳ)(Yᵢ - Ȳ)ᵀ over the rows of `rows`.
Eigen::MatrixXd sample_covariance(const Eigen::MatrixXd& rows);

/// KL divergence between the n-fold spiked Wishart laws with covariances
/// σ²I + t·UᵢUᵢᵀ and σ²I + t·UⱼUⱼᵀ.
double kl_spiked_wishart(const Frame& ui, const Frame& uj, double t, double sigma, Eigen::Index n);

/// D(N(μ₀, Σ₀) ‖ N(μ₁, Σ₁)).
double kl_gaussian_generic(const Eigen::VectorXd& mean0, const Eigen::MatrixXd& cov0,
                           const Eigen::VectorXd& mean1, const Eigen::MatrixXd& cov1);

/// ‖(Uᵢ - UⱼO)ΓV₀ᵀ‖_F² / (2σ²), with O the Procrustes rotation aligning Uⱼ to Uᵢ.
double kl_denoising_fixed(const Frame& ui, const Frame& uj, const Frame& v0,
                          const SpectrumSpec<double>& spectrum, double sigma);

}  // namespace subest
