// Compound-Gaussian noise: n = sqrt(texture) * speckle, with the texture
// drawn from one of five prior families, plus the "realistic" contamination
// recipe (weak unmodeled sources + white Gaussian noise).
#pragma once

#include <string>

#include "imapecal/common.hpp"
#include "imapecal/jones.hpp"
#include "imapecal/rng.hpp"
#include "imapecal/scene.hpp"

namespace imapecal {

enum class TextureFamily {
  KGamma,             // gamma texture, shape a scale b
  StudentT,           // inverse-gamma texture, shape a scale b
  Cauchy,             // inverse-gamma with a pinned to 1, scale b
  Laplace,            // exponential texture, rate lambda
  InverseGaussianCG,  // inverse-Gaussian texture, unit mean, shape lambda
  GaussianFixed       // texture degenerate at 1
};

/// Prior family plus hyperparameters. Only the fields used by the active
/// family are meaningful.
struct TexturePriorModel {
  TextureFamily family = TextureFamily::GaussianFixed;
  double a = 2.0;
  double b = 1.0;
  double lambda = 1.0;

  static TexturePriorModel k_gamma(double a, double b);
  static TexturePriorModel student_t(double a, double b);
  static TexturePriorModel cauchy(double b);
  static TexturePriorModel laplace(double lambda);
  static TexturePriorModel inverse_gaussian_cg(double lambda);
  static TexturePriorModel gaussian_fixed();

  /// True when the family carries no texture randomness (tau = 1).
  bool degenerate() const { return family == TextureFamily::GaussianFixed; }
  void validate() const;
};

const char* family_name(TextureFamily family);
TextureFamily family_from_name(const std::string& name);

/// ln p(tau; hyper) of the active family; GaussianFixed contributes 0.
double log_prior_density(const TexturePriorModel& prior, double tau);

/// One texture draw from the active prior.
double sample_texture(const TexturePriorModel& prior, RandomStream& rng);

/// Hermitian factor L with L L^H = omega, eigenvalue-based so positive
/// semidefinite inputs (including rank-deficient ones) are accepted.
/// Throws on indefinite input.
Mat4 hermitian_factor(const Mat4& omega);

/// sqrt(tau) * L * z with z a standard circular complex Gaussian 4-vector.
Vec4 sample_noise(const TexturePriorModel& prior, const Mat4& omega,
                  RandomStream& rng);

/// Adds the background-source contribution of the scene plus white circular
/// Gaussian noise with per-component variance sigma^2.
VisibilitySet contaminate(const VisibilitySet& noiseless, const Scene& scene,
                          double frequency_hz, double sigma, RandomStream& rng);

/// Noiseless visibilities of the background population alone, synthesized
/// with unit gains and the scene's per-source jitter angles.
VisibilitySet background_visibilities(const Scene& scene, double frequency_hz);

/// SNR convention used by the sweep harness:
///   snr = sum_calib flux^2 / (sum_bg flux^2 + 4 B sigma^2 kappa).
/// `kappa` weights the white-noise term; see ExperimentConfig.
double snr_from_sigma(const Scene& scene, double sigma, double kappa);

/// Inverts the SNR convention for a target in dB. Returns 0 when the
/// background power alone already exceeds the target.
double sigma_for_snr(const Scene& scene, double snr_db, double kappa);

}  // namespace imapecal
