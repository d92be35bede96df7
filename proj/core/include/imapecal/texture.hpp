// Closed-form MAP texture updates for the five prior families, plus the
// maximum-likelihood hyperparameter updates and the digamma kernel they
// need. Constants 5 and 11 come from the 4-dimensional complex data:
// 5 = kDataDim + 1, 11 = 2*kDataDim + 3.
#pragma once

#include <Eigen/Dense>

#include "imapecal/noise.hpp"

namespace imapecal {

/// Lower clamp for every texture estimate; Laplace and the inverse-Gaussian
/// family reach 0 at q = 0, which would break the next 1/tau weighting.
inline constexpr double kTauFloor = 1e-8;

/// Bracket for the gamma/inverse-gamma shape solve. ln(a) - digamma(a)
/// decreases monotonically to 0, so a degenerate (all-equal) texture sample
/// pushes the root past any finite value; we cap at kShapeMax.
inline constexpr double kShapeMin = 1e-3;
inline constexpr double kShapeMax = 1e3;

/// Cap for the Laplace/inverse-Gaussian rate when the sample degenerates
/// (all tau exactly 1 gives a zero denominator for the IG update).
inline constexpr double kRateMax = 1e6;

/// Psi(x) = d ln Gamma(x) / dx. Upward recurrence to x >= 6 followed by the
/// asymptotic series; absolute error below 1e-10. Throws on x <= 0.
double digamma(double x);

// MAP texture estimates given the quadratic form q = u^H Omega^{-1} u.
// Each is the positive stationary point of the per-baseline joint
// objective; all results are clamped below at kTauFloor.
double tau_k(double a, double b, double q);
double tau_student(double a, double b, double q);
double tau_cauchy(double b, double q);
double tau_laplace(double lambda, double q);
double tau_igcg(double lambda, double q);

/// Dispatch on the prior family; GaussianFixed returns 1.
double update_texture(const TexturePriorModel& prior, double q);
Eigen::VectorXd update_textures(const TexturePriorModel& prior,
                                const Eigen::VectorXd& quadratic);

/// Result of a hyperparameter ML update. `clamped` marks the degenerate
/// sample path (texture variance collapsed; effectively Gaussian).
struct HyperUpdate {
  TexturePriorModel model;
  bool clamped = false;
};

HyperUpdate hyper_k(const Eigen::VectorXd& tau);
HyperUpdate hyper_student(const Eigen::VectorXd& tau);
HyperUpdate hyper_laplace(const Eigen::VectorXd& tau);
HyperUpdate hyper_igcg(const Eigen::VectorXd& tau);

/// Dispatch on the current family. Cauchy keeps a = 1 and refreshes b with
/// the inverse-gamma scale update; GaussianFixed is returned unchanged.
HyperUpdate update_hyper(const TexturePriorModel& prior,
                         const Eigen::VectorXd& tau);

}  // namespace imapecal
