// Residuals, conditional and joint log-likelihood, and the speckle
// covariance update with its unit-trace normalization.
#pragma once

#include "imapecal/common.hpp"
#include "imapecal/jones.hpp"
#include "imapecal/noise.hpp"
#include "imapecal/scene.hpp"

namespace imapecal {

/// Ridged Hermitian factorization of a speckle covariance, shared by the
/// quadratic forms, the whitened residuals of the solver and the
/// log-determinant. The inverse is never formed explicitly.
class SpeckleFactor {
 public:
  explicit SpeckleFactor(const Mat4& omega);

  const Mat4& omega() const { return omega_; }
  double log_det() const { return log_det_; }
  /// u^H omega^{-1} u, nonnegative for PSD omega.
  double quadratic_form(const Vec4& u) const;
  /// L^{-1} u, so that |whiten(u)|^2 equals the quadratic form.
  Vec4 whiten(const Vec4& u) const;
  double condition_number() const;

 private:
  Mat4 omega_;
  Eigen::LLT<Mat4> llt_;
  double log_det_ = 0.0;
};

/// Per-baseline residuals u_pq together with their cached quadratic forms.
struct ResidualSet {
  Eigen::Matrix4Xcd u;         // 4 x B
  Eigen::VectorXd quadratic;   // q_pq = u^H omega^{-1} u

  int baseline_count() const { return static_cast<int>(u.cols()); }
};

/// u_pq = x_pq - predicted visibility, plus quadratic forms under `factor`.
ResidualSet residuals(const VisibilitySet& x, const ThetaVector& theta,
                      const Scene& scene, double frequency_hz,
                      const SpeckleFactor& factor);
ResidualSet residuals(const VisibilitySet& x, const VisibilitySet& predicted,
                      const SpeckleFactor& factor);

/// Conditional log-likelihood
///   L_C = -sum_pq [ q_pq / tau_pq + N ln(pi) + N ln(tau_pq) + ln|omega| ]
/// with N = kDataDim.
double log_likelihood_conditional(const ResidualSet& res,
                                  const Eigen::VectorXd& tau,
                                  const SpeckleFactor& factor);
double log_likelihood_conditional(const ResidualSet& res,
                                  const Eigen::VectorXd& tau, const Mat4& omega);

/// L_J = L_C + sum_pq ln p(tau_pq; hyper) for the active prior family.
double log_likelihood_joint(double conditional, const Eigen::VectorXd& tau,
                            const TexturePriorModel& prior);

/// Result of the speckle update. `omega` is trace-normalized; `trace_raw`
/// is the trace of the unnormalized average, so the pre-normalization
/// matrix is trace_raw * omega. `degenerate` marks an all-zero residual
/// set, in which case omega falls back to I/4.
struct SpeckleUpdate {
  Mat4 omega;
  double trace_raw = 0.0;
  bool degenerate = false;
};

/// omega = (1/B) sum_pq u u^H / tau_pq, normalized to unit trace.
SpeckleUpdate update_speckle(const ResidualSet& res, const Eigen::VectorXd& tau);

}  // namespace imapecal
