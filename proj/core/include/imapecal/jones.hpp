// Jones-chain forward model: per source/antenna the chain is
// gain * known effects * ionospheric phase * Faraday rotation, and a
// baseline measures vec(J_p C J_q^H) summed over calibrator sources.
#pragma once

#include <string>
#include <string_view>

#include "imapecal/common.hpp"
#include "imapecal/rng.hpp"
#include "imapecal/scene.hpp"

namespace imapecal {

/// Per-frequency calibration parameters. Angles are stored in radians and
/// gains as Cartesian complex pairs, so the real parameter vector used by
/// the solver is unconstrained; total real dimension is 2*D*M + 4*M.
struct ThetaVector {
  Eigen::MatrixXd faraday;     // D x M
  Eigen::MatrixXd iono_phase;  // D x M
  Eigen::Matrix2Xcd gains;     // 2 x M, diagonal gain entries per antenna

  static ThetaVector zero(int D, int M);
  /// Identity chain: zero angles, unit gains.
  static ThetaVector identity(int D, int M);

  int source_count() const { return static_cast<int>(faraday.rows()); }
  int antenna_count() const { return static_cast<int>(faraday.cols()); }
  int real_dimension() const {
    return 2 * source_count() * antenna_count() + 4 * antenna_count();
  }

  /// Packing used by the solver: faraday block, phase block (both source-
  /// major), then Re/Im gain pairs per antenna.
  Eigen::VectorXd to_real() const;
  static ThetaVector from_real(const Eigen::VectorXd& x, int D, int M);

  /// Wraps all angle entries to (-pi, pi].
  void normalize_angles();
};

/// Random draw of perturbation effects, used to generate ground truth.
struct ThetaDrawOptions {
  double faraday_halfwidth = kPi / 2;
  double phase_halfwidth = kPi;
  double gain_spread = 0.15;  // gains = 1 + spread * (N + jN) per component
};
ThetaVector random_theta(int D, int M, RandomStream& rng,
                         const ThetaDrawOptions& options = {});

/// theta + a random real-space direction scaled to exactly `norm`.
ThetaVector perturb_theta(const ThetaVector& theta, double norm,
                          RandomStream& rng);

/// Faraday rotation [[cos, -sin], [sin, cos]] and its derivative in the angle.
Mat2 faraday_matrix(double angle);
Mat2 faraday_matrix_derivative(double angle);

/// Full chain G_p * H_{i,p} * exp(j phi) * F(theta) for one source/antenna.
Mat2 compose_jones(const ThetaVector& theta, const Mat2& known, int source,
                   int antenna);

/// All cross-correlations at one frequency, one 4-vector per baseline in
/// the (0,1), (0,2), ... baseline order.
struct VisibilitySet {
  Eigen::Matrix4Xcd data;  // 4 x B

  int baseline_count() const { return static_cast<int>(data.cols()); }
  /// The 4B stacked observation vector.
  Eigen::VectorXcd stacked() const;
};

/// Noiseless visibility of baseline (p, q), p < q: sum over calibrators of
/// vec(J_p C J_q^H), computed through the 2x2 product form.
Vec4 predict_visibility(const ThetaVector& theta, const Scene& scene,
                        double frequency_hz, int p, int q);

/// Noiseless visibilities for every baseline.
VisibilitySet predict_all(const ThetaVector& theta, const Scene& scene,
                          double frequency_hz);

/// Caches the known per-source/antenna effects and coherencies of a scene at
/// one frequency so repeated predictions only rebuild the theta-dependent
/// factors. Used heavily by the solver.
class ForwardModel {
 public:
  ForwardModel(const Scene& scene, double frequency_hz);

  const Scene& scene() const { return *scene_; }
  double frequency() const { return frequency_hz_; }
  int source_count() const { return D_; }
  int antenna_count() const { return M_; }
  int baseline_count() const { return B_; }

  const Mat2& known(int source, int antenna) const {
    return known_[source * M_ + antenna];
  }
  double source_flux(int source) const { return flux_[source]; }

  VisibilitySet predict(const ThetaVector& theta) const;

 private:
  const Scene* scene_;
  double frequency_hz_;
  int D_, M_, B_;
  std::vector<Mat2> known_;  // D*M, source-major
  std::vector<double> flux_;
};

/// Labeled one-line-per-parameter text round-trip for ground-truth dumps.
std::string serialize_theta(const ThetaVector& theta);
ThetaVector parse_theta(std::string_view text);

/// One line of 8 reals per baseline (re/im pairs of the 4 components).
std::string serialize_visibilities(const VisibilitySet& x);
VisibilitySet parse_visibilities(std::string_view text);

}  // namespace imapecal
