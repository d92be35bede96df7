// Damped weighted Gauss-Newton estimation of the calibration parameters
// given fixed texture and speckle covariance, plus a consensus-ADMM layer
// that ties per-frequency solutions to a smooth polynomial frequency model.
#pragma once

#include <vector>

#include "imapecal/jones.hpp"
#include "imapecal/likelihood.hpp"

namespace imapecal {

struct SolverOptions {
  int max_iterations = 50;
  double gradient_tolerance = 1e-10;  // relative to the current objective
  double step_tolerance = 1e-10;      // relative to the parameter norm
  double initial_damping = 1e-3;
  double damping_up = 10.0;
  double damping_down = 0.1;
  double max_damping = 1e12;
  bool keep_trace = false;

  void validate() const;
};

struct SolverTraceEntry {
  int iteration = 0;
  double objective = 0.0;
  double gradient_norm = 0.0;  // infinity norm
  double damping = 0.0;
  double step_norm = 0.0;
  bool accepted = false;
};

struct SolveResult {
  ThetaVector theta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<SolverTraceEntry> trace;
};

/// Sum over baselines of q_pq(theta) / tau_pq: the theta-dependent part of
/// the negative conditional log-likelihood (constants dropped).
double objective(const ThetaVector& theta, const VisibilitySet& x,
                 const Eigen::VectorXd& tau, const SpeckleFactor& factor,
                 const Scene& scene, double frequency_hz);

/// Analytic gradient of `objective` in the packed real parameterization.
Eigen::VectorXd gradient(const ThetaVector& theta, const VisibilitySet& x,
                         const Eigen::VectorXd& tau,
                         const SpeckleFactor& factor, const Scene& scene,
                         double frequency_hz);

/// Levenberg-Marquardt on the whitened residual stack {L^{-1} u_pq /
/// sqrt(tau_pq)}, accepting only objective-decreasing steps. Marquardt
/// diagonal scaling makes the iterates invariant to a uniform rescaling of
/// tau. An optional proximal term (rho/2) |theta - target|^2 supports the
/// consensus layer; rho = 0 disables it.
SolveResult solve_theta(const VisibilitySet& x, const Eigen::VectorXd& tau,
                        const SpeckleFactor& factor, const Scene& scene,
                        double frequency_hz, const ThetaVector& theta_init,
                        const SolverOptions& options = {},
                        const Eigen::VectorXd* prox_target = nullptr,
                        double prox_rho = 0.0);

/// Polynomial consensus model over frequencies: column f of the basis holds
/// {1, ft, ft^2, ..., ft^P} with ft the frequency mapped affinely to
/// [-1, 1]. Requires full column rank (F >= P + 1 distinct frequencies).
class ConsensusModel {
 public:
  ConsensusModel(const std::vector<double>& frequencies_hz, int order,
                 double rho);

  int order() const { return order_; }
  double rho() const { return rho_; }
  int frequency_count() const { return static_cast<int>(basis_.rows()); }
  const Eigen::MatrixXd& basis() const { return basis_; }

  /// B_f z for one frequency: the model-implied parameter vector.
  Eigen::VectorXd evaluate(int f, const Eigen::MatrixXd& z) const;
  /// Least-squares fit of coefficients to per-frequency parameter rows
  /// (F x n); returns (P+1) x n.
  Eigen::MatrixXd fit(const Eigen::MatrixXd& rows) const;

 private:
  int order_;
  double rho_;
  Eigen::MatrixXd basis_;  // F x (P+1)
};

struct ConsensusOptions {
  int max_outer = 200;
  double tolerance = 1e-8;  // on max_f |theta_f - B_f z|
  SolverOptions inner;

  ConsensusOptions() { inner.max_iterations = 8; }
};

struct AdmmTraceEntry {
  int iteration = 0;
  double primal_residual = 0.0;  // max_f |theta_f - B_f z|
  double dual_residual = 0.0;    // rho * |B (z - z_prev)|
};

struct AdmmResult {
  std::vector<ThetaVector> theta;  // per frequency
  Eigen::MatrixXd coefficients;    // (P+1) x n
  int iterations = 0;
  bool converged = false;
  std::vector<AdmmTraceEntry> trace;
};

/// Consensus ADMM across frequencies: per-frequency proximal solves, a
/// least-squares coefficient update, then the dual ascent step.
AdmmResult consensus_admm(const std::vector<VisibilitySet>& x,
                          const std::vector<Eigen::VectorXd>& tau,
                          const std::vector<SpeckleFactor>& factors,
                          const Scene& scene,
                          const std::vector<double>& frequencies_hz,
                          const ConsensusModel& model,
                          const std::vector<ThetaVector>& theta_init,
                          const ConsensusOptions& options = {});

}  // namespace imapecal
