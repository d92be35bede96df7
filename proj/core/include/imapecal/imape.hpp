// Outer calibration loop: block-coordinate ascent over the parameter
// vector, the texture prior hyperparameters, the speckle covariance and the
// per-baseline textures, repeated until the parameter estimate settles.
// Also hosts the plain Gaussian least-squares baseline.
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "imapecal/likelihood.hpp"
#include "imapecal/solver.hpp"
#include "imapecal/texture.hpp"

namespace imapecal {

/// Joint-likelihood values around one cycle's block updates, summed over
/// frequencies. Each block update must not decrease the running value,
/// except the trace normalization (`after_speckle` vs `after_speckle_raw`),
/// which trades likelihood for identifiability.
struct CycleDiagnostics {
  int cycle = 0;
  double theta_step = 0.0;  // max over f of |dtheta| / (1 + |theta_old|)
  double joint_after_solve = 0.0;
  double joint_after_hyper = 0.0;
  double joint_after_speckle_raw = 0.0;
  double joint_after_speckle = 0.0;
  double joint_after_texture = 0.0;
  double omega_condition = 0.0;  // max over f
  bool hyper_clamped = false;
  // Hyperparameters of the first frequency after this cycle's update.
  double hyper_a = 0.0;
  double hyper_b = 0.0;
  double hyper_lambda = 0.0;
};

struct CalibrationState {
  std::vector<double> frequencies;
  std::vector<ThetaVector> theta;          // per frequency
  std::vector<Eigen::VectorXd> tau;        // per frequency, per baseline
  std::vector<Mat4> omega;                 // per frequency, unit trace
  std::vector<TexturePriorModel> hyper;    // per frequency
  int cycle = 0;
  bool converged = false;
  double last_theta_step = 0.0;
  std::vector<CycleDiagnostics> diagnostics;

  int frequency_count() const { return static_cast<int>(frequencies.size()); }
};

struct ImapeOptions {
  int max_cycles = 50;
  double theta_tolerance = 1e-6;
  SolverOptions solver;
  /// Empty: identity (cold) start; otherwise one init per frequency.
  std::vector<ThetaVector> theta_init;
  /// Keep omega pinned at I/4 (the Gaussian least-squares baseline).
  bool freeze_speckle = false;
  /// Tie frequencies together with consensus ADMM inside the theta step.
  bool use_consensus = false;
  int consensus_order = 2;
  double consensus_rho = 1.0;
  ConsensusOptions consensus;
  bool keep_diagnostics = true;
};

/// Fresh state: theta from options (or identity), omega = I/4, tau = 1,
/// hyperparameters copied from the prior.
CalibrationState imape_init(const Scene& scene,
                            const std::vector<double>& frequencies_hz,
                            const TexturePriorModel& prior,
                            const ImapeOptions& options = {});

/// One full cycle in place: theta solve, hyperparameter update, speckle
/// update (skipped when frozen), texture update. GaussianFixed priors skip
/// the hyperparameter and texture blocks.
void imape_cycle(CalibrationState& state, const std::vector<VisibilitySet>& x,
                 const Scene& scene, const ImapeOptions& options = {});

/// init + cycles until the parameter step drops below theta_tolerance or
/// max_cycles is reached.
CalibrationState run_imape(const std::vector<VisibilitySet>& x,
                           const Scene& scene,
                           const std::vector<double>& frequencies_hz,
                           const TexturePriorModel& prior,
                           const ImapeOptions& options = {});

/// Non-robust baseline: per-frequency least squares with unit texture and
/// omega pinned at I/4.
CalibrationState run_gaussian_ls(const std::vector<VisibilitySet>& x,
                                 const Scene& scene,
                                 const std::vector<double>& frequencies_hz,
                                 const ImapeOptions& options = {});

/// Checkpoint round-trip; parse(serialize(s)) replays to an identical next
/// cycle.
std::string serialize_state(const CalibrationState& state);
CalibrationState parse_state(std::string_view text);

}  // namespace imapecal
