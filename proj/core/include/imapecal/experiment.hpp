// Monte-Carlo sweep harness: builds scenes, synthesizes contaminated data
// over an SNR grid, runs every configured estimator, and aggregates squared
// errors of tracked parameters into MSE tables and plot scripts.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "imapecal/config.hpp"
#include "imapecal/imape.hpp"
#include "imapecal/scene.hpp"

namespace imapecal {

/// One scalar component of the parameter vector whose squared error the
/// sweep records.
struct TrackedParameter {
  enum class Kind { GainReal, GainImag, Faraday, IonoPhase };
  Kind kind = Kind::GainImag;
  int source = 0;     // angle kinds
  int antenna = 0;
  int component = 0;  // gain kinds

  std::string label() const;
  double extract(const ThetaVector& theta) const;
  void validate(int D, int M) const;

  /// "gain_im:3:1" (antenna:component), "gain_re:...", "phase:1:2"
  /// (source:antenna), "faraday:0:1".
  static TrackedParameter parse(const std::string& text);
};

/// Estimator ids understood by the sweep: "gaussian_ls" plus "imape_<f>"
/// with <f> one of the prior short names (k, student, cauchy, laplace,
/// igcg, gaussian).
bool is_known_estimator(const std::string& id);
/// Initial prior model for an "imape_*" id; throws for "gaussian_ls".
TexturePriorModel estimator_prior(const std::string& id);

struct ExperimentConfig {
  // scene
  int antennas = 8;
  int calibrators = 2;
  int background = 4;
  std::uint64_t seed = 1;
  SceneOptions scene;
  // data
  std::vector<double> frequencies_hz = {140e6, 145e6, 150e6, 155e6};
  double snr_kappa = 1.0;  // weight of the white-noise term in the SNR
  // sweep
  std::vector<double> snr_db = {-10, -5, 0, 5, 10, 15, 20, 25, 30};
  int trials = 200;
  std::vector<std::string> estimators = {"gaussian_ls", "imape_k",
                                         "imape_student", "imape_cauchy",
                                         "imape_laplace", "imape_igcg"};
  std::vector<TrackedParameter> tracked;
  // estimation
  ImapeOptions imape;
  std::string init_mode = "cold";  // "cold" or "perturb" (truth + noise)
  double init_perturbation = 1e-2;
  // output
  std::string out_dir = ".";
  bool checkpoint = false;
  int threads = 1;
  bool verbose = false;

  ExperimentConfig();

  static ExperimentConfig from_config(const ConfigFile& file);
  void validate() const;
  /// Metadata dump recording every effective setting.
  std::string describe() const;
};

struct ResultRow {
  std::string estimator;
  double snr_db = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;  // replays this trial in isolation
  bool failed = false;
  bool converged = false;
  int cycles = 0;
  std::vector<double> squared_error;  // one per tracked parameter
  double wall_seconds = 0.0;          // kept out of the deterministic CSV
};

/// Removes the gauge freedoms (per-direction constant shifts of both angle
/// blocks, per-antenna phase trades between the ionospheric phases and the
/// gain pair, and per-entry 2 pi angle branches) by minimizing squared
/// error against the truth; never returns something worse than the input.
ThetaVector align(const ThetaVector& estimate, const ThetaVector& truth);

/// Sub-seed of trial `trial` at SNR-grid position `snr_index`.
std::uint64_t trial_seed(std::uint64_t master, int snr_index, int trial);

/// One trial at one SNR point: redraws the background, draws per-frequency
/// truths, synthesizes contaminated data once, then runs every estimator on
/// the same data. Returns one row per estimator.
std::vector<ResultRow> run_trial(const ExperimentConfig& cfg,
                                 const Scene& base_scene, double snr_db,
                                 std::uint64_t seed);

/// Full sweep; rows ordered by (SNR index, trial, estimator) regardless of
/// threading.
std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg);

/// Deterministic CSV (no timing column; wall times go in a sidecar).
std::string rows_to_csv(const std::vector<ResultRow>& rows,
                        const std::vector<std::string>& error_labels);
std::vector<ResultRow> rows_from_csv(std::string_view text,
                                     std::vector<std::string>* error_labels);
std::string timing_to_csv(const std::vector<ResultRow>& rows);

struct SummaryEntry {
  std::string estimator;
  double snr_db = 0.0;
  int trials = 0;  // non-failed rows
  int failed = 0;
  std::vector<double> mse_mean;
  std::vector<double> mse_median;
};

/// Mean/median squared error per (estimator, SNR); estimator order follows
/// first appearance, SNR ascending.
std::vector<SummaryEntry> summarize(const std::vector<ResultRow>& rows);

std::string summary_to_csv(const std::vector<SummaryEntry>& summary,
                           const std::vector<std::string>& error_labels);
/// Median-MSE table for one tracked parameter: snr_db column then one
/// column per estimator. Suitable for direct plotting.
std::string median_table_csv(const std::vector<SummaryEntry>& summary,
                             size_t parameter_index);
/// Standalone gnuplot script rendering `table_csv` (as produced above) to a
/// PNG on log-scale MSE axes.
std::string gnuplot_script(const std::string& table_csv_name,
                           const std::string& output_png_name,
                           const std::string& parameter_label);

}  // namespace imapecal
