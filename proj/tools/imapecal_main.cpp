// Command-line front end: synthesize datasets, run single calibrations,
// drive Monte-Carlo SNR sweeps and turn result tables into MSE summaries
// and plot scripts.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "imapecal/experiment.hpp"
#include "imapecal/imape.hpp"
#include "imapecal/noise.hpp"

namespace fs = std::filesystem;
using namespace imapecal;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
}

ExperimentConfig load_config(const std::string& config_path) {
  if (config_path.empty()) return ExperimentConfig{};
  return ExperimentConfig::from_config(ConfigFile::load(config_path));
}

std::string frequencies_text(const std::vector<double>& hz) {
  std::string out = "frequencies v1 " + std::to_string(hz.size()) + '\n';
  for (size_t i = 0; i < hz.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu %.17g\n", i, hz[i]);
    out += buf;
  }
  return out;
}

std::vector<double> parse_frequencies(const std::string& text) {
  std::istringstream in(text);
  std::string tag, version;
  size_t count = 0;
  in >> tag >> version >> count;
  if (!in || tag != "frequencies" || version != "v1") {
    throw std::runtime_error("bad frequencies file");
  }
  std::vector<double> hz(count);
  for (size_t i = 0; i < count; ++i) {
    size_t idx = 0;
    in >> idx >> hz[i];
  }
  if (!in) throw std::runtime_error("truncated frequencies file");
  return hz;
}

void print_cycle_log(const CalibrationState& state) {
  for (const CycleDiagnostics& d : state.diagnostics) {
    std::fprintf(stderr,
                 "cycle %d joint %.10g step %.3e hyper a %.6g b %.6g lambda "
                 "%.6g omega_cond %.4g%s\n",
                 d.cycle, d.joint_after_texture, d.theta_step, d.hyper_a,
                 d.hyper_b, d.hyper_lambda, d.omega_condition,
                 d.hyper_clamped ? " (hyper clamped)" : "");
  }
}

int cmd_simulate(const std::string& config_path, std::uint64_t seed,
                 bool seed_set, double snr_db, const std::string& out_dir,
                 bool verbose) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed_set) cfg.seed = seed;
  fs::create_directories(out_dir);

  const Scene scene = make_scene(cfg.seed, cfg.antennas, cfg.calibrators,
                                 cfg.background, cfg.scene);
  write_file(fs::path(out_dir) / "scene.txt", serialize_scene(scene));
  write_file(fs::path(out_dir) / "frequencies.txt",
             frequencies_text(cfg.frequencies_hz));

  const double sigma = sigma_for_snr(scene, snr_db, cfg.snr_kappa);
  const int D = scene.calibrator_count();
  const int M = scene.antenna_count();
  for (size_t f = 0; f < cfg.frequencies_hz.size(); ++f) {
    RandomStream rng_truth = RandomStream::substream(cfg.seed, 0x712, f);
    const ThetaVector truth = random_theta(D, M, rng_truth);
    const VisibilitySet clean = predict_all(truth, scene, cfg.frequencies_hz[f]);
    RandomStream rng_noise = RandomStream::substream(cfg.seed, 0x401, f);
    const VisibilitySet data =
        contaminate(clean, scene, cfg.frequencies_hz[f], sigma, rng_noise);
    const std::string tag = std::to_string(f);
    write_file(fs::path(out_dir) / ("truth_" + tag + ".theta"),
               serialize_theta(truth));
    write_file(fs::path(out_dir) / ("clean_" + tag + ".vis"),
               serialize_visibilities(clean));
    write_file(fs::path(out_dir) / ("data_" + tag + ".vis"),
               serialize_visibilities(data));
  }
  {
    std::ostringstream info;
    info << "snr_db " << snr_db << "\nsigma " << sigma << '\n' << cfg.describe();
    write_file(fs::path(out_dir) / "sim_info.txt", info.str());
  }
  if (verbose) {
    std::fprintf(stderr, "simulate: wrote %zu channels to %s (sigma %.6g)\n",
                 cfg.frequencies_hz.size(), out_dir.c_str(), sigma);
  }
  return 0;
}

int cmd_calibrate(const std::string& config_path, const std::string& in_dir,
                  const std::string& prior_name, bool least_squares,
                  const std::string& out_dir, bool checkpoint, bool verbose) {
  ExperimentConfig cfg = load_config(config_path);
  const Scene scene = parse_scene(read_file(fs::path(in_dir) / "scene.txt"));
  const std::vector<double> frequencies =
      parse_frequencies(read_file(fs::path(in_dir) / "frequencies.txt"));
  std::vector<VisibilitySet> x;
  x.reserve(frequencies.size());
  for (size_t f = 0; f < frequencies.size(); ++f) {
    x.push_back(parse_visibilities(
        read_file(fs::path(in_dir) / ("data_" + std::to_string(f) + ".vis"))));
  }

  ImapeOptions opts = cfg.imape;
  opts.keep_diagnostics = true;
  CalibrationState state;
  if (least_squares) {
    state = run_gaussian_ls(x, scene, frequencies, opts);
  } else {
    state = run_imape(x, scene, frequencies,
                      estimator_prior("imape_" + prior_name), opts);
  }
  if (verbose) print_cycle_log(state);

  const std::string text = serialize_state(state);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "state.txt", text);
    if (checkpoint) {
      write_file(fs::path(out_dir) / "checkpoint.state", text);
    }
  } else {
    std::cout << text;
  }
  std::fprintf(stderr, "calibrate: %s after %d cycles (step %.3e)\n",
               state.converged ? "converged" : "stopped", state.cycle,
               state.last_theta_step);
  return state.converged ? 0 : 2;
}

int cmd_sweep(const std::string& config_path, std::uint64_t seed, bool seed_set,
              const std::vector<double>& snr_grid, int trials,
              const std::string& prior_name, const std::string& out_dir,
              bool checkpoint, int threads, bool verbose) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed_set) cfg.seed = seed;
  if (!snr_grid.empty()) cfg.snr_db = snr_grid;
  if (trials > 0) cfg.trials = trials;
  if (!prior_name.empty()) cfg.estimators = {"imape_" + prior_name};
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (checkpoint) cfg.checkpoint = true;
  if (threads > 0) cfg.threads = threads;
  cfg.verbose = cfg.verbose || verbose;
  cfg.validate();

  fs::create_directories(cfg.out_dir);
  const std::vector<ResultRow> rows = run_sweep(cfg);

  std::vector<std::string> labels;
  labels.reserve(cfg.tracked.size());
  for (const TrackedParameter& t : cfg.tracked) labels.push_back(t.label());
  write_file(fs::path(cfg.out_dir) / "results.csv", rows_to_csv(rows, labels));
  write_file(fs::path(cfg.out_dir) / "timing.csv", timing_to_csv(rows));
  write_file(fs::path(cfg.out_dir) / "metadata.txt", cfg.describe());
  std::fprintf(stderr, "sweep: %zu rows -> %s\n", rows.size(),
               cfg.out_dir.c_str());
  return 0;
}

int cmd_summarize(const std::string& results_path, const std::string& out_dir,
                  bool verbose) {
  std::vector<std::string> labels;
  const std::vector<ResultRow> rows =
      rows_from_csv(read_file(results_path), &labels);
  const std::vector<SummaryEntry> summary = summarize(rows);

  fs::create_directories(out_dir);
  write_file(fs::path(out_dir) / "summary.csv", summary_to_csv(summary, labels));
  for (size_t t = 0; t < labels.size(); ++t) {
    const std::string table_name = "mse_" + labels[t] + ".csv";
    write_file(fs::path(out_dir) / table_name, median_table_csv(summary, t));
    write_file(fs::path(out_dir) / ("plot_" + labels[t] + ".gp"),
               gnuplot_script(table_name, "mse_" + labels[t] + ".png", labels[t]));
  }
  if (verbose) {
    std::fprintf(stderr, "summarize: %zu groups, %zu parameters -> %s\n",
                 summary.size(), labels.size(), out_dir.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust interferometric calibration toolkit"};
  app.require_subcommand(1);

  const std::vector<std::string> priors = {"k",       "student", "cauchy",
                                           "laplace", "igcg",    "gaussian"};

  std::string config_path, out_dir, in_dir, prior, cal_prior, results_path;
  std::uint64_t seed = 0;
  double snr_db = 10.0;
  std::vector<double> snr_grid;
  int trials = 0, threads = 0;
  bool checkpoint = false, verbose = false, least_squares = false;

  CLI::App* sim = app.add_subcommand("simulate", "Dump a scene and visibilities");
  sim->add_option("--config", config_path, "Config file");
  CLI::Option* sim_seed = sim->add_option("--seed", seed, "Master seed");
  sim->add_option("--snr", snr_db, "Contamination SNR in dB")
      ->capture_default_str();
  sim->add_option("--out", out_dir, "Output directory")->required();
  sim->add_flag("--verbose", verbose, "Chatty progress");

  CLI::App* cal = app.add_subcommand("calibrate", "Single calibration run");
  cal->add_option("--config", config_path, "Config file");
  cal->add_option("--in", in_dir, "Dataset directory from simulate")->required();
  cal->add_option("--prior", cal_prior, "Texture prior family")
      ->check(CLI::IsMember(priors))
      ->default_val("cauchy");
  cal->add_flag("--least-squares", least_squares,
                "Plain Gaussian least squares instead of the robust loop");
  cal->add_option("--out", out_dir, "Write state here instead of stdout");
  cal->add_flag("--checkpoint", checkpoint, "Also write a checkpoint file");
  cal->add_flag("--verbose", verbose, "Per-cycle log on stderr");

  CLI::App* swp = app.add_subcommand("sweep", "Monte-Carlo SNR sweep");
  swp->add_option("--config", config_path, "Config file");
  CLI::Option* swp_seed = swp->add_option("--seed", seed, "Master seed");
  swp->add_option("--snr-grid", snr_grid, "SNR grid in dB")->delimiter(',');
  swp->add_option("--trials", trials, "Trials per SNR point");
  swp->add_option("--prior", prior, "Run only this prior's estimator")
      ->check(CLI::IsMember(priors));
  swp->add_option("--out", out_dir, "Output directory");
  swp->add_flag("--checkpoint", checkpoint, "Write per-run state checkpoints");
  swp->add_option("--threads", threads, "Worker threads");
  swp->add_flag("--verbose", verbose, "Progress on stderr");

  CLI::App* sum = app.add_subcommand("summarize", "Results CSV to MSE tables");
  sum->add_option("--results", results_path, "results.csv from sweep")->required();
  std::string sum_out = ".";
  sum->add_option("--out", sum_out, "Output directory")->capture_default_str();
  sum->add_flag("--verbose", verbose, "Chatty progress");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return cmd_simulate(config_path, seed, sim_seed->count() > 0, snr_db,
                          out_dir, verbose);
    }
    if (cal->parsed()) {
      return cmd_calibrate(config_path, in_dir, cal_prior, least_squares,
                           out_dir, checkpoint, verbose);
    }
    if (swp->parsed()) {
      return cmd_sweep(config_path, seed, swp_seed->count() > 0, snr_grid,
                       trials, prior, out_dir, checkpoint, threads, verbose);
    }
    if (sum->parsed()) {
      return cmd_summarize(results_path, sum_out, verbose);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
