#include "imapecal/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "imapecal/noise.hpp"

namespace imapecal {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan" || s == "-nan") return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string token;
  for (char c : line) {
    if (c == ',') {
      out.push_back(token);
      token.clear();
    } else if (c != '\r') {
      token += c;
    }
  }
  out.push_back(token);
  return out;
}

}  // namespace

std::string TrackedParameter::label() const {
  switch (kind) {
    case Kind::GainReal:
      return "gain_re_a" + std::to_string(antenna) + "_c" + std::to_string(component);
    case Kind::GainImag:
      return "gain_im_a" + std::to_string(antenna) + "_c" + std::to_string(component);
    case Kind::Faraday:
      return "faraday_s" + std::to_string(source) + "_a" + std::to_string(antenna);
    case Kind::IonoPhase:
      return "phase_s" + std::to_string(source) + "_a" + std::to_string(antenna);
  }
  throw std::logic_error("unknown tracked parameter kind");
}

double TrackedParameter::extract(const ThetaVector& theta) const {
  switch (kind) {
    case Kind::GainReal: return theta.gains(component, antenna).real();
    case Kind::GainImag: return theta.gains(component, antenna).imag();
    case Kind::Faraday: return theta.faraday(source, antenna);
    case Kind::IonoPhase: return theta.iono_phase(source, antenna);
  }
  throw std::logic_error("unknown tracked parameter kind");
}

void TrackedParameter::validate(int D, int M) const {
  const bool gain = kind == Kind::GainReal || kind == Kind::GainImag;
  if (antenna < 0 || antenna >= M) {
    throw std::invalid_argument("tracked parameter: antenna out of range");
  }
  if (gain) {
    if (component < 0 || component > 1) {
      throw std::invalid_argument("tracked parameter: gain component must be 0 or 1");
    }
  } else if (source < 0 || source >= D) {
    throw std::invalid_argument("tracked parameter: source out of range");
  }
}

TrackedParameter TrackedParameter::parse(const std::string& text) {
  const size_t c1 = text.find(':');
  const size_t c2 = text.find(':', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw std::invalid_argument("tracked parameter: expected kind:i:j, got " + text);
  }
  const std::string kind = text.substr(0, c1);
  const int i = std::stoi(text.substr(c1 + 1, c2 - c1 - 1));
  const int j = std::stoi(text.substr(c2 + 1));
  TrackedParameter p;
  if (kind == "gain_re" || kind == "gain_im") {
    p.kind = kind == "gain_re" ? Kind::GainReal : Kind::GainImag;
    p.antenna = i;
    p.component = j;
  } else if (kind == "faraday" || kind == "phase") {
    p.kind = kind == "faraday" ? Kind::Faraday : Kind::IonoPhase;
    p.source = i;
    p.antenna = j;
  } else {
    throw std::invalid_argument("tracked parameter: unknown kind " + kind);
  }
  return p;
}

bool is_known_estimator(const std::string& id) {
  if (id == "gaussian_ls") return true;
  if (id.rfind("imape_", 0) != 0) return false;
  try {
    family_from_name(id.substr(6));
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

TexturePriorModel estimator_prior(const std::string& id) {
  if (id.rfind("imape_", 0) != 0) {
    throw std::invalid_argument("estimator has no prior: " + id);
  }
  switch (family_from_name(id.substr(6))) {
    case TextureFamily::KGamma: return TexturePriorModel::k_gamma(2.0, 1.0);
    case TextureFamily::StudentT: return TexturePriorModel::student_t(2.0, 1.0);
    case TextureFamily::Cauchy: return TexturePriorModel::cauchy(1.0);
    case TextureFamily::Laplace: return TexturePriorModel::laplace(1.0);
    case TextureFamily::InverseGaussianCG:
      return TexturePriorModel::inverse_gaussian_cg(1.0);
    case TextureFamily::GaussianFixed: return TexturePriorModel::gaussian_fixed();
  }
  throw std::logic_error("unknown estimator: " + id);
}

ExperimentConfig::ExperimentConfig() {
  TrackedParameter gain;
  gain.kind = TrackedParameter::Kind::GainImag;
  gain.antenna = 3;
  gain.component = 1;
  TrackedParameter phase;
  phase.kind = TrackedParameter::Kind::IonoPhase;
  phase.source = 1;
  phase.antenna = 2;
  tracked = {gain, phase};
  imape.keep_diagnostics = false;  // per-cycle bookkeeping off in bulk runs
}

ExperimentConfig ExperimentConfig::from_config(const ConfigFile& f) {
  ExperimentConfig cfg;
  cfg.antennas = f.get_int("scene", "antennas", cfg.antennas);
  cfg.calibrators = f.get_int("scene", "calibrators", cfg.calibrators);
  cfg.background = f.get_int("scene", "background", cfg.background);
  cfg.seed = f.get_uint("scene", "seed", cfg.seed);
  cfg.scene.extent_m = f.get_double("scene", "extent_m", cfg.scene.extent_m);
  cfg.scene.direction_halfwidth =
      f.get_double("scene", "direction_halfwidth", cfg.scene.direction_halfwidth);
  cfg.scene.calibrator_flux_min =
      f.get_double("scene", "calibrator_flux_min", cfg.scene.calibrator_flux_min);
  cfg.scene.calibrator_flux_max =
      f.get_double("scene", "calibrator_flux_max", cfg.scene.calibrator_flux_max);
  cfg.scene.background_flux_min =
      f.get_double("scene", "background_flux_min", cfg.scene.background_flux_min);
  cfg.scene.background_flux_max =
      f.get_double("scene", "background_flux_max", cfg.scene.background_flux_max);
  cfg.scene.background_angle_jitter = f.get_double(
      "scene", "background_angle_jitter", cfg.scene.background_angle_jitter);

  if (f.has("data", "frequencies")) {
    cfg.frequencies_hz = f.get_doubles("data", "frequencies");
  }
  cfg.snr_kappa = f.get_double("data", "snr_kappa", cfg.snr_kappa);

  if (f.has("sweep", "snr_db")) cfg.snr_db = f.get_doubles("sweep", "snr_db");
  cfg.trials = f.get_int("sweep", "trials", cfg.trials);
  if (f.has("sweep", "estimators")) {
    cfg.estimators = f.get_strings("sweep", "estimators");
  }
  cfg.threads = f.get_int("sweep", "threads", cfg.threads);

  if (f.has("tracked", "parameters")) {
    cfg.tracked.clear();
    for (const std::string& tok : f.get_strings("tracked", "parameters")) {
      cfg.tracked.push_back(TrackedParameter::parse(tok));
    }
  }

  cfg.init_mode = f.get("estimate", "init", cfg.init_mode);
  cfg.init_perturbation =
      f.get_double("estimate", "perturbation", cfg.init_perturbation);
  cfg.imape.max_cycles = f.get_int("estimate", "max_cycles", cfg.imape.max_cycles);
  cfg.imape.theta_tolerance =
      f.get_double("estimate", "theta_tolerance", cfg.imape.theta_tolerance);
  cfg.imape.use_consensus =
      f.get_bool("estimate", "use_consensus", cfg.imape.use_consensus);
  cfg.imape.consensus_order =
      f.get_int("estimate", "consensus_order", cfg.imape.consensus_order);
  cfg.imape.consensus_rho =
      f.get_double("estimate", "consensus_rho", cfg.imape.consensus_rho);
  cfg.imape.consensus.max_outer =
      f.get_int("estimate", "consensus_max_outer", cfg.imape.consensus.max_outer);
  cfg.imape.consensus.tolerance = f.get_double("estimate", "consensus_tolerance",
                                               cfg.imape.consensus.tolerance);
  cfg.imape.keep_diagnostics =
      f.get_bool("estimate", "keep_diagnostics", cfg.imape.keep_diagnostics);

  cfg.imape.solver.max_iterations =
      f.get_int("solver", "max_iterations", cfg.imape.solver.max_iterations);
  cfg.imape.solver.gradient_tolerance = f.get_double(
      "solver", "gradient_tolerance", cfg.imape.solver.gradient_tolerance);
  cfg.imape.solver.step_tolerance =
      f.get_double("solver", "step_tolerance", cfg.imape.solver.step_tolerance);
  cfg.imape.solver.initial_damping =
      f.get_double("solver", "initial_damping", cfg.imape.solver.initial_damping);
  cfg.imape.solver.damping_up =
      f.get_double("solver", "damping_up", cfg.imape.solver.damping_up);
  cfg.imape.solver.damping_down =
      f.get_double("solver", "damping_down", cfg.imape.solver.damping_down);

  cfg.out_dir = f.get("output", "dir", cfg.out_dir);
  cfg.checkpoint = f.get_bool("output", "checkpoint", cfg.checkpoint);
  cfg.verbose = f.get_bool("output", "verbose", cfg.verbose);
  return cfg;
}

void ExperimentConfig::validate() const {
  if (antennas < 2) throw std::invalid_argument("need at least 2 antennas");
  if (calibrators < 1) throw std::invalid_argument("need at least 1 calibrator");
  if (background < 0) throw std::invalid_argument("negative background count");
  if (frequencies_hz.empty()) throw std::invalid_argument("no frequencies");
  if (trials < 1) throw std::invalid_argument("need at least 1 trial");
  if (snr_db.empty()) throw std::invalid_argument("empty SNR grid");
  for (size_t i = 1; i < snr_db.size(); ++i) {
    if (!(snr_db[i] > snr_db[i - 1])) {
      throw std::invalid_argument("SNR grid must be strictly increasing");
    }
  }
  if (estimators.empty()) throw std::invalid_argument("no estimators");
  for (const std::string& id : estimators) {
    if (!is_known_estimator(id)) {
      throw std::invalid_argument("unknown estimator: " + id);
    }
  }
  if (tracked.empty()) throw std::invalid_argument("no tracked parameters");
  for (const TrackedParameter& p : tracked) p.validate(calibrators, antennas);
  if (init_mode != "cold" && init_mode != "perturb") {
    throw std::invalid_argument("init mode must be cold or perturb");
  }
  if (!(init_perturbation >= 0)) {
    throw std::invalid_argument("negative init perturbation");
  }
  if (threads < 1) throw std::invalid_argument("need at least 1 thread");
  imape.solver.validate();
}

std::string ExperimentConfig::describe() const {
  std::ostringstream out;
  out << "antennas " << antennas << "\ncalibrators " << calibrators
      << "\nbackground " << background << "\nseed " << seed << '\n';
  out << "frequencies_hz";
  for (double f : frequencies_hz) out << ' ' << fmt_double(f);
  out << "\nsnr_kappa " << fmt_double(snr_kappa) << '\n';
  out << "snr_db";
  for (double s : snr_db) out << ' ' << fmt_double(s);
  out << "\ntrials " << trials << '\n';
  out << "estimators";
  for (const auto& e : estimators) out << ' ' << e;
  out << '\n';
  out << "tracked";
  for (const auto& t : tracked) out << ' ' << t.label();
  out << '\n';
  out << "init_mode " << init_mode << "\ninit_perturbation "
      << fmt_double(init_perturbation) << '\n';
  out << "max_cycles " << imape.max_cycles << "\ntheta_tolerance "
      << fmt_double(imape.theta_tolerance) << '\n';
  out << "use_consensus " << (imape.use_consensus ? 1 : 0) << '\n';
  out << "threads " << threads << '\n';
  return out.str();
}

ThetaVector align(const ThetaVector& estimate, const ThetaVector& truth) {
  if (estimate.source_count() != truth.source_count() ||
      estimate.antenna_count() != truth.antenna_count()) {
    throw std::invalid_argument("align: dimension mismatch");
  }
  const int D = truth.source_count();
  const int M = truth.antenna_count();

  const auto squared_error = [&](const ThetaVector& t) {
    return (t.to_real() - truth.to_real()).squaredNorm();
  };
  const auto snap_branches = [&](ThetaVector& t) {
    for (int i = 0; i < D; ++i) {
      for (int p = 0; p < M; ++p) {
        t.faraday(i, p) =
            truth.faraday(i, p) + wrap_angle(t.faraday(i, p) - truth.faraday(i, p));
        t.iono_phase(i, p) = truth.iono_phase(i, p) +
                             wrap_angle(t.iono_phase(i, p) - truth.iono_phase(i, p));
      }
    }
  };

  // Candidate: remove per-direction circular-mean shifts from both angle
  // blocks and the global gain phase, then snap 2 pi branches.
  ThetaVector shifted = estimate;
  for (int i = 0; i < D; ++i) {
    Complex acc_f{0, 0}, acc_p{0, 0};
    for (int p = 0; p < M; ++p) {
      acc_f += std::polar(1.0, estimate.faraday(i, p) - truth.faraday(i, p));
      acc_p += std::polar(1.0, estimate.iono_phase(i, p) - truth.iono_phase(i, p));
    }
    if (std::abs(acc_f) > 0) shifted.faraday.row(i).array() -= std::arg(acc_f);
    if (std::abs(acc_p) > 0) shifted.iono_phase.row(i).array() -= std::arg(acc_p);
  }
  const Complex overlap =
      (estimate.gains.conjugate().array() * truth.gains.array()).sum();
  if (std::abs(overlap) > 0) {
    shifted.gains *= std::polar(1.0, std::arg(overlap));
  }
  snap_branches(shifted);

  // Candidate: additionally remove the per-antenna phase trade. A scalar
  // phase slides freely between an antenna's gain pair and its ionospheric
  // phases (all directions at once), so the joint fit solves for both the
  // per-direction shifts beta_i and the per-antenna trades delta_p:
  //   phase(i, p) += beta_i + delta_p,   gains(:, p) *= exp(-j delta_p),
  // weighting the gain match by the overlap magnitude. A couple of
  // relinearized passes polish the wrap and cosine terms.
  ThetaVector traded = estimate;
  for (int i = 0; i < D; ++i) {
    Complex acc_f{0, 0};
    for (int p = 0; p < M; ++p) {
      acc_f += std::polar(1.0, estimate.faraday(i, p) - truth.faraday(i, p));
    }
    if (std::abs(acc_f) > 0) traded.faraday.row(i).array() -= std::arg(acc_f);
  }
  for (int pass = 0; pass < 3; ++pass) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(D + M, D + M);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(D + M);
    for (int i = 0; i < D; ++i) {
      a(i, i) = M;
      for (int p = 0; p < M; ++p) {
        const double r =
            wrap_angle(truth.iono_phase(i, p) - traded.iono_phase(i, p));
        a(i, D + p) += 1.0;
        a(D + p, i) += 1.0;
        a(D + p, D + p) += 1.0;
        rhs(i) += r;
        rhs(D + p) += r;
      }
    }
    for (int p = 0; p < M; ++p) {
      Complex z{0, 0};
      for (int c = 0; c < 2; ++c) z += traded.gains(c, p) * std::conj(truth.gains(c, p));
      a(D + p, D + p) += std::abs(z);
      if (std::abs(z) > 0) rhs(D + p) += std::abs(z) * std::arg(z);
    }
    const Eigen::VectorXd sol = a.ldlt().solve(rhs);
    if (!sol.allFinite()) break;
    for (int i = 0; i < D; ++i) {
      traded.iono_phase.row(i).array() += sol(i);
    }
    for (int p = 0; p < M; ++p) {
      traded.iono_phase.col(p).array() += sol(D + p);
      traded.gains.col(p) *= std::polar(1.0, -sol(D + p));
    }
  }
  snap_branches(traded);

  ThetaVector snapped = estimate;
  snap_branches(snapped);

  const ThetaVector* best = &estimate;
  double best_err = squared_error(estimate);
  for (const ThetaVector* cand : {&snapped, &shifted, &traded}) {
    const double err = squared_error(*cand);
    if (err < best_err) {
      best = cand;
      best_err = err;
    }
  }
  return *best;
}

std::uint64_t trial_seed(std::uint64_t master, int snr_index, int trial) {
  return mix_seed(mix_seed(master, static_cast<std::uint64_t>(snr_index) + 1),
                  static_cast<std::uint64_t>(trial) + 1);
}

std::vector<ResultRow> run_trial(const ExperimentConfig& cfg,
                                 const Scene& base_scene, double snr_db,
                                 std::uint64_t seed) {
  Scene scene = base_scene;
  redraw_background(scene, seed, cfg.scene);
  const double sigma = sigma_for_snr(scene, snr_db, cfg.snr_kappa);

  const int D = scene.calibrator_count();
  const int M = scene.antenna_count();
  const size_t F = cfg.frequencies_hz.size();

  std::vector<ThetaVector> truth;
  std::vector<ThetaVector> inits;
  std::vector<VisibilitySet> x;
  truth.reserve(F);
  x.reserve(F);
  for (size_t f = 0; f < F; ++f) {
    RandomStream rng_truth = RandomStream::substream(seed, 0x712, f);
    truth.push_back(random_theta(D, M, rng_truth));
    VisibilitySet clean = predict_all(truth[f], scene, cfg.frequencies_hz[f]);
    RandomStream rng_noise = RandomStream::substream(seed, 0x401, f);
    x.push_back(contaminate(clean, scene, cfg.frequencies_hz[f], sigma, rng_noise));
    if (cfg.init_mode == "perturb") {
      RandomStream rng_init = RandomStream::substream(seed, 0x509, f);
      inits.push_back(perturb_theta(truth[f], cfg.init_perturbation, rng_init));
    }
  }

  std::vector<ResultRow> rows;
  rows.reserve(cfg.estimators.size());
  for (const std::string& id : cfg.estimators) {
    ResultRow row;
    row.estimator = id;
    row.snr_db = snr_db;
    row.seed = seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      ImapeOptions opts = cfg.imape;
      opts.theta_init = inits;  // empty in cold mode
      CalibrationState state =
          id == "gaussian_ls"
              ? run_gaussian_ls(x, scene, cfg.frequencies_hz, opts)
              : run_imape(x, scene, cfg.frequencies_hz, estimator_prior(id), opts);
      row.converged = state.converged;
      row.cycles = state.cycle;
      row.squared_error.assign(cfg.tracked.size(), 0.0);
      for (size_t f = 0; f < F; ++f) {
        const ThetaVector aligned = align(state.theta[f], truth[f]);
        for (size_t t = 0; t < cfg.tracked.size(); ++t) {
          const double d =
              cfg.tracked[t].extract(aligned) - cfg.tracked[t].extract(truth[f]);
          row.squared_error[t] += d * d;
        }
      }
      for (double& e : row.squared_error) e /= static_cast<double>(F);
      if (cfg.checkpoint) {
        const std::filesystem::path dir =
            std::filesystem::path(cfg.out_dir) / "checkpoints";
        std::filesystem::create_directories(dir);
        const std::string name = id + "_snr" + fmt_double(snr_db) + "_seed" +
                                 std::to_string(seed) + ".state";
        std::ofstream out(dir / name);
        out << serialize_state(state);
      }
    } catch (const std::exception&) {
      row.failed = true;
      row.squared_error.assign(cfg.tracked.size(),
                               std::numeric_limits<double>::quiet_NaN());
    }
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<ResultRow> run_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const Scene base = make_scene(cfg.seed, cfg.antennas, cfg.calibrators,
                                cfg.background, cfg.scene);
  const int S = static_cast<int>(cfg.snr_db.size());
  const int T = cfg.trials;
  const int jobs = S * T;
  std::vector<std::vector<ResultRow>> slots(static_cast<size_t>(jobs));

  std::atomic<int> next{0};
  std::atomic<int> done{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const auto worker = [&] {
    for (;;) {
      const int j = next.fetch_add(1);
      if (j >= jobs || error) break;
      const int si = j / T;
      const int t = j % T;
      try {
        auto rows = run_trial(cfg, base, cfg.snr_db[static_cast<size_t>(si)],
                              trial_seed(cfg.seed, si, t));
        for (ResultRow& r : rows) r.trial = t;
        slots[static_cast<size_t>(j)] = std::move(rows);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        break;
      }
      const int finished = done.fetch_add(1) + 1;
      if (cfg.verbose && (finished % 10 == 0 || finished == jobs)) {
        std::fprintf(stderr, "sweep: %d/%d trials\n", finished, jobs);
      }
    }
  };

  const int nthreads = std::max(1, std::min(cfg.threads, jobs));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<ResultRow> rows;
  rows.reserve(static_cast<size_t>(jobs) * cfg.estimators.size());
  for (auto& slot : slots) {
    for (ResultRow& r : slot) rows.push_back(std::move(r));
  }
  return rows;
}

std::string rows_to_csv(const std::vector<ResultRow>& rows,
                        const std::vector<std::string>& error_labels) {
  std::string out = "estimator,snr_db,trial,seed,failed,converged,cycles";
  for (const std::string& l : error_labels) out += ",err_" + l;
  out += '\n';
  for (const ResultRow& r : rows) {
    if (r.squared_error.size() != error_labels.size()) {
      throw std::invalid_argument("row error count does not match labels");
    }
    out += r.estimator + ',' + fmt_double(r.snr_db) + ',' + std::to_string(r.trial) +
           ',' + std::to_string(r.seed) + ',' + (r.failed ? '1' : '0') + ',' +
           (r.converged ? '1' : '0') + ',' + std::to_string(r.cycles);
    for (double e : r.squared_error) out += ',' + fmt_double(e);
    out += '\n';
  }
  return out;
}

std::vector<ResultRow> rows_from_csv(std::string_view text,
                                     std::vector<std::string>* error_labels) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty CSV");
  const std::vector<std::string> header = split_csv_line(line);
  const std::vector<std::string> fixed = {"estimator", "snr_db", "trial",
                                          "seed",      "failed", "converged",
                                          "cycles"};
  if (header.size() < fixed.size()) throw std::runtime_error("truncated CSV header");
  for (size_t i = 0; i < fixed.size(); ++i) {
    if (header[i] != fixed[i]) {
      throw std::runtime_error("unexpected CSV column: " + header[i]);
    }
  }
  std::vector<std::string> labels;
  for (size_t i = fixed.size(); i < header.size(); ++i) {
    if (header[i].rfind("err_", 0) != 0) {
      throw std::runtime_error("unexpected CSV column: " + header[i]);
    }
    labels.push_back(header[i].substr(4));
  }

  std::vector<ResultRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> parts = split_csv_line(line);
    if (parts.size() != header.size()) {
      throw std::runtime_error("CSV row has wrong column count");
    }
    ResultRow r;
    r.estimator = parts[0];
    r.snr_db = parse_double(parts[1]);
    r.trial = std::stoi(parts[2]);
    r.seed = std::stoull(parts[3]);
    r.failed = parts[4] == "1";
    r.converged = parts[5] == "1";
    r.cycles = std::stoi(parts[6]);
    for (size_t i = fixed.size(); i < parts.size(); ++i) {
      r.squared_error.push_back(parse_double(parts[i]));
    }
    rows.push_back(std::move(r));
  }
  if (error_labels != nullptr) *error_labels = labels;
  return rows;
}

std::string timing_to_csv(const std::vector<ResultRow>& rows) {
  std::string out = "estimator,snr_db,trial,wall_seconds\n";
  for (const ResultRow& r : rows) {
    out += r.estimator + ',' + fmt_double(r.snr_db) + ',' + std::to_string(r.trial) +
           ',' + fmt_double(r.wall_seconds) + '\n';
  }
  return out;
}

namespace {

double median_of(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

std::vector<SummaryEntry> summarize(const std::vector<ResultRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("no rows to summarize");
  const size_t n_params = rows[0].squared_error.size();

  std::vector<std::string> estimators;
  std::vector<double> snrs;
  for (const ResultRow& r : rows) {
    if (std::find(estimators.begin(), estimators.end(), r.estimator) ==
        estimators.end()) {
      estimators.push_back(r.estimator);
    }
    if (std::find(snrs.begin(), snrs.end(), r.snr_db) == snrs.end()) {
      snrs.push_back(r.snr_db);
    }
  }
  std::sort(snrs.begin(), snrs.end());

  std::vector<SummaryEntry> out;
  for (const std::string& est : estimators) {
    for (double snr : snrs) {
      SummaryEntry entry;
      entry.estimator = est;
      entry.snr_db = snr;
      std::vector<std::vector<double>> samples(n_params);
      for (const ResultRow& r : rows) {
        if (r.estimator != est || r.snr_db != snr) continue;
        if (r.failed) {
          ++entry.failed;
          continue;
        }
        ++entry.trials;
        for (size_t t = 0; t < n_params; ++t) samples[t].push_back(r.squared_error[t]);
      }
      if (entry.trials == 0 && entry.failed == 0) continue;
      for (size_t t = 0; t < n_params; ++t) {
        entry.mse_mean.push_back(
            samples[t].empty()
                ? std::numeric_limits<double>::quiet_NaN()
                : pairwise_sum(samples[t].data(), samples[t].size()) /
                      static_cast<double>(samples[t].size()));
        entry.mse_median.push_back(median_of(samples[t]));
      }
      out.push_back(std::move(entry));
    }
  }
  return out;
}

std::string summary_to_csv(const std::vector<SummaryEntry>& summary,
                           const std::vector<std::string>& error_labels) {
  std::string out = "estimator,snr_db,trials,failed";
  for (const std::string& l : error_labels) {
    out += ",mse_mean_" + l + ",mse_median_" + l;
  }
  out += '\n';
  for (const SummaryEntry& e : summary) {
    out += e.estimator + ',' + fmt_double(e.snr_db) + ',' +
           std::to_string(e.trials) + ',' + std::to_string(e.failed);
    for (size_t t = 0; t < error_labels.size(); ++t) {
      out += ',' + fmt_double(e.mse_mean[t]) + ',' + fmt_double(e.mse_median[t]);
    }
    out += '\n';
  }
  return out;
}

std::string median_table_csv(const std::vector<SummaryEntry>& summary,
                             size_t parameter_index) {
  std::vector<std::string> estimators;
  std::vector<double> snrs;
  for (const SummaryEntry& e : summary) {
    if (std::find(estimators.begin(), estimators.end(), e.estimator) ==
        estimators.end()) {
      estimators.push_back(e.estimator);
    }
    if (std::find(snrs.begin(), snrs.end(), e.snr_db) == snrs.end()) {
      snrs.push_back(e.snr_db);
    }
  }
  std::sort(snrs.begin(), snrs.end());

  std::string out = "snr_db";
  for (const std::string& est : estimators) out += ',' + est;
  out += '\n';
  for (double snr : snrs) {
    out += fmt_double(snr);
    for (const std::string& est : estimators) {
      double value = std::numeric_limits<double>::quiet_NaN();
      for (const SummaryEntry& e : summary) {
        if (e.estimator == est && e.snr_db == snr &&
            parameter_index < e.mse_median.size()) {
          value = e.mse_median[parameter_index];
          break;
        }
      }
      out += ',' + fmt_double(value);
    }
    out += '\n';
  }
  return out;
}

std::string gnuplot_script(const std::string& table_csv_name,
                           const std::string& output_png_name,
                           const std::string& parameter_label) {
  std::string out;
  out += "set datafile separator ','\n";
  out += "set key autotitle columnhead\n";
  out += "set key top right\n";
  out += "set logscale y\n";
  out += "set grid\n";
  out += "set xlabel 'SNR (dB)'\n";
  out += "set ylabel 'median squared error'\n";
  out += "set title '" + parameter_label + "'\n";
  out += "set terminal pngcairo size 960,640\n";
  out += "set output '" + output_png_name + "'\n";
  out += "plot for [i=2:*] '" + table_csv_name +
         "' using 1:i with linespoints\n";
  return out;
}

}  // namespace imapecal
