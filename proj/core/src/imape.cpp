#include "imapecal/imape.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace imapecal {

namespace {

Eigen::VectorXd quadratic_under(const Eigen::Matrix4Xcd& u,
                                const SpeckleFactor& factor) {
  Eigen::VectorXd q(u.cols());
  for (Eigen::Index k = 0; k < u.cols(); ++k) {
    q(k) = factor.quadratic_form(u.col(k));
  }
  return q;
}

double conditional_sum(const Eigen::VectorXd& q, const Eigen::VectorXd& tau,
                       double log_det) {
  std::vector<double> terms(static_cast<size_t>(q.size()));
  for (Eigen::Index k = 0; k < q.size(); ++k) {
    terms[static_cast<size_t>(k)] =
        q(k) / tau(k) + kDataDim * std::log(kPi) + kDataDim * std::log(tau(k)) +
        log_det;
  }
  return -pairwise_sum(terms.data(), terms.size());
}

double joint_value(const Eigen::VectorXd& q, const Eigen::VectorXd& tau,
                   double log_det, const TexturePriorModel& prior) {
  return log_likelihood_joint(conditional_sum(q, tau, log_det), tau, prior);
}

}  // namespace

CalibrationState imape_init(const Scene& scene,
                            const std::vector<double>& frequencies_hz,
                            const TexturePriorModel& prior,
                            const ImapeOptions& options) {
  if (frequencies_hz.empty()) throw std::invalid_argument("no frequencies");
  prior.validate();
  const int D = scene.calibrator_count();
  const int M = scene.antenna_count();
  const int B = scene.baseline_count();
  const size_t F = frequencies_hz.size();
  if (!options.theta_init.empty() && options.theta_init.size() != F) {
    throw std::invalid_argument("theta_init must cover every frequency");
  }

  CalibrationState state;
  state.frequencies = frequencies_hz;
  state.theta.reserve(F);
  for (size_t f = 0; f < F; ++f) {
    state.theta.push_back(options.theta_init.empty() ? ThetaVector::identity(D, M)
                                                     : options.theta_init[f]);
    state.tau.push_back(Eigen::VectorXd::Ones(B));
    state.omega.push_back(Mat4::Identity() / kDataDim);
    state.hyper.push_back(prior);
  }
  return state;
}

void imape_cycle(CalibrationState& state, const std::vector<VisibilitySet>& x,
                 const Scene& scene, const ImapeOptions& options) {
  const size_t F = state.frequencies.size();
  if (x.size() != F) throw std::invalid_argument("one visibility set per frequency");
  const bool gaussian = state.hyper[0].family == TextureFamily::GaussianFixed;

  CycleDiagnostics diag;
  diag.cycle = state.cycle + 1;

  // Step 1: theta given (tau, omega), either independently per frequency or
  // tied through the consensus layer.
  std::vector<ThetaVector> theta_new;
  theta_new.reserve(F);
  std::vector<SpeckleFactor> factors;
  factors.reserve(F);
  for (size_t f = 0; f < F; ++f) factors.emplace_back(state.omega[f]);
  if (options.use_consensus && F > 1) {
    ConsensusModel model(state.frequencies, options.consensus_order,
                         options.consensus_rho);
    AdmmResult admm = consensus_admm(x, state.tau, factors, scene,
                                     state.frequencies, model, state.theta,
                                     options.consensus);
    theta_new = std::move(admm.theta);
  } else {
    for (size_t f = 0; f < F; ++f) {
      theta_new.push_back(solve_theta(x[f], state.tau[f], factors[f], scene,
                                      state.frequencies[f], state.theta[f],
                                      options.solver)
                              .theta);
    }
  }

  double step = 0.0;
  for (size_t f = 0; f < F; ++f) {
    const Eigen::VectorXd d = theta_new[f].to_real() - state.theta[f].to_real();
    step = std::max(step, d.norm() / (1.0 + state.theta[f].to_real().norm()));
  }

  for (size_t f = 0; f < F; ++f) {
    const Eigen::VectorXd& tau_prev = state.tau[f];
    const TexturePriorModel hyper_prev = state.hyper[f];

    ForwardModel model(scene, state.frequencies[f]);
    const Eigen::Matrix4Xcd u = x[f].data - model.predict(theta_new[f]).data;
    const Eigen::VectorXd q_prev = quadratic_under(u, factors[f]);

    if (options.keep_diagnostics) {
      diag.joint_after_solve +=
          joint_value(q_prev, tau_prev, factors[f].log_det(), hyper_prev);
    }

    // Step 2: hyperparameter ML from the previous textures. On the first
    // cycle the textures still sit at their unit initialization, where the
    // shape equation is degenerate; the gamma and inverse-gamma families
    // keep their initial shape and only refresh the scale by method of
    // moments, deferring the first root solve to the next cycle.
    TexturePriorModel hyper_new = hyper_prev;
    if (!gaussian) {
      const bool shape_family = hyper_prev.family == TextureFamily::KGamma ||
                                hyper_prev.family == TextureFamily::StudentT;
      if (state.cycle == 0 && shape_family) {
        const double mean = tau_prev.mean();
        if (hyper_prev.family == TextureFamily::KGamma) {
          hyper_new.b = mean / hyper_prev.a;
        } else if (hyper_prev.a > 1.0) {
          hyper_new.b = (hyper_prev.a - 1.0) * mean;
        } else {
          hyper_new.b = hyper_prev.a * tau_prev.size() /
                        tau_prev.cwiseInverse().sum();
        }
      } else {
        HyperUpdate hu = update_hyper(hyper_prev, tau_prev);
        hyper_new = hu.model;
        diag.hyper_clamped = diag.hyper_clamped || hu.clamped;
      }
    }
    if (options.keep_diagnostics) {
      diag.joint_after_hyper +=
          joint_value(q_prev, tau_prev, factors[f].log_det(), hyper_new);
      if (f == 0) {
        diag.hyper_a = hyper_new.a;
        diag.hyper_b = hyper_new.b;
        diag.hyper_lambda = hyper_new.lambda;
      }
    }

    // Step 3: speckle covariance from the previous textures, then the
    // unit-trace normalization.
    Mat4 omega_new = state.omega[f];
    double joint_raw = 0.0, joint_norm = 0.0;
    if (!options.freeze_speckle) {
      ResidualSet res;
      res.u = u;
      res.quadratic = q_prev;
      const SpeckleUpdate upd = update_speckle(res, tau_prev);
      omega_new = upd.omega;
      if (options.keep_diagnostics) {
        if (upd.degenerate) {
          joint_raw = joint_value(q_prev, tau_prev, factors[f].log_det(), hyper_new);
          joint_norm = joint_raw;
        } else {
          const SpeckleFactor raw(Mat4(upd.trace_raw * upd.omega));
          joint_raw = joint_value(quadratic_under(u, raw), tau_prev,
                                  raw.log_det(), hyper_new);
          const SpeckleFactor norm(omega_new);
          joint_norm = joint_value(quadratic_under(u, norm), tau_prev,
                                   norm.log_det(), hyper_new);
        }
      }
    } else if (options.keep_diagnostics) {
      joint_raw = joint_value(q_prev, tau_prev, factors[f].log_det(), hyper_new);
      joint_norm = joint_raw;
    }
    diag.joint_after_speckle_raw += joint_raw;
    diag.joint_after_speckle += joint_norm;

    // Step 4: textures from the fresh hyperparameters and covariance.
    const SpeckleFactor factor_new(omega_new);
    const Eigen::VectorXd q_new = quadratic_under(u, factor_new);
    Eigen::VectorXd tau_new =
        gaussian ? tau_prev : update_textures(hyper_new, q_new);
    if (options.keep_diagnostics) {
      diag.joint_after_texture +=
          joint_value(q_new, tau_new, factor_new.log_det(), hyper_new);
      diag.omega_condition =
          std::max(diag.omega_condition, factor_new.condition_number());
    }

    state.theta[f] = theta_new[f];
    state.hyper[f] = hyper_new;
    state.omega[f] = omega_new;
    state.tau[f] = std::move(tau_new);
  }

  state.cycle += 1;
  state.last_theta_step = step;
  diag.theta_step = step;
  if (options.keep_diagnostics) state.diagnostics.push_back(diag);
}

CalibrationState run_imape(const std::vector<VisibilitySet>& x,
                           const Scene& scene,
                           const std::vector<double>& frequencies_hz,
                           const TexturePriorModel& prior,
                           const ImapeOptions& options) {
  CalibrationState state = imape_init(scene, frequencies_hz, prior, options);
  for (int cycle = 0; cycle < options.max_cycles; ++cycle) {
    imape_cycle(state, x, scene, options);
    if (state.last_theta_step < options.theta_tolerance) {
      state.converged = true;
      break;
    }
  }
  return state;
}

CalibrationState run_gaussian_ls(const std::vector<VisibilitySet>& x,
                                 const Scene& scene,
                                 const std::vector<double>& frequencies_hz,
                                 const ImapeOptions& options) {
  ImapeOptions opts = options;
  opts.freeze_speckle = true;
  return run_imape(x, scene, frequencies_hz,
                   TexturePriorModel::gaussian_fixed(), opts);
}

namespace {

void print_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void print_vector(std::string& out, const char* tag, int index,
                  const Eigen::VectorXd& v) {
  out += tag;
  out += ' ' + std::to_string(index);
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    out += ' ';
    print_double(out, v(i));
  }
  out += '\n';
}

}  // namespace

std::string serialize_state(const CalibrationState& state) {
  std::string out = "state v1\n";
  const size_t F = state.frequencies.size();
  const int D = state.theta.empty() ? 0 : state.theta[0].source_count();
  const int M = state.theta.empty() ? 0 : state.theta[0].antenna_count();
  const int B = state.tau.empty() ? 0 : static_cast<int>(state.tau[0].size());
  out += "dimensions " + std::to_string(F) + ' ' + std::to_string(D) + ' ' +
         std::to_string(M) + ' ' + std::to_string(B) + '\n';
  out += "cycle " + std::to_string(state.cycle) + '\n';
  out += std::string("converged ") + (state.converged ? '1' : '0') + '\n';
  out += "last_step ";
  print_double(out, state.last_theta_step);
  out += '\n';
  out += std::string("family ") + std::string(family_name(state.hyper[0].family)) +
         '\n';
  for (size_t f = 0; f < F; ++f) {
    out += "frequency " + std::to_string(f) + ' ';
    print_double(out, state.frequencies[f]);
    out += '\n';
    const TexturePriorModel& h = state.hyper[f];
    out += "hyper " + std::to_string(f);
    out += ' ';
    print_double(out, h.a);
    out += ' ';
    print_double(out, h.b);
    out += ' ';
    print_double(out, h.lambda);
    out += '\n';
    print_vector(out, "theta", static_cast<int>(f), state.theta[f].to_real());
    print_vector(out, "tau", static_cast<int>(f), state.tau[f]);
    out += "omega " + std::to_string(f);
    for (int r = 0; r < kDataDim; ++r) {
      for (int c = 0; c < kDataDim; ++c) {
        out += ' ';
        print_double(out, state.omega[f](r, c).real());
        out += ' ';
        print_double(out, state.omega[f](r, c).imag());
      }
    }
    out += '\n';
  }
  return out;
}

CalibrationState parse_state(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tag;
  auto expect = [&](const char* want) {
    in >> tag;
    if (!in || tag != want)
      throw std::runtime_error(std::string("parse_state: expected ") + want);
  };

  expect("state");
  expect("v1");
  expect("dimensions");
  size_t F = 0;
  int D = 0, M = 0, B = 0;
  in >> F >> D >> M >> B;
  CalibrationState state;
  expect("cycle");
  in >> state.cycle;
  expect("converged");
  int conv = 0;
  in >> conv;
  state.converged = conv != 0;
  expect("last_step");
  in >> state.last_theta_step;
  expect("family");
  std::string fam;
  in >> fam;
  const TextureFamily family = family_from_name(fam);

  const int n = 2 * D * M + 4 * M;
  for (size_t f = 0; f < F; ++f) {
    size_t idx = 0;
    expect("frequency");
    double freq = 0;
    in >> idx >> freq;
    state.frequencies.push_back(freq);
    expect("hyper");
    TexturePriorModel h;
    h.family = family;
    in >> idx >> h.a >> h.b >> h.lambda;
    state.hyper.push_back(h);
    expect("theta");
    in >> idx;
    Eigen::VectorXd xv(n);
    for (int i = 0; i < n; ++i) in >> xv(i);
    state.theta.push_back(ThetaVector::from_real(xv, D, M));
    expect("tau");
    in >> idx;
    Eigen::VectorXd tau(B);
    for (int i = 0; i < B; ++i) in >> tau(i);
    state.tau.push_back(tau);
    expect("omega");
    in >> idx;
    Mat4 omega;
    for (int r = 0; r < kDataDim; ++r) {
      for (int c = 0; c < kDataDim; ++c) {
        double re = 0, im = 0;
        in >> re >> im;
        omega(r, c) = Complex(re, im);
      }
    }
    state.omega.push_back(omega);
  }
  if (!in) throw std::runtime_error("parse_state: truncated input");
  return state;
}

}  // namespace imapecal
