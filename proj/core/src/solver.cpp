#include "imapecal/solver.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace imapecal {

namespace {

/// One-frequency weighted least-squares problem: caches the known effects
/// and exposes the objective and the Gauss-Newton normal equations over the
/// packed real parameterization. Per baseline only the 4D + 8 parameters
/// touching its two antennas enter, so the Jacobian is assembled compactly
/// and scattered into the full system.
class WeightedProblem {
 public:
  WeightedProblem(const VisibilitySet& x, const Eigen::VectorXd& tau,
                  const SpeckleFactor& factor, const Scene& scene,
                  double frequency_hz)
      : model_(scene, frequency_hz), x_(&x), tau_(&tau), factor_(&factor) {
    if (x.baseline_count() != scene.baseline_count()) {
      throw std::invalid_argument("visibility/baseline count mismatch");
    }
    if (tau.size() != x.baseline_count()) {
      throw std::invalid_argument("texture vector length mismatch");
    }
    for (Eigen::Index k = 0; k < tau.size(); ++k) {
      if (!(tau(k) > 0.0)) throw std::domain_error("texture values must be positive");
    }
    D_ = model_.source_count();
    M_ = model_.antenna_count();
    B_ = model_.baseline_count();
  }

  int dimension() const { return 2 * D_ * M_ + 4 * M_; }

  double objective(const ThetaVector& theta) const {
    const VisibilitySet predicted = model_.predict(theta);
    std::vector<double> terms(static_cast<size_t>(B_));
    for (int k = 0; k < B_; ++k) {
      const Vec4 u = x_->data.col(k) - predicted.data.col(k);
      terms[static_cast<size_t>(k)] = factor_->quadratic_form(u) / (*tau_)(k);
    }
    return pairwise_sum(terms.data(), terms.size());
  }

  /// Objective plus normal equations: A = Re(W^H W), b = Re(W^H r) with W
  /// the whitened model Jacobian and r the whitened residual. The gradient
  /// of the objective is -2 b.
  double assemble(const ThetaVector& theta, Eigen::MatrixXd& A,
                  Eigen::VectorXd& b) const {
    const int n = dimension();
    A.setZero(n, n);
    b.setZero(n);

    // Theta-dependent per source/antenna factors.
    std::vector<Mat2> T(static_cast<size_t>(D_ * M_));   // known * z * F
    std::vector<Mat2> Td(static_cast<size_t>(D_ * M_));  // known * z * dF
    std::vector<Mat2> J(static_cast<size_t>(D_ * M_));   // G * T
    std::vector<Mat2> Jd(static_cast<size_t>(D_ * M_));  // G * Td
    for (int i = 0; i < D_; ++i) {
      for (int p = 0; p < M_; ++p) {
        const size_t ip = static_cast<size_t>(i * M_ + p);
        const Complex z = std::polar(1.0, theta.iono_phase(i, p));
        T[ip] = model_.known(i, p) * z * faraday_matrix(theta.faraday(i, p));
        Td[ip] = model_.known(i, p) * z *
                 faraday_matrix_derivative(theta.faraday(i, p));
        const Complex g1 = theta.gains(0, p);
        const Complex g2 = theta.gains(1, p);
        J[ip].row(0) = g1 * T[ip].row(0);
        J[ip].row(1) = g2 * T[ip].row(1);
        Jd[ip].row(0) = g1 * Td[ip].row(0);
        Jd[ip].row(1) = g2 * Td[ip].row(1);
      }
    }

    const int local_n = 4 * D_ + 8;
    Eigen::MatrixXcd W(kDataDim, local_n);
    std::vector<int> cols(static_cast<size_t>(local_n));
    const int DM = D_ * M_;
    const Complex jc(0.0, 1.0);

    std::vector<double> terms(static_cast<size_t>(B_));
    for (int k = 0; k < B_; ++k) {
      const auto [p, q] = model_.scene().array.baseline_antennas(k);
      W.setZero();
      Vec4 m = Vec4::Zero();
      Mat2 vsum = Mat2::Zero();  // sum_i c_i T_ip J_iq^H (gain-p columns)
      Mat2 zsum = Mat2::Zero();  // sum_i c_i J_ip T_iq^H (gain-q columns)
      for (int i = 0; i < D_; ++i) {
        const size_t ip = static_cast<size_t>(i * M_ + p);
        const size_t iq = static_cast<size_t>(i * M_ + q);
        const double c = 0.5 * model_.source_flux(i);
        const Mat2 JqH = J[iq].adjoint();
        const Mat2 U = J[ip] * JqH;
        m += c * vec2x2(U);
        vsum.noalias() += c * (T[ip] * JqH);
        zsum.noalias() += c * (J[ip] * T[iq].adjoint());

        const int base = 4 * i;
        cols[static_cast<size_t>(base + 0)] = i * M_ + p;        // faraday p
        cols[static_cast<size_t>(base + 1)] = i * M_ + q;        // faraday q
        cols[static_cast<size_t>(base + 2)] = DM + i * M_ + p;   // phase p
        cols[static_cast<size_t>(base + 3)] = DM + i * M_ + q;   // phase q
        W.col(base + 0) = c * vec2x2(Jd[ip] * JqH);
        W.col(base + 1) = c * vec2x2(J[ip] * Jd[iq].adjoint());
        W.col(base + 2) = jc * c * vec2x2(U);
        W.col(base + 3) = -jc * c * vec2x2(U);
      }
      const int gp = 4 * D_;
      const int gq = 4 * D_ + 4;
      for (int cgl = 0; cgl < 4; ++cgl) {
        cols[static_cast<size_t>(gp + cgl)] = 2 * DM + 4 * p + cgl;
        cols[static_cast<size_t>(gq + cgl)] = 2 * DM + 4 * q + cgl;
      }
      Mat2 rowsel = Mat2::Zero();
      rowsel.row(0) = vsum.row(0);
      W.col(gp + 0) = vec2x2(rowsel);        // Re g1_p
      W.col(gp + 1) = jc * W.col(gp + 0);    // Im g1_p
      rowsel.setZero();
      rowsel.row(1) = vsum.row(1);
      W.col(gp + 2) = vec2x2(rowsel);        // Re g2_p
      W.col(gp + 3) = jc * W.col(gp + 2);    // Im g2_p
      Mat2 colsel = Mat2::Zero();
      colsel.col(0) = zsum.col(0);
      W.col(gq + 0) = vec2x2(colsel);        // Re g1_q
      W.col(gq + 1) = -jc * W.col(gq + 0);   // Im g1_q
      colsel.setZero();
      colsel.col(1) = zsum.col(1);
      W.col(gq + 2) = vec2x2(colsel);        // Re g2_q
      W.col(gq + 3) = -jc * W.col(gq + 2);   // Im g2_q

      const double inv_sqrt_tau = 1.0 / std::sqrt((*tau_)(k));
      const Vec4 r = factor_->whiten(x_->data.col(k) - m) * inv_sqrt_tau;
      for (int c = 0; c < local_n; ++c) {
        W.col(c) = factor_->whiten(W.col(c)) * inv_sqrt_tau;
      }
      terms[static_cast<size_t>(k)] = r.squaredNorm();

      for (int c1 = 0; c1 < local_n; ++c1) {
        const int g1 = cols[static_cast<size_t>(c1)];
        b(g1) += (W.col(c1).adjoint() * r).value().real();
        for (int c2 = 0; c2 <= c1; ++c2) {
          const int g2 = cols[static_cast<size_t>(c2)];
          const double v = (W.col(c1).adjoint() * W.col(c2)).value().real();
          A(g1, g2) += v;
          if (g1 != g2) A(g2, g1) += v;
        }
      }
    }
    return pairwise_sum(terms.data(), terms.size());
  }

 private:
  ForwardModel model_;
  const VisibilitySet* x_;
  const Eigen::VectorXd* tau_;
  const SpeckleFactor* factor_;
  int D_ = 0, M_ = 0, B_ = 0;
};

}  // namespace

void SolverOptions::validate() const {
  if (max_iterations < 0) throw std::invalid_argument("max_iterations < 0");
  if (!(gradient_tolerance > 0) || !(step_tolerance > 0) ||
      !(initial_damping > 0) || !(max_damping > 0)) {
    throw std::invalid_argument("solver tolerances must be positive");
  }
  if (!(damping_up > 1.0) || !(damping_down > 0.0) || !(damping_down < 1.0)) {
    throw std::invalid_argument("need damping_up > 1 > damping_down > 0");
  }
}

double objective(const ThetaVector& theta, const VisibilitySet& x,
                 const Eigen::VectorXd& tau, const SpeckleFactor& factor,
                 const Scene& scene, double frequency_hz) {
  return WeightedProblem(x, tau, factor, scene, frequency_hz).objective(theta);
}

Eigen::VectorXd gradient(const ThetaVector& theta, const VisibilitySet& x,
                         const Eigen::VectorXd& tau,
                         const SpeckleFactor& factor, const Scene& scene,
                         double frequency_hz) {
  WeightedProblem problem(x, tau, factor, scene, frequency_hz);
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  problem.assemble(theta, A, b);
  return -2.0 * b;
}

SolveResult solve_theta(const VisibilitySet& x, const Eigen::VectorXd& tau,
                        const SpeckleFactor& factor, const Scene& scene,
                        double frequency_hz, const ThetaVector& theta_init,
                        const SolverOptions& options,
                        const Eigen::VectorXd* prox_target, double prox_rho) {
  options.validate();
  WeightedProblem problem(x, tau, factor, scene, frequency_hz);
  const int n = problem.dimension();
  if (prox_target != nullptr && prox_target->size() != n) {
    throw std::invalid_argument("proximal target dimension mismatch");
  }

  const int D = theta_init.source_count();
  const int M = theta_init.antenna_count();
  Eigen::VectorXd xv = theta_init.to_real();
  if (!xv.allFinite()) throw std::invalid_argument("theta_init is not finite");

  const auto total = [&](double gn_obj, const Eigen::VectorXd& v) {
    if (prox_rho > 0.0) {
      return gn_obj + 0.5 * prox_rho * (v - *prox_target).squaredNorm();
    }
    return gn_obj;
  };

  SolveResult result;
  result.theta = theta_init;

  Eigen::MatrixXd A(n, n);
  Eigen::VectorXd b(n);
  double gn_obj = problem.assemble(result.theta, A, b);
  double obj = total(gn_obj, xv);
  if (!std::isfinite(obj)) {
    throw std::runtime_error("solver: non-finite objective at initialization");
  }
  result.objective = obj;

  double damping = options.initial_damping;
  Eigen::MatrixXd A2(n, n);
  Eigen::VectorXd g(n), scale(n), step(n);

  for (int iter = 1; iter <= options.max_iterations; ++iter) {
    result.iterations = iter;
    A2 = 2.0 * A;
    g = 2.0 * b;
    if (prox_rho > 0.0) {
      A2.diagonal().array() += prox_rho;
      g -= prox_rho * (xv - *prox_target);
    }
    const double ginf = g.lpNorm<Eigen::Infinity>();
    if (ginf <= options.gradient_tolerance * std::max(obj, 1e-300)) {
      result.converged = true;
      break;
    }
    // Marquardt scaling: damping multiplies diag(A2), so a uniform
    // rescaling of tau leaves every iterate unchanged.
    scale = A2.diagonal();
    const double dmax = scale.maxCoeff();
    scale = scale.cwiseMax(1e-14 * std::max(dmax, 1e-300));

    bool accepted = false;
    while (damping <= options.max_damping) {
      Eigen::MatrixXd H = A2;
      H.diagonal() += damping * scale;
      step = Eigen::LDLT<Eigen::MatrixXd>(H).solve(g);
      const Eigen::VectorXd xt = xv + step;
      const ThetaVector theta_t = ThetaVector::from_real(xt, D, M);
      Eigen::MatrixXd At(n, n);
      Eigen::VectorXd bt(n);
      const double gn_t = problem.assemble(theta_t, At, bt);
      const double obj_t = total(gn_t, xt);
      if (options.keep_trace) {
        result.trace.push_back({iter, obj_t, ginf, damping, step.norm(),
                                std::isfinite(obj_t) && obj_t < obj});
      }
      if (std::isfinite(obj_t) && obj_t < obj) {
        xv = xt;
        result.theta = theta_t;
        A.swap(At);
        b.swap(bt);
        obj = obj_t;
        result.objective = obj;
        damping = std::max(damping * options.damping_down, 1e-12);
        accepted = true;
        break;
      }
      damping *= options.damping_up;
    }
    if (!accepted) break;  // stalled at maximum damping
    if (step.norm() <= options.step_tolerance * (1.0 + xv.norm())) {
      result.converged = true;
      break;
    }
  }
  return result;
}

ConsensusModel::ConsensusModel(const std::vector<double>& frequencies_hz,
                               int order, double rho)
    : order_(order), rho_(rho) {
  if (frequencies_hz.empty()) throw std::invalid_argument("no frequencies");
  if (order < 0) throw std::invalid_argument("negative polynomial order");
  if (!(rho > 0.0)) throw std::invalid_argument("penalty must be positive");
  const int F = static_cast<int>(frequencies_hz.size());
  double lo = frequencies_hz[0], hi = frequencies_hz[0];
  for (double f : frequencies_hz) {
    lo = std::min(lo, f);
    hi = std::max(hi, f);
  }
  basis_.resize(F, order + 1);
  for (int f = 0; f < F; ++f) {
    const double ft =
        hi > lo ? 2.0 * (frequencies_hz[static_cast<size_t>(f)] - lo) / (hi - lo) - 1.0
                : 0.0;
    double power = 1.0;
    for (int j = 0; j <= order; ++j) {
      basis_(f, j) = power;
      power *= ft;
    }
  }
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(basis_).rank() != order + 1) {
    throw std::invalid_argument(
        "consensus basis is rank deficient; need more distinct frequencies");
  }
}

Eigen::VectorXd ConsensusModel::evaluate(int f, const Eigen::MatrixXd& z) const {
  return (basis_.row(f) * z).transpose();
}

Eigen::MatrixXd ConsensusModel::fit(const Eigen::MatrixXd& rows) const {
  return Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(basis_).solve(rows);
}

AdmmResult consensus_admm(const std::vector<VisibilitySet>& x,
                          const std::vector<Eigen::VectorXd>& tau,
                          const std::vector<SpeckleFactor>& factors,
                          const Scene& scene,
                          const std::vector<double>& frequencies_hz,
                          const ConsensusModel& model,
                          const std::vector<ThetaVector>& theta_init,
                          const ConsensusOptions& options) {
  const size_t F = frequencies_hz.size();
  if (x.size() != F || tau.size() != F || factors.size() != F ||
      theta_init.size() != F || model.frequency_count() != static_cast<int>(F)) {
    throw std::invalid_argument("per-frequency input sizes disagree");
  }
  const double rho = model.rho();
  const int n = theta_init[0].real_dimension();

  AdmmResult result;
  result.theta = theta_init;
  Eigen::MatrixXd rows(F, n);
  for (size_t f = 0; f < F; ++f) rows.row(static_cast<Eigen::Index>(f)) = theta_init[f].to_real();
  Eigen::MatrixXd z = model.fit(rows);
  Eigen::MatrixXd duals = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(F), n);

  for (int iter = 1; iter <= options.max_outer; ++iter) {
    result.iterations = iter;
    for (size_t f = 0; f < F; ++f) {
      const auto fi = static_cast<Eigen::Index>(f);
      const Eigen::VectorXd target =
          model.evaluate(static_cast<int>(f), z) - duals.row(fi).transpose() / rho;
      SolveResult inner =
          solve_theta(x[f], tau[f], factors[f], scene, frequencies_hz[f],
                      result.theta[f], options.inner, &target, rho);
      result.theta[f] = inner.theta;
      rows.row(fi) = inner.theta.to_real();
    }
    const Eigen::MatrixXd z_prev = z;
    z = model.fit(rows + duals / rho);
    double primal = 0.0;
    for (size_t f = 0; f < F; ++f) {
      const auto fi = static_cast<Eigen::Index>(f);
      const Eigen::VectorXd gap =
          rows.row(fi).transpose() - model.evaluate(static_cast<int>(f), z);
      primal = std::max(primal, gap.norm());
      duals.row(fi) += rho * gap.transpose();
    }
    const double dual = rho * (model.basis() * (z - z_prev)).rowwise().norm().maxCoeff();
    result.trace.push_back({iter, primal, dual});
    if (primal < options.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.coefficients = z;
  return result;
}

}  // namespace imapecal
