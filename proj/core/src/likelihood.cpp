#include "imapecal/likelihood.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

namespace imapecal {

namespace {
constexpr double kRidgeScale = 1e-10;
}

SpeckleFactor::SpeckleFactor(const Mat4& omega) : omega_(omega) {
  if (!omega.isApprox(omega.adjoint(), 1e-8)) {
    throw std::invalid_argument("speckle covariance must be Hermitian");
  }
  const double tr = omega.real().trace();
  if (!(tr > 0.0) || !std::isfinite(tr)) {
    throw std::invalid_argument("speckle covariance must have positive trace");
  }
  Mat4 ridged = omega;
  const double ridge = kRidgeScale * tr;
  ridged.diagonal().array() += ridge;
  llt_.compute(ridged);
  if (llt_.info() != Eigen::Success) {
    throw std::runtime_error("speckle covariance is numerically singular");
  }
  log_det_ = 0.0;
  for (int i = 0; i < kDataDim; ++i) {
    log_det_ += 2.0 * std::log(std::real(llt_.matrixLLT()(i, i)));
  }
}

double SpeckleFactor::quadratic_form(const Vec4& u) const {
  return whiten(u).squaredNorm();
}

Vec4 SpeckleFactor::whiten(const Vec4& u) const {
  return llt_.matrixL().solve(u);
}

double SpeckleFactor::condition_number() const {
  Eigen::SelfAdjointEigenSolver<Mat4> es(omega_, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double lo = ev.minCoeff();
  const double hi = ev.maxCoeff();
  if (lo <= 0.0) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

ResidualSet residuals(const VisibilitySet& x, const VisibilitySet& predicted,
                      const SpeckleFactor& factor) {
  if (x.data.cols() != predicted.data.cols()) {
    throw std::invalid_argument("visibility sets differ in baseline count");
  }
  ResidualSet res;
  res.u = x.data - predicted.data;
  const int B = res.baseline_count();
  res.quadratic.resize(B);
  for (int k = 0; k < B; ++k) {
    res.quadratic(k) = factor.quadratic_form(res.u.col(k));
  }
  return res;
}

ResidualSet residuals(const VisibilitySet& x, const ThetaVector& theta,
                      const Scene& scene, double frequency_hz,
                      const SpeckleFactor& factor) {
  ForwardModel model(scene, frequency_hz);
  return residuals(x, model.predict(theta), factor);
}

double log_likelihood_conditional(const ResidualSet& res,
                                  const Eigen::VectorXd& tau,
                                  const SpeckleFactor& factor) {
  const int B = res.baseline_count();
  if (tau.size() != B) {
    throw std::invalid_argument("texture vector length mismatch");
  }
  std::vector<double> terms(static_cast<size_t>(B));
  const double log_det = factor.log_det();
  for (int k = 0; k < B; ++k) {
    const double t = tau(k);
    if (!(t > 0.0)) throw std::domain_error("texture values must be positive");
    terms[static_cast<size_t>(k)] =
        res.quadratic(k) / t + kDataDim * std::log(kPi) +
        kDataDim * std::log(t) + log_det;
  }
  return -pairwise_sum(terms.data(), terms.size());
}

double log_likelihood_conditional(const ResidualSet& res,
                                  const Eigen::VectorXd& tau, const Mat4& omega) {
  return log_likelihood_conditional(res, tau, SpeckleFactor(omega));
}

double log_likelihood_joint(double conditional, const Eigen::VectorXd& tau,
                            const TexturePriorModel& prior) {
  const auto B = static_cast<size_t>(tau.size());
  std::vector<double> terms(B);
  for (size_t k = 0; k < B; ++k) {
    terms[k] = log_prior_density(prior, tau(static_cast<Eigen::Index>(k)));
  }
  return conditional + pairwise_sum(terms.data(), terms.size());
}

SpeckleUpdate update_speckle(const ResidualSet& res, const Eigen::VectorXd& tau) {
  const int B = res.baseline_count();
  if (tau.size() != B) {
    throw std::invalid_argument("texture vector length mismatch");
  }
  SpeckleUpdate out;
  Mat4 acc = Mat4::Zero();
  for (int k = 0; k < B; ++k) {
    const double t = tau(k);
    if (!(t > 0.0)) throw std::domain_error("texture values must be positive");
    const Vec4 u = res.u.col(k);
    acc.noalias() += (u * u.adjoint()) / t;
  }
  acc /= static_cast<double>(B);
  // Exact Hermitian symmetrization; the accumulation above is Hermitian only
  // up to rounding.
  acc = 0.5 * (acc + acc.adjoint()).eval();
  const double tr = acc.real().trace();
  out.trace_raw = tr;
  if (!(tr > 0.0)) {
    out.omega = Mat4::Identity() / kDataDim;
    out.degenerate = true;
    return out;
  }
  out.omega = acc / tr;
  out.degenerate = false;
  return out;
}

}  // namespace imapecal
