#include "imapecal/texture.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "imapecal/common.hpp"

namespace imapecal {

namespace {

double trigamma(double x) {
  double result = 0.0;
  while (x < 6.0) {
    result += 1.0 / (x * x);
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += inv * (1.0 + inv * (0.5 +
                   inv * (1.0 / 6.0 -
                   inv2 * (1.0 / 30.0 -
                   inv2 * (1.0 / 42.0 -
                   inv2 * (1.0 / 30.0 -
                   inv2 * (5.0 / 66.0)))))));
  return result;
}

void check_positive(const Eigen::VectorXd& tau) {
  if (tau.size() == 0) throw std::invalid_argument("empty texture vector");
  for (Eigen::Index k = 0; k < tau.size(); ++k) {
    if (!(tau(k) > 0.0)) throw std::domain_error("texture values must be positive");
  }
}

double mean_of(const Eigen::VectorXd& v) {
  return pairwise_sum(v.data(), static_cast<size_t>(v.size())) /
         static_cast<double>(v.size());
}

double mean_transformed(const Eigen::VectorXd& v, double (*f)(double)) {
  std::vector<double> t(static_cast<size_t>(v.size()));
  for (Eigen::Index k = 0; k < v.size(); ++k) t[static_cast<size_t>(k)] = f(v(k));
  return pairwise_sum(t.data(), t.size()) / static_cast<double>(v.size());
}

/// Solves ln(a) - digamma(a) = r on [kShapeMin, kShapeMax]: bisection to
/// width 1e-12 then a few Newton steps. The left side decreases
/// monotonically from ~1/a + ln(a) + gamma toward 0.
double solve_shape(double r, bool* clamped) {
  *clamped = false;
  const auto g = [r](double a) { return std::log(a) - digamma(a) - r; };
  double lo = kShapeMin;
  double hi = kShapeMax;
  if (g(hi) > 0.0) {
    *clamped = true;
    return kShapeMax;
  }
  if (g(lo) < 0.0) {
    *clamped = true;
    return kShapeMin;
  }
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (g(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double a = 0.5 * (lo + hi);
  for (int it = 0; it < 5; ++it) {
    const double deriv = 1.0 / a - trigamma(a);
    if (deriv == 0.0) break;
    double next = a - g(a) / deriv;
    if (!(next > kShapeMin && next < kShapeMax)) break;
    a = next;
  }
  return a;
}

}  // namespace

double digamma(double x) {
  if (!(x > 0.0)) throw std::domain_error("digamma requires x > 0");
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 -
            inv2 * (1.0 / 120.0 -
            inv2 * (1.0 / 252.0 -
            inv2 * (1.0 / 240.0 -
            inv2 * (1.0 / 132.0 -
            inv2 * (691.0 / 32760.0))))));
  return result;
}

double tau_k(double a, double b, double q) {
  if (!(a > 0.0) || !(b > 0.0) || q < 0.0) {
    throw std::invalid_argument("tau_k requires a>0, b>0, q>=0");
  }
  // Positive root of tau^2 - (a-5)b tau - bq = 0, written to avoid
  // cancellation when (a-5)b < 0.
  const double h = (a - double(kDataDim + 1)) * b;
  const double disc = std::sqrt(h * h + 4.0 * b * q);
  const double root = h >= 0.0 ? 0.5 * (h + disc) : 2.0 * b * q / (disc - h);
  return std::max(root, kTauFloor);
}

double tau_student(double a, double b, double q) {
  if (!(a > 0.0) || !(b > 0.0) || q < 0.0) {
    throw std::invalid_argument("tau_student requires a>0, b>0, q>=0");
  }
  return std::max((b + q) / (a + double(kDataDim + 1)), kTauFloor);
}

double tau_cauchy(double b, double q) { return tau_student(1.0, b, q); }

double tau_laplace(double lambda, double q) {
  if (!(lambda > 0.0) || q < 0.0) {
    throw std::invalid_argument("tau_laplace requires lambda>0, q>=0");
  }
  // Positive root of lambda tau^2 + 4 tau - q = 0, rationalized form.
  const double n = double(kDataDim);
  const double root = 2.0 * q / (n + std::sqrt(n * n + 4.0 * lambda * q));
  return std::max(root, kTauFloor);
}

double tau_igcg(double lambda, double q) {
  if (!(lambda > 0.0) || q < 0.0) {
    throw std::invalid_argument("tau_igcg requires lambda>0, q>=0");
  }
  // Positive root of lambda tau^2 + 11 tau - (2q + lambda) = 0.
  const double n = double(2 * kDataDim + 3);
  const double disc = std::sqrt(n * n + 4.0 * lambda * (lambda + 2.0 * q));
  const double root = 2.0 * (lambda + 2.0 * q) / (n + disc);
  return std::max(root, kTauFloor);
}

double update_texture(const TexturePriorModel& prior, double q) {
  switch (prior.family) {
    case TextureFamily::KGamma: return tau_k(prior.a, prior.b, q);
    case TextureFamily::StudentT: return tau_student(prior.a, prior.b, q);
    case TextureFamily::Cauchy: return tau_cauchy(prior.b, q);
    case TextureFamily::Laplace: return tau_laplace(prior.lambda, q);
    case TextureFamily::InverseGaussianCG: return tau_igcg(prior.lambda, q);
    case TextureFamily::GaussianFixed: return 1.0;
  }
  throw std::logic_error("unknown texture family");
}

Eigen::VectorXd update_textures(const TexturePriorModel& prior,
                                const Eigen::VectorXd& quadratic) {
  Eigen::VectorXd tau(quadratic.size());
  for (Eigen::Index k = 0; k < quadratic.size(); ++k) {
    tau(k) = update_texture(prior, quadratic(k));
  }
  return tau;
}

HyperUpdate hyper_k(const Eigen::VectorXd& tau) {
  check_positive(tau);
  const double mean = mean_of(tau);
  const double mean_log = mean_transformed(tau, [](double t) { return std::log(t); });
  const double r = std::log(mean) - mean_log;  // >= 0 by Jensen
  HyperUpdate out;
  const double a = solve_shape(r, &out.clamped);
  out.model = TexturePriorModel::k_gamma(a, mean / a);
  return out;
}

HyperUpdate hyper_student(const Eigen::VectorXd& tau) {
  check_positive(tau);
  const double mean_log = mean_transformed(tau, [](double t) { return std::log(t); });
  const double mean_inv = mean_transformed(tau, [](double t) { return 1.0 / t; });
  const double r = mean_log + std::log(mean_inv);  // >= 0 by Jensen
  HyperUpdate out;
  const double a = solve_shape(r, &out.clamped);
  out.model = TexturePriorModel::student_t(a, a / mean_inv);
  return out;
}

HyperUpdate hyper_laplace(const Eigen::VectorXd& tau) {
  check_positive(tau);
  HyperUpdate out;
  out.model = TexturePriorModel::laplace(1.0 / mean_of(tau));
  return out;
}

HyperUpdate hyper_igcg(const Eigen::VectorXd& tau) {
  check_positive(tau);
  const double mean_dev = mean_transformed(
      tau, [](double t) { return (t - 1.0) * (t - 1.0) / t; });
  HyperUpdate out;
  double lambda;
  if (mean_dev > 0.0 && 1.0 / mean_dev < kRateMax) {
    lambda = 1.0 / mean_dev;
  } else {
    lambda = kRateMax;
    out.clamped = true;
  }
  out.model = TexturePriorModel::inverse_gaussian_cg(lambda);
  return out;
}

HyperUpdate update_hyper(const TexturePriorModel& prior,
                         const Eigen::VectorXd& tau) {
  switch (prior.family) {
    case TextureFamily::KGamma: return hyper_k(tau);
    case TextureFamily::StudentT: return hyper_student(tau);
    case TextureFamily::Cauchy: {
      check_positive(tau);
      const double mean_inv = mean_transformed(tau, [](double t) { return 1.0 / t; });
      HyperUpdate out;
      out.model = TexturePriorModel::cauchy(1.0 / mean_inv);
      return out;
    }
    case TextureFamily::Laplace: return hyper_laplace(tau);
    case TextureFamily::InverseGaussianCG: return hyper_igcg(tau);
    case TextureFamily::GaussianFixed: {
      HyperUpdate out;
      out.model = prior;
      return out;
    }
  }
  throw std::logic_error("unknown texture family");
}

}  // namespace imapecal
