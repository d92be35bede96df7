#include "imapecal/noise.hpp"

#include <cmath>
#include <stdexcept>

namespace imapecal {

TexturePriorModel TexturePriorModel::k_gamma(double a, double b) {
  TexturePriorModel m;
  m.family = TextureFamily::KGamma;
  m.a = a;
  m.b = b;
  m.validate();
  return m;
}

TexturePriorModel TexturePriorModel::student_t(double a, double b) {
  TexturePriorModel m;
  m.family = TextureFamily::StudentT;
  m.a = a;
  m.b = b;
  m.validate();
  return m;
}

TexturePriorModel TexturePriorModel::cauchy(double b) {
  TexturePriorModel m;
  m.family = TextureFamily::Cauchy;
  m.a = 1.0;
  m.b = b;
  m.validate();
  return m;
}

TexturePriorModel TexturePriorModel::laplace(double lambda) {
  TexturePriorModel m;
  m.family = TextureFamily::Laplace;
  m.lambda = lambda;
  m.validate();
  return m;
}

TexturePriorModel TexturePriorModel::inverse_gaussian_cg(double lambda) {
  TexturePriorModel m;
  m.family = TextureFamily::InverseGaussianCG;
  m.lambda = lambda;
  m.validate();
  return m;
}

TexturePriorModel TexturePriorModel::gaussian_fixed() {
  return TexturePriorModel{};
}

void TexturePriorModel::validate() const {
  switch (family) {
    case TextureFamily::KGamma:
    case TextureFamily::StudentT:
      if (a <= 0.0 || b <= 0.0)
        throw std::invalid_argument("texture prior: a and b must be positive");
      break;
    case TextureFamily::Cauchy:
      if (b <= 0.0) throw std::invalid_argument("texture prior: b must be positive");
      break;
    case TextureFamily::Laplace:
    case TextureFamily::InverseGaussianCG:
      if (lambda <= 0.0)
        throw std::invalid_argument("texture prior: lambda must be positive");
      break;
    case TextureFamily::GaussianFixed:
      break;
  }
}

const char* family_name(TextureFamily family) {
  switch (family) {
    case TextureFamily::KGamma: return "k";
    case TextureFamily::StudentT: return "student";
    case TextureFamily::Cauchy: return "cauchy";
    case TextureFamily::Laplace: return "laplace";
    case TextureFamily::InverseGaussianCG: return "igcg";
    case TextureFamily::GaussianFixed: return "gaussian";
  }
  return "unknown";
}

TextureFamily family_from_name(const std::string& name) {
  if (name == "k") return TextureFamily::KGamma;
  if (name == "student") return TextureFamily::StudentT;
  if (name == "cauchy") return TextureFamily::Cauchy;
  if (name == "laplace") return TextureFamily::Laplace;
  if (name == "igcg") return TextureFamily::InverseGaussianCG;
  if (name == "gaussian") return TextureFamily::GaussianFixed;
  throw std::invalid_argument("unknown texture family: " + name);
}

double log_prior_density(const TexturePriorModel& prior, double tau) {
  if (prior.degenerate()) return 0.0;
  if (tau <= 0.0)
    throw std::domain_error("log_prior_density: tau must be positive");
  switch (prior.family) {
    case TextureFamily::KGamma:
      return (prior.a - 1.0) * std::log(tau) - tau / prior.b -
             std::lgamma(prior.a) - prior.a * std::log(prior.b);
    case TextureFamily::StudentT:
    case TextureFamily::Cauchy: {
      const double a = prior.family == TextureFamily::Cauchy ? 1.0 : prior.a;
      return a * std::log(prior.b) - std::lgamma(a) -
             (a + 1.0) * std::log(tau) - prior.b / tau;
    }
    case TextureFamily::Laplace:
      return std::log(prior.lambda) - prior.lambda * tau;
    case TextureFamily::InverseGaussianCG: {
      const double d = tau - 1.0;
      return 0.5 * (std::log(prior.lambda) - std::log(2.0 * kPi)) -
             1.5 * std::log(tau) - prior.lambda * d * d / (2.0 * tau);
    }
    case TextureFamily::GaussianFixed:
      break;
  }
  return 0.0;
}

double sample_texture(const TexturePriorModel& prior, RandomStream& rng) {
  prior.validate();
  switch (prior.family) {
    case TextureFamily::KGamma:
      return rng.gamma(prior.a, prior.b);
    case TextureFamily::StudentT:
      return rng.inverse_gamma(prior.a, prior.b);
    case TextureFamily::Cauchy:
      return rng.inverse_gamma(1.0, prior.b);
    case TextureFamily::Laplace:
      return rng.exponential(prior.lambda);
    case TextureFamily::InverseGaussianCG:
      return rng.inverse_gaussian(1.0, prior.lambda);
    case TextureFamily::GaussianFixed:
      return 1.0;
  }
  return 1.0;
}

Mat4 hermitian_factor(const Mat4& omega) {
  Eigen::SelfAdjointEigenSolver<Mat4> eig(omega);
  if (eig.info() != Eigen::Success)
    throw std::runtime_error("hermitian_factor: eigendecomposition failed");
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  Eigen::Vector4d lam = eig.eigenvalues();
  for (int i = 0; i < 4; ++i) {
    if (lam(i) < -1e-10 * scale)
      throw std::runtime_error("hermitian_factor: matrix is not PSD");
    lam(i) = std::sqrt(std::max(lam(i), 0.0));
  }
  return eig.eigenvectors() * lam.asDiagonal();
}

Vec4 sample_noise(const TexturePriorModel& prior, const Mat4& omega,
                  RandomStream& rng) {
  const Mat4 factor = hermitian_factor(omega);
  const double tau = sample_texture(prior, rng);
  Vec4 z;
  for (int i = 0; i < 4; ++i) z(i) = rng.complex_normal();
  return std::sqrt(tau) * (factor * z);
}

VisibilitySet background_visibilities(const Scene& scene, double frequency_hz) {
  const int M = scene.antenna_count();
  const int B = scene.baseline_count();
  VisibilitySet vis;
  vis.data = Eigen::Matrix4Xcd::Zero(4, B);

  for (int i = 0; i < scene.background_count(); ++i) {
    const Source& src = scene.background[i];
    const Mat2 coh = coherency(src);
    std::vector<Mat2> jones(M);
    for (int p = 0; p < M; ++p) {
      const Mat2 known = known_effects(scene.array, src, frequency_hz, p);
      const Complex z = std::polar(1.0, scene.background_phase(i, p));
      jones[p] = known * (z * faraday_matrix(scene.background_faraday(i, p)));
    }
    int k = 0;
    for (int p = 0; p < M; ++p)
      for (int q = p + 1; q < M; ++q, ++k)
        vis.data.col(k) += vec2x2(jones[p] * coh * jones[q].adjoint());
  }
  return vis;
}

VisibilitySet contaminate(const VisibilitySet& noiseless, const Scene& scene,
                          double frequency_hz, double sigma, RandomStream& rng) {
  if (sigma < 0.0) throw std::invalid_argument("contaminate: negative sigma");
  VisibilitySet out = noiseless;
  if (scene.background_count() > 0)
    out.data += background_visibilities(scene, frequency_hz).data;
  if (sigma > 0.0) {
    for (int k = 0; k < out.baseline_count(); ++k)
      for (int c = 0; c < 4; ++c) out.data(c, k) += sigma * rng.complex_normal();
  }
  return out;
}

namespace {
double scene_powers(const Scene& scene, double* background_power) {
  double cal = 0.0, bg = 0.0;
  for (const Source& s : scene.calibrators) cal += s.flux * s.flux;
  for (const Source& s : scene.background) bg += s.flux * s.flux;
  *background_power = bg;
  return cal;
}
}  // namespace

double snr_from_sigma(const Scene& scene, double sigma, double kappa) {
  double bg = 0.0;
  const double cal = scene_powers(scene, &bg);
  const double denom = bg + 4.0 * scene.baseline_count() * sigma * sigma * kappa;
  return cal / denom;
}

double sigma_for_snr(const Scene& scene, double snr_db, double kappa) {
  double bg = 0.0;
  const double cal = scene_powers(scene, &bg);
  const double target = std::pow(10.0, snr_db / 10.0);
  const double var =
      (cal / target - bg) / (4.0 * scene.baseline_count() * kappa);
  return var > 0.0 ? std::sqrt(var) : 0.0;
}

}  // namespace imapecal
