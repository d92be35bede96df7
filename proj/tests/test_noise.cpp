#include <cmath>
#include <string>

#include "doctest.h"
#include "imapecal/noise.hpp"

using namespace imapecal;

namespace {

Mat4 random_psd(RandomStream& rng) {
  Mat4 a;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = rng.complex_normal();
  Mat4 psd = a * a.adjoint();
  return psd / psd.trace().real();
}

Mat4 sample_covariance(const TexturePriorModel& prior, const Mat4& omega,
                       int n, RandomStream& rng) {
  Mat4 acc = Mat4::Zero();
  for (int i = 0; i < n; ++i) {
    const Vec4 z = sample_noise(prior, omega, rng);
    acc += z * z.adjoint();
  }
  return acc / double(n);
}

}  // namespace

TEST_CASE("family names round-trip") {
  for (const TextureFamily f :
       {TextureFamily::KGamma, TextureFamily::StudentT, TextureFamily::Cauchy,
        TextureFamily::Laplace, TextureFamily::InverseGaussianCG,
        TextureFamily::GaussianFixed}) {
    CHECK(family_from_name(family_name(f)) == f);
  }
  CHECK_THROWS(family_from_name("weibull"));
}

TEST_CASE("prior factories set the active fields") {
  CHECK(TexturePriorModel::k_gamma(2, 3).family == TextureFamily::KGamma);
  CHECK(TexturePriorModel::k_gamma(2, 3).a == 2.0);
  CHECK(TexturePriorModel::k_gamma(2, 3).b == 3.0);
  CHECK(TexturePriorModel::cauchy(4).a == 1.0);
  CHECK(TexturePriorModel::cauchy(4).b == 4.0);
  CHECK(TexturePriorModel::laplace(2).lambda == 2.0);
  CHECK(TexturePriorModel::inverse_gaussian_cg(3).lambda == 3.0);
  CHECK(TexturePriorModel::gaussian_fixed().degenerate());
  CHECK(!TexturePriorModel::cauchy(1).degenerate());
  CHECK_THROWS(TexturePriorModel::k_gamma(-1, 1).validate());
  CHECK_THROWS(TexturePriorModel::laplace(0).validate());
}

TEST_CASE("log prior densities match the closed forms") {
  const double tau = 1.7;
  // Gamma(a, b): (a-1) ln t - t/b - lgamma(a) - a ln b.
  const double a = 2.3, b = 0.8;
  CHECK(log_prior_density(TexturePriorModel::k_gamma(a, b), tau) ==
        doctest::Approx((a - 1) * std::log(tau) - tau / b - std::lgamma(a) -
                        a * std::log(b))
            .epsilon(1e-12));
  // Inverse gamma(a, b): a ln b - lgamma(a) - (a+1) ln t - b/t.
  CHECK(log_prior_density(TexturePriorModel::student_t(a, b), tau) ==
        doctest::Approx(a * std::log(b) - std::lgamma(a) -
                        (a + 1) * std::log(tau) - b / tau)
            .epsilon(1e-12));
  // Cauchy pins the inverse-gamma shape at 1.
  CHECK(log_prior_density(TexturePriorModel::cauchy(b), tau) ==
        doctest::Approx(log_prior_density(TexturePriorModel::student_t(1, b), tau))
            .epsilon(1e-14));
  // Exponential(lambda): ln lambda - lambda t.
  const double lam = 1.4;
  CHECK(log_prior_density(TexturePriorModel::laplace(lam), tau) ==
        doctest::Approx(std::log(lam) - lam * tau).epsilon(1e-12));
  // Unit-mean inverse Gaussian: 0.5 ln(lambda / (2 pi t^3)) - lambda (t-1)^2 / (2t).
  CHECK(log_prior_density(TexturePriorModel::inverse_gaussian_cg(lam), tau) ==
        doctest::Approx(0.5 * std::log(lam / (2 * kPi * tau * tau * tau)) -
                        lam * (tau - 1) * (tau - 1) / (2 * tau))
            .epsilon(1e-12));
  // Exponential special case of the gamma family: a = b = 1 gives -tau.
  CHECK(log_prior_density(TexturePriorModel::k_gamma(1, 1), tau) ==
        doctest::Approx(-tau).epsilon(1e-14));
  CHECK(log_prior_density(TexturePriorModel::gaussian_fixed(), tau) == 0.0);
}

TEST_CASE("texture sampling hits the documented means") {
  RandomStream rng(1);
  const int n = 100000;

  for (int i = 0; i < 100; ++i) {
    CHECK(sample_texture(TexturePriorModel::gaussian_fixed(), rng) == 1.0);
  }

  double sum = 0.0;
  for (int i = 0; i < n; ++i)
    sum += sample_texture(TexturePriorModel::k_gamma(2.0, 1.5), rng);
  // Gamma mean a*b, variance a*b^2.
  CHECK(std::abs(sum / n - 3.0) < 5.0 * std::sqrt(2.0 * 1.5 * 1.5 / n));

  sum = 0.0;
  for (int i = 0; i < n; ++i)
    sum += sample_texture(TexturePriorModel::inverse_gaussian_cg(3.0), rng);
  // Unit mean by construction, variance mu^3/lambda = 1/3.
  CHECK(std::abs(sum / n - 1.0) < 5.0 * std::sqrt(1.0 / 3.0 / n));

  sum = 0.0;
  for (int i = 0; i < n; ++i)
    sum += sample_texture(TexturePriorModel::laplace(2.0), rng);
  CHECK(std::abs(sum / n - 0.5) < 5.0 * 0.5 / std::sqrt(double(n)));

  for (int i = 0; i < 1000; ++i) {
    CHECK(sample_texture(TexturePriorModel::student_t(2.0, 1.0), rng) > 0.0);
    CHECK(sample_texture(TexturePriorModel::cauchy(1.0), rng) > 0.0);
  }
}

TEST_CASE("hermitian factor reconstructs the covariance") {
  RandomStream rng(2);
  for (int i = 0; i < 20; ++i) {
    const Mat4 omega = random_psd(rng);
    const Mat4 l = hermitian_factor(omega);
    CHECK((l * l.adjoint() - omega).norm() < 1e-10);
  }
  // Rank-deficient inputs are fine.
  Mat4 rank1 = Mat4::Zero();
  rank1(0, 0) = 1.0;
  const Mat4 l = hermitian_factor(rank1);
  CHECK((l * l.adjoint() - rank1).norm() < 1e-12);
  CHECK(hermitian_factor(Mat4::Zero()).norm() == 0.0);
  // Indefinite input is rejected.
  Mat4 indef = Mat4::Identity();
  indef(3, 3) = -1.0;
  CHECK_THROWS(hermitian_factor(indef));
}

TEST_CASE("gaussian speckle sampling reproduces omega") {
  RandomStream rng(3);
  const Mat4 quarter = 0.25 * Mat4::Identity();
  const Mat4 cov = sample_covariance(TexturePriorModel::gaussian_fixed(),
                                     quarter, 100000, rng);
  CHECK((cov - quarter).norm() < 0.02);
  CHECK(sample_noise(TexturePriorModel::gaussian_fixed(), Mat4::Zero(), rng)
            .norm() == 0.0);
}

TEST_CASE("unit-mean textures leave the covariance at omega") {
  RandomStream rng(4);
  const Mat4 omega = random_psd(rng);
  for (const TexturePriorModel prior :
       {TexturePriorModel::inverse_gaussian_cg(3.0),
        TexturePriorModel::k_gamma(4.0, 0.25)}) {
    const Mat4 cov = sample_covariance(prior, omega, 100000, rng);
    CHECK((cov - omega).norm() < 0.05);
  }
}

TEST_CASE("covariance scales linearly with omega") {
  RandomStream a(5), b(5);
  const Mat4 omega = 0.25 * Mat4::Identity();
  const TexturePriorModel prior = TexturePriorModel::gaussian_fixed();
  const Mat4 cov1 = sample_covariance(prior, omega, 20000, a);
  const Mat4 cov3 = sample_covariance(prior, Mat4(3.0 * omega), 20000, b);
  CHECK((cov3 - 3.0 * cov1).norm() < 1e-12);
}

TEST_CASE("contamination without background or noise is the identity") {
  const Scene scene = make_scene(0, 5, 2, 0);
  RandomStream rng(6);
  const ThetaVector theta = random_theta(2, 5, rng);
  const VisibilitySet clean = predict_all(theta, scene, 150e6);
  const VisibilitySet out = contaminate(clean, scene, 150e6, 0.0, rng);
  CHECK((out.data - clean.data).norm() == 0.0);
}

TEST_CASE("white noise variance matches sigma squared per component") {
  const Scene scene = make_scene(0, 8, 2, 0);
  const ThetaVector theta = ThetaVector::identity(2, 8);
  const VisibilitySet clean = predict_all(theta, scene, 150e6);
  RandomStream rng(7);
  const double sigma = 0.3;
  double sum2 = 0.0;
  int count = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const VisibilitySet noisy = contaminate(clean, scene, 150e6, sigma, rng);
    const Eigen::Matrix4Xcd diff = noisy.data - clean.data;
    sum2 += diff.squaredNorm();
    count += int(diff.size());
  }
  // sigma * CN(0,1) has mean squared modulus sigma^2 per complex entry.
  const double per_component = sum2 / double(count);
  CHECK(std::abs(per_component - sigma * sigma) <
        5.0 * sigma * sigma / std::sqrt(double(count)));
}

TEST_CASE("background-only contamination is deterministic structure") {
  const Scene scene = make_scene(9, 6, 2, 3);
  const ThetaVector theta = ThetaVector::identity(2, 6);
  const VisibilitySet clean = predict_all(theta, scene, 150e6);
  RandomStream rng(8);
  const VisibilitySet noisy = contaminate(clean, scene, 150e6, 0.0, rng);
  const VisibilitySet bg = background_visibilities(scene, 150e6);
  CHECK((noisy.data - clean.data - bg.data).norm() < 1e-14);
  CHECK(bg.data.norm() > 0.0);
}

TEST_CASE("background residuals are heavier tailed than gaussian") {
  // Pool contamination residuals over many background redraws and compare
  // the pooled kurtosis with the Gaussian reference value of 3.
  Scene scene = make_scene(10, 8, 2, 4);
  const ThetaVector theta = ThetaVector::identity(2, 8);
  const VisibilitySet clean = predict_all(theta, scene, 150e6);
  RandomStream rng(9);
  double m2 = 0.0, m4 = 0.0;
  int count = 0;
  for (int rep = 0; rep < 300; ++rep) {
    redraw_background(scene, 1000 + rep);
    const VisibilitySet noisy = contaminate(clean, scene, 150e6, 1e-4, rng);
    const Eigen::Matrix4Xcd diff = noisy.data - clean.data;
    for (int k = 0; k < diff.cols(); ++k) {
      for (int c = 0; c < 4; ++c) {
        for (const double v : {diff(c, k).real(), diff(c, k).imag()}) {
          m2 += v * v;
          m4 += v * v * v * v;
          ++count;
        }
      }
    }
  }
  m2 /= count;
  m4 /= count;
  const double kurtosis = m4 / (m2 * m2);
  CHECK(kurtosis > 3.2);
}

TEST_CASE("snr convention round-trips through sigma") {
  const Scene scene = make_scene(11, 8, 2, 4);
  for (const double kappa : {1.0, 25.0}) {
    for (const double target : {-10.0, 0.0, 10.0, 20.0}) {
      const double sigma = sigma_for_snr(scene, target, kappa);
      REQUIRE(sigma > 0.0);
      const double back = 10.0 * std::log10(snr_from_sigma(scene, sigma, kappa));
      CHECK(back == doctest::Approx(target).epsilon(1e-9));
    }
  }
  // Beyond the background-limited ceiling the sigma clamps to zero.
  const double ceiling =
      10.0 * std::log10(snr_from_sigma(scene, 0.0, 1.0));
  CHECK(sigma_for_snr(scene, ceiling + 10.0, 1.0) == 0.0);
}
