#include "imapecal/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace imapecal {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) {
  // splitmix64 finalizer over seed xor golden-ratio-stepped counter
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double RandomStream::uniform() {
  // 53-bit mantissa from the top bits
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = 0.0;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * kPi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * kPi * u2);
}

double RandomStream::gamma(double shape, double scale) {
  if (shape <= 0.0 || scale <= 0.0)
    throw std::invalid_argument("gamma: shape and scale must be positive");
  if (shape < 1.0) {
    // boost to shape+1 then apply the power correction
    const double u = std::max(uniform(), 1e-300);
    return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0;
    double v = 0.0;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return d * v * scale;
  }
}

double RandomStream::inverse_gamma(double shape, double scale_b) {
  // reciprocal of a gamma draw with scale 1/b
  return 1.0 / gamma(shape, 1.0 / scale_b);
}

double RandomStream::exponential(double rate) {
  if (rate <= 0.0) throw std::invalid_argument("exponential: rate must be positive");
  double u = 0.0;
  do {
    u = uniform();
  } while (u <= 0.0);
  return -std::log(u) / rate;
}

double RandomStream::inverse_gaussian(double mu, double lambda) {
  if (mu <= 0.0 || lambda <= 0.0)
    throw std::invalid_argument("inverse_gaussian: parameters must be positive");
  const double z = normal();
  const double nu = z * z;
  const double x = mu + mu * mu * nu / (2.0 * lambda) -
                   mu / (2.0 * lambda) *
                       std::sqrt(4.0 * mu * lambda * nu + mu * mu * nu * nu);
  const double u = uniform();
  if (u <= mu / (mu + x)) return x;
  return mu * mu / x;
}

Complex RandomStream::complex_normal() {
  const double s = std::sqrt(0.5);
  const double re = normal();
  const double im = normal();
  return Complex(s * re, s * im);
}

}  // namespace imapecal
