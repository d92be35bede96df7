// Deterministic random streams. Every worker gets its own stream derived
// from a master seed by counter mixing, so results replay exactly no matter
// how work is scheduled. The non-uniform samplers are spelled out here
// (rather than using std:: distributions) so sampled sequences are pinned
// by the standard-specified mt19937_64 alone.
#pragma once

#include <cstdint>
#include <random>

#include "imapecal/common.hpp"

namespace imapecal {

/// 64-bit mixing function used to derive sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter);

class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  /// Stream for worker `counter` split off a master seed; further ids can
  /// be chained, e.g. substream(master, snr_index, trial_index).
  static RandomStream substream(std::uint64_t master, std::uint64_t counter) {
    return RandomStream(mix_seed(master, counter));
  }
  static RandomStream substream(std::uint64_t master, std::uint64_t c1,
                                std::uint64_t c2) {
    return RandomStream(mix_seed(mix_seed(master, c1), c2));
  }

  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  std::uint64_t bits() { return engine_(); }

  /// Standard normal (Box-Muller, spare cached).
  double normal();

  /// Gamma(shape, scale), Marsaglia-Tsang squeeze.
  double gamma(double shape, double scale);

  /// Inverse gamma with density b^a/Gamma(a) x^{-a-1} exp(-b/x).
  double inverse_gamma(double shape, double scale_b);

  double exponential(double rate);

  /// Inverse Gaussian (Wald) with mean mu and shape lambda, via the
  /// chi-square transform with the ratio acceptance step.
  double inverse_gaussian(double mu, double lambda);

  /// Circular complex normal CN(0, 1): real/imag parts N(0, 1/2).
  Complex complex_normal();

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace imapecal
