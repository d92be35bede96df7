// Shared aliases and small numeric helpers used across the library.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace imapecal {

using Complex = std::complex<double>;
using Mat2 = Eigen::Matrix2cd;
using Mat4 = Eigen::Matrix4cd;
using Vec4 = Eigen::Vector4cd;

/// Complex dimension of one cross-correlation vector. Estimator constants
/// below are written in terms of this (e.g. the quadratic-root coefficients
/// kDataDim + 1 and 2 * kDataDim + 3).
inline constexpr int kDataDim = 4;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

/// Sums a range pairwise over a fixed tree, independent of scheduling.
/// Used wherever a reduction must be reproducible bit-for-bit.
template <typename T>
T pairwise_sum(std::span<const T> values, const T& zero = T{}) {
  const std::size_t n = values.size();
  if (n == 0) return zero;
  if (n == 1) return values[0];
  if (n <= 8) {
    T acc = values[0];
    for (std::size_t i = 1; i < n; ++i) acc = acc + values[i];
    return acc;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.subspan(0, half), zero) +
         pairwise_sum(values.subspan(half), zero);
}

template <typename T>
T pairwise_sum(const T* data, std::size_t n, const T& zero = T{}) {
  return pairwise_sum(std::span<const T>(data, n), zero);
}

/// vec() of a 2x2 matrix: stacks columns, (A00, A10, A01, A11).
inline Vec4 vec2x2(const Mat2& a) {
  Vec4 v;
  v << a(0, 0), a(1, 0), a(0, 1), a(1, 1);
  return v;
}

inline Mat2 unvec2x2(const Vec4& v) {
  Mat2 a;
  a << v(0), v(2), v(1), v(3);
  return a;
}

}  // namespace imapecal
