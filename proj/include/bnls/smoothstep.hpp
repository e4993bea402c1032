#pragma once

#include <array>
#include <span>

#include "bnls/jet.hpp"

namespace bnls::smoothstep {

// S(x) = x^5 (126 - 420x + 540x^2 - 315x^3 + 70x^4): S(0)=0, S(1)=1, and
// the first four derivatives vanish at both ends, so S is C^4 on the line.
inline constexpr std::array<double, 10> kCoeffs = {0, 0, 0, 0, 0, 126, -420, 540, -315, 70};

/// Coefficients of the antiderivative of a polynomial, zero at 0.
template <std::size_t n>
constexpr std::array<double, n + 1> antiderivative(const std::array<double, n>& p) {
  std::array<double, n + 1> r{};
  for (std::size_t i = 0; i < n; ++i) r[i + 1] = p[i] / static_cast<double>(i + 1);
  return r;
}

inline constexpr auto kIntegral = antiderivative(kCoeffs);          // I(x) = int_0^x S
inline constexpr auto kDoubleIntegral = antiderivative(kIntegral);  // J(x) = int_0^x I

/// S clamped to [0, 1] outside the unit interval.
template <std::size_t K>
Jet<K> step(const Jet<K>& x) {
  if (x.value() <= 0.0) return Jet<K>{};
  if (x.value() >= 1.0) return Jet<K>::constant(1.0);
  return polyval(std::span<const double>(kCoeffs), x);
}

inline double step(double x) { return step(Jet<0>::constant(x)).value(); }

}  // namespace bnls::smoothstep
