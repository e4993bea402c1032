#pragma once

#include <array>
#include <cstddef>
#include <span>

namespace bnls {

/// Truncated Taylor expansion c[0] + c[1] x + ... + c[K] x^K around a point.
/// Arithmetic is exact polynomial arithmetic modulo x^(K+1), which gives
/// closed-form derivatives of smooth radial profiles without finite differences.
template <std::size_t K>
struct Jet {
  std::array<double, K + 1> c{};

  static Jet constant(double v) {
    Jet j;
    j.c[0] = v;
    return j;
  }
  static Jet variable(double at) {
    Jet j;
    j.c[0] = at;
    if constexpr (K >= 1) j.c[1] = 1.0;
    return j;
  }

  double value() const { return c[0]; }

  /// n-th derivative at the expansion point.
  double derivative(std::size_t n) const {
    double f = 1.0;
    for (std::size_t i = 2; i <= n; ++i) f *= static_cast<double>(i);
    return c[n] * f;
  }

  Jet& operator+=(const Jet& o) {
    for (std::size_t i = 0; i <= K; ++i) c[i] += o.c[i];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (std::size_t i = 0; i <= K; ++i) c[i] -= o.c[i];
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c) v *= s;
    return *this;
  }
  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator+(Jet a, double s) {
    a.c[0] += s;
    return a;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (std::size_t i = 0; i <= K; ++i)
      for (std::size_t j = 0; i + j <= K; ++j) r.c[i + j] += a.c[i] * b.c[j];
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r;
    for (std::size_t n = 0; n <= K; ++n) {
      double s = a.c[n];
      for (std::size_t j = 1; j <= n; ++j) s -= b.c[j] * r.c[n - j];
      r.c[n] = s / b.c[0];
    }
    return r;
  }
};

/// d/dx of a jet; the result carries one order fewer.
template <std::size_t K>
Jet<K - 1> differentiate(const Jet<K>& f) {
  Jet<K - 1> d;
  for (std::size_t i = 0; i < K; ++i) d.c[i] = static_cast<double>(i + 1) * f.c[i + 1];
  return d;
}

template <std::size_t K, std::size_t L>
Jet<L> truncate(const Jet<K>& f) {
  static_assert(L <= K);
  Jet<L> r;
  for (std::size_t i = 0; i <= L; ++i) r.c[i] = f.c[i];
  return r;
}

/// Horner evaluation of sum coeffs[i] x^i on a jet argument.
template <std::size_t K>
Jet<K> polyval(std::span<const double> coeffs, const Jet<K>& x) {
  Jet<K> acc;
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
  return acc;
}

/// Radial Laplacian f'' + (dim-1) f'/r of a jet expanded at radius r > 0.
template <std::size_t K>
Jet<K - 2> radial_laplacian(const Jet<K>& f, int dim, double radius) {
  const auto d1 = differentiate(f);
  const auto d2 = differentiate(d1);
  const auto r = Jet<K - 2>::variable(radius);
  return d2 + static_cast<double>(dim - 1) * (truncate<K - 1, K - 2>(d1) / r);
}

}  // namespace bnls
