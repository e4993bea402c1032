#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace bnls {

struct InvalidParameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Numerical failure of an iteration or time integration (non-convergence, NaN).
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Extended real used for exponents that may be +infinity (alpha*, q = inf).
/// Keeps the infinite case explicit instead of hiding it behind a large float.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr explicit ExtendedReal(double v) : value_(v) {}
  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr double value() const {
    return infinite_ ? std::numeric_limits<double>::infinity() : value_;
  }
  /// Strict x < *this.
  constexpr bool exceeds(double x) const { return infinite_ || x < value_; }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

struct Params {
  int N = 0;
  double mu = 0.0;
  double alpha = 0.0;
  double gamma_c = 0.0;
  std::optional<double> sigma_c;  // undefined on the mass-critical line N*alpha = 8
  ExtendedReal alpha_star;

  double mass_critical_alpha() const { return 8.0 / N; }
};

enum class RegimeTag { MassCritical, Intercritical, EnergyCritical, OutOfTheory };

struct Regime {
  RegimeTag tag = RegimeTag::OutOfTheory;
  bool alpha_le_8 = false;  // blow-up theorem hypothesis, meaningful for Intercritical
};

inline std::string_view to_string(RegimeTag t) {
  switch (t) {
    case RegimeTag::MassCritical: return "MassCritical";
    case RegimeTag::Intercritical: return "Intercritical";
    case RegimeTag::EnergyCritical: return "EnergyCritical";
    case RegimeTag::OutOfTheory: return "OutOfTheory";
  }
  return "?";
}

namespace detail {
inline bool nearly_equal(double a, double b, double rel = 1e-12) {
  return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}
}  // namespace detail

inline Params derive_params(int N, double mu, double alpha) {
  if (N < 1) throw InvalidParameter("dimension N must be >= 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidParameter("alpha must be a finite positive number");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw InvalidParameter("mu must be >= 0 (focusing theory is restricted to mu >= 0)");

  Params p;
  p.N = N;
  p.mu = mu;
  p.alpha = alpha;
  p.gamma_c = N / 2.0 - 4.0 / alpha;
  const double denom = N * alpha - 8.0;
  if (!detail::nearly_equal(N * alpha, 8.0)) p.sigma_c = (8.0 - (N - 4) * alpha) / denom;
  p.alpha_star = N >= 5 ? ExtendedReal(8.0 / (N - 4)) : ExtendedReal::infinity();
  return p;
}

inline Regime classify_regime(const Params& p) {
  Regime r;
  if (detail::nearly_equal(p.alpha, p.mass_critical_alpha())) {
    r.tag = RegimeTag::MassCritical;
  } else if (p.N >= 5 && detail::nearly_equal(p.alpha, p.alpha_star.value())) {
    r.tag = RegimeTag::EnergyCritical;
  } else if (p.alpha > p.mass_critical_alpha() && p.alpha_star.exceeds(p.alpha)) {
    r.tag = RegimeTag::Intercritical;
    r.alpha_le_8 = p.alpha <= 8.0;
  }
  return r;
}

/// Biharmonic admissibility: 4/q + N/r = N/2 with r in the dimension-dependent range.
/// q may be +infinity.
inline bool is_biharmonic_admissible(double q, double r, int N) {
  constexpr double kTol = 1e-12;
  if (!(q >= 1.0) || !(r >= 1.0) || N < 1) return false;
  const double lhs = (std::isinf(q) ? 0.0 : 4.0 / q) + (std::isinf(r) ? 0.0 : N / r);
  if (std::abs(lhs - N / 2.0) > kTol) return false;
  if (r < 2.0) return false;
  if (N >= 5) return r <= 2.0 * N / (N - 4) + kTol;
  if (N == 4) return std::isfinite(r);
  return true;
}

struct ExponentSet {
  double q_bar = 0, r_bar = 0, k_bar = 0, m_bar = 0, l_bar = 0;
  // Only used by the N >= 3 nonlinear estimates; negative or singular for N <= 2.
  std::optional<double> a_bar, b_bar;
};

inline ExponentSet scattering_exponents(const Params& p) {
  if (classify_regime(p).tag != RegimeTag::Intercritical)
    throw InvalidParameter("scattering exponents require the intercritical regime 8/N < alpha < alpha*");
  const double N = p.N, a = p.alpha;
  ExponentSet e;
  e.q_bar = 8.0 * (a + 2.0) / (N * a);
  e.r_bar = a + 2.0;
  e.k_bar = 4.0 * a * (a + 2.0) / (8.0 - (N - 4.0) * a);
  e.m_bar = 4.0 * a * (a + 2.0) / (N * a * a + (N - 4.0) * a - 8.0);
  e.l_bar = 2.0 * N * a * (a + 2.0) / (N * a * a + 4.0 * (N - 2.0) * a - 16.0);
  if (p.N >= 3) {
    const double ad = (N - 2.0) * a - 4.0;
    const double bd = 2.0 * (N + 4.0) - (N - 4.0) * a;
    if (ad > 0.0) e.a_bar = 4.0 * (a + 2.0) / ad;
    if (bd > 0.0) e.b_bar = 2.0 * N * (a + 2.0) / bd;
  }
  for (double v : {e.q_bar, e.r_bar, e.k_bar, e.m_bar, e.l_bar})
    if (!(v > 1.0) || !std::isfinite(v)) throw InvalidParameter("degenerate scattering exponent");

  constexpr double kTol = 1e-12;
  if (!is_biharmonic_admissible(e.q_bar, e.r_bar, p.N))
    throw std::logic_error("(q_bar, r_bar) is not biharmonic admissible");
  if (std::abs(1.0 / e.k_bar + 1.0 / e.m_bar - 2.0 / e.q_bar) > kTol)
    throw std::logic_error("1/k_bar + 1/m_bar != 2/q_bar");
  return e;
}

}  // namespace bnls
