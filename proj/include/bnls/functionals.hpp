#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "bnls/jet.hpp"
#include "bnls/model.hpp"
#include "bnls/radial_grid.hpp"
#include "bnls/smoothstep.hpp"

namespace bnls {

inline double mass(const RadialField& u) { return l2_squared(u); }

namespace detail {
struct EnergyParts {
  double delta_sq = 0, grad_sq = 0, nonlinear = 0;  // ||Delta u||^2, ||grad u||^2, ||u||_{a+2}^{a+2}
};
inline EnergyParts energy_parts(const Params& p, const RadialField& u) {
  return {l2_squared(laplacian(u)), grad_squared(u), lp_power(u, p.alpha + 2.0)};
}
inline double energy_from(const Params& p, const EnergyParts& e) {
  return 0.5 * e.delta_sq + 0.5 * p.mu * e.grad_sq - e.nonlinear / (p.alpha + 2.0);
}
inline double k_from(const Params& p, const EnergyParts& e, bool with_mu) {
  return e.delta_sq + (with_mu ? 0.5 * p.mu * e.grad_sq : 0.0) -
         p.N * p.alpha / (4.0 * (p.alpha + 2.0)) * e.nonlinear;
}
/// Sum of the magnitudes of the energy terms; a scale for relative drifts.
inline double energy_scale(const Params& p, const EnergyParts& e) {
  return 0.5 * e.delta_sq + 0.5 * p.mu * e.grad_sq + e.nonlinear / (p.alpha + 2.0);
}
}  // namespace detail

/// Focusing energy 1/2 ||Delta u||^2 + mu/2 ||grad u||^2 - ||u||^{a+2}_{a+2} / (a+2).
inline double energy(const Params& p, const RadialField& u) {
  return detail::energy_from(p, detail::energy_parts(p, u));
}

/// K_mu(u) = ||Delta u||^2 + mu/2 ||grad u||^2 - N a / (4(a+2)) ||u||^{a+2}; K_0 when with_mu is false.
inline double K_functional(const Params& p, const RadialField& u, bool with_mu = true) {
  return detail::k_from(p, detail::energy_parts(p, u), with_mu);
}

/// Gagliardo-Nirenberg quotient ||u||^{a+2}_{a+2} / (||Delta u||^{Na/4} ||u||^{(8-(N-4)a)/4}).
inline double gn_quotient(const Params& p, const RadialField& u) {
  const double l2 = std::sqrt(l2_squared(u));
  if (l2 == 0.0) throw std::invalid_argument("gn_quotient: zero field");
  const double d = std::sqrt(l2_squared(laplacian(u)));
  const double a = p.alpha, N = p.N;
  return lp_power(u, a + 2.0) / (std::pow(d, N * a / 4.0) * std::pow(l2, (8.0 - (N - 4.0) * a) / 4.0));
}

/// Localized virial weight phi_R(r) = R^2 theta(r/R), theta'' = zeta, sampled
/// with its radial derivatives. zeta = 2 on [0,1], 2 S(2-s) on [1,2], 0 beyond.
struct Weight {
  double R = 0;
  std::vector<double> phi, dphi, dphi_over_r, ddphi, lap, lap_dd, bilap, trilap;
};

namespace detail {
inline constexpr std::size_t kWeightOrder = 6;
using WeightJet = Jet<kWeightOrder>;

inline WeightJet theta(const WeightJet& s) {
  using namespace smoothstep;
  if (s.value() <= 1.0) return s * s;
  static const double I1 = polyval(std::span<const double>(kIntegral), Jet<0>::constant(1.0)).value();
  static const double J1 = polyval(std::span<const double>(kDoubleIntegral), Jet<0>::constant(1.0)).value();
  const double slope = 2.0 + 2.0 * I1;
  WeightJet t = (s + (-1.0)) * slope + (1.0 - 2.0 * J1);
  if (s.value() < 2.0) {
    const WeightJet x = (-1.0) * s + 2.0;
    t += 2.0 * polyval(std::span<const double>(kDoubleIntegral), x);
  }
  return t;
}
}  // namespace detail

inline Weight make_weight(const Grid& g, double R) {
  if (!(R > 0.0)) throw std::invalid_argument("make_weight: R must be positive");
  if (2.0 * R >= g.R_max()) throw std::invalid_argument("make_weight: 2R must lie inside the grid");
  const std::size_t M = g.size();
  Weight w;
  w.R = R;
  for (auto* v : {&w.phi, &w.dphi, &w.dphi_over_r, &w.ddphi, &w.lap, &w.lap_dd, &w.bilap, &w.trilap}) v->resize(M);
  const auto r = g.r();
  const int N = g.dim();
  for (std::size_t j = 0; j < M; ++j) {
    const double rj = r[j];
    if (rj <= R) {
      w.phi[j] = rj * rj;
      w.dphi[j] = 2.0 * rj;
      w.dphi_over_r[j] = 2.0;
      w.ddphi[j] = 2.0;
      w.lap[j] = 2.0 * N;
      continue;  // higher derivatives vanish
    }
    auto s = detail::WeightJet::variable(rj);
    s *= 1.0 / R;
    const auto phi = detail::theta(s) * (R * R);
    const auto d1 = differentiate(phi);
    const auto lap = radial_laplacian(phi, N, rj);
    const auto bilap = radial_laplacian(lap, N, rj);
    const auto trilap = radial_laplacian(bilap, N, rj);
    w.phi[j] = phi.value();
    w.dphi[j] = d1.value();
    w.dphi_over_r[j] = d1.value() / rj;
    w.ddphi[j] = phi.derivative(2);
    w.lap[j] = lap.value();
    w.lap_dd[j] = lap.derivative(2);
    w.bilap[j] = bilap.value();
    w.trilap[j] = trilap.value();
  }
  return w;
}

/// M_phi = 2 int phi' Im(conj(u) u_r) dx.
inline double virial_M(const Weight& w, const RadialField& u) {
  const auto d = radial_derivatives(u);
  const auto wt = u.grid->weights();
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += w.dphi[j] * (std::conj(u.values[j]) * d.ur[j]).imag() * wt[j];
  return 2.0 * s;
}

/// Radial form of the virial identity dM_phi/dt. Derivatives of phi are
/// analytic; those of u are centered differences.
inline double virial_rate(const Params& p, const Weight& w, const RadialField& u, bool nonlinear = true) {
  const Grid& g = *u.grid;
  const auto d = radial_derivatives(u);
  const auto wt = g.weights();
  const auto r = g.r();
  const double N = g.dim(), a = p.alpha;
  const AbsPower pw(a + 2.0);
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    const double u2 = std::norm(u.values[j]);
    const double ur2 = std::norm(d.ur[j]);
    const double urr2 = std::norm(d.urr[j]);
    double term = w.trilap[j] * u2 - 2.0 * w.bilap[j] * ur2 +
                  8.0 * (w.ddphi[j] * urr2 + (N - 1.0) * w.dphi_over_r[j] * ur2 / (r[j] * r[j])) -
                  4.0 * w.lap_dd[j] * ur2 + 4.0 * p.mu * w.ddphi[j] * ur2 - p.mu * w.bilap[j] * u2;
    if (nonlinear) term -= 2.0 * a / (a + 2.0) * w.lap[j] * pw(u.values[j]);
    s += term * wt[j];
  }
  return s;
}

/// Smooth cutoff: 1 on r <= R/2, 0 on r >= R, 1 - S((r - R/2)/(R/2)) between.
struct Cutoff {
  double R = 0;
  std::vector<double> chi;
  double max_grad = 0, max_lap = 0;  // sup |chi'| and sup |Delta chi| on the grid
};

inline Cutoff make_cutoff(const Grid& g, double R) {
  if (!(R > 0.0) || R > g.R_max()) throw std::invalid_argument("make_cutoff: need 0 < R <= R_max");
  Cutoff c;
  c.R = R;
  c.chi.resize(g.size());
  const auto r = g.r();
  for (std::size_t j = 0; j < g.size(); ++j) {
    auto x = Jet<2>::variable(r[j]);
    x = (x + (-R / 2.0)) * (2.0 / R);
    const auto chi = Jet<2>::constant(1.0) - smoothstep::step(x);
    c.chi[j] = chi.value();
    c.max_grad = std::max(c.max_grad, std::abs(chi.derivative(1)));
    const double lap = chi.derivative(2) + (g.dim() - 1) * chi.derivative(1) / r[j];
    c.max_lap = std::max(c.max_lap, std::abs(lap));
  }
  return c;
}

struct CutoffCoercivity {
  double K0_cut = 0;       // K_0(chi_R u)
  double Lalpha2_cut = 0;  // ||chi_R u||^{a+2}_{a+2}
};

inline CutoffCoercivity cutoff_coercivity(const Params& p, const Cutoff& c, const RadialField& u) {
  RadialField v = u;
  for (std::size_t j = 0; j < v.size(); ++j) v.values[j] *= c.chi[j];
  const auto e = detail::energy_parts(p, v);
  return {detail::k_from(p, e, false), e.nonlinear};
}

/// Mass inside the ball r <= R.
inline double ball_mass(const RadialField& u, double R) {
  const auto r = u.grid->r();
  const auto w = u.grid->weights();
  double s = 0.0;
  for (std::size_t j = 0; j < u.size() && r[j] <= R; ++j) s += std::norm(u.values[j]) * w[j];
  return s;
}

/// Localized quantities at one probe radius.
struct Probe {
  double R = 0, M_phi = 0, K0_cut = 0, Lalpha2_cut = 0;
};

struct Observables {
  double t = 0, mass = 0, energy = 0, K_mu = 0, K_0 = 0, L_alpha2 = 0, deltaL2 = 0, gradL2 = 0, M_phiR = 0,
         M_rate = 0, ball_mass = 0;
  std::vector<Probe> probes;
};

/// Weights and cutoffs at a fixed set of radii, built once per run.
struct ProbeSet {
  std::vector<Weight> weights;
  std::vector<Cutoff> cutoffs;
};

/// Radii that fit the grid: 2R < R_max for the weight.
inline ProbeSet make_probes(const Grid& g, std::span<const double> radii) {
  ProbeSet s;
  for (double R : radii) {
    if (!(R > 0.0) || 2.0 * R >= g.R_max()) continue;
    s.weights.push_back(make_weight(g, R));
    s.cutoffs.push_back(make_cutoff(g, R));
  }
  return s;
}

inline Observables observe(const Params& p, const Weight& w, const RadialField& u, double t, bool nonlinear = true,
                           const ProbeSet* probes = nullptr, double ball_R = 0.0) {
  Observables o;
  o.t = t;
  auto e = detail::energy_parts(p, u);
  const double nonlin = e.nonlinear;
  if (!nonlinear) e.nonlinear = 0.0;
  o.mass = l2_squared(u);
  o.energy = detail::energy_from(p, e);
  o.K_mu = detail::k_from(p, e, true);
  o.K_0 = detail::k_from(p, e, false);
  o.L_alpha2 = nonlin;
  o.deltaL2 = std::sqrt(e.delta_sq);
  o.gradL2 = std::sqrt(e.grad_sq);
  o.M_phiR = virial_M(w, u);
  o.M_rate = virial_rate(p, w, u, nonlinear);
  if (ball_R > 0.0) o.ball_mass = ball_mass(u, ball_R);
  if (probes) {
    for (std::size_t k = 0; k < probes->weights.size(); ++k) {
      const auto c = cutoff_coercivity(p, probes->cutoffs[k], u);
      o.probes.push_back({probes->weights[k].R, virial_M(probes->weights[k], u), c.K0_cut, c.Lalpha2_cut});
    }
  }
  return o;
}

}  // namespace bnls
