#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bnls/dynamics.hpp"
#include "bnls/functionals.hpp"
#include "bnls/ground_state.hpp"
#include "bnls/model.hpp"
#include "bnls/radial_grid.hpp"

namespace bnls {

enum class PredictionTag { Scatter, BlowUp, OnThresholdForbidden, OutOfTheory };

inline std::string_view to_string(PredictionTag t) {
  switch (t) {
    case PredictionTag::Scatter: return "Scatter";
    case PredictionTag::BlowUp: return "BlowUp";
    case PredictionTag::OnThresholdForbidden: return "OnThresholdForbidden";
    case PredictionTag::OutOfTheory: return "OutOfTheory";
  }
  return "?";
}

struct Prediction {
  PredictionTag tag = PredictionTag::OutOfTheory;
  double energy_margin = 0;    // E_thr - E_mu(u0) M(u0)^sigma_c, or E_0(W) - E_mu(u0)
  double gradient_margin = 0;  // G_thr - ||Delta u0|| ||u0||^sigma_c, or ||Delta W|| - ||Delta u0||
  double energy_quantity = 0, gradient_quantity = 0;
  RegimeTag regime = RegimeTag::OutOfTheory;
};

struct ClassifyOptions {
  double band = 1e-3;  // relative width of the on-threshold band around G_thr
};

/// Sharp-threshold prediction for radial data. The intercritical case compares
/// against the ground state Q (at mu = 0), the energy-critical case against W.
inline Prediction classify(const Params& p, const Thresholds& thr, const RadialField& u0,
                           const ClassifyOptions& o = {}) {
  Prediction pr;
  const Regime reg = classify_regime(p);
  pr.regime = reg.tag;
  const bool inter = reg.tag == RegimeTag::Intercritical && thr.kind == GroundKind::Q;
  const bool crit = reg.tag == RegimeTag::EnergyCritical && thr.kind == GroundKind::W;
  if (!inter && !crit) return pr;

  const double m = mass(u0);
  const double d = std::sqrt(l2_squared(laplacian(u0)));
  const double e = energy(p, u0);
  const double sc = inter ? *p.sigma_c : 0.0;
  pr.energy_quantity = inter ? e * std::pow(m, sc) : e;
  pr.gradient_quantity = inter ? d * std::pow(m, sc / 2.0) : d;
  pr.energy_margin = thr.E_thr - pr.energy_quantity;
  pr.gradient_margin = thr.G_thr - pr.gradient_quantity;

  if (std::abs(pr.gradient_margin) <= o.band * thr.G_thr) {
    if (pr.energy_margin > -o.band * std::abs(thr.E_thr)) pr.tag = PredictionTag::OnThresholdForbidden;
    return pr;
  }
  if (!(pr.energy_margin > 0.0)) return pr;
  if (pr.gradient_margin > 0.0) {
    if (inter) pr.tag = PredictionTag::Scatter;
  } else if (crit || reg.alpha_le_8) {
    pr.tag = PredictionTag::BlowUp;
  }
  return pr;
}

struct DeltaCertificate {
  double theta = 0;
  double delta = 0;
};

/// K_mu(u(t)) <= -delta along the flow, for data above the gradient threshold
/// and below the energy threshold.
inline DeltaCertificate delta_certificate(const Params& p, const Thresholds& thr, const RadialField& u0) {
  const Prediction pr = classify(p, thr, u0);
  if (!(pr.energy_margin > 0.0) || !(pr.gradient_margin < 0.0))
    throw InvalidParameter("delta_certificate: needs energy_margin > 0 and gradient_margin < 0");
  DeltaCertificate c;
  c.theta = pr.energy_margin / thr.E_thr;
  const double N = p.N, a = p.alpha;
  if (thr.kind == GroundKind::Q) {
    // ||Delta Q||^2 M(Q)^sigma_c = G_thr^2
    c.delta = (N * a - 8.0) * c.theta / 8.0 * thr.G_thr * thr.G_thr * std::pow(mass(u0), -*p.sigma_c);
  } else {
    c.delta = 4.0 * c.theta / (N - 4.0) * thr.G_thr * thr.G_thr;
  }
  return c;
}

/// Largest recorded K_mu, restricted to t <= t_end when given.
inline double kmu_ceiling(const Trajectory& tr, std::optional<double> t_end = std::nullopt) {
  double m = -std::numeric_limits<double>::infinity();
  for (const auto& o : tr.observables)
    if (!t_end || o.t <= *t_end) m = std::max(m, o.K_mu);
  return m;
}

/// min_t ||Delta u(t)|| / ||Delta u(0)||.
inline double delta_norm_floor(const Trajectory& tr) {
  if (tr.observables.empty() || tr.observables.front().deltaL2 == 0.0) return 0.0;
  double m = std::numeric_limits<double>::infinity();
  for (const auto& o : tr.observables) m = std::min(m, o.deltaL2);
  return m / tr.observables.front().deltaL2;
}

namespace detail {
/// Trapezoid integral of the recorded series f over [a, b], interpolating linearly at the ends.
template <class F>
double integrate_series(const std::vector<Observables>& obs, F f, double a, double b) {
  double s = 0.0;
  for (std::size_t k = 0; k + 1 < obs.size(); ++k) {
    const double t0 = obs[k].t, t1 = obs[k + 1].t;
    const double lo = std::max(a, t0), hi = std::min(b, t1);
    if (hi <= lo || t1 <= t0) continue;
    const double f0 = f(obs[k]), f1 = f(obs[k + 1]);
    const auto at = [&](double t) { return f0 + (f1 - f0) * (t - t0) / (t1 - t0); };
    s += 0.5 * (at(lo) + at(hi)) * (hi - lo);
  }
  return s;
}
}  // namespace detail

struct MorawetzWindow {
  double t0 = 0, t1 = 0, integral = 0, ratio = 0;
};

/// int_I ||u||_{a+2}^{a+2} dt / |I|^{1/3} for each window I.
inline std::vector<MorawetzWindow> morawetz_ratio(const Trajectory& tr,
                                                  const std::vector<std::pair<double, double>>& windows) {
  if (tr.observables.empty()) throw InvalidParameter("morawetz_ratio: empty trajectory");
  const double ta = tr.observables.front().t, tb = tr.observables.back().t;
  std::vector<MorawetzWindow> out;
  for (const auto& [a, b] : windows) {
    if (!(b > a) || a < ta - 1e-12 || b > tb + 1e-9 * std::max(1.0, tb))
      throw InvalidParameter("morawetz_ratio: window outside the trajectory");
    MorawetzWindow w{a, b, 0, 0};
    w.integral = detail::integrate_series(tr.observables, [](const Observables& o) { return o.L_alpha2; }, a, b);
    w.ratio = w.integral / std::cbrt(b - a);
    out.push_back(w);
  }
  return out;
}

struct VirialConsistency {
  double max_rel_error = 0;  // |dM/dt (finite difference) - rate| / rate scale
  std::optional<double> max_rel_error_16K;  // rate vs 16 K_mu where the exterior mass is negligible
  double fitted_a = 0;       // min over samples of -rate / ||Delta u||^2
  int samples = 0;
};

/// Compares a three-point finite difference of M_phi over the stored snapshots
/// with the analytic rate. Errors are relative to
/// 16 (||Delta u||^2 + mu/2 ||grad u||^2 + N a / (4(a+2)) ||u||^{a+2}), the size
/// of the terms the rate balances, so runs whose rate vanishes stay meaningful.
inline VirialConsistency virial_consistency(const Trajectory& tr, double R) {
  const auto& snaps = tr.snapshots;
  if (snaps.size() < 3) throw InvalidParameter("virial_consistency: need at least three snapshots");
  const Params& p = tr.params;
  const Grid& g = *snaps.front().u.grid;
  const Weight w = make_weight(g, R);
  const bool nl = tr.config.nonlinear;
  const double c = p.N * p.alpha / (4.0 * (p.alpha + 2.0));

  std::vector<double> M(snaps.size());
  for (std::size_t k = 0; k < snaps.size(); ++k) M[k] = virial_M(w, snaps[k].u);

  VirialConsistency vc;
  vc.fitted_a = std::numeric_limits<double>::infinity();
  double err16 = 0.0;
  bool any16 = true;
  for (std::size_t k = 1; k + 1 < snaps.size(); ++k) {
    const double t0 = snaps[k - 1].t, t1 = snaps[k].t, t2 = snaps[k + 1].t;
    const double h0 = t1 - t0, h1 = t2 - t1;
    if (!(h0 > 0.0) || !(h1 > 0.0)) throw InvalidParameter("virial_consistency: snapshot times must increase");
    const double fd = -h1 / (h0 * (h0 + h1)) * M[k - 1] + (h1 - h0) / (h0 * h1) * M[k] + h0 / (h1 * (h0 + h1)) * M[k + 1];
    const RadialField& u = snaps[k].u;
    const double rate = virial_rate(p, w, u, nl);
    auto e = detail::energy_parts(p, u);
    if (!nl) e.nonlinear = 0.0;
    const double scale = 16.0 * (e.delta_sq + 0.5 * p.mu * e.grad_sq + c * e.nonlinear);
    if (scale == 0.0) continue;
    vc.max_rel_error = std::max(vc.max_rel_error, std::abs(fd - rate) / scale);
    const double total = l2_squared(u);
    if (total > 0.0 && total - ball_mass(u, R) < 1e-8 * total)
      err16 = std::max(err16, std::abs(rate - 16.0 * detail::k_from(p, e, true)) / scale);
    else
      any16 = false;
    if (e.delta_sq > 0.0) vc.fitted_a = std::min(vc.fitted_a, -rate / e.delta_sq);
    ++vc.samples;
  }
  if (any16 && vc.samples > 0) vc.max_rel_error_16K = err16;
  if (vc.samples == 0) vc.fitted_a = 0.0;
  return vc;
}

struct OdeWitness {
  bool conclusive = false;
  bool degenerate = false;  // |M_phi| constant on the window, so z grows only linearly
  double t0 = 0, t1 = 0;
  double A = 0;
  double z_t1 = 0;
  double t_star = std::numeric_limits<double>::infinity();
  double t_detected = 0;
  std::string note;
};

/// From a recorded M_phi series: t0 is the start of the final stretch where
/// M_phi < 0, z(t) = int_{t0}^t |M_phi|^4 ds, A is the largest constant with
/// |M_phi| >= A z on [t1, t_end] (equivalent to z' >= A^4 z^4), and the ODE
/// bound t* = t1 + 1/(3 A^4 z(t1)^3) is minimized over t1.
inline OdeWitness blowup_ode_witness(const std::vector<double>& t, const std::vector<double>& Mphi,
                                     double t_detected) {
  OdeWitness w;
  w.t_detected = t_detected;
  const std::size_t n = t.size();
  if (n != Mphi.size() || n < 3) {
    w.note = "too few samples";
    return w;
  }
  std::size_t k0 = n;
  while (k0 > 0 && Mphi[k0 - 1] < 0.0) --k0;
  if (k0 == n || n - k0 < 3) {
    w.note = "no persistent negative M_phi window";
    return w;
  }
  w.t0 = t[k0];
  std::vector<double> z(n, 0.0);
  for (std::size_t k = k0 + 1; k < n; ++k)
    z[k] = z[k - 1] + 0.5 * (std::pow(Mphi[k - 1], 4) + std::pow(Mphi[k], 4)) * (t[k] - t[k - 1]);

  double mmin = std::numeric_limits<double>::infinity(), mmax = 0.0;
  for (std::size_t k = k0; k < n; ++k) {
    mmin = std::min(mmin, std::abs(Mphi[k]));
    mmax = std::max(mmax, std::abs(Mphi[k]));
  }
  w.degenerate = mmax <= mmin * (1.0 + 1e-3);

  // suffix minimum of |M|/z
  std::vector<double> ratio_min(n + 1, std::numeric_limits<double>::infinity());
  for (std::size_t k = n; k-- > k0 + 1;) ratio_min[k] = std::min(ratio_min[k + 1], std::abs(Mphi[k]) / z[k]);
  for (std::size_t k = k0 + 1; k < n; ++k) {
    const double A = ratio_min[k];
    if (!(A > 0.0) || !(z[k] > 0.0)) continue;
    const double ts = t[k] + 1.0 / (3.0 * std::pow(A, 4) * std::pow(z[k], 3));
    if (ts < w.t_star) {
      w.t_star = ts;
      w.t1 = t[k];
      w.A = A;
      w.z_t1 = z[k];
    }
  }
  w.conclusive = std::isfinite(w.t_star) && !w.degenerate;
  if (w.degenerate) w.note = "constant M_phi: z is linear, A fit degenerate";
  return w;
}

inline OdeWitness blowup_ode_witness(const Trajectory& tr) {
  std::vector<double> t, m;
  for (const auto& o : tr.observables) {
    t.push_back(o.t);
    m.push_back(o.M_phiR);
  }
  auto w = blowup_ode_witness(t, m, tr.event.t);
  if (tr.event.kind != EventKind::BlowUpDetected && w.note.empty()) w.note = "no blow-up detected";
  if (tr.event.kind != EventKind::BlowUpDetected) w.conclusive = false;
  return w;
}

/// (int_T^{T+window} ||e^{-i(s-T)L} u_T||_{r}^{k} ds)^{1/k} by trapezoid quadrature
/// over the linear steps.
inline double criterion_norm(const Params& p, const RadialField& uT, double window, double dt,
                             const SpongeConfig& sponge = {}) {
  if (!(window > 0.0)) throw InvalidParameter("criterion_norm: window must be positive");
  const auto ex = scattering_exponents(p);
  LinearPropagator prop(p.mu, uT.grid, dt, sponge);
  const long n = std::max(2L, static_cast<long>(std::ceil(window / dt)));
  const double h = window / static_cast<double>(n);
  RadialField v = uT;
  auto f = [&](const RadialField& x) { return std::pow(lp_power(x, ex.r_bar), ex.k_bar / ex.r_bar); };
  double s = 0.5 * f(v);
  for (long k = 1; k <= n; ++k) {
    prop.advance(v, h);
    s += (k == n ? 0.5 : 1.0) * f(v);
  }
  return std::pow(s * h, 1.0 / ex.k_bar);
}

struct ScatteringCertificates {
  double decay_factor = 0;  // ||u(0)||_{a+2} / min_t ||u(t)||_{a+2}
  std::optional<double> cauchy_H2;  // ||v(t2) - v(t1)||_{H^2}, v the linearly pulled-back solution; needs snapshots
  double t1 = 0, t2 = 0;
  std::vector<std::pair<double, double>> criterion;  // (T, criterion norm on [T, T + window])
  double window = 0;
  double ball_R = 0;
  double ball_mass_min = 0;  // min_t int_{r <= ball_R} |u|^2
  double coercivity_nu = 0;  // min_t K_0(chi u) / ||chi u||^{a+2} at the first probe radius that fits
  double coercivity_R = 0;
  std::vector<std::pair<double, double>> coercivity_scan;  // (R, nu) for every probe radius
};

struct ScatteringOptions {
  double window = 20.0;                 // length of the criterion-norm window
  std::vector<double> criterion_T{};    // snapshot times at which to evaluate it
  double linear_dt = 0.01;
  double coercivity_R = 16.0;
};

namespace detail {
inline const Snapshot* nearest_snapshot(const Trajectory& tr, double t) {
  const Snapshot* best = nullptr;
  for (const auto& s : tr.snapshots)
    if (!best || std::abs(s.t - t) < std::abs(best->t - t)) best = &s;
  return best;
}
}  // namespace detail

inline ScatteringCertificates scattering_certificates(const Params& p, const Trajectory& tr,
                                                      const ScatteringOptions& o = {}) {
  ScatteringCertificates c;
  if (tr.observables.empty()) return c;
  const double a2 = p.alpha + 2.0;
  const auto& obs = tr.observables;
  c.window = o.window;
  c.ball_R = tr.config.ball_R;

  const double L0 = obs.front().L_alpha2;
  double Lmin = L0, bmin = obs.front().ball_mass;
  for (const auto& x : obs) {
    Lmin = std::min(Lmin, x.L_alpha2);
    bmin = std::min(bmin, x.ball_mass);
  }
  c.decay_factor = L0 > 0.0 ? std::pow(L0 / Lmin, 1.0 / a2) : 0.0;
  c.ball_mass_min = bmin;

  const std::size_t np = obs.front().probes.size();
  for (std::size_t k = 0; k < np; ++k) {
    double nu = std::numeric_limits<double>::infinity();
    for (const auto& x : obs) {
      const auto& pr = x.probes[k];
      if (pr.Lalpha2_cut > 0.0) nu = std::min(nu, pr.K0_cut / pr.Lalpha2_cut);
    }
    if (!std::isfinite(nu)) nu = 0.0;
    c.coercivity_scan.emplace_back(obs.front().probes[k].R, nu);
  }
  for (const auto& [R, nu] : c.coercivity_scan) {
    if (std::abs(R - o.coercivity_R) < 1e-12 || c.coercivity_R == 0.0) {
      c.coercivity_R = R;
      c.coercivity_nu = nu;
    }
  }

  // Pull-back increment: ||e^{itL}(u(t2) - e^{-i(t2-t1)L}u(t1))|| and the linear flow preserves H^2.
  if (L0 > 0.0 && !tr.snapshots.empty()) {
    const Snapshot* s1 = detail::nearest_snapshot(tr, 0.5 * tr.t_final);
    if (s1 && s1->t < tr.t_final) {
      RadialField v = s1->u;
      LinearPropagator prop(p.mu, v.grid, o.linear_dt, tr.config.sponge);
      prop.advance(v, tr.t_final - s1->t);
      c.cauchy_H2 = norms(tr.final_state - v).H2;
      c.t1 = s1->t;
      c.t2 = tr.t_final;
    }
  }

  for (double T : o.criterion_T) {
    if (T + o.window > tr.t_final + 1e-9) throw InvalidParameter("scattering_certificates: window exceeds horizon");
    const Snapshot* s = detail::nearest_snapshot(tr, T);
    if (!s) throw InvalidParameter("scattering_certificates: no snapshots stored");
    c.criterion.emplace_back(s->t, L0 > 0.0 ? criterion_norm(p, s->u, o.window, o.linear_dt, tr.config.sponge) : 0.0);
  }
  return c;
}

struct DecayFit {
  double exponent = 0;
  double expected = 0;  // -N/4
  double boundary_deviation = 0;  // max relative sup-norm change against a doubled domain
  std::vector<double> t, sup;
};

struct DecayOptions {
  int samples = 16;     // log-spaced sampling times
  double dt = 0.0;      // linear step, 0 picks t_lo / 50
  // fourth-order group velocity 4k^3: fast components cross a weak layer and reflect
  SpongeConfig sponge{true, 0.25, 1e3};
  bool check_boundary = true;
  double boundary_tol = 2e-2;  // shifts the slope by at most 2 tol / log(t_hi / t_lo)
};

namespace detail {
inline double loglog_slope(const std::vector<double>& t, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = t.size();
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double a = std::log(t[k]), b = std::log(y[k]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline std::vector<double> free_sup_series(double mu, const RadialField& f, const std::vector<double>& times, double dt,
                                           const SpongeConfig& sponge) {
  LinearPropagator prop(mu, f.grid, dt, sponge);
  RadialField u = f;
  std::vector<double> sup;
  double t = 0.0;
  for (double tk : times) {
    prop.advance(u, tk - t);
    t = tk;
    sup.push_back(sup_norm(u));
  }
  return sup;
}
}  // namespace detail

/// Least-squares slope of log ||e^{-itL} f||_inf against log t on [t_lo, t_hi].
/// Boundary contamination is detected by repeating the run on a zero-padded
/// grid of twice the radius at the same spacing.
inline DecayFit dispersive_decay_fit(const Params& p, const RadialField& f, double t_lo, double t_hi,
                                     const DecayOptions& o = {}) {
  if (!(p.mu >= 0.0)) throw InvalidParameter("dispersive_decay_fit: mu must be >= 0");
  if (!(t_lo > 0.0) || !(t_hi > t_lo) || o.samples < 3) throw InvalidParameter("dispersive_decay_fit: bad time range");
  const Grid& g = *f.grid;
  const double dt = o.dt > 0.0 ? o.dt : t_lo / 50.0;
  DecayFit fit;
  fit.expected = -p.N / 4.0;
  for (int k = 0; k < o.samples; ++k) fit.t.push_back(t_lo * std::pow(t_hi / t_lo, k / static_cast<double>(o.samples - 1)));
  fit.sup = detail::free_sup_series(p.mu, f, fit.t, dt, o.sponge);

  if (o.check_boundary) {
    RadialField big(make_grid(g.dim(), 2 * g.size(), 2.0 * g.R_max()));
    std::copy(f.values.begin(), f.values.end(), big.values.begin());
    const auto ref = detail::free_sup_series(p.mu, big, fit.t, dt, o.sponge);
    for (std::size_t k = 0; k < ref.size(); ++k)
      fit.boundary_deviation = std::max(fit.boundary_deviation, std::abs(fit.sup[k] - ref[k]) / ref[k]);
    if (fit.boundary_deviation > o.boundary_tol)
      throw InvalidParameter("dispersive_decay_fit: boundary contamination before t_hi");
  }

  fit.exponent = detail::loglog_slope(fit.t, fit.sup);
  return fit;
}

struct GrowthFit {
  double exponent = 0;
  double t_lo = 0, t_hi = 0;
  std::size_t points = 0;
};

/// Slope of log ||Delta u(t)|| against log t over the last `fraction` of the
/// recorded times. Sustained growth shows up as a positive exponent; the fit
/// says nothing about which branch of the dichotomy the run is on.
inline GrowthFit growth_exponent_fit(const Trajectory& tr, double fraction = 0.5) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidParameter("growth_exponent_fit: fraction must lie in (0, 1]");
  GrowthFit f;
  const double t_start = tr.t_final * (1.0 - fraction);
  std::vector<double> t, d;
  for (const auto& o : tr.observables)
    if (o.t > 0.0 && o.t >= t_start && o.deltaL2 > 0.0) {
      t.push_back(o.t);
      d.push_back(o.deltaL2);
    }
  if (t.size() < 3 || !(t.back() > t.front())) throw InvalidParameter("growth_exponent_fit: too few recorded times");
  f.exponent = detail::loglog_slope(t, d);
  f.t_lo = t.front();
  f.t_hi = t.back();
  f.points = t.size();
  return f;
}

enum class VerdictTag { Scattered, BlewUp, Undecided };

inline std::string_view to_string(VerdictTag t) {
  switch (t) {
    case VerdictTag::Scattered: return "Scattered";
    case VerdictTag::BlewUp: return "BlewUp";
    case VerdictTag::Undecided: return "Undecided";
  }
  return "?";
}

struct Verdict {
  VerdictTag tag = VerdictTag::Undecided;
  std::map<std::string, double> evidence;
};

struct VerdictOptions {
  double min_decay = 5.0;
  double cauchy_fraction = 0.05;  // of ||u0||_{H^2}
  bool require_cauchy = false;
};

inline Verdict blowup_verdict(const Trajectory& tr) {
  Verdict v;
  const double ceiling = kmu_ceiling(tr);
  v.evidence["kmu_ceiling"] = ceiling;
  v.evidence["delta_norm_floor"] = delta_norm_floor(tr);
  v.evidence["t_detected"] = tr.event.t;
  if (tr.event.kind == EventKind::BlowUpDetected && ceiling < 0.0) v.tag = VerdictTag::BlewUp;
  return v;
}

inline Verdict scattering_verdict(const Trajectory& tr, const ScatteringCertificates& c, double u0_H2,
                                  const VerdictOptions& o = {}) {
  Verdict v;
  v.evidence["decay_factor"] = c.decay_factor;
  v.evidence["coercivity_nu"] = c.coercivity_nu;
  v.evidence["ball_mass_min"] = c.ball_mass_min;
  bool cauchy_ok = false;
  if (c.cauchy_H2) {
    v.evidence["cauchy_H2"] = *c.cauchy_H2;
    cauchy_ok = *c.cauchy_H2 < o.cauchy_fraction * u0_H2;
    v.evidence["cauchy_ok"] = cauchy_ok;
  }
  if (tr.event.reached_horizon() && c.decay_factor >= o.min_decay && c.coercivity_nu > 0.0 &&
      (!o.require_cauchy || cauchy_ok))
    v.tag = VerdictTag::Scattered;
  return v;
}

/// Whether a verdict matches a prediction; undecided runs agree with nothing.
inline bool agrees(const Prediction& p, const Verdict& v) {
  return (p.tag == PredictionTag::Scatter && v.tag == VerdictTag::Scattered) ||
         (p.tag == PredictionTag::BlowUp && v.tag == VerdictTag::BlewUp);
}

/// Number of Scatter/BlowUp changes along an ordered family, ignoring other tags.
inline int count_flips(const std::vector<PredictionTag>& tags) {
  int flips = 0;
  std::optional<PredictionTag> last;
  for (auto t : tags) {
    if (t != PredictionTag::Scatter && t != PredictionTag::BlowUp) continue;
    if (last && *last != t) ++flips;
    last = t;
  }
  return flips;
}

}  // namespace bnls
