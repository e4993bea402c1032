#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string_view>
#include <vector>

#include "bnls/functionals.hpp"
#include "bnls/model.hpp"
#include "bnls/radial_grid.hpp"
#include "bnls/smoothstep.hpp"

namespace bnls {

enum class Integrator { Midpoint, Strang };

struct SpongeConfig {
  bool on = false;
  double width_fraction = 0.25;  // outer fraction of [0, R_max] that absorbs
  double strength = 1.0;         // peak damping rate
};

struct SolverConfig {
  double dt0 = 1e-3;
  double dt_min = 1e-9;
  double t_max = 1.0;
  int record_every = 1;        // record observables every this many accepted steps
  int snapshot_every = 0;      // store a field every this many records (0: none)
  SpongeConfig sponge;
  double blowup_factor = 100.0;
  double drift_tol = 1e-6;     // per-step relative energy drift before halving dt
  bool adaptive = true;
  double dt_cap = 0.05;        // dt <= dt_cap / (1 + ||u||_inf^alpha)
  Integrator integrator = Integrator::Midpoint;
  bool nonlinear = true;
  double weight_R = 0.0;       // scale of the recorded M_phiR; 0 picks R_max/4
  double fp_tol = 1e-12;
  int fp_max_iter = 60;
  int min_core_nodes = 4;
  double ball_R = 5.0;                          // radius of the recorded ball mass
  std::vector<double> probe_radii{8, 16, 32};  // localized virial and cutoff probes; unfit radii are skipped

  void validate() const {
    if (!(dt0 > 0.0) || !(dt_min > 0.0) || dt_min > dt0) throw InvalidParameter("solver: need 0 < dt_min <= dt0");
    if (!(t_max >= 0.0)) throw InvalidParameter("solver: t_max must be >= 0");
    if (record_every < 1) throw InvalidParameter("solver: record_every must be >= 1");
    if (snapshot_every < 0) throw InvalidParameter("solver: snapshot_every must be >= 0");
    if (!(blowup_factor > 1.0)) throw InvalidParameter("solver: blowup_factor must exceed 1");
    if (!(ball_R >= 0.0)) throw InvalidParameter("solver: ball_R must be >= 0");
    if (!(drift_tol > 0.0)) throw InvalidParameter("solver: drift_tol must be positive");
    if (sponge.on && (!(sponge.width_fraction > 0.0) || sponge.width_fraction >= 1.0 || !(sponge.strength >= 0.0)))
      throw InvalidParameter("solver: sponge needs 0 < width_fraction < 1 and strength >= 0");
  }
};

/// u_t = -i (L u - |u|^alpha u), L = Delta^2 - mu Delta. One step is either the
/// implicit midpoint rule (fixed-point iteration on the midpoint value) or
/// Strang splitting around a Crank-Nicolson linear step. The factorization of
/// I + i dt/2 L is cached per dt.
class Stepper {
 public:
  Stepper(const Params& p, GridPtr g, Integrator kind = Integrator::Midpoint, bool nonlinear = true,
          double fp_tol = 1e-12, int fp_max_iter = 60)
      : p_(p), grid_(std::move(g)), kind_(kind), nonlinear_(nonlinear), fp_tol_(fp_tol), fp_max_iter_(fp_max_iter),
        pow_(p.alpha) {}

  /// Advances u by dt. Returns false, leaving u untouched, when the implicit
  /// solve does not converge.
  bool advance(RadialField& u, double dt) {
    prepare(dt);
    const double tau = 0.5 * dt;
    const std::size_t M = u.size();
    if (!nonlinear_) {
      linear_step(u);
      return true;
    }
    if (kind_ == Integrator::Strang) {
      phase(u, tau);
      linear_step(u);
      phase(u, tau);
      return u.all_finite();
    }
    std::vector<cplx>& m = work_m_;
    std::vector<cplx>& next = work_next_;
    m = u.values;
    const cplx itau(0.0, tau);
    double prev = std::numeric_limits<double>::infinity();
    for (iterations_ = 1; iterations_ <= fp_max_iter_; ++iterations_) {
      next.resize(M);
      for (std::size_t j = 0; j < M; ++j) next[j] = u.values[j] + itau * pow_(m[j]) * m[j];
      inv_->solve_in_place(next);
      double diff = 0.0, scale = 0.0;
      for (std::size_t j = 0; j < M; ++j) {
        diff = std::max(diff, std::abs(next[j] - m[j]));
        scale = std::max(scale, std::abs(next[j]));
      }
      m.swap(next);
      if (!std::isfinite(diff)) return false;
      const double rel = scale > 0.0 ? diff / scale : 0.0;
      if (rel < fp_tol_) break;
      // Stagnation at the roundoff floor counts as converged; divergence does not.
      if (rel >= prev) {
        if (rel < 1e3 * fp_tol_) break;
        if (iterations_ > 3) return false;
      }
      prev = rel;
    }
    if (iterations_ > fp_max_iter_) return false;
    for (std::size_t j = 0; j < M; ++j) u.values[j] = 2.0 * m[j] - u.values[j];
    return true;
  }

  int last_iterations() const { return iterations_; }

 private:
  void prepare(double dt) {
    if (inv_ && dt == dt_) return;
    dt_ = dt;
    const cplx itau(0.0, 0.5 * dt);
    inv_.emplace(LinearOperator(grid_, 1.0, itau, -itau * p_.mu).factorize());
    rhs_op_.emplace(grid_, 1.0, -itau, itau * p_.mu);
  }

  /// Crank-Nicolson: (I + i tau L) u+ = (I - i tau L) u.
  void linear_step(RadialField& u) {
    u = rhs_op_->apply(u);
    inv_->solve_in_place(u.values);
  }

  void phase(RadialField& u, double tau) const {
    for (auto& z : u.values) z *= std::polar(1.0, tau * pow_(z));
  }

  Params p_;
  GridPtr grid_;
  Integrator kind_;
  bool nonlinear_;
  double fp_tol_;
  int fp_max_iter_;
  AbsPower pow_;
  int iterations_ = 0;
  double dt_ = -1.0;
  std::optional<LinearOperator::Inverse> inv_;
  std::optional<LinearOperator> rhs_op_;
  std::vector<cplx> work_m_, work_next_;
};

/// One step from state; throws SolverFailure if the implicit solve fails.
inline RadialField step(const Params& p, const RadialField& state, double dt,
                        Integrator kind = Integrator::Midpoint, bool nonlinear = true) {
  if (!(dt > 0.0)) throw InvalidParameter("step: dt must be positive");
  Stepper s(p, state.grid, kind, nonlinear);
  RadialField u = state;
  if (!s.advance(u, dt)) throw SolverFailure("step: implicit solve did not converge");
  if (!u.all_finite()) throw SolverFailure("step: non-finite values");
  return u;
}

/// Damping rate sigma(r) = strength * S((r - r_s)/(R_max - r_s)), r_s = (1 - width) R_max.
inline std::vector<double> sponge_profile(const Grid& g, const SpongeConfig& s) {
  std::vector<double> sigma(g.size(), 0.0);
  if (!s.on) return sigma;
  const double rs = (1.0 - s.width_fraction) * g.R_max();
  const auto r = g.r();
  for (std::size_t j = 0; j < g.size(); ++j) sigma[j] = s.strength * smoothstep::step((r[j] - rs) / (g.R_max() - rs));
  return sigma;
}

inline void apply_sponge(std::span<const double> sigma, RadialField& u, double dt) {
  for (std::size_t j = 0; j < u.size(); ++j)
    if (sigma[j] > 0.0) u.values[j] *= std::exp(-sigma[j] * dt);
}

inline RadialField apply_sponge(const SpongeConfig& cfg, const RadialField& state, double dt) {
  RadialField u = state;
  if (cfg.on) apply_sponge(sponge_profile(*u.grid, cfg), u, dt);
  return u;
}

enum class EventKind { ReachedHorizon, BlowUpDetected, SpongeActive, StepFloorHit };

inline std::string_view to_string(EventKind e) {
  switch (e) {
    case EventKind::ReachedHorizon: return "ReachedHorizon";
    case EventKind::BlowUpDetected: return "BlowUpDetected";
    case EventKind::SpongeActive: return "SpongeActive";
    case EventKind::StepFloorHit: return "StepFloorHit";
  }
  return "?";
}

struct Event {
  EventKind kind = EventKind::ReachedHorizon;
  double t = 0.0;
  /// Horizon reached, with or without the absorbing layer.
  bool reached_horizon() const { return kind == EventKind::ReachedHorizon || kind == EventKind::SpongeActive; }
};

struct Snapshot {
  double t = 0.0;
  RadialField u;
};

struct Trajectory {
  Params params;
  SolverConfig config;
  double weight_R = 0.0;
  std::vector<Observables> observables;
  std::vector<Snapshot> snapshots;
  Event event;
  RadialField final_state;
  double t_final = 0.0;
  double final_dt = 0.0;
  long steps = 0, rejected = 0;
  double max_mass_drift = 0.0;    // relative to the initial mass
  double max_energy_drift = 0.0;  // relative to the initial energy scale
  double initial_deltaL2 = 0.0;
};

inline double default_weight_R(const Grid& g) { return g.R_max() / 4.0; }

namespace detail {
inline int core_nodes(const RadialField& u) {
  double peak = 0.0;
  for (const auto& z : u.values) peak = std::max(peak, std::abs(z));
  if (peak == 0.0) return std::numeric_limits<int>::max();
  int n = 0;
  for (const auto& z : u.values) n += std::abs(z) >= 0.5 * peak;
  return n;
}
}  // namespace detail

/// Integrates from u0 at time t0 until t_max, a blow-up detection, or the dt floor.
inline Trajectory evolve(const Params& p, const SolverConfig& cfg, const RadialField& u0, double t0 = 0.0) {
  cfg.validate();
  const GridPtr g = u0.grid;
  if (g->dim() != p.N) throw InvalidParameter("evolve: grid dimension does not match params");
  if (!u0.all_finite()) throw InvalidParameter("evolve: initial data has non-finite values");

  Trajectory tr;
  tr.params = p;
  tr.config = cfg;
  tr.weight_R = cfg.weight_R > 0.0 ? cfg.weight_R : default_weight_R(*g);
  const Weight weight = make_weight(*g, tr.weight_R);
  const auto sigma = sponge_profile(*g, cfg.sponge);
  const ProbeSet probes = make_probes(*g, cfg.probe_radii);
  const bool nl = cfg.nonlinear;

  Stepper stepper(p, g, cfg.integrator, nl, cfg.fp_tol, cfg.fp_max_iter);
  RadialField u = u0;
  double t = t0;

  auto parts = [&](const RadialField& v) {
    auto e = detail::energy_parts(p, v);
    if (!nl) e.nonlinear = 0.0;
    return e;
  };
  auto e_now = parts(u);
  const double mass0 = l2_squared(u);
  const double escale0 = detail::energy_scale(p, e_now);
  const double energy0 = detail::energy_from(p, e_now);
  tr.initial_deltaL2 = std::sqrt(e_now.delta_sq);

  int records = 0;
  auto record = [&]() {
    tr.observables.push_back(observe(p, weight, u, t, nl, &probes, cfg.ball_R));
    if (cfg.snapshot_every > 0 && records % cfg.snapshot_every == 0) tr.snapshots.push_back({t, u});
    ++records;
    const double md = mass0 > 0.0 ? std::abs(tr.observables.back().mass - mass0) / mass0 : 0.0;
    const double ed = escale0 > 0.0 ? std::abs(tr.observables.back().energy - energy0) / escale0 : 0.0;
    tr.max_mass_drift = std::max(tr.max_mass_drift, md);
    tr.max_energy_drift = std::max(tr.max_energy_drift, ed);
  };
  record();

  double dt = cfg.dt0;
  int since_record = 0;
  int calm_steps = 0;
  const double eps_t = 1e-12 * std::max(1.0, std::abs(cfg.t_max));
  tr.event = {cfg.sponge.on ? EventKind::SpongeActive : EventKind::ReachedHorizon, t};
  RadialField trial(g);

  while (t < cfg.t_max - eps_t) {
    if (nl && cfg.dt_cap > 0.0) dt = std::min(dt, cfg.dt_cap / (1.0 + std::pow(sup_norm(u), p.alpha)));
    if (dt < cfg.dt_min) {
      tr.event = {EventKind::StepFloorHit, t};
      break;
    }
    const double h = std::min(dt, cfg.t_max - t);
    trial = u;
    bool ok = stepper.advance(trial, h) && trial.all_finite();
    double drift = 0.0;
    detail::EnergyParts e_next{};
    if (ok) {
      e_next = parts(trial);
      const double scale = std::max(detail::energy_scale(p, e_now), 1e-300);
      drift = std::abs(detail::energy_from(p, e_next) - detail::energy_from(p, e_now)) / scale;
      if (cfg.adaptive && drift > cfg.drift_tol) ok = false;
    }
    if (!ok) {
      ++tr.rejected;
      if (!cfg.adaptive) throw SolverFailure("evolve: step failed at fixed dt");
      dt = 0.5 * h;
      calm_steps = 0;
      continue;
    }

    u.values.swap(trial.values);
    t = (h == cfg.t_max - t) ? cfg.t_max : t + h;
    ++tr.steps;
    if (cfg.sponge.on) {
      apply_sponge(sigma, u, h);
      e_next = parts(u);
    }
    e_now = e_next;

    if (cfg.adaptive && drift < 0.1 * cfg.drift_tol && ++calm_steps >= 10 && dt < cfg.dt0) {
      dt = std::min(2.0 * dt, cfg.dt0);
      calm_steps = 0;
    }

    const bool last = t >= cfg.t_max - eps_t;
    const double dnorm = std::sqrt(e_now.delta_sq);
    const bool grown = tr.initial_deltaL2 > 0.0 && dnorm > cfg.blowup_factor * tr.initial_deltaL2;
    const bool unresolved = nl && detail::core_nodes(u) < cfg.min_core_nodes;
    if (++since_record >= cfg.record_every || last || grown || unresolved) {
      record();
      since_record = 0;
    }
    if (grown || unresolved) {
      tr.event = {EventKind::BlowUpDetected, t};
      break;
    }
    tr.event.t = t;
  }
  if (tr.observables.back().t != t) record();
  tr.final_state = u;
  tr.t_final = t;
  tr.final_dt = dt;
  return tr;
}

/// Free flow e^{-i t L} by Crank-Nicolson with a fixed step; used for the
/// dispersive and scattering diagnostics.
class LinearPropagator {
 public:
  LinearPropagator(double mu, GridPtr g, double dt, const SpongeConfig& sponge = {})
      : stepper_(derive_params(g->dim(), mu, 1.0), g, Integrator::Midpoint, false), dt_(dt),
        sigma_(sponge_profile(*g, sponge)), sponge_(sponge.on) {
    if (!(dt > 0.0)) throw InvalidParameter("LinearPropagator: dt must be positive");
  }

  /// Advances by exactly `duration`, using steps of at most dt (negative durations run backward).
  void advance(RadialField& u, double duration) {
    if (duration == 0.0) return;
    const long n = std::max(1L, static_cast<long>(std::ceil(std::abs(duration) / dt_ - 1e-9)));
    const double h = duration / static_cast<double>(n);
    for (long k = 0; k < n; ++k) {
      stepper_.advance(u, h);
      if (sponge_) apply_sponge(sigma_, u, std::abs(h));
    }
  }

  double dt() const { return dt_; }

 private:
  Stepper stepper_;
  double dt_;
  std::vector<double> sigma_;
  bool sponge_;
};

}  // namespace bnls
