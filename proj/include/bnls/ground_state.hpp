#pragma once

#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "bnls/functionals.hpp"
#include "bnls/model.hpp"
#include "bnls/radial_grid.hpp"

namespace bnls {

enum class GroundKind { Q, W };

struct GroundState {
  GroundKind kind = GroundKind::Q;
  RadialField profile;
  double alpha = 0;          // nonlinearity power the profile solves for
  double L2 = 0;             // ||Q||, truncated to the grid for W
  double deltaL2 = 0;        // ||Delta Q||
  double Lalpha2 = 0;        // int |Q|^{alpha+2}
  double C_opt = 0;          // quotient value: J(Q), or ||W||_{2*}/||Delta W||
  std::array<double, 2> pohozaev{};
  int iterations = 0;
  bool converged = false;
  double multiplier = 1.0;   // last Petviashvili multiplier, 1 at a fixed point

  // W only
  std::string path;          // "explicit" or "petviashvili"
  double elliptic_residual = 0;
  double deltaL2_raw = 0, Lalpha2_raw = 0;  // interior sums before the tail correction
};

struct PetviashviliOptions {
  double tol = 1e-10;
  int max_iter = 5000;
  double seed_width = 1.0;
};

namespace detail {

/// Petviashvili iteration for (Delta^2 + shift) u = |u|^alpha u with a Gaussian seed.
inline std::vector<double> petviashvili(const GridPtr& gp, double alpha, double shift, const PetviashviliOptions& o,
                                        int& iterations, double& multiplier) {
  const Grid& g = *gp;
  const std::size_t M = g.size();
  const auto w = g.weights();
  const auto r = g.r();
  const auto inv = LinearOperator(gp, shift, 1.0, 0.0).factorize();
  const double gamma = (alpha + 1.0) / alpha;

  std::vector<double> q(M), nl(M), aq(M), next(M);
  std::vector<cplx> buf(M);
  for (std::size_t j = 0; j < M; ++j) q[j] = std::exp(-r[j] * r[j] / (2.0 * o.seed_width * o.seed_width));

  double best = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int it = 1; it <= o.max_iter; ++it) {
    // <q, Delta^2 q> as ||Delta q||^2, avoiding the cancellation in forming Delta^2 q
    g.stiffness().multiply<double>(q, aq);
    double num = 0.0, den = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      nl[j] = std::pow(std::abs(q[j]), alpha) * q[j];
      num += aq[j] * aq[j] / w[j] + shift * q[j] * q[j] * w[j];
      den += q[j] * nl[j] * w[j];
      norm += q[j] * q[j] * w[j];
    }
    if (!(den > 0.0) || !std::isfinite(num)) throw SolverFailure("Petviashvili iteration degenerated (non-positive nonlinear term)");
    multiplier = num / den;
    for (std::size_t j = 0; j < M; ++j) buf[j] = nl[j];
    inv.solve_in_place(buf);
    const double scale = std::pow(multiplier, gamma);
    double diff = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      next[j] = scale * buf[j].real();
      if (!std::isfinite(next[j])) throw SolverFailure("Petviashvili iteration produced a non-finite value");
      diff += (next[j] - q[j]) * (next[j] - q[j]) * w[j];
    }
    q.swap(next);
    iterations = it;
    const double change = std::sqrt(diff / norm);
    if (change < o.tol) return q;
    // Once near the roundoff floor, stop when the change no longer improves.
    if (change < best) {
      best = change;
      since_best = 0;
    } else if (best < 1e3 * o.tol && ++since_best >= 25) {
      return q;
    }
  }
  throw SolverFailure("Petviashvili iteration did not converge in " + std::to_string(o.max_iter) + " iterations");
}

inline RadialField to_field(GridPtr g, const std::vector<double>& v) {
  RadialField u(g);
  for (std::size_t j = 0; j < v.size(); ++j) u.values[j] = v[j];
  return u;
}

}  // namespace detail

/// Ground state of Delta^2 Q + Q - |Q|^alpha Q = 0 on the grid.
inline GroundState solve_Q(const Params& p, GridPtr g, const PetviashviliOptions& o = {}) {
  if (p.N != g->dim()) throw InvalidParameter("solve_Q: grid dimension does not match params");
  if (!p.alpha_star.exceeds(p.alpha)) throw InvalidParameter("solve_Q: requires 0 < alpha < alpha*");
  GroundState gs;
  gs.kind = GroundKind::Q;
  gs.alpha = p.alpha;
  gs.profile = detail::to_field(g, detail::petviashvili(g, p.alpha, 1.0, o, gs.iterations, gs.multiplier));
  gs.converged = true;

  const double N = p.N, a = p.alpha;
  const double l2sq = l2_squared(gs.profile);
  const double dsq = l2_squared(laplacian(gs.profile));
  gs.L2 = std::sqrt(l2sq);
  gs.deltaL2 = std::sqrt(dsq);
  gs.Lalpha2 = lp_power(gs.profile, a + 2.0);
  gs.pohozaev = {std::abs(dsq - N * a / (4.0 * (a + 2.0)) * gs.Lalpha2) / dsq,
                 std::abs(dsq - N * a / (8.0 - (N - 4.0) * a) * l2sq) / dsq};
  gs.C_opt = gn_quotient(p, gs.profile);
  return gs;
}

struct ExplicitWOptions {
  double residual_tol = 1e-4;
  PetviashviliOptions fallback{1e-10, 5000, 1.0};
};

namespace detail {

inline double w_constant(int N) {
  const double n = N;
  return std::pow(n * (n - 4.0) * (n * n - 4.0), (n - 4.0) / 8.0);
}

/// int_{rc}^inf omega r^{N-1} f(r) dr through s = rc/r, midpoint rule in s.
template <typename F>
double radial_tail(int N, double rc, F&& f, int n = 20000) {
  const double omega = unit_sphere_area(N);
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    const double t = (k + 0.5) / n;
    const double r = rc / t;
    s += std::pow(r, N - 1) * f(r) * rc / (t * t);
  }
  return omega * s / n;
}

}  // namespace detail

/// Energy-critical profile W = c_N (1+r^2)^{-(N-4)/2}, verified on the grid.
/// Norms over the full space use a closed-form tail beyond the last interior
/// face; the elliptic residual is measured on r <= R_max/2.
inline GroundState explicit_W(int N, GridPtr g, const ExplicitWOptions& o = {}) {
  if (N < 5) throw InvalidParameter("explicit_W: requires N >= 5");
  if (g->dim() != N) throw InvalidParameter("explicit_W: grid dimension does not match N");
  const double n = N, k = (n - 4.0) / 2.0, c = detail::w_constant(N);
  const double crit = 2.0 * n / (n - 4.0);   // 2* = alpha + 2
  const double alpha = 8.0 / (n - 4.0);
  const auto W = [&](double r) { return c * std::pow(1.0 + r * r, -k); };
  const auto lapW = [&](double r) { return -c * (n - 4.0) * std::pow(1.0 + r * r, -n / 2.0) * (n + 2.0 * r * r); };

  GroundState gs;
  gs.kind = GroundKind::W;
  gs.alpha = alpha;
  gs.profile = RadialField::sample(g, [&](double r) { return cplx(W(r)); });
  gs.path = "explicit";

  const auto interior_residual = [&](const RadialField& u) {
    const auto b = bilaplacian(u);
    const auto r = g->r();
    const auto w = g->weights();
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < u.size() && r[j] <= g->R_max() / 2.0; ++j) {
      const double rhs = std::pow(std::abs(u[j]), alpha) * u[j].real();
      num += std::norm(b[j] - rhs) * w[j];
      den += rhs * rhs * w[j];
    }
    return std::sqrt(num / den);
  };
  gs.elliptic_residual = interior_residual(gs.profile);

  if (gs.elliptic_residual >= o.residual_tol) {
    const auto q = detail::petviashvili(g, alpha, 0.0, o.fallback, gs.iterations, gs.multiplier);
    gs.profile = detail::to_field(g, q);
    gs.path = "petviashvili";
    gs.elliptic_residual = interior_residual(gs.profile);
    if (gs.elliptic_residual >= o.residual_tol)
      throw SolverFailure("explicit_W: candidate and fallback both fail the residual check");
  }
  gs.converged = true;

  // Two outermost nodes feel the Dirichlet ghost; sum below them, then add the tail.
  const std::size_t cut = g->size() - 2;
  const double rc = static_cast<double>(cut) * g->h();
  const auto lap = laplacian(gs.profile);
  const auto w = g->weights();
  double dsq = 0.0, lcrit = 0.0, l2 = 0.0;
  for (std::size_t j = 0; j < cut; ++j) {
    dsq += std::norm(lap[j]) * w[j];
    lcrit += std::pow(std::abs(gs.profile[j]), crit) * w[j];
  }
  for (std::size_t j = 0; j < g->size(); ++j) l2 += std::norm(gs.profile[j]) * w[j];
  gs.deltaL2_raw = std::sqrt(dsq);
  gs.Lalpha2_raw = lcrit;
  if (gs.path == "explicit") {
    dsq += detail::radial_tail(N, rc, [&](double r) { return lapW(r) * lapW(r); });
    lcrit += detail::radial_tail(N, rc, [&](double r) { return std::pow(W(r), crit); });
  }
  gs.deltaL2 = std::sqrt(dsq);
  gs.Lalpha2 = lcrit;
  gs.L2 = std::sqrt(l2);  // ||W||_{L^2} diverges for N <= 8: truncated value only
  gs.pohozaev = {std::abs(dsq - lcrit) / dsq, gs.elliptic_residual};
  gs.C_opt = std::pow(lcrit, 1.0 / crit) / gs.deltaL2;
  return gs;
}

struct Thresholds {
  GroundKind kind = GroundKind::Q;
  double E_thr = 0;     // E_0(Q) M(Q)^sigma_c from the closed form, or E_0(W)
  double G_thr = 0;     // ||Delta Q|| ||Q||^sigma_c, or ||Delta W||
  double C_opt = 0;     // closed form in terms of G_thr
  double C_quot = 0;    // quotient evaluated on the profile
  double E_direct = 0;  // energy evaluated directly on the profile
  double g_at_G = 0;    // g(G_thr) with g(l) = l^2/2 - C_opt l^{N alpha/4}/(alpha+2)
  double identity_residual = 0;
};

inline double threshold_g(const Params& p, double C_opt, double lambda) {
  return 0.5 * lambda * lambda - C_opt * std::pow(lambda, p.N * p.alpha / 4.0) / (p.alpha + 2.0);
}

inline Thresholds compute_thresholds(const GroundState& gs, const Params& p) {
  if (!gs.converged) throw InvalidParameter("compute_thresholds: ground state not converged");
  Thresholds t;
  t.kind = gs.kind;
  const double N = p.N, a = p.alpha;
  if (gs.kind == GroundKind::Q) {
    if (!p.sigma_c) throw InvalidParameter("compute_thresholds: sigma_c undefined on the mass-critical line");
    const double sc = *p.sigma_c;
    const double mq = gs.L2 * gs.L2;
    t.G_thr = gs.deltaL2 * std::pow(gs.L2, sc);
    t.E_thr = (N * a - 8.0) / (2.0 * N * a) * t.G_thr * t.G_thr;
    t.C_opt = 4.0 * (a + 2.0) / (N * a) * std::pow(t.G_thr, -(N * a - 8.0) / 4.0);
    t.C_quot = gs.C_opt;
    t.E_direct = (0.5 * gs.deltaL2 * gs.deltaL2 - gs.Lalpha2 / (a + 2.0)) * std::pow(mq, sc);
    t.g_at_G = threshold_g(p, t.C_opt, t.G_thr);
    t.identity_residual = std::abs(t.g_at_G - t.E_thr) / std::abs(t.E_thr);
    if (t.identity_residual > 1e-8) throw std::logic_error("threshold identity g(G_thr) = E_thr violated");
  } else {
    const double dsq = gs.deltaL2 * gs.deltaL2;
    t.G_thr = gs.deltaL2;
    t.E_direct = 0.5 * dsq - gs.Lalpha2 * (N - 4.0) / (2.0 * N);
    t.E_thr = t.E_direct;
    t.C_opt = std::pow(gs.deltaL2, -4.0 / N);
    t.C_quot = gs.C_opt;
    t.identity_residual = std::abs(t.E_thr - 2.0 / N * dsq) / (2.0 / N * dsq);
    if (t.identity_residual > 1e-3) throw std::logic_error("critical threshold identity E_0(W) = (2/N)||Delta W||^2 violated");
  }
  return t;
}

struct WeinsteinProbe {
  int trials = 0;
  double epsilon = 0;
  double J_Q = 0;
  double worst_ratio = 0;  // max over trials of (J(Q+eta)/J(Q) - 1) / epsilon^2
  bool all_pass = false;   // every trial satisfies J(Q+eta) <= J(Q)(1 + 10 eps^2)
};

/// Random smooth real perturbations eta with ||eta||_{H^2} = eps ||Q||_{H^2}.
inline WeinsteinProbe weinstein_maximality_probe(const GroundState& gs, const Params& p, int trials, double eps,
                                                 std::uint64_t seed = 1) {
  WeinsteinProbe w;
  w.trials = trials;
  w.epsilon = eps;
  w.J_Q = gn_quotient(p, gs.profile);
  w.worst_ratio = -std::numeric_limits<double>::infinity();
  w.all_pass = true;
  const double qh2 = norms(gs.profile).H2;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> coef;
  std::uniform_real_distribution<double> width(0.5, 3.0);
  for (int k = 0; k < trials; ++k) {
    const double s = width(rng);
    const double c0 = coef(rng), c1 = coef(rng), c2 = coef(rng);
    auto eta = RadialField::sample(gs.profile.grid, [&](double r) {
      const double x = r * r / (s * s);
      return cplx((c0 + c1 * x + c2 * x * x) * std::exp(-x));
    });
    const double eh2 = norms(eta).H2;
    if (eh2 == 0.0) continue;
    eta *= cplx(eps * qh2 / eh2);
    const double J = gn_quotient(p, gs.profile + eta);
    const double ratio = (J / w.J_Q - 1.0) / (eps * eps);
    w.worst_ratio = std::max(w.worst_ratio, ratio);
    if (J > w.J_Q * (1.0 + 10.0 * eps * eps)) w.all_pass = false;
  }
  return w;
}

}  // namespace bnls
