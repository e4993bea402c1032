#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "bnls/tridiagonal.hpp"

namespace bnls {

using cplx = std::complex<double>;

/// |z|^p with a multiplication-only path when p is a small even integer.
class AbsPower {
 public:
  explicit AbsPower(double p) : p_(p) {
    const double half = 0.5 * p;
    if (half == std::floor(half) && half >= 0.0 && half <= 32.0) k_ = static_cast<int>(half);
  }
  double operator()(const cplx& z) const {
    if (k_ < 0) return std::pow(std::abs(z), p_);
    const double n = std::norm(z);
    double r = 1.0;
    for (int i = 0; i < k_; ++i) r *= n;
    return r;
  }

 private:
  double p_;
  int k_ = -1;
};

/// Gamma(n/2) for a positive integer n, in closed form.
inline double gamma_half_integer(int n) {
  if (n < 1) throw std::invalid_argument("gamma_half_integer: n must be >= 1");
  double g = (n % 2 == 0) ? 1.0 : std::sqrt(std::numbers::pi);  // Gamma(1) or Gamma(1/2)
  for (double x = (n % 2 == 0) ? 1.0 : 0.5; x < n / 2.0 - 0.25; x += 1.0) g *= x;
  return g;
}

/// Surface area of the unit sphere in R^N.
inline double unit_sphere_area(int N) { return 2.0 * std::pow(std::numbers::pi, N / 2.0) / gamma_half_integer(N); }

/// Staggered radial grid r_j = (j + 1/2) h on [0, R_max].
///
/// The Laplacian is always written in face form
///   (Delta u)_j = [c_j (u_{j+1} - u_j) - c_{j-1} (u_j - u_{j-1})] / w_j,
/// so it is symmetric in the w-weighted inner product and conserves discrete
/// mass under Cayley-type time steps. For N <= 3 the coefficients reproduce the
/// centered stencil u'' + (N-1) u'/r with midpoint weights w_j = omega r_j^{N-1} h.
/// For N >= 4 that stencil loses positivity next to the axis, and the
/// finite-volume form c_j = omega r_{j+1/2}^{N-1}/h with cell volumes is used.
/// The inner face has zero coefficient (even reflection across the origin); the
/// outer boundary uses the ghost u_M = -u_{M-1} so that u(R_max) = 0. Both
/// forms are exact on quadratics.
class Grid {
 public:
  Grid(int N, std::size_t M, double R_max) : N_(N), M_(M), R_(R_max) {
    if (N < 1) throw std::invalid_argument("Grid: N must be >= 1");
    if (M < 4) throw std::invalid_argument("Grid: need at least 4 nodes");
    if (!(R_max > 0.0)) throw std::invalid_argument("Grid: R_max must be positive");
    h_ = R_ / static_cast<double>(M_);
    omega_ = unit_sphere_area(N);
    r_.resize(M_);
    w_.resize(M_);
    face_.resize(M_);
    for (std::size_t j = 0; j < M_; ++j) {
      const double lo = j * h_, hi = (j + 1) * h_;
      r_[j] = (j + 0.5) * h_;
      if (N <= 3) {
        w_[j] = omega_ * std::pow(r_[j], N - 1) * h_;
        face_[j] = w_[j] * (2.0 * r_[j] + (N - 1) * h_) / (2.0 * h_ * h_ * r_[j]);
      } else {
        w_[j] = omega_ * (std::pow(hi, N) - std::pow(lo, N)) / N;
        face_[j] = omega_ * std::pow(hi, N - 1) / h_;
      }
    }
    build_laplacian();
  }

  int dim() const { return N_; }
  std::size_t size() const { return M_; }
  double R_max() const { return R_; }
  double h() const { return h_; }
  double omega() const { return omega_; }
  std::span<const double> r() const { return r_; }
  std::span<const double> weights() const { return w_; }
  /// omega r_{j+1/2}^{N-1} / h for the face between nodes j and j+1 (j = M-1 is R_max).
  std::span<const double> face_coefficients() const { return face_; }

  /// Symmetric tridiagonal stiffness matrix A with Delta = W^{-1} A.
  const SymTridiagonal& stiffness() const { return stiff_; }

 private:
  void build_laplacian() {
    stiff_.diag.resize(M_);
    stiff_.off.resize(M_ - 1);
    for (std::size_t j = 0; j < M_; ++j) {
      const double cp = face_[j];
      const double cm = j > 0 ? face_[j - 1] : 0.0;
      if (j + 1 < M_) {
        stiff_.off[j] = cp;
        stiff_.diag[j] = -(cp + cm);
      } else {
        stiff_.diag[j] = -(cm + 2.0 * cp);  // Dirichlet ghost u_M = -u_{M-1}
      }
    }
  }

  int N_;
  std::size_t M_;
  double R_, h_ = 0, omega_ = 0;
  std::vector<double> r_, w_, face_;
  SymTridiagonal stiff_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(int N, std::size_t M, double R_max) { return std::make_shared<const Grid>(N, M, R_max); }

/// Complex radial profile sampled at the grid nodes.
struct RadialField {
  GridPtr grid;
  std::vector<cplx> values;

  RadialField() = default;
  explicit RadialField(GridPtr g) : grid(std::move(g)), values(grid->size()) {}
  RadialField(GridPtr g, std::vector<cplx> v) : grid(std::move(g)), values(std::move(v)) {
    if (values.size() != grid->size()) throw std::invalid_argument("RadialField: length does not match grid");
  }

  template <typename F>
  static RadialField sample(GridPtr g, F&& f) {
    RadialField u(g);
    const auto r = g->r();
    for (std::size_t j = 0; j < r.size(); ++j) u.values[j] = f(r[j]);
    return u;
  }

  std::size_t size() const { return values.size(); }
  cplx& operator[](std::size_t j) { return values[j]; }
  const cplx& operator[](std::size_t j) const { return values[j]; }

  bool all_finite() const {
    return std::all_of(values.begin(), values.end(),
                       [](const cplx& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
  }

  RadialField& operator+=(const RadialField& o) {
    for (std::size_t j = 0; j < size(); ++j) values[j] += o.values[j];
    return *this;
  }
  RadialField& operator-=(const RadialField& o) {
    for (std::size_t j = 0; j < size(); ++j) values[j] -= o.values[j];
    return *this;
  }
  RadialField& operator*=(cplx s) {
    for (auto& z : values) z *= s;
    return *this;
  }
  friend RadialField operator+(RadialField a, const RadialField& b) { return a += b; }
  friend RadialField operator-(RadialField a, const RadialField& b) { return a -= b; }
  friend RadialField operator*(cplx s, RadialField a) { return a *= s; }
};

/// a I + b Delta^2 + c Delta on a grid. Inverses factor the quadratic into
/// b (Delta - l1)(Delta - l2) and run two tridiagonal solves of the symmetric
/// form A - l W; this keeps the condition number at O(h^-2) instead of O(h^-4).
class LinearOperator {
 public:
  LinearOperator(GridPtr g, cplx a, cplx b, cplx c) : grid_(std::move(g)), a_(a), b_(b), c_(c) {}

  static LinearOperator combination(GridPtr g, cplx a, cplx b, cplx c) { return LinearOperator(std::move(g), a, b, c); }

  RadialField apply(const RadialField& u) const;

  class Inverse {
   public:
    Inverse(GridPtr g, cplx a, cplx b, cplx c) : grid_(std::move(g)) {
      if (b != cplx(0.0)) {
        const cplx disc = std::sqrt(c * c - 4.0 * a * b);
        roots_ = {(-c + disc) / (2.0 * b), (-c - disc) / (2.0 * b)};
        scale_ = 1.0 / b;
      } else if (c != cplx(0.0)) {
        roots_ = {-a / c};
        scale_ = 1.0 / c;
      } else {
        if (a == cplx(0.0)) throw LinearSolveError("singular operator");
        scale_ = 1.0 / a;
      }
      for (const cplx& l : roots_) factors_.emplace_back(shifted_stiffness(*grid_, l));
    }

    /// Overwrites b with x such that L x = b.
    void solve_in_place(std::span<cplx> rhs) const {
      const auto w = grid_->weights();
      for (const auto& f : factors_) {
        for (std::size_t j = 0; j < rhs.size(); ++j) rhs[j] *= w[j];
        f.solve_in_place(rhs);
      }
      for (auto& z : rhs) z *= scale_;
    }
    RadialField solve(RadialField rhs) const {
      solve_in_place(rhs.values);
      return rhs;
    }

   private:
    static ComplexSymmetricLDL shifted_stiffness(const Grid& g, cplx l) {
      const auto& A = g.stiffness();
      const auto w = g.weights();
      std::vector<cplx> diag(g.size()), off(A.off.begin(), A.off.end());
      for (std::size_t i = 0; i < g.size(); ++i) diag[i] = A.diag[i] - l * w[i];
      return ComplexSymmetricLDL(diag, off);
    }

    GridPtr grid_;
    std::vector<cplx> roots_;
    cplx scale_;
    std::vector<ComplexSymmetricLDL> factors_;
  };

  Inverse factorize() const { return Inverse(grid_, a_, b_, c_); }

 private:
  GridPtr grid_;
  cplx a_, b_, c_;
};

namespace detail {
/// Value at node j with the boundary ghosts applied (j may be -1 or M).
inline cplx ghosted(std::span<const cplx> u, long j) {
  const long M = static_cast<long>(u.size());
  if (j < 0) return u[static_cast<std::size_t>(-j - 1)];
  if (j >= M) return -u[static_cast<std::size_t>(2 * M - 1 - j)];
  return u[static_cast<std::size_t>(j)];
}
}  // namespace detail

inline RadialField laplacian(const RadialField& u) {
  const Grid& g = *u.grid;
  RadialField out(u.grid);
  g.stiffness().multiply<cplx>(u.values, out.values);
  const auto w = g.weights();
  for (std::size_t j = 0; j < out.size(); ++j) out.values[j] /= w[j];
  return out;
}

inline RadialField bilaplacian(const RadialField& u) { return laplacian(laplacian(u)); }

inline RadialField LinearOperator::apply(const RadialField& u) const {
  const RadialField lu = laplacian(u);
  const RadialField llu = laplacian(lu);
  RadialField out(grid_);
  for (std::size_t j = 0; j < out.size(); ++j) out.values[j] = a_ * u.values[j] + b_ * llu.values[j] + c_ * lu.values[j];
  return out;
}

/// Centered first and second radial derivatives with the boundary ghosts.
struct RadialDerivatives {
  std::vector<cplx> ur, urr;
};

inline RadialDerivatives radial_derivatives(const RadialField& u) {
  const double h = u.grid->h();
  const long M = static_cast<long>(u.size());
  RadialDerivatives d{std::vector<cplx>(u.size()), std::vector<cplx>(u.size())};
  for (long j = 0; j < M; ++j) {
    const cplx um = detail::ghosted(u.values, j - 1), u0 = u.values[j], up = detail::ghosted(u.values, j + 1);
    d.ur[j] = (up - um) / (2.0 * h);
    d.urr[j] = (up - 2.0 * u0 + um) / (h * h);
  }
  return d;
}

/// Midpoint/finite-volume quadrature sum_j f_j w_j of a radial integrand over R^N.
inline double integrate(const Grid& g, std::span<const double> f) {
  const auto w = g.weights();
  double s = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) s += f[j] * w[j];
  return s;
}

inline double lp_power(const RadialField& u, double p) {
  const auto w = u.grid->weights();
  const AbsPower pw(p);
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += pw(u.values[j]) * w[j];
  return s;
}

inline double l2_squared(const RadialField& u) {
  const auto w = u.grid->weights();
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += std::norm(u.values[j]) * w[j];
  return s;
}

/// Real part of the weighted inner product <u, v>.
inline double inner_real(const RadialField& u, const RadialField& v) {
  const auto w = u.grid->weights();
  double s = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) s += (std::conj(u.values[j]) * v.values[j]).real() * w[j];
  return s;
}

/// Face-difference gradient energy sum_faces c_j h^2 |(u_{j+1}-u_j)/h|^2, which
/// equals -<u, Delta u> exactly (discrete integration by parts).
inline double grad_squared(const RadialField& u) {
  const auto c = u.grid->face_coefficients();
  const long M = static_cast<long>(u.size());
  double s = 0.0;
  for (long j = 0; j < M; ++j) s += c[j] * std::norm(detail::ghosted(u.values, j + 1) - u.values[j]);
  return s;
}

struct Norms {
  double L2 = 0, Lp = 0, gradL2 = 0, deltaL2 = 0, H2 = 0, supWeighted = 0;
};

/// All norms of u; Lp is the p-norm itself (not its p-th power).
inline Norms norms(const RadialField& u, double p = 2.0) {
  const Grid& g = *u.grid;
  Norms n;
  const double l2sq = l2_squared(u);
  const double dsq = l2_squared(laplacian(u));
  n.L2 = std::sqrt(l2sq);
  n.Lp = std::pow(lp_power(u, p), 1.0 / p);
  n.gradL2 = std::sqrt(grad_squared(u));
  n.deltaL2 = std::sqrt(dsq);
  n.H2 = std::sqrt(l2sq + dsq);
  const auto r = g.r();
  for (std::size_t j = 0; j < u.size(); ++j)
    n.supWeighted = std::max(n.supWeighted, std::pow(r[j], (g.dim() - 1) / 2.0) * std::abs(u.values[j]));
  return n;
}

inline double sup_norm(const RadialField& u) {
  double m = 0.0;
  for (const auto& z : u.values) m = std::max(m, std::abs(z));
  return m;
}

}  // namespace bnls
