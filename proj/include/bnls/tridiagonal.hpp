#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace bnls {

struct LinearSolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Symmetric tridiagonal matrix: diag[i] and off[i] = A(i, i+1) = A(i+1, i).
struct SymTridiagonal {
  std::vector<double> diag, off;

  std::size_t size() const { return diag.size(); }

  template <typename T>
  void multiply(std::span<const T> x, std::span<T> y) const {
    const std::size_t n = diag.size();
    for (std::size_t i = 0; i < n; ++i) {
      T s = diag[i] * x[i];
      if (i > 0) s += off[i - 1] * x[i - 1];
      if (i + 1 < n) s += off[i] * x[i + 1];
      y[i] = s;
    }
  }
};

/// LDL^T factorization without pivoting of the complex symmetric matrix
/// diag(d) + off-diagonals e. Stable when the imaginary part is definite,
/// which holds for every shifted stiffness matrix A - l W with Im l != 0.
class ComplexSymmetricLDL {
 public:
  using cplx = std::complex<double>;

  ComplexSymmetricLDL(std::span<const cplx> d, std::span<const cplx> e) : inv_d_(d.size()), l_(d.size()) {
    const std::size_t n = d.size();
    if (n == 0 || e.size() + 1 != n) throw LinearSolveError("tridiagonal: inconsistent diagonal lengths");
    cplx piv = d[0];
    for (std::size_t i = 0;; ++i) {
      if (std::abs(piv) == 0.0 || !std::isfinite(std::abs(piv))) throw LinearSolveError("tridiagonal: zero pivot");
      inv_d_[i] = 1.0 / piv;
      if (i + 1 == n) break;
      l_[i + 1] = e[i] * inv_d_[i];
      piv = d[i + 1] - l_[i + 1] * e[i];
    }
  }

  void solve_in_place(std::span<cplx> b) const {
    const std::size_t n = inv_d_.size();
    if (b.size() != n) throw LinearSolveError("right-hand side has wrong length");
    for (std::size_t i = 1; i < n; ++i) b[i] -= l_[i] * b[i - 1];
    for (std::size_t i = 0; i < n; ++i) b[i] *= inv_d_[i];
    for (std::size_t i = n - 1; i-- > 0;) b[i] -= l_[i + 1] * b[i + 1];
  }

 private:
  std::vector<cplx> inv_d_, l_;
};

}  // namespace bnls
