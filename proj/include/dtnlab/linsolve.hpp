#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <vector>

#include "dtnlab/grid.hpp"

namespace dtnlab {

struct IterInfo {
  int iterations = 0;
  double rel_residual = 0.0;
  bool converged = false;
};

using RealOp = std::function<void(const std::vector<double>&, std::vector<double>&)>;
using ComplexOp =
    std::function<void(const std::vector<std::complex<double>>&, std::vector<std::complex<double>>&)>;

/// Conjugate gradients for SPD operators. `precond` (optional) applies an SPD
/// approximate inverse.
IterInfo conjugate_gradient(const RealOp& A, const std::vector<double>& b, std::vector<double>& x,
                            double tol, int max_iter, const RealOp* precond = nullptr);

/// BiCGStab for general complex operators with optional right Jacobi-style
/// preconditioning (diag holds the inverse diagonal).
IterInfo bicgstab(const ComplexOp& A, const std::vector<std::complex<double>>& b,
                  std::vector<std::complex<double>>& x, double tol, int max_iter,
                  const std::vector<std::complex<double>>* inv_diag = nullptr);

/// Exact solver for the interior Dirichlet -Laplace operator of one carrier,
/// factored once per grid and shared. Used directly for Poisson problems and
/// as a preconditioner for the shifted operators -Laplace + q.
class PoissonFactor {
 public:
  PoissonFactor(const Grid& g, Carrier c);
  ~PoissonFactor();
  PoissonFactor(PoissonFactor&&) noexcept;

  void solve(const std::vector<double>& rhs, std::vector<double>& x) const;
  const Grid& grid() const { return grid_; }
  Carrier carrier() const { return carrier_; }

 private:
  Grid grid_;
  Carrier carrier_;
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Process-wide cache of Poisson factorizations keyed by (grid, carrier).
std::shared_ptr<const PoissonFactor> shared_poisson_factor(const Grid& g, Carrier c);

/// Interior stencil of (-Laplace + q) on a carrier; q may be empty (zero).
/// Applies to interior-dof vectors.
class ShiftedLaplacian {
 public:
  ShiftedLaplacian(const Grid& g, Carrier c, std::vector<double> q_interior);

  void apply(const std::vector<double>& x, std::vector<double>& y) const;
  std::size_t dofs() const;

  /// Dirichlet lift: accumulates boundary data contributions into the RHS.
  template <class T>
  void boundary_rhs(const std::vector<T>& carrier_values, std::vector<T>& rhs) const;

  const Grid& grid() const { return grid_; }

 private:
  Grid grid_;
  Carrier carrier_;
  std::vector<double> q_;
  double inv_s2_;
};

}  // namespace dtnlab
