#pragma once

#include "dtnlab/grid.hpp"
#include "dtnlab/linsolve.hpp"
#include "dtnlab/nonlinearity.hpp"

namespace dtnlab {

struct SolveOptions {
  double tol = 1e-10;          // nonlinear residual target, relative to 1 + |u|
  int max_picard = 200;
  double damping = 0.7;        // theta in (0, 1]
  bool newton_fallback = true;
  int max_newton = 40;
  double linear_tol = 1e-12;
  int max_linear_iter = 20000;
};

struct ForwardDiagnostics {
  int picard_iterations = 0;
  int newton_iterations = 0;
  double residual = 0.0;
  bool used_newton = false;
  std::vector<double> residual_history;
};

/// Discrete harmonic extension: -Laplace v = 0 in Omega, v = f on Gamma.
Field harmonic_extension(const Grid& g, const BoundaryField& f, const SolveOptions& opts = {});

/// Solves -Laplace u + a(u) = 0, u = f on Gamma, by damped Picard iteration on
/// the lifted fixed-point map (u = w + harmonic extension of f, with each step
/// solving -Laplace psi = -a(w + v)), switching to Newton steps on stagnation.
/// The Newton systems -Laplace + a'(u) stay coercive because a' >= -c with
/// c < lambda_1.
Field solve_semilinear(const Grid& g, const Nonlinearity& a, const BoundaryField& f,
                       const SolveOptions& opts = {}, ForwardDiagnostics* diag = nullptr);

/// Solves (-Laplace + q) u = 0, u = f on Gamma, for real q bounded below by
/// -c > -lambda_1. `admissible_floor` is the c to enforce; NaN means "only
/// require coercivity against the discrete lambda_1".
Field solve_schrodinger(const Grid& g, const Field& q, const BoundaryField& f,
                        const SolveOptions& opts = {},
                        double admissible_floor = std::numeric_limits<double>::quiet_NaN());

/// Complex boundary data, handled by linearity as two real solves.
ComplexField solve_schrodinger(const Grid& g, const Field& q, const ComplexBoundaryField& f,
                               const SolveOptions& opts = {},
                               double admissible_floor = std::numeric_limits<double>::quiet_NaN());

/// L2-proxy norm of the semilinear residual -Laplace u + a(u) over interior
/// nodes (the certification quantity of the solvers above).
double semilinear_residual(const Grid& g, const Nonlinearity& a, const Field& u);

}  // namespace dtnlab
