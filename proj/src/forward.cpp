#include "dtnlab/forward.hpp"

#include <algorithm>
#include <cmath>

namespace dtnlab {

namespace {

// Dirichlet solve of (-Laplace + q) x = rhs_interior + lift(f) with the shared
// Poisson factorization as preconditioner. q empty means pure Poisson, where
// the preconditioner is exact and CG converges in one step.
std::vector<double> interior_solve(const Grid& g, const std::vector<double>& q_interior,
                                   const std::vector<double>& boundary_values,
                                   const std::vector<double>& rhs_interior, const SolveOptions& opts,
                                   const char* what) {
  const ShiftedLaplacian A(g, Carrier::omega, q_interior);
  std::vector<double> rhs = rhs_interior;
  rhs.resize(A.dofs(), 0.0);
  if (!boundary_values.empty()) A.boundary_rhs(boundary_values, rhs);

  auto factor = shared_poisson_factor(g, Carrier::omega);
  RealOp op = [&A](const std::vector<double>& x, std::vector<double>& y) { A.apply(x, y); };
  RealOp precond = [&factor](const std::vector<double>& r, std::vector<double>& z) {
    factor->solve(r, z);
  };
  std::vector<double> x;
  const IterInfo info = conjugate_gradient(op, rhs, x, opts.linear_tol, opts.max_linear_iter, &precond);
  if (!info.converged)
    throw NonConvergence(std::string(what) + ": linear solver stalled", info.rel_residual);
  return x;
}

Field assemble(const Grid& g, const BoundaryField& f, const std::vector<double>& interior) {
  Field u(g, Carrier::omega);
  for (std::size_t b = 0; b < f.size(); ++b) u.values[g.boundary_node(b)] = f.values[b];
  const auto& m = g.interior_map(Carrier::omega);
  for (std::size_t i = 0; i < interior.size(); ++i) u.values[m.flat_of_dof[i]] = interior[i];
  return u;
}

std::vector<double> boundary_as_carrier(const Grid& g, const BoundaryField& f) {
  std::vector<double> full(g.point_count(Carrier::omega), 0.0);
  for (std::size_t b = 0; b < f.size(); ++b) full[g.boundary_node(b)] = f.values[b];
  return full;
}

double interior_l2(const Grid& g, const std::vector<double>& v) {
  const double cell = std::pow(g.spacing(), g.dim());
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(cell * acc);
}

}  // namespace

Field harmonic_extension(const Grid& g, const BoundaryField& f, const SolveOptions& opts) {
  const auto x = interior_solve(g, {}, boundary_as_carrier(g, f), {}, opts, "harmonic_extension");
  return assemble(g, f, x);
}

double semilinear_residual(const Grid& g, const Nonlinearity& a, const Field& u) {
  const Field lap = laplacian_apply(u);
  const auto& m = g.interior_map(Carrier::omega);
  std::vector<double> r(m.flat_of_dof.size());
  for (std::size_t i = 0; i < r.size(); ++i) {
    const std::size_t f = m.flat_of_dof[i];
    r[i] = lap.values[f] + a(u.values[f]);
  }
  return interior_l2(g, r);
}

Field solve_semilinear(const Grid& g, const Nonlinearity& a, const BoundaryField& f,
                       const SolveOptions& opts, ForwardDiagnostics* diag) {
  if (!a.certified())
    throw ClassViolation("solve_semilinear: nonlinearity failed class certification");
  const double lambda1 = g.first_eigenvalue();
  if (a.class_params().c >= lambda1)
    throw ClassViolation("solve_semilinear: c >= discrete lambda_1");

  const auto& m = g.interior_map(Carrier::omega);
  const std::size_t dofs = m.flat_of_dof.size();
  const Field ext = harmonic_extension(g, f, opts);

  std::vector<double> w(dofs, 0.0), rhs(dofs), u_int(dofs);
  ForwardDiagnostics local;
  ForwardDiagnostics& d = diag ? *diag : local;

  auto current = [&]() {
    std::vector<double> vals(dofs);
    for (std::size_t i = 0; i < dofs; ++i) vals[i] = w[i] + ext.values[m.flat_of_dof[i]];
    return vals;
  };
  auto residual_of = [&](const std::vector<double>& interior) {
    Field u = assemble(g, f, interior);
    return semilinear_residual(g, a, u);
  };
  auto norm_scale = [&](const std::vector<double>& interior) {
    return 1.0 + interior_l2(g, interior);
  };

  // Damped Picard on the fixed-point map of the existence proof.
  const double theta = opts.damping;
  double res = std::numeric_limits<double>::infinity();
  bool stagnated = false;
  for (int it = 0; it < opts.max_picard; ++it) {
    u_int = current();
    for (std::size_t i = 0; i < dofs; ++i) rhs[i] = -a(u_int[i]);
    const auto psi = interior_solve(g, {}, {}, rhs, opts, "solve_semilinear");
    for (std::size_t i = 0; i < dofs; ++i) w[i] = (1.0 - theta) * w[i] + theta * psi[i];
    u_int = current();
    res = residual_of(u_int);
    d.picard_iterations = it + 1;
    d.residual_history.push_back(res);
    if (res <= opts.tol * norm_scale(u_int)) {
      d.residual = res;
      return assemble(g, f, u_int);
    }
    const std::size_t k = d.residual_history.size();
    if (k >= 8 && d.residual_history[k - 1] > 0.9 * d.residual_history[k - 6]) {
      stagnated = true;
      break;
    }
  }
  if (!opts.newton_fallback || !(stagnated || res > opts.tol)) {
    if (res <= opts.tol * norm_scale(current())) return assemble(g, f, current());
  }
  if (!opts.newton_fallback)
    throw NonConvergence("solve_semilinear: Picard iteration exhausted", res);

  // Newton fallback: (-Laplace + a'(u)) delta = -(-Laplace u + a(u)), delta = 0 on Gamma.
  u_int = current();
  d.used_newton = true;
  for (int it = 0; it < opts.max_newton; ++it) {
    Field u = assemble(g, f, u_int);
    const Field lap = laplacian_apply(u);
    std::vector<double> q(dofs), neg_res(dofs);
    for (std::size_t i = 0; i < dofs; ++i) {
      const std::size_t fl = m.flat_of_dof[i];
      q[i] = a.deriv(u.values[fl]);
      neg_res[i] = -(lap.values[fl] + a(u.values[fl]));
    }
    const auto delta = interior_solve(g, q, {}, neg_res, opts, "solve_semilinear(newton)");
    for (std::size_t i = 0; i < dofs; ++i) u_int[i] += delta[i];
    res = residual_of(u_int);
    d.newton_iterations = it + 1;
    d.residual_history.push_back(res);
    if (res <= opts.tol * norm_scale(u_int)) {
      d.residual = res;
      return assemble(g, f, u_int);
    }
  }
  throw NonConvergence("solve_semilinear: Newton fallback exhausted", res);
}

Field solve_schrodinger(const Grid& g, const Field& q, const BoundaryField& f,
                        const SolveOptions& opts, double admissible_floor) {
  if (q.carrier != Carrier::omega) throw InvalidArgument("solve_schrodinger: q must live on Omega");
  const double qmin = *std::min_element(q.values.begin(), q.values.end());
  const double floor = std::isnan(admissible_floor)
                           ? g.first_eigenvalue() * (1.0 - 1e-9)
                           : admissible_floor;
  if (qmin < -floor) throw QNotAdmissible("solve_schrodinger: min(q) below the admissible floor");

  const auto& m = g.interior_map(Carrier::omega);
  std::vector<double> q_int(m.flat_of_dof.size());
  for (std::size_t i = 0; i < q_int.size(); ++i) q_int[i] = q.values[m.flat_of_dof[i]];
  const auto x = interior_solve(g, q_int, boundary_as_carrier(g, f), {}, opts, "solve_schrodinger");
  return assemble(g, f, x);
}

ComplexField solve_schrodinger(const Grid& g, const Field& q, const ComplexBoundaryField& f,
                               const SolveOptions& opts, double admissible_floor) {
  BoundaryField re(g), im(g);
  for (std::size_t b = 0; b < f.size(); ++b) {
    re.values[b] = f.values[b].real();
    im.values[b] = f.values[b].imag();
  }
  const Field ur = solve_schrodinger(g, q, re, opts, admissible_floor);
  const Field ui = solve_schrodinger(g, q, im, opts, admissible_floor);
  ComplexField u(g, Carrier::omega);
  for (std::size_t i = 0; i < u.size(); ++i) u.values[i] = {ur.values[i], ui.values[i]};
  return u;
}

}  // namespace dtnlab
