#include "dtnlab/cgo.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "dtnlab/rng.hpp"

namespace dtnlab {

namespace {

using C = std::complex<double>;

double dot3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
double norm3(const Vec3& a) { return std::sqrt(dot3(a, a)); }

Vec3 cross3(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

Vec3 scale3(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }

Vec3 add3(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }

// Potential on box nodes: q over closed Omega, zero on the padding.
std::vector<double> extend_to_box(const Grid& g, const Field* q) {
  std::vector<double> out(g.point_count(Carrier::box), 0.0);
  if (!q) return out;
  if (q->carrier != Carrier::omega) throw InvalidArgument("cgo: potential must live on Omega");
  const int pad = g.pad();
  for (std::size_t f = 0; f < q->size(); ++f) {
    auto idx = g.idx(Carrier::omega, f);
    for (int a = 0; a < g.dim(); ++a) idx[a] += pad;
    out[g.flat(Carrier::box, idx)] = q->values[f];
  }
  return out;
}

Vec3 omega_center(const Grid& g) {
  Vec3 c{0, 0, 0};
  for (int a = 0; a < g.dim(); ++a) c[a] = 0.5;
  return c;
}

}  // namespace

CgoDirections cgo_directions(const Vec3& k, double rho, double M, double c_omega_est) {
  CgoDirections d;
  d.k = k;
  d.rho = rho;
  d.M = M;
  d.h0 = c_omega_est / (2.0 * M);
  const double rho0 = 1.0 / d.h0;
  if (rho < rho0 * (1.0 - 1e-12))
    throw InvalidArgument("cgo_directions: rho below the Carleman regime floor rho_0");

  const double kn = norm3(k);
  Vec3 kdir = kn > 0.0 ? scale3(k, 1.0 / kn) : Vec3{1.0, 0.0, 0.0};
  // first coordinate axis not parallel to k
  int j = 0;
  for (; j < 3; ++j) {
    Vec3 e{0, 0, 0};
    e[j] = 1.0;
    if (norm3(cross3(kdir, e)) > 1e-12) break;
  }
  Vec3 e{0, 0, 0};
  e[j] = 1.0;
  d.xi = cross3(kdir, e);
  d.xi = scale3(d.xi, 1.0 / norm3(d.xi));
  Vec3 kt = cross3(d.xi, kdir);
  d.ktilde = scale3(kt, rho / norm3(kt));

  d.h = 1.0 / std::sqrt(0.25 * dot3(k, k) + rho * rho);
  d.zeta = scale3(add3(scale3(k, 0.5), d.ktilde), d.h);
  d.zeta_tilde = scale3(add3(scale3(k, 0.5), scale3(d.ktilde, -1.0)), d.h);
  return d;
}

ComplexField conjugated_apply(const ComplexField& w, double h, const Vec3& xi, const Field* q) {
  if (w.carrier != Carrier::box) throw InvalidArgument("conjugated_apply: field must live on the box");
  const Grid& g = w.grid;
  const auto& m = g.interior_map(Carrier::box);
  const auto qbox = extend_to_box(g, q);
  ComplexField out = w;  // pass-through boundary rows
  const double s = g.spacing();
  const double h2_s2 = h * h / (s * s);
  const double h_s = h / s;
  const int n = g.dim();
  for (std::size_t dof = 0; dof < m.flat_of_dof.size(); ++dof) {
    const std::size_t f = m.flat_of_dof[dof];
    C acc = static_cast<double>(2 * n) * h2_s2 * w.values[f];
    for (int a = 0; a < n; ++a) {
      const long lo = m.nbr[dof][2 * a];
      const long hi = m.nbr[dof][2 * a + 1];
      const std::size_t flo = lo >= 0 ? m.flat_of_dof[lo] : static_cast<std::size_t>(-lo - 1);
      const std::size_t fhi = hi >= 0 ? m.flat_of_dof[hi] : static_cast<std::size_t>(-hi - 1);
      acc -= h2_s2 * (w.values[flo] + w.values[fhi]);
      acc += h_s * xi[a] * (w.values[fhi] - w.values[flo]);
    }
    acc += (h * h * qbox[f] - 1.0) * w.values[f];
    out.values[f] = acc;
  }
  return out;
}

namespace {

// Rectangular conjugated system: one equation per interior box node, one
// unknown per box node (no boundary condition, matching the free solution of
// the solvability argument). Coefficients are real; only data are complex.
struct ConjugatedSystem {
  const Grid& g;
  std::vector<double> qbox;
  double h, h_s, h2_s2, diag0;
  Vec3 xi;
  std::size_t rows, cols;

  ConjugatedSystem(const Grid& grid, const Field& q, double h_, const Vec3& xi_)
      : g(grid), qbox(extend_to_box(grid, &q)), h(h_), xi(xi_) {
    const double s = g.spacing();
    h_s = h / s;
    h2_s2 = h * h / (s * s);
    diag0 = 2 * g.dim() * h2_s2 - 1.0;
    rows = g.interior_map(Carrier::box).flat_of_dof.size();
    cols = g.point_count(Carrier::box);
  }

  // y = P w, rows over interior nodes reading all box values
  void apply(const std::vector<C>& w, std::vector<C>& y) const {
    const auto& m = g.interior_map(Carrier::box);
    y.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t f = m.flat_of_dof[i];
      C acc = (diag0 + h * h * qbox[f]) * w[f];
      for (int a = 0; a < g.dim(); ++a) {
        const long lo = m.nbr[i][2 * a];
        const long hi = m.nbr[i][2 * a + 1];
        const std::size_t flo = lo >= 0 ? m.flat_of_dof[lo] : static_cast<std::size_t>(-lo - 1);
        const std::size_t fhi = hi >= 0 ? m.flat_of_dof[hi] : static_cast<std::size_t>(-hi - 1);
        acc += (-h2_s2 - h_s * xi[a]) * w[flo];
        acc += (-h2_s2 + h_s * xi[a]) * w[fhi];
      }
      y[i] = acc;
    }
  }

  // w = P^T z, scattering interior multipliers onto all box nodes
  void apply_transpose(const std::vector<C>& z, std::vector<C>& w) const {
    const auto& m = g.interior_map(Carrier::box);
    w.assign(cols, C(0.0));
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t f = m.flat_of_dof[i];
      w[f] += (diag0 + h * h * qbox[f]) * z[i];
      for (int a = 0; a < g.dim(); ++a) {
        const long lo = m.nbr[i][2 * a];
        const long hi = m.nbr[i][2 * a + 1];
        const std::size_t flo = lo >= 0 ? m.flat_of_dof[lo] : static_cast<std::size_t>(-lo - 1);
        const std::size_t fhi = hi >= 0 ? m.flat_of_dof[hi] : static_cast<std::size_t>(-hi - 1);
        w[flo] += (-h2_s2 - h_s * xi[a]) * z[i];
        w[fhi] += (-h2_s2 + h_s * xi[a]) * z[i];
      }
    }
  }
};

}  // namespace

ComplexField cgo_remainder(const Field& q, const CgoDirections& dirs, CgoSign sign,
                           const SolveOptions& opts, double* linear_residual) {
  const Grid& g = q.grid;
  if (g.dim() != 3) throw InvalidArgument("cgo_remainder: reconstruction requires n = 3");
  const double h = dirs.h;
  if (h > dirs.h0 * (1.0 + 1e-12))
    throw InvalidArgument("cgo_remainder: h above the Carleman gate h_0");
  if (g.spacing() > h / 4.0 + 1e-15)
    throw ResolutionError("cgo_remainder: spacing > h/4, oscillatory phase unresolved");

  const Vec3 xi = sign == CgoSign::plus ? dirs.xi : scale3(dirs.xi, -1.0);
  const Vec3 zeta = sign == CgoSign::plus ? dirs.zeta : dirs.zeta_tilde;
  const Vec3 xc = omega_center(g);
  const int n = g.dim();

  const ConjugatedSystem P(g, q, h, xi);
  const auto& m = g.interior_map(Carrier::box);
  std::vector<C> rhs(P.rows, C(0.0));
  double rhs_norm2 = 0.0;
  for (std::size_t i = 0; i < P.rows; ++i) {
    const std::size_t f = m.flat_of_dof[i];
    const double qv = P.qbox[f];
    if (qv == 0.0) continue;
    const Vec3 xyz = g.coords(Carrier::box, f);
    double phase = 0.0;
    for (int a = 0; a < n; ++a) phase += (xyz[a] - xc[a]) * zeta[a];
    rhs[i] = -h * h * qv * std::exp(C(0.0, -phase / h));
    rhs_norm2 += std::norm(rhs[i]);
  }

  ComplexField v(g, Carrier::box);
  if (rhs_norm2 == 0.0) {
    if (linear_residual) *linear_residual = 0.0;
    return v;  // zero right-hand side, exact zero remainder
  }

  // Minimal-norm solution w = P^T (P P^T)^{-1} rhs: the discrete counterpart
  // of the duality construction, for which the Carleman bound
  // ||w|| <= (ratio/h) ||rhs|| transfers through the adjoint inequality.
  // (The Dirichlet solution instead picks up an h-independent component on
  // the characteristic fiber orthogonal to xi and zeta.)
  std::vector<C> jacobi(P.rows);
  {
    const double off2 = [&] {
      double acc = 0.0;
      for (int a = 0; a < n; ++a) {
        acc += (P.h2_s2 + P.h_s * xi[a]) * (P.h2_s2 + P.h_s * xi[a]);
        acc += (P.h2_s2 - P.h_s * xi[a]) * (P.h2_s2 - P.h_s * xi[a]);
      }
      return acc;
    }();
    for (std::size_t i = 0; i < P.rows; ++i) {
      const double d = P.diag0 + h * h * P.qbox[m.flat_of_dof[i]];
      jacobi[i] = 1.0 / C(d * d + off2);
    }
  }
  ComplexOp normal_op = [&](const std::vector<C>& z, std::vector<C>& y) {
    std::vector<C> w;
    P.apply_transpose(z, w);
    P.apply(w, y);
  };

  // Hermitian positive definite normal equations: Jacobi CG with iterative
  // refinement (the squared conditioning would otherwise cap the reachable
  // residual near eps * cond).
  auto cdot = [](const std::vector<C>& a, const std::vector<C>& b) {
    C acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
    return acc;
  };
  // Each pass aims at the remaining reduction and bails out on rounding
  // stalls, which the outer refinement then clears with a fresh residual.
  auto cg_pass = [&](const std::vector<C>& b, std::vector<C>& zout, double tol) {
    std::vector<C> r = b, zprec(P.rows), p(P.rows), Ap(P.rows);
    zout.assign(P.rows, C(0.0));
    double bn = 0.0;
    for (const C& c : b) bn += std::norm(c);
    bn = std::sqrt(bn);
    if (bn == 0.0) return 0;
    for (std::size_t i = 0; i < P.rows; ++i) zprec[i] = r[i] * jacobi[i];
    p = zprec;
    C rz = cdot(r, zprec);
    int used = 0;
    double best = 1.0;
    int since_improvement = 0;
    for (int it = 0; it < opts.max_linear_iter; ++it) {
      normal_op(p, Ap);
      const C alpha = rz / cdot(p, Ap);
      for (std::size_t i = 0; i < P.rows; ++i) {
        zout[i] += alpha * p[i];
        r[i] -= alpha * Ap[i];
      }
      used = it + 1;
      double rn = 0.0;
      for (const C& c : r) rn += std::norm(c);
      const double rel = std::sqrt(rn) / bn;
      if (std::getenv("DTNLAB_CG_DEBUG") && it % 500 == 0)
        std::fprintf(stderr, "cgne it=%d rel=%.3e tol=%.1e\n", it, rel, tol);
      if (rel <= tol) break;
      if (rel < 0.98 * best) {
        best = rel;
        since_improvement = 0;
      } else if (++since_improvement > 80) {
        break;  // rounding stall
      }
      for (std::size_t i = 0; i < P.rows; ++i) zprec[i] = r[i] * jacobi[i];
      const C rz_new = cdot(r, zprec);
      const C beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < P.rows; ++i) p[i] = zprec[i] + beta * p[i];
    }
    return used;
  };

  const double bnorm = std::sqrt(rhs_norm2);
  std::vector<C> z(P.rows, C(0.0));
  IterInfo info;
  std::vector<C> resid = rhs, dz, w_tmp, y_tmp;
  double current_rel = 1.0;
  for (int pass = 0; pass < 5 && !info.converged; ++pass) {
    info.iterations += cg_pass(resid, dz, 0.5 * opts.linear_tol / current_rel);
    for (std::size_t i = 0; i < P.rows; ++i) z[i] += dz[i];
    P.apply_transpose(z, w_tmp);
    P.apply(w_tmp, y_tmp);
    double rn = 0.0;
    for (std::size_t i = 0; i < P.rows; ++i) {
      resid[i] = rhs[i] - y_tmp[i];
      rn += std::norm(resid[i]);
    }
    info.rel_residual = std::sqrt(rn) / bnorm;
    current_rel = std::max(info.rel_residual, 1e-300);
    info.converged = info.rel_residual <= opts.linear_tol;
  }

  if (!info.converged) {
    if (g.axis_points() > 33)
      throw NonConvergence("cgo_remainder: normal-equation CG stalled", info.rel_residual);
    // Direct fallback on the coarse grids: factor P P^T once.
    std::vector<Eigen::Triplet<double>> trip;
    const std::size_t rows = P.rows;
    std::vector<std::vector<std::pair<std::size_t, double>>> prows(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      const std::size_t f = m.flat_of_dof[i];
      prows[i].emplace_back(f, P.diag0 + h * h * P.qbox[f]);
      for (int a = 0; a < n; ++a) {
        const long lo = m.nbr[i][2 * a];
        const long hi = m.nbr[i][2 * a + 1];
        const std::size_t flo = lo >= 0 ? m.flat_of_dof[lo] : static_cast<std::size_t>(-lo - 1);
        const std::size_t fhi = hi >= 0 ? m.flat_of_dof[hi] : static_cast<std::size_t>(-hi - 1);
        prows[i].emplace_back(flo, -P.h2_s2 - P.h_s * xi[a]);
        prows[i].emplace_back(fhi, -P.h2_s2 + P.h_s * xi[a]);
      }
    }
    Eigen::SparseMatrix<double> Pm(rows, P.cols);
    for (std::size_t i = 0; i < rows; ++i)
      for (const auto& [col, val] : prows[i]) trip.emplace_back(i, col, val);
    Pm.setFromTriplets(trip.begin(), trip.end());
    const Eigen::SparseMatrix<double> Nm = (Pm * Eigen::SparseMatrix<double>(Pm.transpose())).pruned();
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(Nm);
    if (ldlt.info() != Eigen::Success)
      throw NonConvergence("cgo_remainder: direct fallback failed", info.rel_residual);
    Eigen::VectorXd re(rows), im(rows);
    for (std::size_t i = 0; i < rows; ++i) {
      re(i) = rhs[i].real();
      im(i) = rhs[i].imag();
    }
    const Eigen::VectorXd zr = ldlt.solve(re);
    const Eigen::VectorXd zi = ldlt.solve(im);
    for (std::size_t i = 0; i < rows; ++i) z[i] = C(zr(i), zi(i));
    std::vector<C> y;
    normal_op(z, y);
    double rn = 0.0;
    for (std::size_t i = 0; i < rows; ++i) rn += std::norm(y[i] - rhs[i]);
    info.rel_residual = std::sqrt(rn) / bnorm;
  }
  if (linear_residual) *linear_residual = info.rel_residual;

  std::vector<C> w;
  P.apply_transpose(z, w);
  for (std::size_t f = 0; f < P.cols; ++f) {
    const Vec3 xyz = g.coords(Carrier::box, f);
    double phase = 0.0;
    for (int a = 0; a < n; ++a) phase += (xyz[a] - xc[a]) * zeta[a];
    v.values[f] = std::exp(C(0.0, phase / h)) * w[f];
  }
  return v;
}

CgoSolution build_cgo_solution(const Field& q, const CgoDirections& dirs, CgoSign sign,
                               const SolveOptions& opts) {
  const Grid& g = q.grid;
  CgoSolution sol;
  sol.dirs = dirs;
  sol.sign = sign;
  sol.v = cgo_remainder(q, dirs, sign, opts, &sol.linear_residual);

  const Vec3 xi = sign == CgoSign::plus ? dirs.xi : scale3(dirs.xi, -1.0);
  const Vec3 zeta = sign == CgoSign::plus ? dirs.zeta : dirs.zeta_tilde;
  const Vec3 xc = omega_center(g);
  const double h = dirs.h;

  sol.u = ComplexField(g, Carrier::box);
  for (std::size_t f = 0; f < sol.u.size(); ++f) {
    const Vec3 xyz = g.coords(Carrier::box, f);
    double re = 0.0, im = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      re += (xyz[a] - xc[a]) * xi[a];
      im += (xyz[a] - xc[a]) * zeta[a];
    }
    sol.u.values[f] = std::exp(C(-re / h, -im / h)) * (1.0 + sol.v.values[f]);
  }

  // Restriction of v to Omega for the smallness diagnostics.
  const int pad = g.pad();
  Field dummy(g, Carrier::omega);
  double acc = 0.0;
  const auto& vw = g.volume_weights(Carrier::omega);
  ComplexField u_omega(g, Carrier::omega);
  for (std::size_t f = 0; f < dummy.size(); ++f) {
    auto idx = g.idx(Carrier::omega, f);
    for (int a = 0; a < g.dim(); ++a) idx[a] += pad;
    const std::size_t bf = g.flat(Carrier::box, idx);
    acc += vw[f] * std::norm(sol.v.values[bf]);
    u_omega.values[f] = sol.u.values[bf];
  }
  sol.v_l2_omega = std::sqrt(acc);
  sol.trace_gamma = trace(u_omega);
  sol.neumann_gamma = normal_derivative(u_omega);
  return sol;
}

double carleman_ratio(const Field& q, double h, const Vec3& xi, const ComplexField& u) {
  const ComplexField Pu = conjugated_apply(u, h, xi, &q);
  const double nu = l2_norm(u);
  const double npu = l2_norm(Pu);
  if (npu == 0.0) {
    if (nu == 0.0) return 0.0;
    throw NonConvergence("carleman_ratio: P_h u vanished for nonzero u", nu);
  }
  return h * nu / npu;
}

ComplexField random_carleman_field(const Grid& g, const Vec3& xi, double h, std::uint64_t seed,
                                   bool modulated) {
  const int A = g.box_axis_points();
  const int n = g.dim();
  ComplexField u(g, Carrier::box);

  // random transverse unit direction orthogonal to xi
  Vec3 zp{0, 0, 0};
  {
    Vec3 r{uniform_pm1(hash_mix(seed, 11)), uniform_pm1(hash_mix(seed, 12)),
           uniform_pm1(hash_mix(seed, 13))};
    const double rx = dot3(r, xi);
    for (int a = 0; a < 3; ++a) r[a] -= rx * xi[a];
    const double nr = norm3(r);
    zp = nr > 1e-9 ? scale3(r, 1.0 / nr) : cross3(xi, Vec3{1, 0, 0});
    const double nz = norm3(zp);
    zp = scale3(zp, 1.0 / std::max(nz, 1e-300));
  }

  constexpr int terms = 6;
  int freq[terms][3];
  double amp[terms];
  for (int t = 0; t < terms; ++t) {
    for (int a = 0; a < 3; ++a)
      freq[t][a] = 1 + static_cast<int>(uniform01(hash_mix(seed, 100 + t, a)) * 4.0);
    amp[t] = uniform_pm1(hash_mix(seed, 200 + t));
  }

  const double span = (A - 1) * g.spacing();
  for (std::size_t f = 0; f < u.size(); ++f) {
    const auto idx = g.idx(Carrier::box, f);
    bool outer = false;
    for (int a = 0; a < n; ++a)
      if (idx[a] < 2 || idx[a] > A - 3) outer = true;
    if (outer) continue;  // compact support: zero on the two outermost layers
    const Vec3 xyz = g.coords(Carrier::box, f);
    double hat[3] = {0, 0, 0};
    for (int a = 0; a < n; ++a) hat[a] = (idx[a]) / static_cast<double>(A - 1);
    double env = 0.0;
    for (int t = 0; t < terms; ++t) {
      double p = amp[t];
      for (int a = 0; a < n; ++a) p *= std::sin(M_PI * freq[t][a] * hat[a]);
      env += p;
    }
    double taper = 1.0;
    for (int a = 0; a < n; ++a) {
      const double sn = std::sin(M_PI * hat[a]);
      taper *= sn * sn;
    }
    C val = env * taper;
    if (modulated) {
      double phase = 0.0;
      for (int a = 0; a < n; ++a) phase += xyz[a] * zp[a];
      val *= std::exp(C(0.0, -phase / h));
    }
    u.values[f] = val;
  }
  (void)span;
  return u;
}

CgoCalibration calibrate_cgo(const Grid& coarse, double M, std::uint64_t seed,
                             const SolveOptions& opts, int ratio_samples) {
  CgoCalibration cal;
  const double s = coarse.spacing();
  const std::vector<double> h_set = {4.2 * s, 5.0 * s, 6.4 * s, 8.0 * s};

  // Worst Carleman ratio over the random ensemble (half of it modulated into
  // the near-kernel regime), with a constant potential at the bound.
  Field qM(coarse, Carrier::omega, M);
  const Vec3 xi{0.0, 0.0, 1.0};
  double max_ratio = 0.0;
  for (int i = 0; i < ratio_samples; ++i) {
    const double h = h_set[i % h_set.size()];
    const ComplexField u =
        random_carleman_field(coarse, xi, h, hash_mix(seed, 1, i), i % 2 == 0);
    max_ratio = std::max(max_ratio, carleman_ratio(qM, h, xi, u));
  }
  cal.max_ratio = max_ratio;

  // Diagnostic: worst remainder-to-h ratio at unit potential bound (the
  // minimal-norm construction keeps this below the Carleman ratio times the
  // L2 mass of the potential).
  double max_rem = 0.0;
  std::vector<Field> pots;
  pots.push_back(Field(coarse, Carrier::omega, 1.0));
  Field qcos = Field::from_function(coarse, Carrier::omega, [](const Vec3& x) {
    return std::cos(2.0 * M_PI * x[0]) * std::cos(M_PI * x[1]);
  });
  pots.push_back(qcos);
  for (const Field& q : pots) {
    for (double h : h_set) {
      CgoDirections d;
      d.h = h;
      d.h0 = h;  // calibration runs bypass the gate; rho is implied
      d.M = 1.0;
      d.rho = std::sqrt(1.0 / (h * h));
      d.xi = xi;
      d.ktilde = {0.0, d.rho, 0.0};
      d.zeta = {0.0, 1.0, 0.0};
      d.zeta_tilde = {0.0, -1.0, 0.0};
      CgoSolution sol = build_cgo_solution(q, d, CgoSign::plus, opts);
      max_rem = std::max(max_rem, sol.v_l2_omega / h);
    }
  }
  cal.max_remainder_over_h = max_rem;
  // Domain constant with 10% headroom over both unit-bound diagnostics.
  cal.c_omega_est = 2.0 / (1.1 * std::max(max_ratio, max_rem));

  // kappa from the growth of the uncentered trace-norm product of a pure
  // phase pair, fitted against 1/h.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int pts = static_cast<int>(h_set.size());
  for (double h : h_set) {
    double plus = 0.0, minus = 0.0;
    const auto& gw = coarse.face_weights();
    for (std::size_t b = 0; b < coarse.boundary_count(); ++b) {
      const Vec3 x = coarse.coords(Carrier::omega, coarse.boundary_node(b));
      const double e = x[2] / h;  // xi = e3
      plus += gw[b] * std::exp(-2.0 * e);
      minus += gw[b] * std::exp(2.0 * e);
    }
    const double xv = 1.0 / h;
    const double yv = 0.5 * (std::log(plus) + std::log(minus));  // ln(|g| |gt|)
    sx += xv;
    sy += yv;
    sxx += xv * xv;
    sxy += xv * yv;
  }
  cal.kappa_est = (pts * sxy - sx * sy) / (pts * sxx - sx * sx);
  return cal;
}

}  // namespace dtnlab
