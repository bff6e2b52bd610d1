#include <cmath>

#include "doctest.h"
#include "dtnlab/cgo.hpp"
#include "dtnlab/rng.hpp"

using namespace dtnlab;

namespace {
using C = std::complex<double>;

double n3(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }
double d3(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
}  // namespace

TEST_CASE("direction construction against the worked mode") {
  // k = (2 pi, 0, 0), rho = 10, M = 5, c_omega_est = 1: h0 = 0.1 and
  // h = 1/sqrt(pi^2 + 100) passes the gate.
  const Vec3 k{2.0 * M_PI, 0.0, 0.0};
  const CgoDirections d = cgo_directions(k, 10.0, 5.0, 1.0);
  CHECK(d.xi[0] == doctest::Approx(0.0));
  CHECK(d.xi[1] == doctest::Approx(0.0));
  CHECK(d.xi[2] == doctest::Approx(1.0));
  CHECK(d.ktilde[1] == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(d.h == doctest::Approx(1.0 / std::sqrt(M_PI * M_PI + 100.0)).epsilon(1e-14));
  CHECK(d.zeta[0] == doctest::Approx(d.h * M_PI).epsilon(1e-13));
  CHECK(d.zeta[1] == doctest::Approx(d.h * 10.0).epsilon(1e-13));
  CHECK(n3(d.zeta) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(d.h <= d.h0);

  // rejection below the regime floor
  CHECK_THROWS_AS(cgo_directions(k, 9.0, 5.0, 1.0), InvalidArgument);
}

TEST_CASE("direction algebra on random modes") {
  Rng rng(101);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 k{rng.uniform(-30, 30), rng.uniform(-30, 30), rng.uniform(-30, 30)};
    const double rho = rng.uniform(1.0, 50.0);
    const CgoDirections d = cgo_directions(k, rho, 1.0, 2.0);
    CHECK(std::abs(n3(d.zeta) - 1.0) <= 1e-12);
    CHECK(std::abs(n3(d.zeta_tilde) - 1.0) <= 1e-12);
    CHECK(std::abs(d3(d.zeta, d.xi)) <= 1e-12);
    CHECK(std::abs(d3(d.zeta_tilde, d.xi)) <= 1e-12);
    for (int a = 0; a < 3; ++a)
      CHECK(std::abs(d.zeta[a] + d.zeta_tilde[a] - d.h * d.k[a]) <= 1e-12);
  }
}

TEST_CASE("conjugated operator on closed forms") {
  const Grid g = Grid::build(3, 17, 4);
  const double h = 0.3;
  const Vec3 xi{0.0, 0.0, 1.0};

  // w = 1, q = 0: P_h w = -1 at interior nodes
  const ComplexField ones(g, Carrier::box, 1.0);
  const ComplexField p0 = conjugated_apply(ones, h, xi, nullptr);
  for (std::size_t f = 0; f < p0.size(); ++f)
    if (!g.is_carrier_boundary(Carrier::box, f))
      CHECK(std::abs(p0.values[f] - C(-1.0)) < 1e-12);

  // w = 1, q = m: -1 + h^2 m on closed Omega, -1 on the padding
  const double m = 2.0;
  const Field qm(g, Carrier::omega, m);
  const ComplexField pm = conjugated_apply(ones, h, xi, &qm);
  for (std::size_t f = 0; f < pm.size(); ++f) {
    if (g.is_carrier_boundary(Carrier::box, f)) continue;
    const Vec3 x = g.coords(Carrier::box, f);
    const bool inside = x[0] >= -1e-12 && x[0] <= 1 + 1e-12 && x[1] >= -1e-12 &&
                        x[1] <= 1 + 1e-12 && x[2] >= -1e-12 && x[2] <= 1 + 1e-12;
    const double expect = inside ? -1.0 + h * h * m : -1.0;
    CHECK(std::abs(pm.values[f] - C(expect)) < 1e-12);
  }

  // oscillatory phase: in the kernel of the continuum symbol, discrete defect
  // O(spacing^2 / h^2)
  const Vec3 zeta{0.0, 1.0, 0.0};
  const ComplexField phase = ComplexField::from_function(g, Carrier::box, [&](const Vec3& x) {
    return std::exp(C(0.0, -(x[0] * zeta[0] + x[1] * zeta[1] + x[2] * zeta[2]) / h));
  });
  const ComplexField pp = conjugated_apply(phase, h, xi, nullptr);
  double worst = 0.0;
  for (std::size_t f = 0; f < pp.size(); ++f)
    if (!g.is_carrier_boundary(Carrier::box, f)) worst = std::max(worst, std::abs(pp.values[f]));
  const double defect_scale = g.spacing() * g.spacing() / (h * h);
  CHECK(worst <= 1.0 * defect_scale);
  CHECK(worst >= 1e-3 * defect_scale);  // genuinely second order, not exact
}

TEST_CASE("remainder vanishes for zero potential") {
  const Grid g = Grid::build(3, 17, 4);
  const Field q0(g, Carrier::omega, 0.0);
  const CgoDirections d = cgo_directions(Vec3{0, 0, 0}, 1.0 / 0.3, 1.0, 2.0);
  double resid = 0.0;
  const ComplexField v = cgo_remainder(q0, d, CgoSign::plus, {}, &resid);
  CHECK(l2_norm(v) <= 1e-12);
}

TEST_CASE("remainder smallness and monotone decay in h") {
  // The coarse grid only resolves the preasymptotic part of the decay; the
  // slope criterion lives at N = 33 in the acceptance suite. Here: the
  // remainder is monotone in h and obeys the Carleman-type bound.
  const Grid g = Grid::build(3, 17, 4);
  const double M = 1.0;
  const double c_est = 2.0;  // h0 = 1, rho0 = 1
  const Field qm(g, Carrier::omega, M);

  double prev = std::numeric_limits<double>::infinity();
  for (double h : {0.5, 0.375, 0.3, 0.25}) {
    const CgoDirections d = cgo_directions(Vec3{0, 0, 0}, 1.0 / h, M, c_est);
    const CgoSolution sol = build_cgo_solution(qm, d, CgoSign::plus);
    CHECK(sol.linear_residual <= 1e-11);
    CHECK(sol.v_l2_omega <= (2.0 / c_est) * d.h);
    CHECK(sol.v_l2_omega < prev);
    prev = sol.v_l2_omega;
  }
}

TEST_CASE("assembled solution certified by the conjugated identity") {
  const Grid g = Grid::build(3, 17, 4);
  Rng rng(3);
  Field q(g, Carrier::omega);
  for (std::size_t i = 0; i < q.size(); ++i) {
    const Vec3 x = g.coords(Carrier::omega, i);
    q.values[i] = 5.0 * std::cos(M_PI * x[0]) * std::cos(2 * M_PI * x[1]) * std::cos(M_PI * x[2]);
  }
  const double h = 0.3;
  const CgoDirections d = cgo_directions(Vec3{0, 0, 0}, 1.0 / h, 5.0, 2.0 * 5.0 * h);
  const CgoSolution sol = build_cgo_solution(q, d, CgoSign::plus);

  // recompute the conjugated residual independently: w = e^{-i(x-xc).zeta/h} v
  const Vec3 xc{0.5, 0.5, 0.5};
  ComplexField w(g, Carrier::box);
  ComplexField rhs(g, Carrier::box);
  const int pad = g.pad();
  for (std::size_t f = 0; f < w.size(); ++f) {
    const Vec3 x = g.coords(Carrier::box, f);
    double phase = 0.0;
    for (int a = 0; a < 3; ++a) phase += (x[a] - xc[a]) * d.zeta[a];
    const C osc = std::exp(C(0.0, -phase / h));
    w.values[f] = osc * sol.v.values[f];
    const bool inside = x[0] >= -1e-12 && x[0] <= 1 + 1e-12 && x[1] >= -1e-12 &&
                        x[1] <= 1 + 1e-12 && x[2] >= -1e-12 && x[2] <= 1 + 1e-12;
    if (inside) {
      auto idx = g.idx(Carrier::box, f);
      for (int a = 0; a < 3; ++a) idx[a] -= pad;
      rhs.values[f] = -h * h * q.values[g.flat(Carrier::omega, idx)] * osc;
    }
  }
  const ComplexField Pw = conjugated_apply(w, h, d.xi, &q);
  double rn = 0.0, bn = 0.0;
  for (std::size_t f = 0; f < w.size(); ++f) {
    if (g.is_carrier_boundary(Carrier::box, f)) continue;
    rn += std::norm(Pw.values[f] - rhs.values[f]);
    bn += std::norm(rhs.values[f]);
  }
  CHECK(std::sqrt(rn / bn) <= 1e-8);
  CHECK(sol.v_l2_omega > 0.0);
}

TEST_CASE("carleman ratio: homogeneity and regime bound") {
  const Grid g = Grid::build(3, 17, 4);
  const Field q(g, Carrier::omega, 0.0);
  const Vec3 xi{0.0, 0.0, 1.0};
  const double h = 0.3;

  const ComplexField u = random_carleman_field(g, xi, h, 7, true);
  const double r1 = carleman_ratio(q, h, xi, u);
  ComplexField u2 = u;
  for (auto& v : u2.values) v *= 2.0;
  CHECK(carleman_ratio(q, h, xi, u2) == doctest::Approx(r1).epsilon(1e-12));

  // ratio bounded as h decreases through the regime
  for (double hh : {0.5, 0.25}) {
    const ComplexField uu = random_carleman_field(g, xi, hh, 8, true);
    CHECK(carleman_ratio(q, hh, xi, uu) <= 1.0);
  }
}

TEST_CASE("calibration-then-assert protocol transfers to a finer grid") {
  const Grid coarse = Grid::build(3, 17, 4);
  const double M = 5.0;
  const CgoCalibration cal = calibrate_cgo(coarse, M, 11, {}, 80);
  CHECK(cal.c_omega_est > 0.0);
  CHECK(cal.kappa_est > 0.0);

  const Grid fine = Grid::build(3, 25, 6);
  Field qM(fine, Carrier::omega, M);
  const Vec3 xi{0.0, 0.0, 1.0};
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double h = 4.2 * fine.spacing() * (1.0 + 0.5 * (i % 3));
    const ComplexField u = random_carleman_field(fine, xi, h, hash_mix(12, i), i % 2 == 0);
    worst = std::max(worst, carleman_ratio(qM, h, xi, u));
  }
  CHECK(worst <= 1.1 * (2.0 / cal.c_omega_est));
}

TEST_CASE("resolution gate refuses unresolved phases") {
  const Grid g = Grid::build(3, 17, 4);  // spacing 1/16
  const Field q(g, Carrier::omega, 1.0);
  // h = 0.2 < 4 * spacing = 0.25
  const CgoDirections d = cgo_directions(Vec3{0, 0, 0}, 5.0, 1.0, 2.0);
  CHECK(d.h == doctest::Approx(0.2));
  CHECK_THROWS_AS(cgo_remainder(q, d, CgoSign::plus, {}), ResolutionError);
}
