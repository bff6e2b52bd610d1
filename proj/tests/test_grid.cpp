#include <cmath>

#include "doctest.h"
#include "dtnlab/grid.hpp"
#include "dtnlab/rng.hpp"

using namespace dtnlab;

namespace {

// Independent oracle: count lattice points of [0,N-1]^n with at least one
// coordinate on a face.
std::size_t count_boundary_nodes(int n, int N) {
  std::size_t count = 0;
  const int loops = n == 3 ? N : 1;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j)
      for (int k = 0; k < loops; ++k) {
        bool on = i == 0 || i == N - 1 || j == 0 || j == N - 1;
        if (n == 3) on = on || k == 0 || k == N - 1;
        if (on) ++count;
      }
  return count;
}

}  // namespace

TEST_CASE("grid construction and counting") {
  const Grid g2 = Grid::build(2, 17, 4);
  CHECK(g2.interior_count(Carrier::omega) == 15 * 15);
  CHECK(g2.boundary_count() == 64);
  CHECK(g2.boundary_count() == count_boundary_nodes(2, 17));
  CHECK(g2.spacing() == doctest::Approx(1.0 / 16).epsilon(1e-15));

  const Grid g3 = Grid::build(3, 17, 4);
  CHECK(g3.boundary_count() == 1538);
  CHECK(g3.boundary_count() == count_boundary_nodes(3, 17));

  CHECK_THROWS_AS(Grid::build(2, 16, 4), InvalidArgument);
  CHECK_THROWS_AS(Grid::build(2, 17, 0), InvalidArgument);
  CHECK_THROWS_AS(Grid::build(4, 17, 4), InvalidArgument);
  CHECK_THROWS_AS(Grid::build(2, 15, 3), InvalidArgument);
}

TEST_CASE("every lattice point classified exactly once") {
  const Grid g = Grid::build(2, 17, 4);
  std::size_t interior = 0, boundary = 0;
  for (std::size_t f = 0; f < g.point_count(Carrier::omega); ++f) {
    const bool on_gamma = g.boundary_index_of(f) >= 0;
    CHECK(on_gamma == g.is_carrier_boundary(Carrier::omega, f));
    on_gamma ? ++boundary : ++interior;
  }
  CHECK(interior == g.interior_count(Carrier::omega));
  CHECK(boundary == g.boundary_count());
  // padding nodes of the box are neither Omega-interior nor on Gamma
  CHECK(g.point_count(Carrier::box) == 25 * 25);
}

TEST_CASE("face weights sum to |Gamma| = 2n") {
  for (int n : {2, 3}) {
    const Grid g = Grid::build(n, 17, 4);
    double total = 0.0;
    for (double w : g.face_weights()) total += w;
    CHECK(total == doctest::Approx(2.0 * n).epsilon(1e-12));
  }
}

TEST_CASE("laplacian stencil on closed forms") {
  const Grid g = Grid::build(2, 33, 8);

  const Field ones(g, Carrier::omega, 1.0);
  const Field l1 = laplacian_apply(ones);
  for (std::size_t f = 0; f < l1.size(); ++f)
    if (!g.is_carrier_boundary(Carrier::omega, f)) CHECK(l1.values[f] == doctest::Approx(0.0).epsilon(1e-12));

  const Field affine = Field::from_function(g, Carrier::omega, [](const Vec3& x) { return x[0]; });
  const Field la = laplacian_apply(affine);
  for (std::size_t f = 0; f < la.size(); ++f)
    if (!g.is_carrier_boundary(Carrier::omega, f)) CHECK(std::abs(la.values[f]) < 1e-11);

  const Field prod = Field::from_function(g, Carrier::omega, [](const Vec3& x) {
    return std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]);
  });
  const Field lp = laplacian_apply(prod);
  double worst = 0.0;
  for (std::size_t f = 0; f < lp.size(); ++f) {
    if (g.is_carrier_boundary(Carrier::omega, f)) continue;
    const double expect = 2.0 * M_PI * M_PI * prod.values[f];
    if (std::abs(prod.values[f]) > 0.1)
      worst = std::max(worst, std::abs(lp.values[f] - expect) / std::abs(expect));
  }
  CHECK(worst <= 0.01);
}

TEST_CASE("normal derivative on closed forms") {
  const Grid g = Grid::build(2, 17, 4);

  const BoundaryField d1 = normal_derivative(Field(g, Carrier::omega, 1.0));
  for (double v : d1.values) CHECK(std::abs(v) < 1e-12);

  const Field x1 = Field::from_function(g, Carrier::omega, [](const Vec3& x) { return x[0]; });
  const BoundaryField dx = normal_derivative(x1);
  for (std::size_t b = 0; b < dx.size(); ++b) {
    const int face = g.assigned_face(b);
    const double expect = face == 0 ? -1.0 : face == 1 ? 1.0 : 0.0;
    CHECK(dx.values[b] == doctest::Approx(expect).epsilon(1e-10));
  }

  // harmonic closed form, flux through the top face within 1% at N = 65
  const Grid gf = Grid::build(2, 65, 16);
  const double sh = std::sinh(M_PI);
  const Field h = Field::from_function(gf, Carrier::omega, [&](const Vec3& x) {
    return std::sin(M_PI * x[0]) * std::sinh(M_PI * x[1]) / sh;
  });
  const BoundaryField dh = normal_derivative(h);
  double worst = 0.0;
  for (std::size_t b = 0; b < dh.size(); ++b) {
    if (gf.assigned_face(b) != 3) continue;  // face x2 = 1
    const Vec3 x = gf.coords(Carrier::omega, gf.boundary_node(b));
    const double expect = M_PI * std::sin(M_PI * x[0]) * std::cosh(M_PI) / sh;
    if (std::abs(expect) > 0.3)
      worst = std::max(worst, std::abs(dh.values[b] - expect) / std::abs(expect));
  }
  CHECK(worst <= 0.01);
}

TEST_CASE("first eigenvalue against closed forms") {
  const Grid g17 = Grid::build(2, 17, 4);
  CHECK(g17.first_eigenvalue() ==
        doctest::Approx(Grid::dirichlet_lambda1_exact(2, 17)).epsilon(1e-10));

  const Grid g65 = Grid::build(2, 65, 16);
  CHECK(g65.first_eigenvalue() == doctest::Approx(2.0 * M_PI * M_PI).epsilon(1e-3));

  const Grid g3 = Grid::build(3, 33, 8);
  CHECK(g3.first_eigenvalue() == doctest::Approx(3.0 * M_PI * M_PI).epsilon(5e-3));
}

TEST_CASE("eigenvalue monotone in N toward the analytic value") {
  double prev = 0.0;
  for (int N : {17, 33, 65}) {
    const Grid g = Grid::build(2, N, Grid::default_pad(N));
    const double lam = g.first_eigenvalue();
    CHECK(lam >= prev);
    CHECK(lam <= 2.0 * M_PI * M_PI + 1e-9);
    prev = lam;
  }
}

TEST_CASE("quadrature closed forms") {
  const Grid g = Grid::build(2, 17, 4);
  const Field ones(g, Carrier::omega, 1.0);
  CHECK(inner_product(ones, ones) == doctest::Approx(1.0).epsilon(1e-12));

  const BoundaryField bones(g, 1.0);
  CHECK(surface_integral(bones, bones) == doctest::Approx(4.0).epsilon(1e-12));

  const Grid gf = Grid::build(2, 65, 16);
  const Field s2 = Field::from_function(gf, Carrier::omega, [](const Vec3& x) {
    return std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]);
  });
  CHECK(inner_product(s2, s2) == doctest::Approx(0.25).epsilon(1e-4));
}

TEST_CASE("inner product conjugate-linear in the second argument") {
  const Grid g = Grid::build(2, 17, 4);
  ComplexField u(g, Carrier::omega), w(g, Carrier::omega);
  Rng rng(7);
  for (std::size_t i = 0; i < u.size(); ++i) {
    u.values[i] = {rng.pm1(), rng.pm1()};
    w.values[i] = {rng.pm1(), rng.pm1()};
  }
  const std::complex<double> alpha{0.3, -1.2};
  ComplexField wa = w;
  for (auto& v : wa.values) v *= alpha;
  CHECK(std::abs(inner_product(u, wa) - std::conj(alpha) * inner_product(u, w)) < 1e-12);
}

TEST_CASE("discrete Green identities") {
  Rng rng(42);
  auto random_smooth = [&](const Grid& g, bool zero_trace) {
    const double a1 = rng.pm1(), a2 = rng.pm1(), a3 = rng.pm1();
    return Field::from_function(g, Carrier::omega, [=](const Vec3& x) {
      double v = a1 * std::sin(M_PI * x[0]) * std::sin(M_PI * x[1]) +
                 a2 * std::sin(2 * M_PI * x[0]) * std::sin(M_PI * x[1]);
      if (!zero_trace) v += a3 * (x[0] * x[0] + 0.5 * x[1]);
      return v;
    });
  };

  // symmetry on fields vanishing on Gamma
  const Grid g = Grid::build(2, 33, 8);
  for (int rep = 0; rep < 5; ++rep) {
    const Field u = random_smooth(g, true);
    const Field w = random_smooth(g, true);
    const double lhs = inner_product(laplacian_apply(u), w);
    const double rhs = inner_product(u, laplacian_apply(w));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * l2_norm(u) * l2_norm(w));
  }

  // boundary form of the identity: first-order in the spacing, shrinking
  // under refinement
  double mismatch_prev = -1.0;
  for (int N : {17, 33, 65}) {
    const Grid gn = Grid::build(2, N, Grid::default_pad(N));
    const Field u = Field::from_function(gn, Carrier::omega, [](const Vec3& x) {
      return std::cos(M_PI * x[0]) * (0.5 + 0.3 * x[1] * x[1]);
    });
    const Field w = Field::from_function(gn, Carrier::omega, [](const Vec3& x) {
      return std::sin(M_PI * x[1]) + 0.25 * x[0];
    });
    const double lhs = inner_product(laplacian_apply(u), w) - inner_product(u, laplacian_apply(w));
    const double rhs = surface_integral(normal_derivative(w), trace(u)) -
                       surface_integral(normal_derivative(u), trace(w));
    const double mismatch = std::abs(lhs - rhs) / (l2_norm(u) * l2_norm(w));
    CHECK(mismatch <= 8.0 * gn.spacing());
    if (mismatch_prev >= 0.0) CHECK(mismatch < 0.6 * mismatch_prev);
    mismatch_prev = mismatch;
  }
}
