#include "dtnlab/dtn.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdio>
#include <memory>

#include "dtnlab/parallel.hpp"
#include "dtnlab/rng.hpp"

namespace dtnlab {

BoundaryField dtn_semilinear(const Grid& g, const Nonlinearity& a, const BoundaryField& f,
                             const SolveOptions& opts) {
  return normal_derivative(solve_semilinear(g, a, f, opts));
}

Field linearized_potential(const Grid& g, const Nonlinearity& a, const BoundaryField& f,
                           const SolveOptions& opts) {
  const Field u = solve_semilinear(g, a, f, opts);
  Field q(g, Carrier::omega);
  for (std::size_t i = 0; i < q.size(); ++i) q.values[i] = a.deriv(u.values[i]);
  return q;
}

BoundaryField dtn_linearized(const Grid& g, const Nonlinearity& a, const BoundaryField& f,
                             const BoundaryField& h, const SolveOptions& opts) {
  const Field q = linearized_potential(g, a, f, opts);
  return normal_derivative(solve_schrodinger(g, q, h, opts, a.class_params().c));
}

BoundaryField dtn_schrodinger(const Grid& g, const Field& q, const BoundaryField& f,
                              const SolveOptions& opts, double admissible_floor) {
  return normal_derivative(solve_schrodinger(g, q, f, opts, admissible_floor));
}

ComplexBoundaryField dtn_schrodinger(const Grid& g, const Field& q, const ComplexBoundaryField& f,
                                     const SolveOptions& opts, double admissible_floor) {
  return normal_derivative(solve_schrodinger(g, q, f, opts, admissible_floor));
}

template <class T>
BoundaryFieldT<T> pairing_neumann(const Field& q, const FieldT<T>& u) {
  if (u.carrier != Carrier::omega) throw InvalidArgument("pairing_neumann: Omega field expected");
  const Grid& g = u.grid;
  const int N = g.axis_points();
  const double s = g.spacing();
  BoundaryFieldT<T> out(g);
  for (std::size_t b = 0; b < g.boundary_count(); ++b) {
    const std::size_t bf = g.boundary_node(b);
    const auto idx = g.idx(Carrier::omega, bf);
    int on_faces = 0;
    for (int a = 0; a < g.dim(); ++a)
      if (idx[a] == 0 || idx[a] == N - 1) ++on_faces;
    const int face = g.assigned_face(b);
    const int axis = face / 2;
    if (on_faces > 1) {
      // edge/corner: tangential neighbors leave the lattice; fall back to the
      // one-sided stencil (reads shared boundary data only, so map
      // differences cancel there regardless)
      auto at = [&](int off) {
        auto j = idx;
        j[axis] += (face % 2 == 1 ? -1 : 1) * off;
        return u.values[g.flat(Carrier::omega, j)];
      };
      out.values[b] = (3.0 * at(0) - 4.0 * at(1) + at(2)) * (0.5 / s);
      continue;
    }
    auto in = idx;
    in[axis] += face % 2 == 1 ? -1 : 1;
    const T u_b = u.values[bf];
    const T u_in = u.values[g.flat(Carrier::omega, in)];
    T lap_tan{};
    for (int a = 0; a < g.dim(); ++a) {
      if (a == axis) continue;
      auto lo = idx, hi = idx;
      lo[a] -= 1;
      hi[a] += 1;
      lap_tan += (2.0 * u_b - u.values[g.flat(Carrier::omega, lo)] -
                  u.values[g.flat(Carrier::omega, hi)]) /
                 (s * s);
    }
    out.values[b] = (u_b - u_in) / s + 0.5 * s * (q.values[bf] * u_b - lap_tan);
  }
  return out;
}

template BoundaryFieldT<double> pairing_neumann(const Field&, const FieldT<double>&);
template BoundaryFieldT<std::complex<double>> pairing_neumann(const Field&,
                                                              const FieldT<std::complex<double>>&);

DtnFn make_schrodinger_dtn(const Grid& g, Field q, SolveOptions opts, double admissible_floor,
                           NeumannFlux flux) {
  auto q_shared = std::make_shared<Field>(std::move(q));
  return [g, q_shared, opts, admissible_floor, flux](const ComplexBoundaryField& f) {
    if (flux == NeumannFlux::one_sided)
      return dtn_schrodinger(g, *q_shared, f, opts, admissible_floor);
    const ComplexField u = solve_schrodinger(g, *q_shared, f, opts, admissible_floor);
    return pairing_neumann(*q_shared, u);
  };
}

DtnFn with_multiplicative_noise(DtnFn base, double delta, std::uint64_t seed) {
  return [base = std::move(base), delta, seed](const ComplexBoundaryField& f) {
    ComplexBoundaryField out = base(f);
    for (std::size_t b = 0; b < out.size(); ++b)
      out.values[b] *= 1.0 + delta * uniform_pm1(hash_mix(seed, 0x6e6f697365ULL, b));
    return out;
  };
}

BoundaryDictionary build_dictionary(const Grid& g, const std::vector<double>& constant_levels,
                                    int k_b) {
  BoundaryDictionary dict;
  for (double level : constant_levels) {
    dict.elements.push_back(BoundaryField(g, level));
    dict.labels.push_back("const:" + std::to_string(level));
  }
  const int n = g.dim();
  for (int face = 0; face < 2 * n; ++face) {
    const int axis = face / 2;
    const bool hi = face % 2 == 1;
    for (int k = 1; k <= k_b; ++k) {
      BoundaryField e(g);
      for (std::size_t b = 0; b < e.size(); ++b) {
        const auto idx = g.idx(Carrier::omega, g.boundary_node(b));
        if (idx[axis] != (hi ? g.axis_points() - 1 : 0)) continue;
        const Vec3 x = g.coords(Carrier::omega, g.boundary_node(b));
        double v = 1.0;
        for (int a2 = 0; a2 < n; ++a2)
          if (a2 != axis) v *= std::sin(M_PI * k * x[a2]);
        e.values[b] = v;
      }
      dict.elements.push_back(std::move(e));
      dict.labels.push_back("face" + std::to_string(face) + ":sin" + std::to_string(k));
    }
  }

  // Conditioning of the probe directions. Constant levels are scalar
  // multiples of the same function (distinct probes only because the maps are
  // nonlinear), so parallel duplicates are collapsed before forming the Gram.
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < dict.size(); ++i) {
    const double ni = l2_norm(dict.elements[i]);
    bool parallel = false;
    for (std::size_t j : kept) {
      const double nj = l2_norm(dict.elements[j]);
      const double ip = surface_integral(dict.elements[i], dict.elements[j]);
      if (std::abs(std::abs(ip) - ni * nj) <= 1e-12 * ni * nj) parallel = true;
    }
    if (!parallel) kept.push_back(i);
  }
  Eigen::MatrixXd gram(kept.size(), kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = surface_integral(dict.elements[kept[i]], dict.elements[kept[j]]);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  dict.gram_condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  return dict;
}

DtnOperator dtn_matrix(const Grid& g, const DtnMapSpec& spec, const BoundaryDictionary& dict,
                       const SolveOptions& opts, int threads) {
  DtnOperator op;
  op.kind = spec.kind;
  op.n = g.dim();
  op.N = g.axis_points();
  op.pad = g.pad();
  op.rows = g.boundary_count();
  op.cols = dict.size();
  op.entries.assign(op.rows * op.cols, 0.0);
  op.column_labels = dict.labels;
  op.column_scales.resize(op.cols);
  for (std::size_t j = 0; j < op.cols; ++j) op.column_scales[j] = l2_norm(dict.elements[j]);

  // The linearized map shares one potential across columns; build it once.
  std::optional<Field> q_lin;
  if (spec.kind == DtnKind::linearized) {
    if (!spec.a || !spec.base) throw InvalidArgument("dtn_matrix: linearized spec needs a and base");
    q_lin = linearized_potential(g, *spec.a, *spec.base, opts);
  }

  parallel_for(op.cols, threads, [&](std::size_t j) {
    BoundaryField col(g);
    switch (spec.kind) {
      case DtnKind::semilinear:
        if (!spec.a) throw InvalidArgument("dtn_matrix: semilinear spec needs a");
        col = dtn_semilinear(g, *spec.a, dict.elements[j], opts);
        break;
      case DtnKind::linearized:
        col = dtn_schrodinger(g, *q_lin, dict.elements[j], opts, spec.a->class_params().c);
        break;
      case DtnKind::schrodinger:
        if (!spec.q) throw InvalidArgument("dtn_matrix: schrodinger spec needs q");
        col = dtn_schrodinger(g, *spec.q, dict.elements[j], opts);
        break;
    }
    for (std::size_t r = 0; r < op.rows; ++r) op.entries[r * op.cols + j] = col.values[r];
  });
  return op;
}

DtnOperator with_matrix_noise(const DtnOperator& op, double delta, std::uint64_t seed) {
  DtnOperator out = op;
  for (std::size_t j = 0; j < op.cols; ++j)
    for (std::size_t r = 0; r < op.rows; ++r)
      out.entries[r * op.cols + j] *= 1.0 + delta * uniform_pm1(hash_mix(seed, j, r));
  return out;
}

double discrepancy(const DtnOperator& A, const DtnOperator& B) {
  if (A.rows != B.rows || A.cols != B.cols)
    throw InvalidArgument("discrepancy: operator shape mismatch");
  Eigen::MatrixXd D(A.rows, A.cols);
  for (std::size_t r = 0; r < A.rows; ++r)
    for (std::size_t c = 0; c < A.cols; ++c) {
      const double scale = A.column_scales[c] > 0.0 ? A.column_scales[c] : 1.0;
      D(r, c) = (A.at(r, c) - B.at(r, c)) / scale;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D.transpose() * D);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

std::string DtnOperator::to_csv() const {
  std::string out;
  const char* kind_name = kind == DtnKind::semilinear    ? "semilinear"
                          : kind == DtnKind::linearized ? "linearized"
                                                        : "schrodinger";
  char buf[64];
  out += "# kind=";
  out += kind_name;
  std::snprintf(buf, sizeof(buf), " n=%d N=%d pad=%d rows=%zu cols=%zu\n", n, N, pad, rows, cols);
  out += buf;
  for (std::size_t c = 0; c < cols; ++c) {
    out += column_labels.size() == cols ? column_labels[c] : "col" + std::to_string(c);
    out += c + 1 < cols ? ',' : '\n';
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", at(r, c));
      out += buf;
      out += c + 1 < cols ? ',' : '\n';
    }
  return out;
}

}  // namespace dtnlab
