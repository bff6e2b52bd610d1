#include "dtnlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>

namespace dtnlab {

namespace detail {

struct GridData {
  int n = 0;
  int N = 0;
  int pad = 0;
  double s = 0.0;

  std::vector<std::size_t> gamma_nodes;   // flat Omega index per boundary node
  std::vector<long> gamma_index;          // per flat Omega node, -1 off Gamma
  std::vector<int> gamma_face;            // assigned face per boundary node
  std::vector<double> gamma_weights;
  std::vector<double> volw_omega;
  std::vector<double> volw_box;

  mutable std::mutex cache_mutex;
  mutable double lambda1 = -1.0;
  mutable std::unique_ptr<InteriorMap> imap_omega;
  mutable std::unique_ptr<InteriorMap> imap_box;
};

}  // namespace detail

using detail::GridData;
using detail::InteriorMap;

namespace {

int axis_count(const GridData& d, Carrier c) { return c == Carrier::omega ? d.N : d.N + 2 * d.pad; }

std::size_t pow_dim(std::size_t a, int n) {
  std::size_t r = a;
  for (int i = 1; i < n; ++i) r *= a;
  return r;
}

std::size_t flat_of(const GridData& d, Carrier c, const std::array<int, 3>& idx) {
  const std::size_t A = static_cast<std::size_t>(axis_count(d, c));
  std::size_t f = static_cast<std::size_t>(idx[0]);
  for (int a = 1; a < d.n; ++a) f = f * A + static_cast<std::size_t>(idx[a]);
  return f;
}

std::array<int, 3> idx_of(const GridData& d, Carrier c, std::size_t flat) {
  const std::size_t A = static_cast<std::size_t>(axis_count(d, c));
  std::array<int, 3> idx{0, 0, 0};
  for (int a = d.n - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(flat % A);
    flat /= A;
  }
  return idx;
}

std::vector<double> trapezoid_volume_weights(const GridData& d, Carrier c) {
  const int A = axis_count(d, c);
  const std::size_t count = pow_dim(static_cast<std::size_t>(A), d.n);
  std::vector<double> w(count);
  const double cell = std::pow(d.s, d.n);
  for (std::size_t f = 0; f < count; ++f) {
    auto idx = idx_of(d, c, f);
    double v = cell;
    for (int a = 0; a < d.n; ++a)
      if (idx[a] == 0 || idx[a] == A - 1) v *= 0.5;
    w[f] = v;
  }
  return w;
}

void build_gamma(GridData& d) {
  const int N = d.N;
  const std::size_t count = pow_dim(static_cast<std::size_t>(N), d.n);
  d.gamma_index.assign(count, -1);

  // Face-major ordering; the node set of face (axis a, side) excludes nodes
  // already claimed by a lower-priority-index axis.
  auto on_axis_boundary = [N](int i) { return i == 0 || i == N - 1; };
  for (int axis = 0; axis < d.n; ++axis) {
    for (int side = 0; side < 2; ++side) {
      std::array<int, 3> idx{0, 0, 0};
      std::vector<int> free_axes;
      for (int a = 0; a < d.n; ++a)
        if (a != axis) free_axes.push_back(a);
      const int face = axis * 2 + side;
      idx[axis] = side == 0 ? 0 : N - 1;
      // Lexicographic loop over the other axes.
      std::vector<int> cursor(free_axes.size(), 0);
      while (true) {
        for (std::size_t j = 0; j < free_axes.size(); ++j) idx[free_axes[j]] = cursor[j];
        bool claimed_earlier = false;
        for (int a = 0; a < axis; ++a)
          if (on_axis_boundary(idx[a])) claimed_earlier = true;
        if (!claimed_earlier) {
          const std::size_t f = flat_of(d, Carrier::omega, idx);
          d.gamma_index[f] = static_cast<long>(d.gamma_nodes.size());
          d.gamma_nodes.push_back(f);
          d.gamma_face.push_back(face);
        }
        // advance cursor
        int j = static_cast<int>(free_axes.size()) - 1;
        while (j >= 0) {
          if (++cursor[j] < N) break;
          cursor[j] = 0;
          --j;
        }
        if (j < 0) break;
      }
    }
  }

  // Quadrature: each node carries the trapezoid weight of every face through
  // it, so the weights sum to |Gamma| = 2n exactly.
  const double face_cell = std::pow(d.s, d.n - 1);
  d.gamma_weights.assign(d.gamma_nodes.size(), 0.0);
  for (std::size_t b = 0; b < d.gamma_nodes.size(); ++b) {
    const auto idx = idx_of(d, Carrier::omega, d.gamma_nodes[b]);
    double w = 0.0;
    for (int axis = 0; axis < d.n; ++axis) {
      if (!on_axis_boundary(idx[axis])) continue;
      double fw = face_cell;
      for (int a = 0; a < d.n; ++a) {
        if (a == axis) continue;
        if (on_axis_boundary(idx[a])) fw *= 0.5;
      }
      w += fw;
    }
    d.gamma_weights[b] = w;
  }
}

const InteriorMap& interior_map_for(const GridData& d, Carrier c) {
  std::lock_guard<std::mutex> lock(d.cache_mutex);
  auto& slot = c == Carrier::omega ? d.imap_omega : d.imap_box;
  if (slot) return *slot;
  auto m = std::make_unique<InteriorMap>();
  m->dim = d.n;
  const int A = axis_count(d, c);
  const std::size_t count = pow_dim(static_cast<std::size_t>(A), d.n);
  m->dof_of_flat.assign(count, -1);
  for (std::size_t f = 0; f < count; ++f) {
    const auto idx = idx_of(d, c, f);
    bool interior = true;
    for (int a = 0; a < d.n; ++a)
      if (idx[a] == 0 || idx[a] == A - 1) interior = false;
    if (!interior) continue;
    m->dof_of_flat[f] = static_cast<long>(m->flat_of_dof.size());
    m->flat_of_dof.push_back(f);
  }
  m->nbr.resize(m->flat_of_dof.size());
  for (std::size_t dof = 0; dof < m->flat_of_dof.size(); ++dof) {
    auto idx = idx_of(d, c, m->flat_of_dof[dof]);
    for (int a = 0; a < d.n; ++a) {
      for (int dir = 0; dir < 2; ++dir) {
        auto nb = idx;
        nb[a] += dir == 0 ? -1 : 1;
        const std::size_t nf = flat_of(d, c, nb);
        const long nd = m->dof_of_flat[nf];
        m->nbr[dof][2 * a + dir] = nd >= 0 ? nd : -(static_cast<long>(nf) + 1);
      }
    }
  }
  slot = std::move(m);
  return *slot;
}

// Inverse power iteration for the smallest eigenvalue of the interior
// Dirichlet -Laplace stencil, with a plain CG inner solver.
double smallest_eigenvalue(const GridData& d) {
  const InteriorMap& m = interior_map_for(d, Carrier::omega);
  const std::size_t dofs = m.flat_of_dof.size();
  const double inv_s2 = 1.0 / (d.s * d.s);
  const int two_n = 2 * d.n;

  auto apply = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::size_t i = 0; i < dofs; ++i) {
      double acc = two_n * x[i];
      for (int e = 0; e < 2 * d.n; ++e) {
        const long nb = m.nbr[i][e];
        if (nb >= 0) acc -= x[static_cast<std::size_t>(nb)];
      }
      y[i] = acc * inv_s2;
    }
  };

  auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double r = 0.0;
    for (std::size_t i = 0; i < dofs; ++i) r += a[i] * b[i];
    return r;
  };

  auto cg_solve = [&](const std::vector<double>& b, std::vector<double>& x) {
    std::vector<double> r = b, p, Ap(dofs);
    std::fill(x.begin(), x.end(), 0.0);
    p = r;
    double rr = dot(r, r);
    const double target = 1e-28 * rr;
    for (int it = 0; it < 20000 && rr > target; ++it) {
      apply(p, Ap);
      const double alpha = rr / dot(p, Ap);
      for (std::size_t i = 0; i < dofs; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * Ap[i];
      }
      const double rr_new = dot(r, r);
      const double beta = rr_new / rr;
      rr = rr_new;
      for (std::size_t i = 0; i < dofs; ++i) p[i] = r[i] + beta * p[i];
    }
  };

  std::vector<double> v(dofs, 1.0), w(dofs), Av(dofs);
  double lambda = 0.0;
  for (int outer = 0; outer < 200; ++outer) {
    cg_solve(v, w);
    const double nw = std::sqrt(dot(w, w));
    for (std::size_t i = 0; i < dofs; ++i) v[i] = w[i] / nw;
    apply(v, Av);
    lambda = dot(v, Av);
    double res = 0.0;
    for (std::size_t i = 0; i < dofs; ++i) {
      const double r = Av[i] - lambda * v[i];
      res += r * r;
    }
    if (std::sqrt(res) <= 1e-10 * std::abs(lambda)) return lambda;
  }
  throw NonConvergence("first_eigenvalue: inverse power iteration did not settle", lambda);
}

}  // namespace

Grid Grid::build(int n, int N, int pad) {
  if (n != 2 && n != 3) throw InvalidArgument("grid: dimension must be 2 or 3");
  if (N < 17) throw InvalidArgument("grid: N must be at least 17");
  if (N % 2 == 0) throw InvalidArgument("grid: even N (centered boundary nodes needed)");
  if (pad <= 0) throw InvalidArgument("grid: pad must be positive (CGO remainder lives on a strictly larger box)");
  if (pad < N / 4) throw InvalidArgument("grid: pad below floor(N/4)");
  auto d = std::make_shared<GridData>();
  d->n = n;
  d->N = N;
  d->pad = pad;
  d->s = 1.0 / static_cast<double>(N - 1);
  build_gamma(*d);
  d->volw_omega = trapezoid_volume_weights(*d, Carrier::omega);
  d->volw_box = trapezoid_volume_weights(*d, Carrier::box);
  Grid g;
  g.data_ = std::move(d);
  return g;
}

int Grid::default_pad(int N) {
  const int floor_rule = N / 4;
  const int margin_rule = (N - 1 + 3) / 4;  // ceil((N-1)/4) -> margin >= 0.25
  return std::max(floor_rule, margin_rule);
}

int Grid::dim() const { return data_->n; }
int Grid::axis_points() const { return data_->N; }
int Grid::box_axis_points() const { return data_->N + 2 * data_->pad; }
int Grid::pad() const { return data_->pad; }
double Grid::spacing() const { return data_->s; }

std::size_t Grid::point_count(Carrier c) const {
  return pow_dim(static_cast<std::size_t>(axis_count(*data_, c)), data_->n);
}

std::size_t Grid::interior_count(Carrier c) const {
  return pow_dim(static_cast<std::size_t>(axis_count(*data_, c) - 2), data_->n);
}

std::size_t Grid::boundary_count() const { return data_->gamma_nodes.size(); }

std::size_t Grid::flat(Carrier c, const std::array<int, 3>& idx) const { return flat_of(*data_, c, idx); }
std::array<int, 3> Grid::idx(Carrier c, std::size_t flat) const { return idx_of(*data_, c, flat); }

Vec3 Grid::coords(Carrier c, std::size_t flat) const {
  const auto idx = idx_of(*data_, c, flat);
  const int shift = c == Carrier::omega ? 0 : data_->pad;
  Vec3 x{0.0, 0.0, 0.0};
  for (int a = 0; a < data_->n; ++a) x[a] = (idx[a] - shift) * data_->s;
  return x;
}

bool Grid::is_carrier_boundary(Carrier c, std::size_t flat) const {
  const int A = axis_count(*data_, c);
  const auto idx = idx_of(*data_, c, flat);
  for (int a = 0; a < data_->n; ++a)
    if (idx[a] == 0 || idx[a] == A - 1) return true;
  return false;
}

std::size_t Grid::boundary_node(std::size_t b) const { return data_->gamma_nodes[b]; }
long Grid::boundary_index_of(std::size_t omega_flat) const { return data_->gamma_index[omega_flat]; }
int Grid::assigned_face(std::size_t b) const { return data_->gamma_face[b]; }
const std::vector<double>& Grid::face_weights() const { return data_->gamma_weights; }

const std::vector<double>& Grid::volume_weights(Carrier c) const {
  return c == Carrier::omega ? data_->volw_omega : data_->volw_box;
}

double Grid::first_eigenvalue() const {
  {
    std::lock_guard<std::mutex> lock(data_->cache_mutex);
    if (data_->lambda1 > 0.0) return data_->lambda1;
  }
  const double lam = smallest_eigenvalue(*data_);
  std::lock_guard<std::mutex> lock(data_->cache_mutex);
  data_->lambda1 = lam;
  return lam;
}

double Grid::dirichlet_lambda1_exact(int n, int N) {
  const double s = 1.0 / static_cast<double>(N - 1);
  const double sn = std::sin(0.5 * M_PI * s);
  return n * 4.0 / (s * s) * sn * sn;
}

const InteriorMap& Grid::interior_map(Carrier c) const { return interior_map_for(*data_, c); }

template <class T>
FieldT<T> laplacian_apply(const FieldT<T>& u) {
  const Grid& g = u.grid;
  FieldT<T> out = u;  // boundary rows pass through
  const auto& m = g.interior_map(u.carrier);
  const double inv_s2 = 1.0 / (g.spacing() * g.spacing());
  const int two_n = 2 * g.dim();
  for (std::size_t dof = 0; dof < m.flat_of_dof.size(); ++dof) {
    const std::size_t f = m.flat_of_dof[dof];
    T acc = static_cast<double>(two_n) * u.values[f];
    for (int e = 0; e < two_n; ++e) {
      const long nb = m.nbr[dof][e];
      const std::size_t nf = nb >= 0 ? m.flat_of_dof[static_cast<std::size_t>(nb)]
                                     : static_cast<std::size_t>(-nb - 1);
      acc -= u.values[nf];
    }
    out.values[f] = acc * inv_s2;
  }
  return out;
}

template FieldT<double> laplacian_apply(const FieldT<double>&);
template FieldT<std::complex<double>> laplacian_apply(const FieldT<std::complex<double>>&);

template <class T>
BoundaryFieldT<T> normal_derivative(const FieldT<T>& u) {
  if (u.carrier != Carrier::omega) throw InvalidArgument("normal_derivative: field must live on Omega");
  const Grid& g = u.grid;
  const int N = g.axis_points();
  BoundaryFieldT<T> out(g);
  const double inv_2s = 0.5 / g.spacing();
  for (std::size_t b = 0; b < g.boundary_count(); ++b) {
    const int face = g.assigned_face(b);
    const int axis = face / 2;
    const bool hi = face % 2 == 1;
    auto idx = g.idx(Carrier::omega, g.boundary_node(b));
    const int step = hi ? -1 : 1;
    auto at = [&](int off) {
      auto j = idx;
      j[axis] += step * off;
      return u.values[g.flat(Carrier::omega, j)];
    };
    // second-order one-sided difference along the outward normal
    out.values[b] = (3.0 * at(0) - 4.0 * at(1) + at(2)) * inv_2s;
  }
  return out;
}

template BoundaryFieldT<double> normal_derivative(const FieldT<double>&);
template BoundaryFieldT<std::complex<double>> normal_derivative(const FieldT<std::complex<double>>&);

double inner_product(const Field& u, const Field& w) {
  if (u.carrier != w.carrier || !(u.grid == w.grid)) throw InvalidArgument("inner_product: carrier mismatch");
  const auto& vw = u.grid.volume_weights(u.carrier);
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += vw[i] * u.values[i] * w.values[i];
  return acc;
}

std::complex<double> inner_product(const ComplexField& u, const ComplexField& w) {
  if (u.carrier != w.carrier || !(u.grid == w.grid)) throw InvalidArgument("inner_product: carrier mismatch");
  const auto& vw = u.grid.volume_weights(u.carrier);
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) acc += vw[i] * u.values[i] * std::conj(w.values[i]);
  return acc;
}

double surface_integral(const BoundaryField& p, const BoundaryField& q) {
  if (p.size() != q.size()) throw InvalidArgument("surface_integral: size mismatch");
  const auto& gw = p.grid.face_weights();
  double acc = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) acc += gw[b] * p.values[b] * q.values[b];
  return acc;
}

std::complex<double> surface_integral(const ComplexBoundaryField& p, const ComplexBoundaryField& q) {
  if (p.size() != q.size()) throw InvalidArgument("surface_integral: size mismatch");
  const auto& gw = p.grid.face_weights();
  std::complex<double> acc = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) acc += gw[b] * p.values[b] * std::conj(q.values[b]);
  return acc;
}

double l2_norm(const Field& u) { return std::sqrt(std::max(0.0, inner_product(u, u))); }
double l2_norm(const ComplexField& u) { return std::sqrt(std::max(0.0, inner_product(u, u).real())); }
double l2_norm(const BoundaryField& p) { return std::sqrt(std::max(0.0, surface_integral(p, p))); }
double l2_norm(const ComplexBoundaryField& p) { return std::sqrt(std::max(0.0, surface_integral(p, p).real())); }

template <class T>
BoundaryFieldT<T> trace(const FieldT<T>& u) {
  if (u.carrier != Carrier::omega) throw InvalidArgument("trace: field must live on Omega");
  BoundaryFieldT<T> out(u.grid);
  for (std::size_t b = 0; b < out.size(); ++b) out.values[b] = u.values[u.grid.boundary_node(b)];
  return out;
}

template BoundaryFieldT<double> trace(const FieldT<double>&);
template BoundaryFieldT<std::complex<double>> trace(const FieldT<std::complex<double>>&);

}  // namespace dtnlab
