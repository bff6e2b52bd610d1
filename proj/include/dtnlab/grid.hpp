#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "dtnlab/errors.hpp"

namespace dtnlab {

/// Which lattice a field lives on: the unit box Omega = (0,1)^n including its
/// boundary Gamma, or the enclosing box O = (-pad*s, 1+pad*s)^n used for the
/// CGO remainder solves.
enum class Carrier { omega, box };

using Vec3 = std::array<double, 3>;

namespace detail {
struct GridData;
struct InteriorMap;
}  // namespace detail

/// Tensor-product lattice on Omega = (0,1)^n, n in {2,3}, with N points per
/// axis (odd, >= 17) and an enclosing box of `pad` extra layers per side.
/// Immutable after construction and cheap to copy; safe to share across
/// threads.
class Grid {
 public:
  /// Builds the grid. Rejects n outside {2,3}, even or too-small N, and
  /// pad < floor(N/4) (the enclosing box must contain Omega with margin).
  static Grid build(int n, int N, int pad);

  /// Smallest pad honoring both the floor(N/4) precondition and a margin of
  /// at least 0.25 on each side.
  static int default_pad(int N);

  int dim() const;
  int axis_points() const;         // N
  int box_axis_points() const;     // N + 2*pad
  int pad() const;
  double spacing() const;          // 1/(N-1)

  std::size_t point_count(Carrier c) const;
  std::size_t interior_count(Carrier c) const;
  std::size_t boundary_count() const;  // nodes on Gamma

  // Lattice indexing. Omega lattice indices run over [0, N)^n; box lattice
  // indices over [0, N+2*pad)^n with node i mapping to coordinate (i-pad)*s.
  std::size_t flat(Carrier c, const std::array<int, 3>& idx) const;
  std::array<int, 3> idx(Carrier c, std::size_t flat) const;
  Vec3 coords(Carrier c, std::size_t flat) const;
  bool is_carrier_boundary(Carrier c, std::size_t flat) const;

  // Gamma structure. Boundary nodes are ordered face-major in the priority
  // order x1-lo, x1-hi, x2-lo, x2-hi, x3-lo, x3-hi; a node on an edge or
  // corner belongs to the first face containing it, so each node has exactly
  // one outward normal.
  std::size_t boundary_node(std::size_t b) const;       // flat Omega index
  long boundary_index_of(std::size_t omega_flat) const; // -1 if off Gamma
  int assigned_face(std::size_t b) const;               // axis*2 + (hi ? 1 : 0)

  /// Surface quadrature weights per Gamma node (trapezoidal, halved on face
  /// edges, summed over every face meeting the node). They add up to |Gamma|
  /// = 2n exactly.
  const std::vector<double>& face_weights() const;

  /// Trapezoidal volume weights per carrier node.
  const std::vector<double>& volume_weights(Carrier c) const;

  /// Smallest eigenvalue of the discrete Dirichlet Laplacian on Omega,
  /// computed once by inverse power iteration (relative residual <= 1e-10)
  /// and cached.
  double first_eigenvalue() const;

  /// Closed form of the same discrete eigenvalue: n * (4/s^2) * sin^2(pi*s/2).
  static double dirichlet_lambda1_exact(int n, int N);

  const detail::InteriorMap& interior_map(Carrier c) const;

  bool operator==(const Grid& other) const { return data_ == other.data_; }

 private:
  std::shared_ptr<const detail::GridData> data_;
};

namespace detail {
/// Interior degrees of freedom of a carrier with neighbor links. Boundary
/// neighbors are encoded as -(flat+1) so stencils can pick up Dirichlet data.
struct InteriorMap {
  std::vector<std::size_t> flat_of_dof;
  std::vector<long> dof_of_flat;
  std::vector<std::array<long, 6>> nbr;  // 2*dim entries used
  int dim = 0;
};
}  // namespace detail

template <class T>
struct FieldT {
  Grid grid;
  Carrier carrier = Carrier::omega;
  std::vector<T> values;

  FieldT() = default;
  FieldT(const Grid& g, Carrier c, T fill = T{})
      : grid(g), carrier(c), values(g.point_count(c), fill) {}

  static FieldT from_function(const Grid& g, Carrier c, const std::function<T(const Vec3&)>& f) {
    FieldT out(g, c);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = f(g.coords(c, i));
    return out;
  }

  T& operator[](std::size_t i) { return values[i]; }
  const T& operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
};

template <class T>
struct BoundaryFieldT {
  Grid grid;
  std::vector<T> values;

  BoundaryFieldT() = default;
  explicit BoundaryFieldT(const Grid& g, T fill = T{}) : grid(g), values(g.boundary_count(), fill) {}

  static BoundaryFieldT from_function(const Grid& g, const std::function<T(const Vec3&)>& f) {
    BoundaryFieldT out(g);
    for (std::size_t b = 0; b < out.values.size(); ++b)
      out.values[b] = f(g.coords(Carrier::omega, g.boundary_node(b)));
    return out;
  }

  T& operator[](std::size_t b) { return values[b]; }
  const T& operator[](std::size_t b) const { return values[b]; }
  std::size_t size() const { return values.size(); }
};

using Field = FieldT<double>;
using ComplexField = FieldT<std::complex<double>>;
using BoundaryField = BoundaryFieldT<double>;
using ComplexBoundaryField = BoundaryFieldT<std::complex<double>>;

/// Second-order centered (2n+1)-point stencil of -Laplace at interior nodes;
/// carrier-boundary rows pass the input through.
template <class T>
FieldT<T> laplacian_apply(const FieldT<T>& u);

/// One-sided second-order normal derivative on Gamma (3-point difference into
/// the domain along the node's assigned face normal). u must live on Omega.
template <class T>
BoundaryFieldT<T> normal_derivative(const FieldT<T>& u);

/// Trapezoidal volume quadrature of u * conj(w); conjugate-linear in w.
double inner_product(const Field& u, const Field& w);
std::complex<double> inner_product(const ComplexField& u, const ComplexField& w);

/// Surface quadrature of p * conj(q) over Gamma; conjugate-linear in q.
double surface_integral(const BoundaryField& p, const BoundaryField& q);
std::complex<double> surface_integral(const ComplexBoundaryField& p, const ComplexBoundaryField& q);

double l2_norm(const Field& u);
double l2_norm(const ComplexField& u);
double l2_norm(const BoundaryField& p);
double l2_norm(const ComplexBoundaryField& p);

/// Restricts the trace of an Omega-carrier field to Gamma.
template <class T>
BoundaryFieldT<T> trace(const FieldT<T>& u);

}  // namespace dtnlab
