#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "dtnlab/forward.hpp"

namespace dtnlab {

enum class DtnKind { semilinear, linearized, schrodinger };

/// Dirichlet-to-Neumann of the semilinear problem: f -> normal derivative of
/// the solution with boundary data f.
BoundaryField dtn_semilinear(const Grid& g, const Nonlinearity& a, const BoundaryField& f,
                             const SolveOptions& opts = {});

/// The potential a'(u_a(f)) of the linearized problem at base point f.
Field linearized_potential(const Grid& g, const Nonlinearity& a, const BoundaryField& f,
                           const SolveOptions& opts = {});

/// Frechet derivative of the semilinear DtN at f, applied to h: the DtN of
/// the Schrodinger problem with potential a'(u_a(f)).
BoundaryField dtn_linearized(const Grid& g, const Nonlinearity& a, const BoundaryField& f,
                             const BoundaryField& h, const SolveOptions& opts = {});

BoundaryField dtn_schrodinger(const Grid& g, const Field& q, const BoundaryField& f,
                              const SolveOptions& opts = {},
                              double admissible_floor = std::numeric_limits<double>::quiet_NaN());
ComplexBoundaryField dtn_schrodinger(const Grid& g, const Field& q, const ComplexBoundaryField& f,
                                     const SolveOptions& opts = {},
                                     double admissible_floor = std::numeric_limits<double>::quiet_NaN());

/// Which Neumann trace an apply emits. `one_sided` is the grid module's
/// 3-point stencil; `pairing` is the adjoint-consistent flux
///   (u_b - u_in)/spacing + (spacing/2) (q_b f_b - Laplace_tan f_b),
/// second-order via the equation at the boundary and exactly compatible with
/// the summation-by-parts form of the integral identity (edge nodes keep the
/// one-sided value; their map differences vanish identically).
enum class NeumannFlux { one_sided, pairing };

/// Adjoint-consistent Neumann trace of a solution u of (-Laplace + q) u = 0.
template <class T>
BoundaryFieldT<T> pairing_neumann(const Field& q, const FieldT<T>& u);

/// A Schrodinger DtN as a reusable apply on complex boundary data. The
/// reconstruction pipeline pairs these against CGO traces, so the pairing
/// flux is the default.
using DtnFn = std::function<ComplexBoundaryField(const ComplexBoundaryField&)>;

DtnFn make_schrodinger_dtn(const Grid& g, Field q, SolveOptions opts = {},
                           double admissible_floor = std::numeric_limits<double>::quiet_NaN(),
                           NeumannFlux flux = NeumannFlux::pairing);

/// Multiplicative measurement noise on an apply: each boundary node gets a
/// fixed gain 1 + delta * eta_i with eta_i uniform in [-1, 1] drawn from the
/// seed. Gains are per node so repeated applies are consistent.
DtnFn with_multiplicative_noise(DtnFn base, double delta, std::uint64_t seed);

/// Probe set over which DtN maps are sampled into matrices: constant data at
/// the given levels plus per-face trigonometric traces up to frequency k_b
/// (products of sines vanishing on the face edge, one face at a time).
struct BoundaryDictionary {
  std::vector<BoundaryField> elements;
  std::vector<std::string> labels;
  double gram_condition = 0.0;

  std::size_t size() const { return elements.size(); }
};

BoundaryDictionary build_dictionary(const Grid& g, const std::vector<double>& constant_levels,
                                    int k_b);

/// Matrix of a DtN map over a dictionary: column j holds the map of element j
/// sampled at the boundary nodes (face-major node order).
struct DtnOperator {
  DtnKind kind = DtnKind::schrodinger;
  int n = 0, N = 0, pad = 0;
  std::size_t rows = 0, cols = 0;
  std::vector<double> entries;  // row-major
  std::vector<std::string> column_labels;
  std::vector<double> column_scales;  // surface-L2 norm of each dictionary element

  double& at(std::size_t r, std::size_t c) { return entries[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return entries[r * cols + c]; }

  std::string to_csv() const;
};

struct DtnMapSpec {
  DtnKind kind = DtnKind::schrodinger;
  const Nonlinearity* a = nullptr;     // semilinear / linearized
  const BoundaryField* base = nullptr; // linearized base point
  const Field* q = nullptr;            // schrodinger
};

DtnOperator dtn_matrix(const Grid& g, const DtnMapSpec& spec, const BoundaryDictionary& dict,
                       const SolveOptions& opts = {}, int threads = 1);

/// Entrywise multiplicative noise (1 + delta * eta_rc) on a matrix, eta drawn
/// per (column, row) from the seed.
DtnOperator with_matrix_noise(const DtnOperator& op, double delta, std::uint64_t seed);

/// Discrepancy proxy: spectral norm of the matrix difference with columns
/// pre-scaled by the dictionary elements' surface-L2 norms.
double discrepancy(const DtnOperator& A, const DtnOperator& B);

}  // namespace dtnlab
