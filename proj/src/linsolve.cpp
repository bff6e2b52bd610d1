#include "dtnlab/linsolve.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <cmath>
#include <map>
#include <mutex>

namespace dtnlab {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r += a[i] * b[i];
  return r;
}

std::complex<double> cdot(const std::vector<std::complex<double>>& a,
                          const std::vector<std::complex<double>>& b) {
  std::complex<double> r = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) r += std::conj(a[i]) * b[i];
  return r;
}

double cnorm(const std::vector<std::complex<double>>& a) { return std::sqrt(std::abs(cdot(a, a))); }

}  // namespace

IterInfo conjugate_gradient(const RealOp& A, const std::vector<double>& b, std::vector<double>& x,
                            double tol, int max_iter, const RealOp* precond) {
  const std::size_t n = b.size();
  x.assign(n, 0.0);
  std::vector<double> r = b, z(n), p(n), Ap(n);
  const double bnorm = std::sqrt(dot(b, b));
  IterInfo info;
  if (bnorm == 0.0) {
    info.converged = true;
    return info;
  }
  if (precond)
    (*precond)(r, z);
  else
    z = r;
  p = z;
  double rz = dot(r, z);
  for (int it = 0; it < max_iter; ++it) {
    A(p, Ap);
    const double pAp = dot(p, Ap);
    if (pAp <= 0.0) break;  // loss of positive definiteness
    const double alpha = rz / pAp;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    const double rnorm = std::sqrt(dot(r, r));
    info.iterations = it + 1;
    info.rel_residual = rnorm / bnorm;
    if (info.rel_residual <= tol) {
      info.converged = true;
      return info;
    }
    if (precond)
      (*precond)(r, z);
    else
      z = r;
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  return info;
}

IterInfo bicgstab(const ComplexOp& A, const std::vector<std::complex<double>>& b,
                  std::vector<std::complex<double>>& x, double tol, int max_iter,
                  const std::vector<std::complex<double>>* inv_diag) {
  using C = std::complex<double>;
  const std::size_t n = b.size();
  x.assign(n, C(0.0));
  std::vector<C> r = b, r0 = b, p(n), v(n), s(n), t(n), y(n), z(n);
  const double bnorm = cnorm(b);
  IterInfo info;
  if (bnorm == 0.0) {
    info.converged = true;
    return info;
  }
  auto prec = [&](const std::vector<C>& in, std::vector<C>& out) {
    if (inv_diag)
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] * (*inv_diag)[i];
    else
      out = in;
  };
  C rho = 1.0, alpha = 1.0, omega = 1.0;
  std::fill(p.begin(), p.end(), C(0.0));
  std::fill(v.begin(), v.end(), C(0.0));
  for (int it = 0; it < max_iter; ++it) {
    const C rho_new = cdot(r0, r);
    if (std::abs(rho_new) < 1e-300) break;
    const C beta = (rho_new / rho) * (alpha / omega);
    rho = rho_new;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
    prec(p, y);
    A(y, v);
    alpha = rho / cdot(r0, v);
    for (std::size_t i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
    prec(s, z);
    A(z, t);
    const double tt = std::abs(cdot(t, t));
    omega = tt > 0.0 ? cdot(t, s) / tt : C(0.0);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * y[i] + omega * z[i];
      r[i] = s[i] - omega * t[i];
    }
    info.iterations = it + 1;
    info.rel_residual = cnorm(r) / bnorm;
    if (info.rel_residual <= tol) {
      info.converged = true;
      return info;
    }
    if (std::abs(omega) < 1e-300) break;
  }
  return info;
}

struct PoissonFactor::Impl {
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

PoissonFactor::PoissonFactor(const Grid& g, Carrier c) : grid_(g), carrier_(c), impl_(new Impl) {
  const auto& m = g.interior_map(c);
  const std::size_t dofs = m.flat_of_dof.size();
  const double inv_s2 = 1.0 / (g.spacing() * g.spacing());
  const int two_n = 2 * g.dim();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(dofs * (two_n + 1));
  for (std::size_t i = 0; i < dofs; ++i) {
    trip.emplace_back(i, i, two_n * inv_s2);
    for (int e = 0; e < two_n; ++e) {
      const long nb = m.nbr[i][e];
      if (nb >= 0) trip.emplace_back(i, nb, -inv_s2);
    }
  }
  Eigen::SparseMatrix<double> A(dofs, dofs);
  A.setFromTriplets(trip.begin(), trip.end());
  impl_->ldlt.compute(A);
  if (impl_->ldlt.info() != Eigen::Success)
    throw NonConvergence("poisson factorization failed", 0.0);
}

PoissonFactor::~PoissonFactor() = default;
PoissonFactor::PoissonFactor(PoissonFactor&&) noexcept = default;

void PoissonFactor::solve(const std::vector<double>& rhs, std::vector<double>& x) const {
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), rhs.size());
  Eigen::VectorXd sol = impl_->ldlt.solve(b);
  x.assign(sol.data(), sol.data() + sol.size());
}

std::shared_ptr<const PoissonFactor> shared_poisson_factor(const Grid& g, Carrier c) {
  struct Key {
    int n, N, pad, carrier;
    bool operator<(const Key& o) const {
      return std::tie(n, N, pad, carrier) < std::tie(o.n, o.N, o.pad, o.carrier);
    }
  };
  static std::mutex mu;
  static std::map<Key, std::weak_ptr<const PoissonFactor>> cache;
  const Key key{g.dim(), g.axis_points(), g.pad(), static_cast<int>(c)};
  std::lock_guard<std::mutex> lock(mu);
  if (auto hit = cache[key].lock()) return hit;
  auto made = std::make_shared<const PoissonFactor>(g, c);
  cache[key] = made;
  return made;
}

ShiftedLaplacian::ShiftedLaplacian(const Grid& g, Carrier c, std::vector<double> q_interior)
    : grid_(g), carrier_(c), q_(std::move(q_interior)) {
  inv_s2_ = 1.0 / (g.spacing() * g.spacing());
  const auto& m = g.interior_map(c);
  if (!q_.empty() && q_.size() != m.flat_of_dof.size())
    throw InvalidArgument("shifted laplacian: potential size mismatch");
}

std::size_t ShiftedLaplacian::dofs() const { return grid_.interior_map(carrier_).flat_of_dof.size(); }

void ShiftedLaplacian::apply(const std::vector<double>& x, std::vector<double>& y) const {
  const auto& m = grid_.interior_map(carrier_);
  const int two_n = 2 * grid_.dim();
  const std::size_t n = m.flat_of_dof.size();
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = two_n * x[i];
    for (int e = 0; e < two_n; ++e) {
      const long nb = m.nbr[i][e];
      if (nb >= 0) acc -= x[static_cast<std::size_t>(nb)];
    }
    y[i] = acc * inv_s2_ + (q_.empty() ? 0.0 : q_[i] * x[i]);
  }
}

template <class T>
void ShiftedLaplacian::boundary_rhs(const std::vector<T>& carrier_values, std::vector<T>& rhs) const {
  const auto& m = grid_.interior_map(carrier_);
  const int two_n = 2 * grid_.dim();
  for (std::size_t i = 0; i < m.flat_of_dof.size(); ++i) {
    for (int e = 0; e < two_n; ++e) {
      const long nb = m.nbr[i][e];
      if (nb < 0) rhs[i] += carrier_values[static_cast<std::size_t>(-nb - 1)] * inv_s2_;
    }
  }
}

template void ShiftedLaplacian::boundary_rhs(const std::vector<double>&, std::vector<double>&) const;
template void ShiftedLaplacian::boundary_rhs(const std::vector<std::complex<double>>&,
                                             std::vector<std::complex<double>>&) const;

}  // namespace dtnlab
