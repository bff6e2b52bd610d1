#include "dtnlab/reconstruct.hpp"

#include <algorithm>
#include <cmath>

#include "dtnlab/parallel.hpp"

namespace dtnlab {

namespace {

using C = std::complex<double>;

Vec3 omega_center(const Grid& g) {
  Vec3 c{0, 0, 0};
  for (int a = 0; a < g.dim(); ++a) c[a] = 0.5;
  return c;
}

ComplexBoundaryField phase_trace(const Grid& g, const Vec3& re_dir, const Vec3& im_dir, double h) {
  const Vec3 xc = omega_center(g);
  return ComplexBoundaryField::from_function(g, [&](const Vec3& x) {
    double re = 0.0, im = 0.0;
    for (int a = 0; a < g.dim(); ++a) {
      re += (x[a] - xc[a]) * re_dir[a];
      im += (x[a] - xc[a]) * im_dir[a];
    }
    return std::exp(C(-re / h, -im / h));
  });
}

C bilinear_surface(const ComplexBoundaryField& p, const ComplexBoundaryField& q) {
  const auto& gw = p.grid.face_weights();
  C acc = 0.0;
  for (std::size_t b = 0; b < p.size(); ++b) acc += gw[b] * p.values[b] * q.values[b];
  return acc;
}

Vec3 neg(const Vec3& v) { return {-v[0], -v[1], -v[2]}; }

/// Largest rho so that h(rho) = 1/sqrt(|k|^2/4 + rho^2) still resolves the
/// grid (spacing <= h/4); negative when even rho = 0 fails.
double rho_resolution_cap(const Grid& g, const Vec3& k) {
  const double s = g.spacing();
  const double k2_4 = 0.25 * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]);
  const double budget = 1.0 / (16.0 * s * s) - k2_4;
  return budget <= 0.0 ? -1.0 : std::sqrt(budget);
}

}  // namespace

ProbeResult probe_fourier_mode(const Grid& g, const DtnFn& lam_a, const DtnFn& lam_b, const Vec3& k,
                               double rho, const ReconstructionConfig& cfg, const Field* q_a,
                               const Field* q_b) {
  if (g.dim() != 3) throw InvalidArgument("probe_fourier_mode: reconstruction requires n = 3");
  const CgoDirections dirs = cgo_directions(k, rho, cfg.bound_M, cfg.c_omega_est);
  if (g.spacing() > dirs.h / 4.0 + 1e-15)
    throw ResolutionError("probe_fourier_mode: spacing > h/4 for this mode");

  ComplexBoundaryField trace_plus(g), trace_minus(g);
  if (cfg.use_cgo_probes) {
    if (!q_a || !q_b)
      throw InvalidArgument("probe_fourier_mode: CGO probes need ground-truth potentials");
    trace_plus = build_cgo_solution(*q_a, dirs, CgoSign::plus, cfg.solve).trace_gamma;
    trace_minus = build_cgo_solution(*q_b, dirs, CgoSign::minus, cfg.solve).trace_gamma;
  } else {
    trace_plus = phase_trace(g, dirs.xi, dirs.zeta, dirs.h);
    trace_minus = phase_trace(g, neg(dirs.xi), dirs.zeta_tilde, dirs.h);
  }

  const ComplexBoundaryField da = lam_a(trace_plus);
  const ComplexBoundaryField db = lam_b(trace_plus);
  ComplexBoundaryField diff(g);
  for (std::size_t b = 0; b < diff.size(); ++b) diff.values[b] = da.values[b] - db.values[b];

  const Vec3 xc = omega_center(g);
  const double xck = xc[0] * k[0] + xc[1] * k[1] + xc[2] * k[2];
  const C compensation = std::exp(C(0.0, -xck));

  ProbeResult out;
  out.estimate = compensation * bilinear_surface(diff, trace_minus);

  if (cfg.probe_volume_oracle && q_a && q_b) {
    const ComplexField u = solve_schrodinger(g, *q_a, trace_plus, cfg.solve);
    const ComplexField ut = solve_schrodinger(g, *q_b, trace_minus, cfg.solve);
    const auto& vw = g.volume_weights(Carrier::omega);
    C acc = 0.0;
    for (std::size_t f = 0; f < u.size(); ++f)
      acc += vw[f] * (q_a->values[f] - q_b->values[f]) * u.values[f] * ut.values[f];
    out.volume_side = compensation * acc;
    out.has_volume = true;
  }
  return out;
}

RhoChoice choose_rho(double discrepancy, double gamma, double kappa_est, double rho0,
                     double rho_cap) {
  RhoChoice out;
  if (discrepancy < 0.0) throw InvalidArgument("choose_rho: negative discrepancy");
  if (discrepancy == 0.0) {
    out.rho = rho_cap;
    out.noise_free = true;
    return out;
  }
  const double mu = std::min(1.0, 1.0 / (rho0 * std::exp(kappa_est)));
  auto balance = [&](double rho) {
    return gamma * std::log(rho) + kappa_est * rho + std::log(discrepancy);
  };
  if (discrepancy >= mu || balance(rho0) > 0.0) {
    out.rho = rho0;
    out.saturated = true;
    return out;
  }
  double lo = rho0;
  double hi = rho0 + (std::abs(std::log(discrepancy)) + 1.0) / kappa_est;
  while (balance(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (balance(mid) < 0.0 ? lo : hi) = mid;
  }
  out.rho = 0.5 * (lo + hi);
  return out;
}

ReconstructionReport reconstruct_potential(const Grid& g, const DtnFn& lam_a, const DtnFn& lam_b,
                                           const ReconstructionConfig& cfg, const Field* q_a,
                                           const Field* q_b, int threads) {
  if (g.dim() != 3) throw InvalidArgument("reconstruct_potential: n = 3 required");
  const int K = cfg.k_max;
  const int side = 2 * K + 1;
  const std::size_t mode_count = static_cast<std::size_t>(side) * side * side;
  ReconstructionReport rep;
  rep.modes.resize(mode_count);

  const double rho0 = cfg.rho0();
  parallel_for(mode_count, threads, [&](std::size_t mi) {
    ModeProbe& mode = rep.modes[mi];
    std::size_t rest = mi;
    mode.z[2] = static_cast<int>(rest % side) - K;
    rest /= side;
    mode.z[1] = static_cast<int>(rest % side) - K;
    rest /= side;
    mode.z[0] = static_cast<int>(rest) - K;
    const Vec3 k{2.0 * M_PI * mode.z[0], 2.0 * M_PI * mode.z[1], 2.0 * M_PI * mode.z[2]};
    const double cap = rho_resolution_cap(g, k);
    if (cap < rho0) {
      mode.gated = true;
      return;
    }
    mode.rho = cfg.rho_target > 0.0 ? std::min(cfg.rho_target, cap) : cap;
    mode.h = 1.0 / std::sqrt(0.25 * (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) + mode.rho * mode.rho);
    const ProbeResult pr = probe_fourier_mode(g, lam_a, lam_b, k, mode.rho, cfg, q_a, q_b);
    mode.coeff = pr.estimate;
    mode.volume_side = pr.volume_side;
    mode.has_volume = pr.has_volume;
  });

  // Synthesis p(x) = Re sum_z c_z e^{i 2 pi z . x} over the probed modes.
  rep.recovered = Field(g, Carrier::omega);
  const int N = g.axis_points();
  std::vector<std::vector<C>> axis_phase(static_cast<std::size_t>(2 * K + 1), std::vector<C>(N));
  for (int zv = -K; zv <= K; ++zv)
    for (int i = 0; i < N; ++i)
      axis_phase[zv + K][i] = std::exp(C(0.0, 2.0 * M_PI * zv * i * g.spacing()));
  for (const ModeProbe& mode : rep.modes) {
    if (mode.gated) {
      ++rep.gated_count;
      continue;
    }
    rep.coeff_energy += std::norm(mode.coeff);
    for (std::size_t f = 0; f < rep.recovered.size(); ++f) {
      const auto idx = g.idx(Carrier::omega, f);
      C ph = axis_phase[mode.z[0] + K][idx[0]] * axis_phase[mode.z[1] + K][idx[1]];
      if (g.dim() == 3) ph *= axis_phase[mode.z[2] + K][idx[2]];
      rep.recovered.values[f] += (mode.coeff * ph).real();
    }
  }

  if (q_a && q_b) {
    Field diff(g, Carrier::omega);
    for (std::size_t f = 0; f < diff.size(); ++f)
      diff.values[f] = q_a->values[f] - q_b->values[f];
    rep.truth_energy = inner_product(diff, diff);
    Field err = rep.recovered;
    for (std::size_t f = 0; f < err.size(); ++f) err.values[f] -= diff.values[f];
    const double tn = std::sqrt(std::max(rep.truth_energy, 0.0));
    rep.rel_l2_error = tn > 0.0 ? l2_norm(err) / tn : l2_norm(err);
  }
  return rep;
}

LambdaRecovery recover_aprime(const Grid& g, const Nonlinearity& a, const Nonlinearity& b,
                              const std::vector<double>& lambda_grid,
                              const ReconstructionConfig& cfg, const DtnFactory& factory,
                              int threads) {
  LambdaRecovery out;
  out.lambda_grid = lambda_grid;
  out.aprime_diff.resize(lambda_grid.size());
  out.reports.resize(lambda_grid.size());

  for (std::size_t li = 0; li < lambda_grid.size(); ++li) {
    const BoundaryField f(g, lambda_grid[li]);
    const Field qa = linearized_potential(g, a, f, cfg.solve);
    const Field qb = linearized_potential(g, b, f, cfg.solve);
    DtnFn lam_a = factory ? factory(qa, 0, static_cast<int>(li))
                          : make_schrodinger_dtn(g, qa, cfg.solve, a.class_params().c);
    DtnFn lam_b = factory ? factory(qb, 1, static_cast<int>(li))
                          : make_schrodinger_dtn(g, qb, cfg.solve, b.class_params().c);
    out.reports[li] = reconstruct_potential(g, lam_a, lam_b, cfg, &qa, &qb, threads);
    // On Gamma, u_a(lambda) = lambda exactly, so the boundary trace of the
    // difference field is a'(lambda) - b'(lambda); the shell mean damps the
    // oscillation of the truncated synthesis.
    out.aprime_diff[li] = boundary_shell_mean(out.reports[li].recovered);
  }
  out.a_diff = integrate_aprime(out.aprime_diff, lambda_grid);
  return out;
}

std::vector<double> integrate_aprime(const std::vector<double>& samples,
                                     const std::vector<double>& lambda_grid) {
  if (samples.size() != lambda_grid.size() || samples.size() < 2)
    throw InvalidArgument("integrate_aprime: grid/sample mismatch");
  const double step = lambda_grid[1] - lambda_grid[0];
  long zero_at = -1;
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    if (std::abs(lambda_grid[i]) < 1e-12) zero_at = static_cast<long>(i);
    if (i + 1 < lambda_grid.size() &&
        std::abs(lambda_grid[i + 1] - lambda_grid[i] - step) > 1e-9 * std::max(1.0, std::abs(step)))
      throw InvalidArgument("integrate_aprime: lambda grid must be uniform");
  }
  if (zero_at < 0) throw InvalidArgument("integrate_aprime: lambda grid must contain 0");

  std::vector<double> anti(samples.size(), 0.0);
  for (std::size_t i = zero_at + 1; i < samples.size(); ++i)
    anti[i] = anti[i - 1] + 0.5 * step * (samples[i - 1] + samples[i]);
  for (long i = zero_at - 1; i >= 0; --i)
    anti[i] = anti[i + 1] - 0.5 * step * (samples[i] + samples[i + 1]);
  return anti;
}

double boundary_shell_mean(const Field& p) {
  if (p.carrier != Carrier::omega) throw InvalidArgument("boundary_shell_mean: Omega field expected");
  const Grid& g = p.grid;
  const int N = g.axis_points();
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < p.size(); ++f) {
    const auto idx = g.idx(Carrier::omega, f);
    bool shell = false;
    for (int a = 0; a < g.dim(); ++a)
      if (idx[a] <= 1 || idx[a] >= N - 2) shell = true;
    if (!shell) continue;
    acc += p.values[f];
    ++count;
  }
  return acc / static_cast<double>(count);
}

double stability_modulus(double t, int n, double s, double beta) {
  if (t < 0.0) throw InvalidArgument("stability_modulus: t must be nonnegative");
  if (t == 0.0) return 0.0;
  const double exponent = 2.0 * std::min(0.5, s / n) * beta / (n + 2.0 * beta);
  const double clamped = std::min(t, std::exp(-2.0));
  return std::pow(std::abs(std::log(clamped)), -exponent) + t;
}

}  // namespace dtnlab
