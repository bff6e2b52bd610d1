#include "dtnlab/nonlinearity.hpp"

#include <algorithm>
#include <cmath>

#include "dtnlab/errors.hpp"

namespace dtnlab {

Nonlinearity::Nonlinearity(std::string family, std::function<double(double)> a,
                           std::function<double(double)> da, std::function<double(double)> kappa,
                           ClassParams params)
    : family_(std::move(family)),
      a_(std::move(a)),
      da_(std::move(da)),
      kappa_(std::move(kappa)),
      params_(params),
      certified_cache_(std::make_shared<bool>(false)) {
  *certified_cache_ = validate_class(*this).pass();
}

bool Nonlinearity::certified() const { return *certified_cache_; }

Nonlinearity Nonlinearity::zero() {
  return Nonlinearity("zero", [](double) { return 0.0; }, [](double) { return 0.0; },
                      [](double) { return 0.0; }, ClassParams{1.0, 1.0, 0.0, 1.0});
}

Nonlinearity Nonlinearity::linear(double k, double c_margin) {
  if (k < 0.0) throw InvalidArgument("linear family: k must be nonnegative");
  ClassParams p{std::max(1e-6, 0.1 * k), std::max(k, 1e-6), k + c_margin, 1.0};
  return Nonlinearity("linear", [k](double t) { return -k * t; }, [k](double) { return -k; },
                      [](double) { return 0.0; }, p);
}

Nonlinearity Nonlinearity::cubic(double scale) {
  if (scale < 0.0) throw InvalidArgument("cubic family: scale must be nonnegative");
  ClassParams p{1e-6, std::max(scale, 1e-6), 0.0, 3.0};
  return Nonlinearity("cubic", [scale](double t) { return scale * t * t * t; },
                      [scale](double t) { return 3.0 * scale * t * t; },
                      [scale](double R) { return 6.0 * scale * R; }, p);
}

Nonlinearity Nonlinearity::cubic_linear(double scale, double linear_coef) {
  if (scale < 0.0 || linear_coef < 0.0)
    throw InvalidArgument("cubic_linear family: coefficients must be nonnegative");
  ClassParams p{std::max(linear_coef, 1e-6), std::max(scale + linear_coef, 1e-6), 0.0, 3.0};
  return Nonlinearity("cubic_linear",
                      [scale, linear_coef](double t) { return scale * t * t * t + linear_coef * t; },
                      [scale, linear_coef](double t) { return 3.0 * scale * t * t + linear_coef; },
                      [scale](double R) { return 6.0 * scale * R; }, p);
}

Nonlinearity Nonlinearity::tanh_sat(double amplitude, double slope) {
  if (amplitude < 0.0 || slope < 0.0) throw InvalidArgument("tanh family: parameters must be nonnegative");
  // |a''| = b w^2 |2 sech^2 tanh| <= b w^2 * 4/(3 sqrt(3))
  const double kappa = amplitude * slope * slope * 4.0 / (3.0 * std::sqrt(3.0));
  ClassParams p{std::max(amplitude, 1e-6), 1e-6, 0.0, 0.0};
  return Nonlinearity("tanh_sat",
                      [amplitude, slope](double t) { return amplitude * std::tanh(slope * t); },
                      [amplitude, slope](double t) {
                        const double c = std::cosh(std::min(30.0, std::abs(slope * t)));
                        return amplitude * slope / (c * c);
                      },
                      [kappa](double) { return kappa; }, p);
}

Nonlinearity Nonlinearity::clamped(double scale, double threshold) {
  if (scale < 0.0 || threshold <= 0.0) throw InvalidArgument("clamped family: bad parameters");
  const double T = threshold;
  ClassParams p{std::max(2.0 * scale * T * T * T, 1e-6), std::max(3.0 * scale * T * T, 1e-6), 0.0, 1.0};
  return Nonlinearity("clamped",
                      [scale, T](double t) {
                        if (std::abs(t) <= T) return scale * t * t * t;
                        const double sgn = t > 0.0 ? 1.0 : -1.0;
                        return scale * (3.0 * T * T * t - 2.0 * T * T * T * sgn);
                      },
                      [scale, T](double t) {
                        const double u = std::min(std::abs(t), T);
                        return 3.0 * scale * u * u;
                      },
                      [scale, T](double R) { return 6.0 * scale * std::min(R, T); }, p);
}

Nonlinearity Nonlinearity::from_registry(const std::string& family, double p0, double p1) {
  if (family == "zero") return zero();
  if (family == "linear") return linear(p0, p1 > 0.0 ? p1 : 0.05);
  if (family == "cubic") return cubic(p0);
  if (family == "cubic_linear") return cubic_linear(p0, p1);
  if (family == "tanh_sat") return tanh_sat(p0, p1);
  if (family == "clamped") return clamped(p0, p1);
  throw InvalidArgument("unknown nonlinearity family: " + family);
}

ValidationReport validate_class(const Nonlinearity& a, const SamplingPlan& plan) {
  if (plan.samples < 1000) throw InvalidArgument("validate_class: need at least 1000 samples");
  const ClassParams& p = a.class_params();
  ValidationReport rep;
  rep.growth_margin = std::numeric_limits<double>::infinity();
  rep.derivative_margin = std::numeric_limits<double>::infinity();
  rep.lipschitz_margin = std::numeric_limits<double>::infinity();

  const double R = plan.range;
  const int m = plan.samples;
  const double kappa = a.lipschitz(R);
  double prev_t = -R, prev_da = a.deriv(-R);
  for (int i = 0; i <= m; ++i) {
    const double t = -R + 2.0 * R * i / m;
    const double at = a(t);
    const double da = a.deriv(t);
    rep.growth_margin = std::min(rep.growth_margin, p.c0 + p.c1 * std::pow(std::abs(t), p.alpha) - std::abs(at));
    rep.derivative_margin = std::min(rep.derivative_margin, da + p.c);
    if (i > 0) {
      const double slack = kappa * (t - prev_t) - std::abs(da - prev_da) + 1e-15;
      rep.lipschitz_margin = std::min(rep.lipschitz_margin, slack);
    }
    prev_t = t;
    prev_da = da;
  }
  rep.growth_ok = rep.growth_margin >= -1e-12;
  rep.derivative_ok = rep.derivative_margin >= -1e-12;
  rep.lipschitz_ok = rep.lipschitz_margin >= -1e-12;
  return rep;
}

double seminorm_p(const Nonlinearity& a, int j, int samples) {
  if (j < 1) throw InvalidArgument("seminorm_p: j must be >= 1");
  samples = std::max(samples, 4096);
  double best = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double t = -j + 2.0 * j * static_cast<double>(i) / samples;
    best = std::max(best, std::abs(a(t)));
  }
  return best;
}

double distance_d(const Nonlinearity& a, const Nonlinearity& b, double alpha, double t_max,
                  int samples) {
  double core = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double t = -1.0 + 2.0 * static_cast<double>(i) / samples;
    core = std::max(core, std::abs(a(t) - b(t)));
  }
  double tail = 0.0;
  const double lmax = std::log(t_max);
  for (int i = 0; i <= samples; ++i) {
    const double t = std::exp(lmax * static_cast<double>(i) / samples);  // [1, t_max] log grid
    const double w = std::pow(t, -alpha);
    tail = std::max(tail, w * std::abs(a(t) - b(t)));
    tail = std::max(tail, w * std::abs(a(-t) - b(-t)));
  }
  return core + tail;
}

}  // namespace dtnlab
