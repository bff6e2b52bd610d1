#pragma once

#include <functional>
#include <memory>
#include <string>

namespace dtnlab {

/// Class constants of the admissible set: growth |a(t)| <= c0 + c1*|t|^alpha,
/// derivative floor a'(t) >= -c with 0 <= c below the first Dirichlet
/// eigenvalue (checked at solver entry against the grid in use).
struct ClassParams {
  double c0 = 1.0;
  double c1 = 1.0;
  double c = 0.0;
  double alpha = 1.0;
};

struct SamplingPlan {
  double range = 8.0;   // certify over [-range, range]
  int samples = 2048;   // >= 1000
};

struct ValidationReport {
  bool growth_ok = false;      // |a(t)| <= c0 + c1|t|^alpha
  bool derivative_ok = false;  // a'(t) >= -c
  bool lipschitz_ok = false;   // |a'(u)-a'(v)| <= kappa_R |u-v|
  double growth_margin = 0.0;  // min over samples of bound - |a|
  double derivative_margin = 0.0;
  double lipschitz_margin = 0.0;
  bool pass() const { return growth_ok && derivative_ok && lipschitz_ok; }
};

/// A scalar nonlinearity a with derivative a', its class constants, and the
/// local Lipschitz modulus of a' on [-R, R]. Instances come from the
/// parametric registry below so the class conditions stay certifiable.
class Nonlinearity {
 public:
  double operator()(double t) const { return a_(t); }
  double deriv(double t) const { return da_(t); }
  double lipschitz(double R) const { return kappa_(R); }
  double at_zero() const { return a_(0.0); }
  const ClassParams& class_params() const { return params_; }
  const std::string& family() const { return family_; }

  /// Cached certification with the default sampling plan; solver entry points
  /// refuse nonlinearities that fail.
  bool certified() const;

  // Registry families. Documented class constants:
  //   zero:          a = 0                    (alpha 1, c0 = c1 umbrella values)
  //   linear(k):     a = -k t, needs k <= c   (alpha 1, c1 >= k, kappa = 0)
  //   cubic(s):      a = s t^3, s >= 0        (alpha 3, c1 >= s, kappa_R = 6 s R)
  //   cubic_linear:  a = s t^3 + m t, m >= 0  (alpha 3, c0 >= m, c1 >= s+m)
  //   tanh_sat(b,w): a = b tanh(w t), b,w >= 0 (alpha 0, c0 >= b, kappa = 0.77 b w^2)
  //   clamped(s,T):  cubic matched to linear growth past |t| = T (alpha 1)
  static Nonlinearity zero();
  static Nonlinearity linear(double k, double c_margin = 0.05);
  static Nonlinearity cubic(double scale);
  static Nonlinearity cubic_linear(double scale, double linear_coef);
  static Nonlinearity tanh_sat(double amplitude, double slope);
  static Nonlinearity clamped(double scale, double threshold);

  /// Builds a family from registry name + parameters (the JSON config hook).
  static Nonlinearity from_registry(const std::string& family, double p0, double p1);

  Nonlinearity(std::string family, std::function<double(double)> a, std::function<double(double)> da,
               std::function<double(double)> kappa, ClassParams params);

 private:
  std::string family_;
  std::function<double(double)> a_, da_, kappa_;
  ClassParams params_;
  std::shared_ptr<bool> certified_cache_;
};

/// Samples the class conditions over [-R, R]: growth and derivative floor
/// pointwise, the Lipschitz condition on consecutive sample pairs. Reports
/// worst margins; a violation is a fail report, not an exception.
ValidationReport validate_class(const Nonlinearity& a, const SamplingPlan& plan = {});

/// max |a| over [-j, j], sampled on at least 4096 points.
double seminorm_p(const Nonlinearity& a, int j, int samples = 4096);

/// d(a, b) = sup_{|t|<=1} |a-b| + sup_{|t|>=1} |t^-alpha (a-b)|. The second
/// sup is sampled log-uniformly on [1, t_max]; past t_max the growth bound
/// caps the integrand by (2 c0) t_max^-alpha + |c1_a - c1_b|-type terms, which
/// the registry families keep below the sampled maximum.
double distance_d(const Nonlinearity& a, const Nonlinearity& b, double alpha, double t_max = 1e3,
                  int samples = 4096);

}  // namespace dtnlab
