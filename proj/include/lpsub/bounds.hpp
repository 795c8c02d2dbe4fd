#pragma once

// Theoretical constants: the marginal mass function psi of the inlier
// distribution, xi_1, delta_*, the stability radius f with its epsilon range,
// and the zeta_1 / kappa_0 lower bounds for p > 1.

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include <json.hpp>

#include "lpsub/errors.hpp"
#include "lpsub/hlm.hpp"

namespace lpsub {

/// In-subspace distribution mu_1: (1 - atom) * uniform(ball or sphere of
/// radius R in R^d) + atom * delta_0.
struct MuDescriptor {
  Distribution kind = Distribution::UniformBall;
  int dim = 1;
  double radius = 1.0;
  double atom = 0.0;

  void validate() const {
    if (kind == Distribution::CustomBounded) throw ConfigError("psi is only available for uniform-ball/uniform-sphere");
    if (dim < 1) throw ConfigError("distribution dimension must be >= 1");
    if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("radius must be positive");
    if (!(atom >= 0.0 && atom < 1.0)) throw ConfigError("atom mass must lie in [0, 1)");
  }
};

namespace detail {

template <class F>
double simpson_step(const F& f, double a, double b, double fa, double fm, double fb, double whole, double tol,
                    int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double diff = left + right - whole;
  if (depth <= 0 || std::abs(diff) <= 15.0 * tol) return left + right + diff / 15.0;
  return simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

/// Adaptive Simpson quadrature of f over [a, b].
template <class F>
double integrate(const F& f, double a, double b, double tol = 1e-12) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, b, fa, fm, fb, whole, tol, 50);
}

/// Exponent m such that, after s = sin(phi), the marginal density of x.v / R
/// becomes cos(phi)^m: d for the d-ball, d - 2 for the sphere S^(d-1).
inline int marginal_power(const MuDescriptor& mu) {
  if (mu.kind == Distribution::UniformSphere) {
    if (mu.dim < 2) throw ConfigError("uniform-sphere with d = 1 has a two-point marginal; psi is not invertible");
    return mu.dim - 2;
  }
  return mu.dim;
}

/// int_0^(pi/2) cos^m = sqrt(pi) Gamma((m+1)/2) / (2 Gamma(m/2 + 1)).
inline double half_wallis(int m) {
  const double x = static_cast<double>(m);
  return 0.5 * std::sqrt(std::numbers::pi) * std::exp(std::lgamma(0.5 * (x + 1.0)) - std::lgamma(0.5 * x + 1.0));
}

/// Mass of {|x.v| < t} under the atom-free part.
inline double psi_continuous(const MuDescriptor& mu, double t) {
  if (t <= 0.0) return 0.0;
  if (t >= mu.radius) return 1.0;
  const int m = marginal_power(mu);
  const double upper = std::asin(t / mu.radius);
  const double partial = m == 0 ? upper : integrate([m](double phi) { return std::pow(std::cos(phi), m); }, 0.0, upper);
  return std::min(1.0, partial / half_wallis(m));
}

}  // namespace detail

/// psi(t) = mu_1({x : |x.v| < t}) for a unit v in the subspace. At t = 0 the
/// right limit mu_1({0}) is returned.
inline double psi(const MuDescriptor& mu, double t) {
  mu.validate();
  if (t < 0.0 || !std::isfinite(t)) throw ParameterError("psi needs t >= 0");
  if (t >= mu.radius) return 1.0;
  return mu.atom + (1.0 - mu.atom) * detail::psi_continuous(mu, t);
}

/// xi_1 = psi^(-1)((1 + mu_1({0})) / 2), by bisection to an interval width of 1e-12.
inline double xi1(const MuDescriptor& mu) {
  mu.validate();
  detail::marginal_power(mu);
  const double target = 0.5 * (1.0 + mu.atom);
  double lo = 0.0, hi = mu.radius;
  while (hi - lo > 1e-12 * std::max(1.0, mu.radius)) {
    const double mid = 0.5 * (lo + hi);
    (psi(mu, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

/// delta_* = E[(v.x)^2] = (1 - atom) R^2 / (d + 2) for the uniform ball.
inline double delta_star(const MuDescriptor& mu) {
  mu.validate();
  if (mu.kind != Distribution::UniformBall) throw ConfigError("delta_star is only available for uniform-ball");
  return (1.0 - mu.atom) * mu.radius * mu.radius / static_cast<double>(mu.dim + 2);
}

/// The closed form R / (d + 2) as stated for the uniform ball (agrees with
/// delta_star at R = 1 without atom).
inline double delta_star_linear_reading(const MuDescriptor& mu) {
  mu.validate();
  if (mu.kind != Distribution::UniformBall) throw ConfigError("delta_star is only available for uniform-ball");
  return (1.0 - mu.atom) * mu.radius / static_cast<double>(mu.dim + 2);
}

struct StabilityRadius {
  double radius = 0.0;
  /// True when the formula exceeded pi sqrt(d) / 2 and was capped (the ball
  /// is then all of G(D, d)).
  bool capped = false;
};

namespace detail {

inline void check_stability_inputs(double p, int d, int k, double alpha0, double alpha1, double eps) {
  if (!(p > 0.0) || !std::isfinite(p)) throw ParameterError("p must be positive");
  if (d < 1 || k < 1) throw ParameterError("need d >= 1 and K >= 1");
  if (!(eps >= 0.0)) throw ParameterError("eps must be >= 0");
  if (!(alpha0 >= 0.0 && alpha0 < 1.0) || !(alpha1 > 0.0 && alpha1 <= 1.0))
    throw ParameterError("mixture weights out of range");
  if (p > 1.0 && k > 1) throw ParameterError("for p > 1 the stability radius is only available with K = 1");
  if (p <= 1.0 && !(alpha0 + 2.0 * alpha1 - 1.0 > 0.0)) throw ParameterError("need alpha0 + 2 alpha1 - 1 > 0");
}

}  // namespace detail

/// Radius of the geodesic ball around L*_1 containing the global lp subspace.
inline StabilityRadius stability_radius(double p, int d, int k, double alpha0, double alpha1, const MuDescriptor& mu,
                                        double eps) {
  detail::check_stability_inputs(p, d, k, alpha0, alpha1, eps);
  const double sqrt_d = std::sqrt(static_cast<double>(d));
  const double x1 = xi1(mu);
  const double atom_free = std::pow(1.0 - mu.atom, 1.0 / p);
  const double two = std::pow(2.0, (p - 3.0) / p);
  double f;
  if (p <= 1.0) {
    f = std::numbers::pi * sqrt_d * x1 * eps / (std::pow(alpha0 + 2.0 * alpha1 - 1.0, 1.0 / p) * atom_free * two);
  } else {
    f = std::numbers::pi * sqrt_d * x1 * std::pow(p, 1.0 / p) * std::pow(eps, 1.0 / p) /
        (std::pow(alpha1, 1.0 / p) * atom_free * two);
  }
  const double cap = std::numbers::pi * sqrt_d / 2.0;
  if (f >= cap) return {cap, true};
  return {f, false};
}

/// Noise levels below this keep the stability radius under pi sqrt(d) / 2.
/// The p > 1 branch is the stated, conservative form.
inline double eps_upper(double p, int d, int k, double alpha0, double alpha1, const MuDescriptor& mu) {
  detail::check_stability_inputs(p, d, k, alpha0, alpha1, 0.0);
  const double x1 = xi1(mu);
  if (p <= 1.0)
    return std::pow(alpha0 + 2.0 * alpha1 - 1.0, 1.0 / p) * std::pow(1.0 - mu.atom, 1.0 / p) /
           (std::pow(2.0, 3.0 / p) * x1);
  return alpha1 * (1.0 - mu.atom) * std::pow(2.0, p - 3.0) /
         (p * std::pow(std::numbers::pi * std::sqrt(static_cast<double>(d)) * x1, p));
}

/// Lower bound on E dist(x, Lhat)^p for x ~ mu_1 on L_1 when
/// dist_G(L_1, Lhat) > eps: (1 - atom) beta^p eps^p / 2 with
/// beta = 2 xi_1 / (pi sqrt(d)), i.e. (1 - atom) 2^(p-1) xi_1^p eps^p / (pi sqrt(d))^p.
inline double mean_distance_lower_bound(double p, const MuDescriptor& mu, double eps) {
  if (!(p > 0.0)) throw ParameterError("p must be positive");
  const double beta = 2.0 * xi1(mu) / (std::numbers::pi * std::sqrt(static_cast<double>(mu.dim)));
  return (1.0 - mu.atom) * std::pow(beta * eps, p) / 2.0;
}

/// The same bound with xi_1 in the denominator, as commonly stated.
/// statement. It does not follow from the argument above and fails already
/// for the uniform segment (see README).
inline double mean_distance_lower_bound_as_stated(double p, const MuDescriptor& mu, double eps) {
  if (!(p > 0.0)) throw ParameterError("p must be positive");
  return (1.0 - mu.atom) * std::pow(2.0, p - 1.0) * std::pow(eps, p) /
         std::pow(std::numbers::pi * std::sqrt(static_cast<double>(mu.dim)) * xi1(mu), p);
}

/// Lower bound on zeta_1 from |E D_{L*_1, x, p}|_F (p > 1).
inline double zeta1_lower_bound(double p, double expected_d_norm) {
  if (!(p > 1.0)) throw ParameterError("zeta_1 bound needs p > 1");
  if (!(expected_d_norm >= 0.0)) throw ParameterError("norm must be >= 0");
  if (p >= 2.0) return 0.5 * p * expected_d_norm * expected_d_norm;
  return (p - 1.0) * std::pow(p, 1.0 / (p - 1.0)) * std::pow(2.0, (p - 4.0) / (p - 1.0)) *
         std::pow(expected_d_norm, p / (p - 1.0));
}

/// |E D| = alpha2 cos(theta) sin(theta)^(p-1) / (p + 1) for two unit segments
/// in R^2 at angle theta (K = 2, d = 1, alpha0 = 0).
inline double two_segment_expected_d_norm(double p, double alpha2, double theta) {
  return alpha2 * std::cos(theta) * std::pow(std::sin(theta), p - 1.0) / (p + 1.0);
}

namespace detail {

inline void check_kappa_inputs(double p, double alpha2, double theta) {
  if (!(p > 1.0) || !std::isfinite(p)) throw ParameterError("kappa/delta bound needs p > 1");
  if (!(alpha2 >= 0.0 && alpha2 <= 1.0)) throw ParameterError("alpha2 must lie in [0, 1]");
  if (!(theta >= 0.0 && theta <= std::numbers::pi / 2)) throw ParameterError("theta must lie in [0, pi/2]");
}

}  // namespace detail

/// kappa_0 = delta_0 = zeta_1 / (4p), with zeta_1 bounded through |E D|.
inline double kappa_delta_lower_bound_general(double p, double alpha2, double theta) {
  detail::check_kappa_inputs(p, alpha2, theta);
  return zeta1_lower_bound(p, two_segment_expected_d_norm(p, alpha2, theta)) / (4.0 * p);
}

/// The stated piecewise closed form for the two-segment configuration. For
/// p >= 2 it equals kappa_delta_lower_bound_general; for 1 < p < 2 it is
/// returned verbatim (see README).
inline double kappa_delta_lower_bound(double p, double alpha2, double theta) {
  detail::check_kappa_inputs(p, alpha2, theta);
  const double c = std::cos(theta), s = std::sin(theta);
  if (p >= 2.0) return alpha2 * alpha2 * c * c * std::pow(s, 2.0 * (p - 1.0)) / (8.0 * (p + 1.0) * (p + 1.0));
  const double q = p / (p - 1.0);
  return std::pow(2.0, (p - 4.0) / (p - 1.0)) * (p - 1.0) * std::pow(p, 1.0 / (p - 1.0)) *
         std::pow(p + 1.0, (p - 1.0) / p) * std::pow(alpha2, q) * std::pow(s, p) * std::pow(c, q);
}

struct ConstantsInputs {
  double p = 1.0;
  int d = 1;
  int k = 1;
  double alpha0 = 0.0;
  double alpha1 = 1.0;
  MuDescriptor mu;
  double eps = 0.0;
  /// Two-segment phase-transition inputs (used when p > 1).
  std::optional<double> alpha2;
  std::optional<double> theta;
};

struct ConstantsReport {
  ConstantsInputs inputs;
  double xi1 = 0.0;
  std::optional<double> delta_star;
  std::optional<double> delta_star_linear;
  std::optional<double> f;
  bool f_capped = false;
  std::optional<double> eps_upper;
  std::optional<double> zeta1_lower;
  std::optional<double> kappa0_lower;
  std::optional<double> kappa0_lower_general;
};

/// Every constant defined for the given inputs; regimes outside a formula's
/// hypotheses leave the field empty.
inline ConstantsReport compute_constants(const ConstantsInputs& in) {
  ConstantsReport r;
  r.inputs = in;
  in.mu.validate();
  if (in.mu.dim != in.d) throw ParameterError("descriptor dimension must equal d");
  r.xi1 = xi1(in.mu);
  if (in.mu.kind == Distribution::UniformBall) {
    r.delta_star = delta_star(in.mu);
    r.delta_star_linear = delta_star_linear_reading(in.mu);
  }
  const bool f_regime = (in.p <= 1.0 && in.alpha0 + 2.0 * in.alpha1 - 1.0 > 0.0) || (in.p > 1.0 && in.k == 1);
  if (f_regime) {
    const auto f = stability_radius(in.p, in.d, in.k, in.alpha0, in.alpha1, in.mu, in.eps);
    r.f = f.radius;
    r.f_capped = f.capped;
    r.eps_upper = eps_upper(in.p, in.d, in.k, in.alpha0, in.alpha1, in.mu);
  }
  if (in.p > 1.0 && in.alpha2 && in.theta) {
    r.zeta1_lower = zeta1_lower_bound(in.p, two_segment_expected_d_norm(in.p, *in.alpha2, *in.theta));
    r.kappa0_lower = kappa_delta_lower_bound(in.p, *in.alpha2, *in.theta);
    r.kappa0_lower_general = kappa_delta_lower_bound_general(in.p, *in.alpha2, *in.theta);
  }
  return r;
}

inline nlohmann::json to_json(const ConstantsReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json inputs = {{"p", r.inputs.p},
                           {"d", r.inputs.d},
                           {"K", r.inputs.k},
                           {"alpha0", r.inputs.alpha0},
                           {"alpha1", r.inputs.alpha1},
                           {"eps", r.inputs.eps},
                           {"mu1",
                            {{"distribution", to_string(r.inputs.mu.kind)},
                             {"dim", r.inputs.mu.dim},
                             {"radius", r.inputs.mu.radius},
                             {"atom", r.inputs.mu.atom}}},
                           {"alpha2", opt(r.inputs.alpha2)},
                           {"theta", opt(r.inputs.theta)}};
  return {{"inputs", inputs},
          {"xi1", r.xi1},
          {"delta_star", opt(r.delta_star)},
          {"delta_star_linear_reading", opt(r.delta_star_linear)},
          {"f", opt(r.f)},
          {"f_capped", r.f_capped},
          {"eps_upper", opt(r.eps_upper)},
          {"zeta1_lower", opt(r.zeta1_lower)},
          {"kappa0_lower", opt(r.kappa0_lower)},
          {"kappa0_lower_general", opt(r.kappa0_lower_general)}};
}

}  // namespace lpsub
