#pragma once

#include "parab/central_config.hpp"
#include "parab/potential.hpp"

namespace parab {

/// C^2 cutoff supported on [t0, t0+1] with w(t0) = 1 and flat ends: the
/// quintic smoothstep (value and first two derivatives vanish at t0+1, first
/// two derivatives vanish at t0). max |w| = 1.
struct CutoffW {
  double t0 = 1.0;

  struct Value {
    double w, wd, wdd;
  };

  Value eval(double t) const;
  static constexpr double max_abs() { return 1.0; }
};

/// Smallest t0 >= 1 (rounded up to 2 decimals) satisfying both inequalities
///   (omega/2) t0^{2/(alpha+2)} > R
///   (2 t0^s - 1)/(2 t0^s + 1) > eta,   s = (2-alpha)/(2(alpha+2));
/// both are rechecked after rounding.
double select_t0(double R, double eta, double omega, double alpha);

/// omega = ((alpha+2)^2 U(xi+)/2)^{1/(alpha+2)}, the homothetic speed scale.
double omega_from(double alpha, double u_value);

/// Parameters of the transformed problem: epsilon scaling, sigma shift,
/// truncation start t0, homothetic scale omega, and the trust radii
/// r = omega/(4 max|w|), rho = omega/4 inside which the cone estimates hold.
struct ScalingParams {
  double epsilon = 0.0;
  Vector sigma;
  double t0 = 1.0;
  double omega = 1.0;
  Vector xi_plus;
  double alpha = 1.0;
  MassMetric metric;

  double trust_radius_sigma() const { return omega / (4.0 * CutoffW::max_abs()); }
  double trust_radius_phi() const { return omega / 4.0; }
  CutoffW cutoff() const { return CutoffW{t0}; }

  static ScalingParams make(double epsilon, Vector sigma, double t0,
                            const CentralConfiguration& cc, const MassMetric& metric);
};

struct Curve2 {
  Vector y, yd, ydd;
};

/// y_sigma(t) = omega t^{2/(alpha+2)} xi+ + sigma w(t), with time derivatives.
Curve2 y_sigma_eval(const ScalingParams& sp, double t);

/// W_eps(t,y) = eps^{-3a/(2+a)} W((t-t0)/eps^{3/2}, y/eps^{3/(2+a)}), with the
/// chain-rule factors on the derivatives; identically zero for eps = 0.
/// The unscaled point must lie in the perturbation's validity cone.
Eval2 scaled_perturbation(const ScalingParams& sp, const PerturbationSpec& w, double t,
                          const Vector& y);

/// h_{eps,sigma}(t) = ydd_sigma(t) - grad U_eps(t, y_sigma(t)).
Vector forcing_h(const ScalingParams& sp, const PotentialSpec& p,
                 const PerturbationSpec* w, double t);

/// Second-order Taylor remainder of U_eps around y_sigma(t):
///   K(t,phi)      = U_eps(t, y_sigma + phi) - U_eps(t, y_sigma) - <grad U_eps, phi>
///   grad K(t,phi) = grad U_eps(t, y_sigma + phi) - grad U_eps(t, y_sigma)
///   hess K(t,phi) = hess U_eps(t, y_sigma + phi)
Eval2 remainder_K(const ScalingParams& sp, const PotentialSpec& p,
                  const PerturbationSpec* w, double t, const Vector& phi);

/// eps = (omega/<x0,xi+>)^{(2+alpha)/3}, sigma = omega (x0/<x0,xi+> - xi+);
/// the inverse of initial_from_params. Requires <x0,xi+> > 0.
ScalingParams params_from_initial(const Vector& x0, const CentralConfiguration& cc,
                                  double alpha, const MassMetric& metric, double t0);

/// x0 = eps^{-3/(2+alpha)} (omega xi+ + sigma).
Vector initial_from_params(const ScalingParams& sp);

/// Guaranteed cone T(xi+, R', eta') whose points map into
/// ]0,eps*[ x B_{r*} under params_from_initial:
///   R'   = max{ (eps*)^{-3/(2+alpha)} sqrt(omega^2 + r*^2), R }
///   eta' = max{ eta, omega / sqrt(omega^2 + r*^2) }.
ConeRegion admissible_cone(const CentralConfiguration& cc, const MassMetric& metric,
                           double eps_star, double r_star, double R, double eta);

/// Lower bound of Lemma "stima": |y_sigma(t) + phi(t)| >= (omega/2) t^{2/(a+2)}.
double stima_lower_bound(const ScalingParams& sp, double t);

/// Right-hand side of the cone-angle bound (2 t^s - 1)/(2 t^s + 1).
double cone_angle_bound(double alpha, double t);

}  // namespace parab
