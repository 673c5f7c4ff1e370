#include "parab/transform.hpp"

#include <cmath>

namespace parab {

CutoffW::Value CutoffW::eval(double t) const {
  if (t < t0) throw ContractError("CutoffW: t < t0");
  const double u = t - t0;
  if (u >= 1.0) return {0.0, 0.0, 0.0};
  const double u2 = u * u, u3 = u2 * u, u4 = u3 * u, u5 = u4 * u;
  return {1.0 - (10.0 * u3 - 15.0 * u4 + 6.0 * u5),
          -(30.0 * u2 - 60.0 * u3 + 30.0 * u4),
          -(60.0 * u - 180.0 * u2 + 120.0 * u3)};
}

double omega_from(double alpha, double u_value) {
  return std::pow((alpha + 2.0) * (alpha + 2.0) * u_value / 2.0, 1.0 / (alpha + 2.0));
}

double select_t0(double R, double eta, double omega, double alpha) {
  if (!(R > 0.0)) throw ContractError("select_t0: R must be positive");
  if (!(eta > 0.0 && eta < 1.0)) throw ContractError("select_t0: eta must lie in ]0,1[");
  const double p = 2.0 / (alpha + 2.0);
  const double s = (2.0 - alpha) / (2.0 * (alpha + 2.0));
  // Closed-form inversions of the two constraints.
  double lo = 1.0;
  lo = std::max(lo, std::pow(2.0 * R / omega, 1.0 / p));
  if (eta > 1.0 / 3.0)  // angle constraint active only past its t0=1 value
    lo = std::max(lo, std::pow((1.0 + eta) / (2.0 * (1.0 - eta)), 1.0 / s));
  double t0 = std::ceil(lo * 100.0 - 1e-9) / 100.0;
  auto ok = [&](double t) {
    return omega / 2.0 * std::pow(t, p) > R &&
           (2.0 * std::pow(t, s) - 1.0) / (2.0 * std::pow(t, s) + 1.0) > eta;
  };
  while (!ok(t0)) t0 += 0.01;
  return t0;
}

ScalingParams ScalingParams::make(double epsilon, Vector sigma, double t0,
                                  const CentralConfiguration& cc,
                                  const MassMetric& metric) {
  if (!(epsilon >= 0.0 && epsilon < 1.0))
    throw ContractError("ScalingParams: epsilon must lie in [0,1[");
  if (!(t0 >= 1.0)) throw ContractError("ScalingParams: t0 must be >= 1");
  ScalingParams sp;
  sp.epsilon = epsilon;
  sp.sigma = std::move(sigma);
  sp.t0 = t0;
  sp.alpha = cc.alpha;
  sp.omega = omega_from(cc.alpha, cc.u_value);
  sp.xi_plus = cc.xi_plus;
  sp.metric = metric;
  return sp;
}

Curve2 y_sigma_eval(const ScalingParams& sp, double t) {
  if (t < sp.t0) throw ContractError("y_sigma_eval: t < t0");
  const double p = 2.0 / (sp.alpha + 2.0);
  Curve2 c;
  const double tp = std::pow(t, p);
  c.y = sp.omega * tp * sp.xi_plus;
  c.yd = sp.omega * p * tp / t * sp.xi_plus;
  c.ydd = sp.omega * p * (p - 1.0) * tp / (t * t) * sp.xi_plus;
  if (sp.sigma.size() == sp.xi_plus.size() && sp.sigma.squaredNorm() > 0.0) {
    const CutoffW::Value w = sp.cutoff().eval(t);
    c.y += sp.sigma * w.w;
    c.yd += sp.sigma * w.wd;
    c.ydd += sp.sigma * w.wdd;
  }
  return c;
}

Eval2 scaled_perturbation(const ScalingParams& sp, const PerturbationSpec& w, double t,
                          const Vector& y) {
  Eval2 out;
  if (sp.epsilon == 0.0) {
    out.value = 0.0;
    out.grad = Vector::Zero(y.size());
    out.hess = Matrix::Zero(y.size(), y.size());
    return out;
  }
  const double a = sp.alpha;
  const double space = std::pow(sp.epsilon, 3.0 / (2.0 + a));
  const double time = std::pow(sp.epsilon, 1.5);
  const Vector x = y / space;
  if (!w.validity_cone().contains(x))
    throw DomainError("scaled_perturbation: unscaled point outside validity cone");
  const double tau = (t - sp.t0) / time;
  const double f0 = std::pow(sp.epsilon, -3.0 * a / (2.0 + a));
  out = w.eval(tau, x);
  out.value *= f0;
  out.grad *= f0 / space;
  out.hess *= f0 / (space * space);
  return out;
}

namespace {

Eval2 u_eps_eval(const ScalingParams& sp, const PotentialSpec& p,
                 const PerturbationSpec* w, double t, const Vector& y) {
  Eval2 e = p.eval(y);
  if (w != nullptr && sp.epsilon > 0.0) {
    const Eval2 we = scaled_perturbation(sp, *w, t, y);
    e.value += we.value;
    e.grad += we.grad;
    e.hess += we.hess;
  }
  return e;
}

}  // namespace

Vector forcing_h(const ScalingParams& sp, const PotentialSpec& p,
                 const PerturbationSpec* w, double t) {
  const Curve2 c = y_sigma_eval(sp, t);
  const Eval2 e = u_eps_eval(sp, p, w, t, c.y);
  return c.ydd - e.grad;
}

Eval2 remainder_K(const ScalingParams& sp, const PotentialSpec& p,
                  const PerturbationSpec* w, double t, const Vector& phi) {
  const Curve2 c = y_sigma_eval(sp, t);
  const Eval2 base = u_eps_eval(sp, p, w, t, c.y);
  const Eval2 shifted = u_eps_eval(sp, p, w, t, c.y + phi);
  Eval2 k;
  k.value = shifted.value - base.value - sp.metric.inner(base.grad, phi);
  k.grad = shifted.grad - base.grad;
  k.hess = shifted.hess;
  return k;
}

ScalingParams params_from_initial(const Vector& x0, const CentralConfiguration& cc,
                                  double alpha, const MassMetric& metric, double t0) {
  const double proj = metric.inner(x0, cc.xi_plus);
  if (!(proj > 0.0))
    throw ContractError("params_from_initial: x0 not in the forward half-space");
  const double omega = omega_from(alpha, cc.u_value);
  const double eps = std::pow(omega / proj, (2.0 + alpha) / 3.0);
  if (!(eps < 1.0))
    throw ContractError("params_from_initial: x0 too close to the origin (epsilon >= 1)");
  Vector sigma = omega * (x0 / proj - cc.xi_plus);
  return ScalingParams::make(eps, std::move(sigma), t0, cc, metric);
}

Vector initial_from_params(const ScalingParams& sp) {
  const double scale = std::pow(sp.epsilon, -3.0 / (2.0 + sp.alpha));
  Vector s = sp.sigma.size() == sp.xi_plus.size() ? sp.sigma
                                                  : Vector::Zero(sp.xi_plus.size());
  return scale * (sp.omega * sp.xi_plus + s);
}

ConeRegion admissible_cone(const CentralConfiguration& cc, const MassMetric& metric,
                           double eps_star, double r_star, double R, double eta) {
  if (!(eps_star > 0.0 && eps_star < 1.0))
    throw ContractError("admissible_cone: eps* must lie in ]0,1[");
  if (!(r_star > 0.0)) throw ContractError("admissible_cone: r* must be positive");
  const double omega = omega_from(cc.alpha, cc.u_value);
  const double hyp = std::sqrt(omega * omega + r_star * r_star);
  const double r_prime =
      std::max(std::pow(eps_star, -3.0 / (2.0 + cc.alpha)) * hyp, R);
  const double eta_prime = std::max(eta, omega / hyp);
  return ConeRegion(metric, cc.xi_plus, r_prime, eta_prime);
}

double stima_lower_bound(const ScalingParams& sp, double t) {
  return sp.omega / 2.0 * std::pow(t, 2.0 / (sp.alpha + 2.0));
}

double cone_angle_bound(double alpha, double t) {
  const double s = (2.0 - alpha) / (2.0 * (alpha + 2.0));
  const double ts = std::pow(t, s);
  return (2.0 * ts - 1.0) / (2.0 * ts + 1.0);
}

}  // namespace parab
