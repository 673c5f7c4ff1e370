#include "parab/orbit.hpp"

#include <cmath>
#include <fstream>

#include "parab/rk.hpp"

namespace parab {

namespace {

/// Log-spaced sample grid on [lo, hi].
std::vector<double> log_grid(double lo, double hi, int per_decade) {
  std::vector<double> out;
  const double decades = std::log10(hi / lo);
  const int n = std::max(2, int(std::ceil(decades * per_decade)));
  for (int i = 0; i <= n; ++i) out.push_back(lo * std::pow(hi / lo, double(i) / n));
  out.back() = hi;
  return out;
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = double(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

std::pair<Vector, Vector> ParabolicOrbit::state_transformed(double t_y) const {
  const Curve2 c = y_sigma_eval(params, t_y);
  return {c.y + phi.eval(t_y), c.yd + phi.deriv(t_y)};
}

std::pair<Vector, Vector> ParabolicOrbit::state(double t) const {
  if (y_frame_only) return state_transformed(t);
  const double a = params.alpha;
  const double space = std::pow(params.epsilon, -3.0 / (2.0 + a));
  const double time = std::pow(params.epsilon, 1.5);
  auto [y, yd] = state_transformed(time * t + params.t0);
  return {space * y, space * time * yd};
}

ParabolicOrbit reconstruct_orbit(const SolveResult& sr, const ActionProblem& ap) {
  ParabolicOrbit po;
  po.params = ap.params;
  po.phi = sr.phi;
  po.y_frame_only = (ap.params.epsilon == 0.0);
  if (po.y_frame_only) {
    po.t_phys_end = ap.mesh->horizon();
    po.x0 = po.state_transformed(ap.params.t0).first;
  } else {
    po.t_phys_end =
        (ap.mesh->horizon() - ap.params.t0) / std::pow(ap.params.epsilon, 1.5);
    po.x0 = initial_from_params(ap.params);
  }
  return po;
}

LemmaBounds lemma_bounds_report(const ParabolicOrbit& po, const ActionProblem& ap) {
  LemmaBounds lb;
  const MassMetric& metric = ap.potential.metric();
  const ScalingParams& sp = po.params;
  const double alpha = ap.potential.alpha();
  const double beta = ap.perturbation ? ap.perturbation->beta() : 2.0;

  lb.stima_lower_ok = true;
  lb.stima_angle_ok = true;
  std::vector<double> log_t, log_h;
  double ck1 = 0.0, ck2 = 0.0, ck3 = 0.0, csec = 0.0;
  for (Eigen::Index k = 0; k < ap.mesh->node_count(); ++k) {
    const double t = ap.mesh->node(k);
    const Curve2 ys = y_sigma_eval(sp, t);
    const Vector phit = po.phi.value_at_node(k);
    const Vector z = ys.y + phit;
    const double zn = metric.norm(z);
    if (!(zn >= stima_lower_bound(sp, t) * (1.0 - 1e-12))) lb.stima_lower_ok = false;
    if (!(metric.inner(z / zn, sp.xi_plus) > cone_angle_bound(alpha, t) - 1e-12))
      lb.stima_angle_ok = false;

    const Vector h = forcing_h(sp, ap.potential, ap.perturbation_ptr(), t);
    const double hn = metric.norm(h);
    if (t >= sp.t0 + 1.0 && hn > 1e-300) {
      log_t.push_back(std::log(t));
      log_h.push_back(std::log(hn));
    }

    const Eval2 kk = remainder_K(sp, ap.potential, ap.perturbation_ptr(), t, phit);
    const double pn = metric.norm(phit);
    if (pn > 1e-8) {
      ck1 = std::max(ck1, std::abs(kk.value) * t * t / (pn * pn));
      ck2 = std::max(ck2, metric.norm(kk.grad) * t * t / pn);
    }
    ck3 = std::max(ck3, metric.operator_norm_of_mass_hessian(kk.hess) * t * t);

    // fitted C'' of |grad U_eps(t,y)| <= C''/|y|^{alpha+1} along the orbit
    const Eval2 ue = [&] {
      Eval2 e = ap.potential.eval(z);
      if (ap.perturbation && sp.epsilon > 0.0) {
        const Eval2 we = scaled_perturbation(sp, *ap.perturbation, t, z);
        e.value += we.value;
        e.grad += we.grad;
        e.hess += we.hess;
      }
      return e;
    }();
    csec = std::max(csec, metric.norm(ue.grad) * std::pow(zn, alpha + 1.0));
  }
  lb.c_k1 = ck1;
  lb.c_k2 = ck2;
  lb.c_k3 = ck3;
  lb.c_second = csec;
  lb.k_constants_finite =
      std::isfinite(ck1) && std::isfinite(ck2) && std::isfinite(ck3);

  lb.h_slope_applicable = log_t.size() >= 8;
  if (lb.h_slope_applicable) {
    lb.h_slope = fit_slope(log_t, log_h);
    lb.h_slope_ok = lb.h_slope <= -2.0 * (beta + 1.0) / (alpha + 2.0) + 0.1;
  }

  // ydot tail against the integrated |yddot| bound of the parabolicity proof.
  const double big_t = ap.mesh->horizon();
  const auto [y_end, yd_end] = po.state_transformed(big_t);
  const double bound = std::pow(2.0, alpha + 1.0) * csec / std::pow(sp.omega, alpha + 1.0) *
                       (alpha + 2.0) / alpha * std::pow(big_t, -alpha / (alpha + 2.0));
  lb.ydot_tail_ok = metric.norm(yd_end) <= bound * (1.0 + 1e-9);
  return lb;
}

VerificationReport verify_orbit(const ParabolicOrbit& po, const ActionProblem& ap,
                                const VerifyOptions& opts) {
  VerificationReport rep;
  rep.frame = opts.frame;
  const MassMetric& metric = ap.potential.metric();
  const ScalingParams& sp = po.params;
  const double alpha = ap.potential.alpha();
  const Eigen::Index d = ap.dim();

  const bool physical = (opts.frame == VerifyFrame::Physical) && !po.y_frame_only;

  // Documented sample grid (log-spaced; the transformed frame starts at t0).
  double t_begin, t_end;
  if (physical) {
    t_begin = std::min(1.0, po.t_phys_end * 1e-6);
    t_end = po.t_phys_end;
  } else {
    t_begin = sp.t0 * (1.0 + 1e-9);
    t_end = ap.mesh->horizon();
  }
  rep.sample_times = log_grid(t_begin, t_end, opts.samples_per_decade);

  // Reference states from the reconstruction.
  auto rec_state = [&](double t) {
    return physical ? po.state(t) : po.state_transformed(t);
  };

  // Independent integration of the second-order equation in first-order form.
  auto rhs = [&](double t, const Vector& s) {
    Vector out(2 * d);
    const Vector x = s.head(d);
    out.head(d) = s.tail(d);
    if (physical) {
      Vector acc = ap.potential.eval(x).grad;
      if (ap.perturbation) acc += ap.perturbation->eval(t, x).grad;
      out.tail(d) = acc;
    } else {
      Vector acc = ap.potential.eval(x).grad;
      if (ap.perturbation && sp.epsilon > 0.0)
        acc += scaled_perturbation(sp, *ap.perturbation, t, x).grad;
      out.tail(d) = acc;
    }
    return out;
  };

  const double t_start = physical ? 0.0 : sp.t0;
  Vector s0(2 * d);
  {
    const auto [x_init, xd_init] = rec_state(t_start);
    s0.head(d) = x_init;
    s0.tail(d) = xd_init;
  }

  Dopri5 integrator(rhs, opts.rtol, opts.atol);
  std::vector<Vector> rk_states;
  rk_states.reserve(rep.sample_times.size());
  try {
    integrator.integrate(t_start, s0, t_end, rep.sample_times,
                         [&](double, const Vector& s) { rk_states.push_back(s); });
  } catch (const SolveError&) {
    // Integrator failure (near-collision) is reported, not fatal.
  }
  rep.integrator_steps = integrator.last_step_count();

  const double omega = sp.omega;
  const double p = 2.0 / (alpha + 2.0);
  for (size_t i = 0; i < rep.sample_times.size(); ++i) {
    const double t = rep.sample_times[i];
    const auto [x, xd] = rec_state(t);
    const double xn = metric.norm(x);
    rep.radial_ratio.push_back(xn / (omega * std::pow(t, p)));
    rep.speed_tail.push_back(metric.norm(xd));
    rep.direction_tail.push_back(metric.inner(x / xn, sp.xi_plus));
    if (i < rk_states.size()) {
      const Vector gap = x - rk_states[i].head(d);
      const double rel = metric.norm(gap) / std::max(1.0, metric.norm(rk_states[i].head(d)));
      rep.rel_gap.push_back(rel);
      rep.ode_deviation = std::max(rep.ode_deviation, rel);
      if (t <= 10.0) rep.first_decade_deviation = std::max(rep.first_decade_deviation, rel);
    }
  }

  // Tail-window trends on [t_end/10, t_end].
  rep.final_speed = rep.speed_tail.back();
  rep.final_direction_gap = 1.0 - rep.direction_tail.back();
  rep.speed_trend_ok = true;
  rep.direction_trend_ok = true;
  for (size_t i = 1; i < rep.sample_times.size(); ++i) {
    if (rep.sample_times[i] < t_end / 10.0) continue;
    if (rep.speed_tail[i] > rep.speed_tail[i - 1] * (1.0 + 1e-9))
      rep.speed_trend_ok = false;
    if (rep.direction_tail[i] < rep.direction_tail[i - 1] * (1.0 - 1e-12))
      rep.direction_trend_ok = false;
  }

  // Scale-corrected equation residual of the reconstruction (finite
  // differences on the reconstruction path).
  {
    double worst = 0.0;
    for (double t : rep.sample_times) {
      const double h = 1e-4 * std::max(1.0, t);
      if (t - h <= t_start) continue;
      if (t + h >= t_end) continue;
      const Vector xm = rec_state(t - h).first;
      const Vector xc = rec_state(t).first;
      const Vector xp = rec_state(t + h).first;
      const Vector xdd = (xp - 2.0 * xc + xm) / (h * h);
      Vector rhs_val = ap.potential.eval(xc).grad;
      if (physical) {
        if (ap.perturbation) rhs_val += ap.perturbation->eval(t, xc).grad;
      } else if (ap.perturbation && sp.epsilon > 0.0) {
        rhs_val += scaled_perturbation(sp, *ap.perturbation, t, xc).grad;
      }
      const double scale = std::pow(t, 2.0 * (alpha + 1.0) / (alpha + 2.0));
      worst = std::max(worst, metric.norm(xdd - rhs_val) * scale);
    }
    rep.scaled_residual = worst;
  }

  rep.lemma_bounds = lemma_bounds_report(po, ap);
  return rep;
}

void write_orbit_csv(const ParabolicOrbit& po, const ActionProblem& ap,
                     const std::string& path, int samples_per_decade) {
  std::ofstream out(path);
  if (!out) throw ContractError("write_orbit_csv: cannot open " + path);
  const MassMetric& metric = ap.potential.metric();
  const double p = 2.0 / (po.params.alpha + 2.0);
  const Eigen::Index d = ap.dim();
  out << "t";
  for (Eigen::Index j = 0; j < d; ++j) out << ",x" << j;
  for (Eigen::Index j = 0; j < d; ++j) out << ",xdot" << j;
  out << ",radial_ratio,direction_cos\n";
  out.precision(17);
  const double lo = po.y_frame_only ? po.params.t0 : std::min(1.0, po.t_phys_end * 1e-6);
  for (double t : log_grid(lo, po.t_phys_end, samples_per_decade)) {
    const auto [x, xd] = po.state(t);
    const double xn = metric.norm(x);
    out << t;
    for (Eigen::Index j = 0; j < d; ++j) out << "," << x[j];
    for (Eigen::Index j = 0; j < d; ++j) out << "," << xd[j];
    out << "," << xn / (po.params.omega * std::pow(t, p)) << ","
        << metric.inner(x / xn, po.params.xi_plus) << "\n";
  }
}

}  // namespace parab
