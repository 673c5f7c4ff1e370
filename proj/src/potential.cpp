#include "parab/potential.hpp"

#include <cmath>
#include <limits>

namespace parab {

IdentityResiduals homogeneity_identity_residuals(const PotentialSpec& p, const Vector& x) {
  const Eval2 e = p.eval(x);
  const MassMetric& m = p.metric();
  IdentityResiduals r;
  r.euler = std::abs(m.inner(e.grad, x) + p.alpha() * e.value) / std::abs(e.value);
  const Vector lhs = e.hess * x + (p.alpha() + 1.0) * e.grad;
  r.radial_hess = m.norm(lhs) / m.norm(e.grad);
  return r;
}

namespace {

double fd_step(double scale) {
  static const double h0 = std::cbrt(std::numeric_limits<double>::epsilon());
  return h0 * std::max(1.0, std::abs(scale));
}

/// Central-difference gradient and Hessian-of-gradient errors for a generic
/// (value, euclid_grad) pair; all comparisons are on the Euclidean forms, the
/// metric raise being exact.
FdErrors fd_check(const std::function<double(const Vector&)>& value,
                  const std::function<Vector(const Vector&)>& grad,
                  const std::function<Matrix(const Vector&)>& hess, const Vector& x) {
  const Eigen::Index d = x.size();
  Vector g_fd(d);
  const Matrix h_an = hess(x);
  Matrix h_fd(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double h = fd_step(x[i]);
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    g_fd[i] = (value(xp) - value(xm)) / (2.0 * h);
    h_fd.col(i) = (grad(xp) - grad(xm)) / (2.0 * h);
  }
  const Vector g_an = grad(x);
  FdErrors e;
  e.grad_err = (g_an - g_fd).norm() / std::max(1e-300, g_an.norm());
  h_fd = 0.5 * (h_fd + h_fd.transpose());
  e.hess_err = (h_an - h_fd).norm() / std::max(1e-300, h_an.norm());
  return e;
}

}  // namespace

FdErrors fd_derivative_check(const PotentialSpec& p, const Vector& x) {
  return fd_check([&](const Vector& y) { return p.value(y); },
                  [&](const Vector& y) { return p.euclid_grad(y); },
                  [&](const Vector& y) { return p.euclid_hess(y); }, x);
}

FdErrors fd_derivative_check(const PerturbationSpec& w, double t, const Vector& x) {
  return fd_check([&](const Vector& y) { return w.value(t, y); },
                  [&](const Vector& y) { return w.euclid_grad(t, y); },
                  [&](const Vector& y) { return w.euclid_hess(t, y); }, x);
}

double ray_decay_slope(const std::function<double(const Vector&)>& f,
                       const MassMetric& metric, const Vector& x0, double lambda_max,
                       int n) {
  // Least-squares fit of log|f(lambda x0)| against log(lambda |x0|).
  const double r0 = metric.norm(x0);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int used = 0;
  for (int i = 0; i < n; ++i) {
    const double lambda = std::pow(lambda_max, double(i) / double(n - 1));
    const double fv = std::abs(f(lambda * x0));
    if (!(fv > 0.0) || !std::isfinite(fv)) continue;
    const double lx = std::log(lambda * r0);
    const double ly = std::log(fv);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++used;
  }
  if (used < 2) throw SolveError("ray_decay_slope: too few usable samples");
  return (used * sxy - sx * sy) / (used * sxx - sx * sx);
}

double third_derivative_decay_probe(const PotentialSpec& p, const Vector& x0,
                                    double lambda_max, int n) {
  // |D^3 U| estimated by central differences of the analytic Hessian.
  auto d3_norm = [&](const Vector& x) {
    const Eigen::Index d = x.size();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      const double h = fd_step(x.norm());
      Vector xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const Matrix di = (p.euclid_hess(xp) - p.euclid_hess(xm)) / (2.0 * h);
      acc += di.squaredNorm();
    }
    return std::sqrt(acc);
  };
  return ray_decay_slope(d3_norm, p.metric(), x0, lambda_max, n);
}

}  // namespace parab
