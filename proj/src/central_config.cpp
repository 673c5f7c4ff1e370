#include "parab/central_config.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace parab {

double cc_residual(const PotentialSpec& p, const Vector& xi) {
  const MassMetric& m = p.metric();
  if (std::abs(m.norm(xi) - 1.0) > 1e-9)
    throw ContractError("cc_residual: xi must be a unit vector in the mass norm");
  const Eval2 e = p.eval(xi);
  return m.norm(e.grad + p.alpha() * e.value * xi);
}

Matrix tangent_basis(const MassMetric& metric, const Vector& xi) {
  const Eigen::Index d = metric.dim();
  Matrix basis(d, d - 1);
  Eigen::Index col = 0;
  // Gram-Schmidt of the coordinate directions against xi in the mass metric.
  for (Eigen::Index i = 0; i < d && col < d - 1; ++i) {
    Vector v = Vector::Zero(d);
    v[i] = 1.0;
    v -= metric.inner(v, xi) * xi;
    for (Eigen::Index c = 0; c < col; ++c) v -= metric.inner(v, basis.col(c)) * basis.col(c);
    const double n = metric.norm(v);
    if (n < 1e-8) continue;
    basis.col(col++) = v / n;
  }
  if (col != d - 1) throw SolveError("tangent_basis: failed to complete basis");
  return basis;
}

namespace {

/// Restricted matrix of hess curly-U at a unit xi in a mass-orthonormal
/// tangent basis E: B_ab = e_a^T D^2U(xi) e_b + alpha U(xi) delta_ab. On the
/// mass sphere this is the exact Riemannian Hessian, by Euler's formula.
Matrix restricted_hessian(const PotentialSpec& p, const Vector& xi, const Matrix& basis) {
  const Matrix d2 = p.euclid_hess(xi);
  const double u = p.value(xi);
  Matrix b = basis.transpose() * d2 * basis;
  b = 0.5 * (b + b.transpose());
  b.diagonal().array() += p.alpha() * u;
  return b;
}

/// Riemannian gradient coordinates in the tangent basis: g_a = e_a^T D U(xi).
Vector tangent_gradient(const PotentialSpec& p, const Vector& xi, const Matrix& basis) {
  return basis.transpose() * p.euclid_grad(xi);
}

struct SearchResult {
  Vector xi;
  double residual;
  bool converged;
};

SearchResult search_from(const PotentialSpec& p, Vector xi, const FindCcOptions& opts) {
  const MassMetric& metric = p.metric();
  const double newton_gate = 1e-2;  // residual below which Newton takes over
  double res = cc_residual(p, xi);

  int it = 0;
  // Phase 1: projected gradient with Armijo backtracking, to enter a basin.
  double step = 1.0;
  while (res > newton_gate && it < opts.max_iter) {
    const Eval2 e = p.eval(xi);
    Vector g = e.grad + p.alpha() * e.value * xi;  // = proj of grad U onto T_xi
    const double gn2 = metric.squared_norm(g);
    double s = step;
    bool moved = false;
    for (int ls = 0; ls < 40; ++ls) {
      Vector trial = xi - s * g;
      trial /= metric.norm(trial);
      if (p.in_domain(trial) && p.value(trial) <= e.value - 1e-4 * s * gn2) {
        xi = trial;
        step = std::min(4.0 * s, 1e3);
        moved = true;
        break;
      }
      s *= 0.5;
    }
    if (!moved) break;  // no descent available; hand over to Newton
    res = cc_residual(p, xi);
    ++it;
  }

  // Phase 2: Riemannian Newton with a pseudo-inverse tangent solve (symmetry
  // null directions carry no gradient and are dropped).
  for (; it < opts.max_iter && res > opts.tol; ++it) {
    if (!p.in_domain(xi)) throw SolveError("find_central_configuration: iterate left Sigma");
    const Matrix basis = tangent_basis(metric, xi);
    const Matrix b = restricted_hessian(p, xi, basis);
    const Vector g = tangent_gradient(p, xi, basis);
    Eigen::SelfAdjointEigenSolver<Matrix> es(b);
    const Vector& ev = es.eigenvalues();
    const double cutoff = 1e-10 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Vector c = es.eigenvectors().transpose() * g;
    for (Eigen::Index i = 0; i < c.size(); ++i)
      c[i] = (std::abs(ev[i]) > cutoff) ? -c[i] / ev[i] : 0.0;
    const Vector dir = basis * (es.eigenvectors() * c);

    double s = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls) {
      Vector trial = xi + s * dir;
      trial /= metric.norm(trial);
      if (p.in_domain(trial)) {
        const double tr = cc_residual(p, trial);
        if (tr < res) {
          xi = trial;
          res = tr;
          accepted = true;
          break;
        }
      }
      s *= 0.5;
    }
    if (!accepted) break;
  }
  return SearchResult{xi, res, res <= opts.tol};
}

}  // namespace

Vector tangent_hessian_spectrum(const PotentialSpec& p, const Vector& xi) {
  if (cc_residual(p, xi) > 1e-8)
    throw ContractError("tangent_hessian_spectrum: xi is not a central configuration");
  const Matrix basis = tangent_basis(p.metric(), xi);
  const Matrix b = restricted_hessian(p, xi, basis);
  Eigen::SelfAdjointEigenSolver<Matrix> es(b, Eigen::EigenvaluesOnly);
  Vector ev = es.eigenvalues();
  std::sort(ev.data(), ev.data() + ev.size());
  return ev;
}

CentralConfiguration certify_central_configuration(const PotentialSpec& p, const Vector& xi) {
  CentralConfiguration cc;
  cc.alpha = p.alpha();
  cc.xi_plus = p.metric().normalized(xi);
  cc.u_value = p.value(cc.xi_plus);
  cc.cc_residual = cc_residual(p, cc.xi_plus);
  cc.tangent_spectrum = tangent_hessian_spectrum(p, cc.xi_plus);
  cc.nu1 = cc.tangent_spectrum.minCoeff();
  const double a = p.alpha();
  cc.bs_margin = cc.nu1 + (2.0 - a) * (2.0 - a) / 8.0 * cc.u_value;
  return cc;
}

CentralConfiguration find_central_configuration(const PotentialSpec& p, const Vector& seed,
                                                const FindCcOptions& opts) {
  const MassMetric& metric = p.metric();
  Vector xi0 = metric.normalized(seed);
  p.check_domain(xi0);

  SearchResult best = search_from(p, xi0, opts);
  if (opts.restarts > 0) {
    std::mt19937_64 rng(opts.rng_seed);
    std::normal_distribution<double> gauss(0.0, 0.05);
    for (int r = 0; r < opts.restarts; ++r) {
      Vector pert = xi0;
      for (Eigen::Index i = 0; i < pert.size(); ++i) pert[i] += gauss(rng);
      pert = metric.normalized(pert);
      if (!p.in_domain(pert)) continue;
      SearchResult cand = search_from(p, pert, opts);
      if (!cand.converged) continue;
      // Deterministic merge: lowest value wins, lexicographic xi breaks ties.
      const bool better =
          !best.converged || p.value(cand.xi) < p.value(best.xi) - 1e-12 ||
          (std::abs(p.value(cand.xi) - p.value(best.xi)) <= 1e-12 &&
           std::lexicographical_compare(cand.xi.data(), cand.xi.data() + cand.xi.size(),
                                        best.xi.data(), best.xi.data() + best.xi.size()));
      if (better) best = cand;
    }
  }
  if (!best.converged)
    throw SolveError("find_central_configuration: no convergence after max_iter");
  return certify_central_configuration(p, best.xi);
}

BsCertificate check_bs(const CentralConfiguration& cc) {
  const double a = cc.alpha;
  const double cap = (2.0 - a) * (2.0 - a) / 8.0;
  BsCertificate out;
  out.margin = cc.nu1 + cap * cc.u_value;
  // Degenerate margins (within 1e-10) are reported as failing: (BS) is strict.
  out.holds = out.margin > 1e-10;
  out.zeta = std::min(cap, out.margin / cc.u_value);
  if (out.zeta < 0.0) out.zeta = 0.0;
  return out;
}

}  // namespace parab
