#include "parab/action.hpp"

#include <Eigen/SparseCholesky>
#include <cmath>
#include <fstream>

namespace parab {

namespace {

struct EuclidEval {
  double value;
  Vector dgrad;  // Euclidean gradient D(U + W_eps)
  Matrix dhess;  // Euclidean Hessian D^2(U + W_eps)
};

/// U_eps = U + W_eps in Euclidean derivative forms (the metric raise is
/// applied only where the assembled integrals need it).
EuclidEval u_eps_euclid(const ScalingParams& sp, const PotentialSpec& p,
                        const PerturbationSpec* w, double t, const Vector& y) {
  EuclidEval e{p.value(y), p.euclid_grad(y), p.euclid_hess(y)};
  if (w != nullptr && sp.epsilon > 0.0) {
    const double a = sp.alpha;
    const double space = std::pow(sp.epsilon, 3.0 / (2.0 + a));
    const Vector x = y / space;
    if (!w->validity_cone().contains(x))
      throw SolveError("assemble: cone breach at a quadrature point");
    const double tau = (t - sp.t0) / std::pow(sp.epsilon, 1.5);
    const double f0 = std::pow(sp.epsilon, -3.0 * a / (2.0 + a));
    e.value += f0 * w->value(tau, x);
    e.dgrad += f0 / space * w->euclid_grad(tau, x);
    e.dhess += f0 / (space * space) * w->euclid_hess(tau, x);
  }
  return e;
}

}  // namespace

void ActionProblem::validate() const {
  if (std::abs(mesh->t0() - params.t0) > 1e-12 * std::max(1.0, params.t0))
    throw ContractError("ActionProblem: mesh.t0 != params.t0");
  if (params.sigma.size() > 0 &&
      !(params.metric.norm(params.sigma) < params.trust_radius_sigma()))
    throw ContractError("ActionProblem: |sigma| must stay below r = omega/4");
  if (potential.dim() != params.xi_plus.size())
    throw ContractError("ActionProblem: dimension mismatch");
  if (std::abs(cc.alpha - potential.alpha()) > 0.0)
    throw ContractError("ActionProblem: certificate alpha differs from potential");
}

MeshedFunction ActionProblem::wrap(const Vector& free_dofs) const {
  const Eigen::Index d = dim();
  const Eigen::Index m = mesh->node_count() - 1;
  if (free_dofs.size() != m * d) throw ContractError("ActionProblem::wrap: size mismatch");
  Matrix values = Matrix::Zero(m + 1, d);
  for (Eigen::Index k = 0; k < m; ++k)
    values.row(k + 1) = free_dofs.segment(k * d, d).transpose();
  return MeshedFunction(mesh, potential.metric(), std::move(values));
}

Vector ActionProblem::unwrap(const MeshedFunction& phi) const {
  const Eigen::Index d = dim();
  const Eigen::Index m = mesh->node_count() - 1;
  Vector v(m * d);
  for (Eigen::Index k = 0; k < m; ++k) v.segment(k * d, d) = phi.values().row(k + 1);
  return v;
}

SparseMatrix stiffness_matrix(const ActionProblem& ap) {
  const Eigen::Index d = ap.dim();
  const Eigen::Index m = ap.mesh->node_count() - 1;
  const Vector& mu = ap.potential.metric().weights();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(size_t(3 * m * d));
  for (Eigen::Index k = 0; k < m; ++k) {  // element [tau_k, tau_{k+1}]
    const double inv_dt = 1.0 / ap.mesh->dt(k);
    for (Eigen::Index j = 0; j < d; ++j) {
      const double a = mu[j] * inv_dt;
      const Eigen::Index row = (k - 1) * d + j;  // free index of node k (k>=1)
      const Eigen::Index next = k * d + j;       // free index of node k+1
      if (k >= 1) {
        trip.emplace_back(row, row, a);
        trip.emplace_back(row, next, -a);
        trip.emplace_back(next, row, -a);
      }
      trip.emplace_back(next, next, a);
    }
  }
  SparseMatrix s(m * d, m * d);
  s.setFromTriplets(trip.begin(), trip.end());
  return s;
}

namespace {

struct AssemblyWork {
  double action = 0.0;
  Vector grad;
  std::vector<Eigen::Triplet<double>> trip;
  bool with_hess = false;
};

void assemble_into(const ActionProblem& ap, const MeshedFunction& phi, AssemblyWork& out) {
  const Eigen::Index d = ap.dim();
  const Eigen::Index m = ap.mesh->node_count() - 1;
  const MassMetric& metric = ap.potential.metric();
  const Vector& mu = metric.weights();
  const ScalingParams& sp = ap.params;
  const PerturbationSpec* w = ap.perturbation_ptr();

  const double rho = sp.trust_radius_phi();
  const double phi_norm = d12_norm(phi);
  if (!(phi_norm < rho))
    throw SolveError("assemble: trust-region breach (||phi|| >= rho)");

  out.action = 0.0;
  out.grad = Vector::Zero(m * d);
  out.trip.clear();

  for (Eigen::Index k = 0; k < m; ++k) {
    const double a = ap.mesh->node(k), b = ap.mesh->node(k + 1);
    const double inv_dt = 1.0 / (b - a);
    const Vector phi_l = phi.value_at_node(k);
    const Vector phi_r = phi.value_at_node(k + 1);

    // Exact stiffness contribution of the element.
    const Vector dphi = phi_r - phi_l;
    out.action += 0.5 * inv_dt * (mu.array() * dphi.array().square()).sum();
    for (Eigen::Index j = 0; j < d; ++j) {
      const double gj = mu[j] * dphi[j] * inv_dt;
      if (k >= 1) out.grad[(k - 1) * d + j] -= gj;
      out.grad[k * d + j] += gj;
      if (out.with_hess) {
        const double v = mu[j] * inv_dt;
        const Eigen::Index row = (k - 1) * d + j, nxt = k * d + j;
        if (k >= 1) {
          out.trip.emplace_back(row, row, v);
          out.trip.emplace_back(row, nxt, -v);
          out.trip.emplace_back(nxt, row, -v);
        }
        out.trip.emplace_back(nxt, nxt, v);
      }
    }

    // Gauss quadrature of the K and h terms.
    for (const auto& [t, wq] : gauss3(a, b)) {
      const double s = (t - a) * inv_dt;
      const Vector phit = (1.0 - s) * phi_l + s * phi_r;
      const Curve2 ys = y_sigma_eval(sp, t);
      const Vector z = ys.y + phit;
      if (!(metric.norm(z) >= stima_lower_bound(sp, t) * (1.0 - 1e-12)))
        throw SolveError("assemble: cone breach (Lemma lower bound violated)");

      const EuclidEval base = u_eps_euclid(sp, ap.potential, w, t, ys.y);
      const EuclidEval shifted = u_eps_euclid(sp, ap.potential, w, t, z);

      const double kval = shifted.value - base.value - base.dgrad.dot(phit);
      const Vector mh = metric.apply(ys.ydd) - base.dgrad;  // Euclidean form of h
      out.action += wq * (kval - mh.dot(phit));

      const Vector gvec = wq * (shifted.dgrad - base.dgrad - mh);
      if (k >= 1) out.grad.segment((k - 1) * d, d) += (1.0 - s) * gvec;
      out.grad.segment(k * d, d) += s * gvec;

      if (out.with_hess) {
        const Matrix hk = wq * shifted.dhess;
        auto add_block = [&](Eigen::Index nl, Eigen::Index nr, double c) {
          if (nl == 0 || nr == 0) return;  // pinned node
          const Eigen::Index r0 = (nl - 1) * d, c0 = (nr - 1) * d;
          for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) {
              const double v = c * hk(i, j);
              if (v != 0.0) out.trip.emplace_back(r0 + i, c0 + j, v);
            }
        };
        add_block(k, k, (1.0 - s) * (1.0 - s));
        add_block(k, k + 1, (1.0 - s) * s);
        add_block(k + 1, k, s * (1.0 - s));
        add_block(k + 1, k + 1, s * s);
      }
    }
  }
}

}  // namespace

AssembleResult assemble(const ActionProblem& ap, const MeshedFunction& phi) {
  AssemblyWork work;
  work.with_hess = true;
  assemble_into(ap, phi, work);
  AssembleResult res;
  res.action = work.action;
  res.grad = std::move(work.grad);
  res.hess.resize(ap.dof_count(), ap.dof_count());
  res.hess.setFromTriplets(work.trip.begin(), work.trip.end());
  return res;
}

std::pair<double, Vector> assemble_gradient(const ActionProblem& ap, const Vector& phi) {
  AssemblyWork work;
  work.with_hess = false;
  assemble_into(ap, ap.wrap(phi), work);
  return {work.action, std::move(work.grad)};
}

namespace {

Matrix to_dense(const SparseMatrix& m) { return Matrix(m); }

/// Negative-eigenvalue count of the dense symmetric matrix H - lambda S.
Eigen::Index inertia_below(const Matrix& h, const Matrix& s, double lambda) {
  Eigen::LDLT<Matrix> ldlt(h - lambda * s);
  const Vector d = ldlt.vectorD();
  Eigen::Index count = 0;
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (d[i] < 0.0) ++count;
  return count;
}

}  // namespace

double smallest_generalized_eigenvalue(const SparseMatrix& h, const SparseMatrix& s,
                                       double tol) {
  const Matrix hd = to_dense(h);
  const Matrix sd = to_dense(s);

  // Bracket lambda_min by the inertia of H - lambda S.
  double lo = -1.0, hi = 1.0;
  for (int guard = 0; inertia_below(hd, sd, lo) > 0; ++guard) {
    hi = lo;
    lo *= 4.0;
    if (guard > 60) throw SolveError("smallest_generalized_eigenvalue: no lower bound");
  }
  for (int guard = 0; inertia_below(hd, sd, hi) == 0; ++guard) {
    lo = hi;
    hi *= 4.0;
    if (guard > 60) throw SolveError("smallest_generalized_eigenvalue: no upper bound");
  }
  for (int it = 0; it < 200 && hi - lo > 0.25 * tol * std::max(1.0, std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (inertia_below(hd, sd, mid) == 0)
      lo = mid;
    else
      hi = mid;
  }

  // Shift-inverted power iteration with the shift just below the bracket:
  // H - shift*S is positive definite there, so the sparse factorization is safe.
  const double shift = lo - std::max(1e-8, 1e-4 * (hi - lo) + 1e-10 * std::abs(lo));
  SparseMatrix shifted = h - shift * s;
  Eigen::SimplicialLDLT<SparseMatrix> fact(shifted);
  if (fact.info() != Eigen::Success) return 0.5 * (lo + hi);
  Vector z = Vector::Ones(hd.rows());
  z /= std::sqrt(z.dot(sd * z));
  double rayleigh = 0.5 * (lo + hi);
  for (int it = 0; it < 50; ++it) {
    Vector zn = fact.solve(sd * z);
    const double nn = std::sqrt(zn.dot(sd * zn));
    if (!(nn > 0.0) || !std::isfinite(nn)) break;
    zn /= nn;
    const double r = zn.dot(hd * zn) / zn.dot(sd * zn);
    if (std::abs(r - rayleigh) < 1e-14 * std::max(1.0, std::abs(r))) {
      rayleigh = r;
      break;
    }
    rayleigh = r;
    z = zn;
  }
  // The iterate may have drifted out of the bracket on clustered spectra;
  // clamp to the certified interval.
  if (rayleigh < lo - tol || rayleigh > hi + tol) rayleigh = 0.5 * (lo + hi);
  return rayleigh;
}

double coercivity_estimate(const ActionProblem& ap) {
  ap.validate();
  if (ap.params.epsilon != 0.0 ||
      (ap.params.sigma.size() > 0 && ap.params.sigma.squaredNorm() != 0.0))
    throw ContractError("coercivity_estimate: requires eps = 0 and sigma = 0");
  const MeshedFunction zero(ap.mesh, ap.potential.metric(), ap.dim());
  const AssembleResult ar = assemble(ap, zero);
  return smallest_generalized_eigenvalue(ar.hess, stiffness_matrix(ap));
}

namespace {

struct NewtonOutcome {
  Vector phi;
  double gradient_norm;
  int iters;
};

NewtonOutcome newton_solve_at(const ActionProblem& ap, Vector phi, double tol,
                              Eigen::SimplicialLDLT<SparseMatrix>& stiff_fact,
                              int max_iter = 50) {
  auto dual_norm = [&](const Vector& g) { return std::sqrt(g.dot(stiff_fact.solve(g))); };

  AssembleResult ar = assemble(ap, ap.wrap(phi));
  double gn = dual_norm(ar.grad);
  int it = 0;
  for (; it < max_iter && gn > tol; ++it) {
    Eigen::SimplicialLDLT<SparseMatrix> fact(ar.hess);
    Vector dir;
    if (fact.info() == Eigen::Success) dir = fact.solve(-ar.grad);
    if (fact.info() != Eigen::Success || !dir.allFinite()) {
      Eigen::LDLT<Matrix> dense(Matrix(ar.hess));
      dir = dense.solve(-ar.grad);
      if (!dir.allFinite()) throw SolveError("newton: linear solve failed");
    }

    // Damping: Armijo decrease on the dual gradient norm.
    double s = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, s *= 0.5) {
      const Vector trial = phi + s * dir;
      try {
        AssembleResult trial_ar = assemble(ap, ap.wrap(trial));
        const double tn = dual_norm(trial_ar.grad);
        if (tn < (1.0 - 1e-4 * s) * gn) {
          phi = trial;
          ar = std::move(trial_ar);
          gn = tn;
          accepted = true;
          break;
        }
      } catch (const SolveError&) {
        // trust region or cone breach: shorten the step
      }
    }
    if (!accepted) throw SolveError("newton: divergence (step halving exhausted)");
  }
  if (gn > tol) throw SolveError("newton: no convergence within iteration budget");
  return NewtonOutcome{std::move(phi), gn, it};
}

}  // namespace

SolveResult newton_continuation_solve(const ActionProblem& ap, double eps_target,
                                      const Vector& sigma_target, int steps, double tol) {
  ap.validate();
  if (!(eps_target >= 0.0 && eps_target < 1.0))
    throw ContractError("newton_continuation_solve: eps target must lie in [0,1[");
  const MassMetric& metric = ap.potential.metric();
  Vector sigma_t = sigma_target.size() > 0 ? sigma_target : Vector::Zero(ap.dim());
  if (!(metric.norm(sigma_t) < ap.params.trust_radius_sigma()))
    throw ContractError("newton_continuation_solve: |sigma| must stay below r");
  if (steps < 1) throw ContractError("newton_continuation_solve: steps must be >= 1");

  // Continuation schedule: eps ramps first at sigma = 0, then sigma ramps.
  std::vector<std::pair<double, double>> schedule;  // (eps_frac, sigma_frac)
  if (eps_target == 0.0 && sigma_t.squaredNorm() == 0.0) {
    schedule.emplace_back(0.0, 0.0);
  } else {
    if (eps_target > 0.0)
      for (int i = 1; i <= steps; ++i) schedule.emplace_back(double(i) / steps, 0.0);
    if (sigma_t.squaredNorm() > 0.0)
      for (int i = 1; i <= steps; ++i) schedule.emplace_back(1.0, double(i) / steps);
  }

  ActionProblem cur = ap;
  SparseMatrix s = stiffness_matrix(ap);
  Eigen::SimplicialLDLT<SparseMatrix> stiff_fact(s);
  if (stiff_fact.info() != Eigen::Success)
    throw SolveError("newton_continuation_solve: stiffness factorization failed");

  SolveResult out;
  Vector phi = Vector::Zero(ap.dof_count());
  Vector prev_phi = phi;
  double prev_eps = 0.0;
  double lipschitz = 0.0;
  for (const auto& [ef, sf] : schedule) {
    cur.params.epsilon = eps_target * ef;
    cur.params.sigma = sf * sigma_t;
    NewtonOutcome res = newton_solve_at(cur, phi, tol, stiff_fact);
    phi = std::move(res.phi);
    const double phi_norm = std::sqrt(phi.dot(s * phi));
    out.path.push_back(ContinuationSample{cur.params.epsilon,
                                          metric.norm(cur.params.sigma), phi_norm,
                                          res.iters});
    out.newton_iters = std::max(out.newton_iters, res.iters);
    out.newton_iters_total += res.iters;
    out.gradient_norm = res.gradient_norm;
    if (cur.params.epsilon > prev_eps) {
      const Vector diff = phi - prev_phi;
      lipschitz = std::max(lipschitz, std::sqrt(diff.dot(s * diff)) /
                                          (cur.params.epsilon - prev_eps));
    }
    prev_phi = phi;
    prev_eps = cur.params.epsilon;
  }

  out.phi = ap.wrap(phi);

  // Remark-level minimality: the accepted solution must be a non-degenerate
  // local minimum.
  const AssembleResult final_ar = assemble(cur, out.phi);
  out.hessian_min_eig = smallest_generalized_eigenvalue(final_ar.hess, s);
  if (!(out.hessian_min_eig > 0.0))
    throw SolveError("newton_continuation_solve: outside perturbative regime "
                     "(Hessian lost positivity)");

  // Diagnostics on the solved branch.
  DiagnosticsReport diag;
  const double alpha = ap.potential.alpha();
  const double beta = ap.perturbation ? ap.perturbation->beta() : 2.0;
  const double h_exp = 2.0 * (beta + 1.0) / (alpha + 2.0);
  for (Eigen::Index k = 0; k < ap.mesh->node_count(); ++k) {
    const double t = ap.mesh->node(k);
    const Vector h = forcing_h(cur.params, cur.potential, cur.perturbation_ptr(), t);
    diag.c_h = std::max(diag.c_h, metric.norm(h) * std::pow(t, h_exp));
    const Eval2 kk = remainder_K(cur.params, cur.potential, cur.perturbation_ptr(), t,
                                 out.phi.eval(t));
    diag.c_k = std::max(diag.c_k,
                        metric.operator_norm_of_mass_hessian(kk.hess) * t * t);
  }
  {
    ActionProblem base = ap;
    base.params.epsilon = 0.0;
    base.params.sigma = Vector::Zero(ap.dim());
    diag.kappa_estimate = coercivity_estimate(base);
  }
  diag.zeta = check_bs(ap.cc).zeta;
  const double phi_norm = d12_norm(out.phi);
  diag.hardy_slack = phi_norm > 0.0 ? 4.0 - hardy_ratio(out.phi) : 4.0;
  diag.lipschitz_eps = lipschitz;
  out.diagnostics = diag;
  return out;
}

EpsilonStarResult empirical_epsilon_star(const ActionProblem& ap,
                                         const std::vector<Vector>& sigma_grid,
                                         double eps_max, int steps, double tol,
                                         int bisections) {
  ap.validate();
  std::vector<Vector> grid = sigma_grid;
  if (grid.empty()) grid.push_back(Vector::Zero(ap.dim()));

  auto succeeds = [&](double eps) {
    for (const Vector& sg : grid) {
      try {
        newton_continuation_solve(ap, eps, sg, steps, tol);
      } catch (const SolveError&) {
        return false;
      }
    }
    return true;
  };

  EpsilonStarResult out;
  out.sigma_grid = grid;
  double lo = 0.0, hi = eps_max;
  if (succeeds(eps_max)) {
    out.eps_star = eps_max;
    out.probes = int(grid.size());
    return out;
  }
  out.probes = int(grid.size());
  for (int it = 0; it < bisections; ++it) {
    const double mid = 0.5 * (lo + hi);
    out.probes += int(grid.size());
    if (succeeds(mid))
      lo = mid;
    else
      hi = mid;
  }
  out.eps_star = lo;
  return out;
}

void write_sparse_triplets(const SparseMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ContractError("write_sparse_triplets: cannot open " + path);
  out.precision(17);
  out << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      out << it.row() << " " << it.col() << " " << it.value() << "\n";
}

}  // namespace parab
