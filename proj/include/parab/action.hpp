#pragma once

#include <Eigen/SparseCore>
#include <optional>
#include <vector>

#include "parab/mesh.hpp"
#include "parab/transform.hpp"

namespace parab {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Discretized renormalized action A_{eps,sigma} over the nodal space of a
/// graded mesh. Unknowns are the free nodal values (node 0 pinned at zero).
struct ActionProblem {
  PotentialSpec potential;
  std::optional<PerturbationSpec> perturbation;  // nullopt == W identically 0
  CentralConfiguration cc;
  ScalingParams params;
  std::shared_ptr<const Mesh> mesh;

  Eigen::Index dim() const { return potential.dim(); }
  Eigen::Index dof_count() const { return (mesh->node_count() - 1) * dim(); }

  void validate() const;
  const PerturbationSpec* perturbation_ptr() const {
    return perturbation ? &*perturbation : nullptr;
  }

  MeshedFunction wrap(const Vector& free_dofs) const;
  Vector unwrap(const MeshedFunction& phi) const;
};

struct AssembleResult {
  double action = 0.0;
  Vector grad;        // plain partials w.r.t. the free nodal coordinates
  SparseMatrix hess;  // block-tridiagonal: stiffness + Gauss-quadrature K term
};

/// Galerkin assembly of the action, its gradient and Hessian at phi.
/// Guards: ||phi|| < rho and the Lemma-level cone bound
/// |y_sigma + phi| >= (omega/2) t^{2/(alpha+2)} at every quadrature point.
AssembleResult assemble(const ActionProblem& ap, const MeshedFunction& phi);

/// Action value and gradient only (line-search path).
std::pair<double, Vector> assemble_gradient(const ActionProblem& ap, const Vector& phi);

/// Gram matrix of the discrete D^{1,2} product on the free dofs (exact
/// stiffness; block diagonal per component).
SparseMatrix stiffness_matrix(const ActionProblem& ap);

/// Smallest eigenvalue of the pair (H, S): inertia bisection bracketing
/// followed by shift-inverted power iteration. S must be positive definite.
double smallest_generalized_eigenvalue(const SparseMatrix& h, const SparseMatrix& s,
                                       double tol = 1e-11);

/// Smallest generalized eigenvalue of d^2 A_{0,0}(0) against the stiffness;
/// requires eps = 0, sigma = 0. Bounded below by 8 zeta/(alpha+2)^2 minus
/// mesh/truncation slack when (BS) holds.
double coercivity_estimate(const ActionProblem& ap);

struct ContinuationSample {
  double epsilon = 0.0;
  double sigma_norm = 0.0;
  double phi_norm = 0.0;
  int newton_iters = 0;
};

struct DiagnosticsReport {
  double c_h = 0.0;            // fitted constant of |h| <= C_h t^{-2(b+1)/(a+2)}
  double c_k = 0.0;            // fitted constant of |hess K| <= C_K / t^2
  double kappa_estimate = 0.0; // discrete coercivity constant at (0,0)
  double zeta = 0.0;           // from the (BS) certificate
  double hardy_slack = 0.0;    // 4 - hardy_ratio(phi) at the solution
  double lipschitz_eps = 0.0;  // fitted |phi(e1)-phi(e2)| / |e1-e2| on the path
};

struct SolveResult {
  MeshedFunction phi;
  double gradient_norm = 0.0;  // dual norm at the accepted solution
  int newton_iters = 0;        // worst per continuation step
  int newton_iters_total = 0;
  std::vector<ContinuationSample> path;
  double hessian_min_eig = 0.0;
  DiagnosticsReport diagnostics;
};

/// Path-following from (eps,sigma) = (0,0), phi = 0: eps first, then sigma
/// along a straight segment, damped Newton at every step. Rejects iterates
/// leaving Omega_rho or the admissible cone; the accepted solution must have
/// a positive-definite Hessian (a non-degenerate local minimum).
SolveResult newton_continuation_solve(const ActionProblem& ap, double eps_target,
                                      const Vector& sigma_target, int steps = 10,
                                      double tol = 1e-10);

struct EpsilonStarResult {
  double eps_star = 0.0;
  std::vector<Vector> sigma_grid;
  int probes = 0;
};

/// Largest eps (bisection) with a successful continuation across the sigma
/// grid; 0 if even tiny eps fails.
EpsilonStarResult empirical_epsilon_star(const ActionProblem& ap,
                                         const std::vector<Vector>& sigma_grid,
                                         double eps_max, int steps = 10,
                                         double tol = 1e-10, int bisections = 10);

/// Sparse triplet text dump (row col value per line) for external inspection.
void write_sparse_triplets(const SparseMatrix& m, const std::string& path);

}  // namespace parab
