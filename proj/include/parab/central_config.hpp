#pragma once

#include <cstdint>

#include "parab/potential.hpp"

namespace parab {

/// A normalized central configuration with its tangent-Hessian spectrum and
/// (BS) margin.
struct CentralConfiguration {
  Vector xi_plus;           // unit in the mass norm
  double u_value = 0.0;     // U(xi+) = curly-U(xi+)
  double cc_residual = 0.0; // |grad U(xi+) + alpha U(xi+) xi+|
  Vector tangent_spectrum;  // d-1 sorted eigenvalues of hess curly-U on T_xi E
  double nu1 = 0.0;         // smallest tangent eigenvalue
  double bs_margin = 0.0;   // nu1 + (2-alpha)^2/8 * U(xi+)
  double alpha = 1.0;
};

/// |grad U(xi) + alpha U(xi) xi| in the mass norm; zero exactly at central
/// configurations. Rejects non-unit input.
double cc_residual(const PotentialSpec& p, const Vector& xi);

/// Mass-orthonormal basis of the tangent space of the inertia ellipsoid at
/// xi (columns of the returned d x (d-1) matrix).
Matrix tangent_basis(const MassMetric& metric, const Vector& xi);

/// Sorted spectrum of hess curly-U(xi) on the tangent space, computed from
/// the restricted matrix of hess U(xi) + alpha U(xi) Id in a mass-orthonormal
/// tangent basis. Requires cc_residual(xi) <= 1e-8.
Vector tangent_hessian_spectrum(const PotentialSpec& p, const Vector& xi);

struct FindCcOptions {
  int max_iter = 200;
  double tol = 1e-12;
  int restarts = 0;          // extra randomized restarts around the seed
  std::uint64_t rng_seed = 20240913ULL;
};

/// Projected-gradient / Riemannian-Newton search for a central configuration
/// on the inertia ellipsoid, starting from seed/|seed|. Deterministic.
CentralConfiguration find_central_configuration(const PotentialSpec& p,
                                                const Vector& seed,
                                                const FindCcOptions& opts = {});

/// Builds the full certificate (value, residual, spectrum, margin) at a
/// given unit configuration without running the search.
CentralConfiguration certify_central_configuration(const PotentialSpec& p,
                                                   const Vector& xi);

struct BsCertificate {
  bool holds = false;
  double margin = 0.0;
  double zeta = 0.0;  // largest admissible zeta in ]0,(2-alpha)^2/8]
};

/// (BS) check: nu1 > -(2-alpha)^2/8 * U(xi+), strict. zeta feeds the
/// coercivity constant kappa = 8 zeta/(alpha+2)^2 downstream.
BsCertificate check_bs(const CentralConfiguration& cc);

}  // namespace parab
