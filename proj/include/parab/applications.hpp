#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "parab/potential.hpp"

namespace parab {

/// Bounded trajectories of the N primaries, with masses and the sampled
/// bound Xi = sup_t max_i ||c_i(t)||.
class MovingCentres {
 public:
  using Trajectory = std::function<Vector(double)>;

  MovingCentres() = default;
  MovingCentres(std::vector<Trajectory> trajectories, std::vector<double> masses,
                Eigen::Index k, double sample_window = 2.0 * M_PI,
                int sample_count = 512);

  static MovingCentres fixed(const std::vector<Vector>& points,
                             std::vector<double> masses);
  /// Circular motion c_i(t) = centre + radius*(cos(w t + phase), sin(...)).
  static MovingCentres circular(const std::vector<Vector>& centres,
                                const std::vector<double>& radii,
                                const std::vector<double>& omegas,
                                const std::vector<double>& phases,
                                std::vector<double> masses);

  Eigen::Index count() const { return Eigen::Index(traj_.size()); }
  Eigen::Index space_dim() const { return k_; }
  const std::vector<double>& masses() const { return masses_; }
  double total_mass() const;
  double bound_xi() const { return xi_; }
  Vector position(Eigen::Index i, double t) const { return traj_[size_t(i)](t); }

 private:
  std::vector<Trajectory> traj_;
  std::vector<double> masses_;
  Eigen::Index k_ = 2;
  double xi_ = 0.0;
};

struct ProblemPair {
  PotentialSpec potential;
  PerturbationSpec perturbation;
};

/// Kepler potential U(x) = nu / ||x|| on R^d \ {0}, unit masses.
PotentialSpec make_kepler(double nu, Eigen::Index d);

/// N-body potential U = sum_{i<j} m_i m_j / ||q_i - q_j||, metric (m_i x k).
PotentialSpec make_nbody(const std::vector<double>& masses, Eigen::Index k);

/// Restricted (N+H) potential U = mtilde sum_j m_j/||q_j|| + pairwise term.
PotentialSpec make_restricted_nh_potential(double mtilde,
                                           const std::vector<double>& satellite_masses,
                                           Eigen::Index k);

/// Anisotropic Kepler U = 1/r + delta (x1^2 - x2^2)/r^3 on R^2 \ {0}; the
/// direction e1 is a central configuration whose (BS) margin is controlled
/// by delta (fails for delta > 1/31 at alpha = 1). Test fixture.
PotentialSpec make_anisotropic_kepler(double delta);

/// N-centre / restricted (N+1)-body pair: U = m/||x||, W the moving-centre
/// correction, beta = 2, cone radius Xi + 1 around xi_plus.
ProblemPair make_kepler_ncentre(const MovingCentres& mc, Eigen::Index d,
                                const Vector& xi_plus, double eta = 0.5);

/// Restricted (N+H)-body pair for H satellites of masses m_j around the
/// moving primaries; d = k*H.
ProblemPair make_restricted_nh(const MovingCentres& mc, Eigen::Index H,
                               const std::vector<double>& satellite_masses,
                               const Vector& xi_plus, double eta);

/// W == 0 with a formal decay exponent (for unperturbed runs).
PerturbationSpec make_zero_perturbation(double beta, double alpha,
                                        const MassMetric& metric,
                                        const ConeRegion& cone);

/// Regular H-gon of equal satellite masses m around a unit total primary
/// mass; vertices on the circle of radius 1/sqrt(H m).
struct HgonSpec {
  int H = 2;
  double m = 1.0;
  double mtilde = 1.0;  // total primary mass (fixed to 1)
};

struct HgonConfiguration {
  Vector xi_plus;        // mass-normalized, |xi|=1
  double u_value_paper;  // closed form (Hm)^{3/2} + H^{3/2}(H-1)m^{5/2}/(4 sin(pi/H))
  double u_value_direct; // direct pairwise summation at the geometric vertices
};

HgonConfiguration hgon_configuration(const HgonSpec& spec);

/// Mass threshold below which the closed-form sufficient condition of the
/// H-gon (BS) analysis holds; +infinity for H in {2,3}.
double hgon_bs_threshold(int H);

struct HgonBsResult {
  double nu1 = 0.0;
  double margin = 0.0;
  bool holds = false;
};

/// Direct spectral (BS) check at the geometric H-gon configuration. The
/// closed-form threshold is sufficient, not necessary, so holds may be true
/// above it.
HgonBsResult hgon_bs_direct(const HgonSpec& spec);

/// Elliptic restricted three-body primaries: c1 = -mu q0, c2 = (1-mu) q0
/// with q0 a 2*pi-periodic Kepler ellipse of eccentricity e.
MovingCentres make_elliptic_r3bp_centres(double mu, double eccentricity);

}  // namespace parab
