#pragma once

#include "parab/action.hpp"

namespace parab {

/// Pass/fail set for the Lemma-level bounds along a solved orbit, with the
/// fitted constants surfaced.
struct LemmaBounds {
  bool stima_lower_ok = false;   // |y_sigma + phi| >= (omega/2) t^{2/(a+2)} at nodes
  bool stima_angle_ok = false;   // cone-angle bound at nodes
  bool h_slope_applicable = false;
  double h_slope = 0.0;          // log-log slope of |h| for t >= t0+1
  bool h_slope_ok = false;       // slope <= -2(beta+1)/(alpha+2) + 0.1
  double c_k1 = 0.0, c_k2 = 0.0, c_k3 = 0.0;  // fitted constants of K1-K3
  bool k_constants_finite = false;
  double c_second = 0.0;         // fitted C'' of |grad U_eps| <= C''/|y|^{a+1}
  bool ydot_tail_ok = false;     // |ydot(T)| within the integrated |yddot| bound
  bool all_ok() const {
    return stima_lower_ok && stima_angle_ok && (!h_slope_applicable || h_slope_ok) &&
           k_constants_finite && ydot_tail_ok;
  }
};

enum class VerifyFrame { Physical, Transformed };

/// Verification of the reconstructed orbit against an independent adaptive
/// Runge-Kutta integration, plus the asymptotic samples of the main theorem.
struct VerificationReport {
  std::vector<double> sample_times;   // log-spaced, documented grid
  std::vector<double> rel_gap;        // reconstruction vs integrator
  std::vector<double> radial_ratio;   // |x(t)| / (omega t^{2/(a+2)})
  std::vector<double> speed_tail;     // |xdot(t)|
  std::vector<double> direction_tail; // <x/|x|, xi+>
  double ode_deviation = 0.0;         // max rel_gap over the full window
  double first_decade_deviation = 0.0;  // max rel_gap for t <= 10
  double final_speed = 0.0;
  double final_direction_gap = 0.0;
  bool speed_trend_ok = false;      // decreasing over the last decade
  bool direction_trend_ok = false;  // increasing over the last decade
  double scaled_residual = 0.0;     // max |xdd - rhs| t^{2(a+1)/(a+2)} (reconstruction)
  LemmaBounds lemma_bounds;
  long integrator_steps = 0;
  VerifyFrame frame = VerifyFrame::Physical;
};

/// A solved parabolic orbit: the transformed solution (eps, sigma, phi) with
/// its physical-frame reconstruction x(t) = eps^{-3/(2+a)} y(eps^{3/2} t + t0).
struct ParabolicOrbit {
  ScalingParams params;
  MeshedFunction phi;
  Vector x0;
  double t_phys_end = 0.0;   // (T - t0)/eps^{3/2}
  bool y_frame_only = false; // eps = 0: no physical pullback, flagged
  VerificationReport verification;

  /// Position and velocity of the reconstruction at physical time t.
  std::pair<Vector, Vector> state(double t) const;
  /// Same in the transformed frame (time in [t0, T]).
  std::pair<Vector, Vector> state_transformed(double t_y) const;
};

ParabolicOrbit reconstruct_orbit(const SolveResult& sr, const ActionProblem& ap);

struct VerifyOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  int samples_per_decade = 8;
  VerifyFrame frame = VerifyFrame::Physical;
};

VerificationReport verify_orbit(const ParabolicOrbit& po, const ActionProblem& ap,
                                const VerifyOptions& opts = {});

LemmaBounds lemma_bounds_report(const ParabolicOrbit& po, const ActionProblem& ap);

/// CSV dump of (t, x, xdot, radial ratio, direction cosine) on the log grid.
void write_orbit_csv(const ParabolicOrbit& po, const ActionProblem& ap,
                     const std::string& path, int samples_per_decade = 16);

}  // namespace parab
