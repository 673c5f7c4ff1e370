#pragma once

#include <random>

#include "parab/applications.hpp"
#include "parab/central_config.hpp"

namespace parab::test {

inline Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

inline Vector random_unit(std::mt19937_64& rng, const MassMetric& metric) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vector v(metric.dim());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gauss(rng);
  return metric.normalized(v);
}

/// Random point in a cone of direction xi: radius in [r_lo, r_hi] (log
/// uniform), small transversal perturbation.
inline Vector random_cone_point(std::mt19937_64& rng, const MassMetric& metric,
                                const Vector& xi, double r_lo, double r_hi,
                                double spread = 0.2) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double r = r_lo * std::pow(r_hi / r_lo, uni(rng));
  const Vector v = random_unit(rng, metric);
  return r * metric.normalized(xi + spread * v);
}

/// The two fixed centres +-(0.3, 0) with masses 0.5/0.5 used throughout.
inline ProblemPair two_centre_pair(double eta = 0.5) {
  MovingCentres mc = MovingCentres::fixed({vec2(0.3, 0.0), vec2(-0.3, 0.0)}, {0.5, 0.5});
  Vector e1 = vec2(1.0, 0.0);
  return make_kepler_ncentre(mc, 2, e1, eta);
}

/// Asymmetric variant (nonzero dipole moment): genuine beta = 2 decay.
inline ProblemPair two_centre_pair_asymmetric(double eta = 0.5) {
  MovingCentres mc = MovingCentres::fixed({vec2(0.3, 0.0), vec2(-0.3, 0.0)}, {0.7, 0.3});
  Vector e1 = vec2(1.0, 0.0);
  return make_kepler_ncentre(mc, 2, e1, eta);
}

inline PotentialSpec equal_mass_3body() { return make_nbody({1.0, 1.0, 1.0}, 2); }

/// Exact Lagrange equilateral configuration for equal masses (unit mass
/// norm), bodies on a circle at mutual distance sqrt(3) * radius.
inline Vector lagrange_equilateral(double m = 1.0) {
  // |xi|^2 = m * 3 r^2 = 1
  const double r = 1.0 / std::sqrt(3.0 * m);
  Vector xi(6);
  for (int i = 0; i < 3; ++i) {
    const double th = 2.0 * M_PI * i / 3.0;
    xi[2 * i] = r * std::cos(th);
    xi[2 * i + 1] = r * std::sin(th);
  }
  return xi;
}

/// Exact symmetric Euler collinear configuration for masses (1, 1, m), the
/// third body at the midpoint: (-a, 0), (a, 0), (0, 0) with 2 a^2 = 1.
inline Vector euler_collinear_symmetric() {
  const double a = 1.0 / std::sqrt(2.0);
  Vector xi(6);
  xi << -a, 0.0, a, 0.0, 0.0, 0.0;
  return xi;
}

}  // namespace parab::test
