#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "parab/types.hpp"

namespace parab {

/// Adaptive Dormand-Prince 5(4) embedded Runge-Kutta pair. Deliberately
/// self-contained: the verification integrator shares no code with the
/// Galerkin solver it cross-checks.
class Dopri5 {
 public:
  using Rhs = std::function<Vector(double, const Vector&)>;

  Dopri5(Rhs rhs, double rtol = 1e-10, double atol = 1e-12)
      : rhs_(std::move(rhs)), rtol_(rtol), atol_(atol) {}

  /// Integrates from (t0, y0) to t1, invoking sample(t, y) at every requested
  /// time in `times` (must be increasing, within [t0, t1]). Steps are clamped
  /// to land exactly on the sample times.
  void integrate(double t0, const Vector& y0, double t1,
                 const std::vector<double>& times,
                 const std::function<void(double, const Vector&)>& sample) const;

  /// Single end-point convenience.
  Vector solve(double t0, const Vector& y0, double t1) const;

  long last_step_count() const { return steps_; }
  long last_reject_count() const { return rejects_; }

 private:
  Rhs rhs_;
  double rtol_, atol_;
  mutable long steps_ = 0;
  mutable long rejects_ = 0;
};

inline void Dopri5::integrate(double t0, const Vector& y0, double t1,
                              const std::vector<double>& times,
                              const std::function<void(double, const Vector&)>& sample) const {
  static const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                      a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // error = y5 - y4 coefficients
  static const double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                      e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  steps_ = rejects_ = 0;
  double t = t0;
  Vector y = y0;
  Vector k1 = rhs_(t, y);
  size_t next_sample = 0;
  while (next_sample < times.size() && times[next_sample] <= t0) {
    sample(times[next_sample], y);
    ++next_sample;
  }

  // Initial step heuristic.
  double h = 1e-4 * std::max(1e-6, std::abs(t1 - t0));
  {
    const double d0 = y.norm(), d1 = k1.norm();
    if (d1 > 1e-10) h = std::min(h, 0.01 * std::max(1e-6, d0) / d1);
  }

  const int max_steps = 50'000'000;
  for (int it = 0; it < max_steps && t < t1; ++it) {
    double target = t1;
    if (next_sample < times.size()) target = std::min(target, times[next_sample]);
    if (t + h > target) h = target - t;
    if (h <= std::abs(t) * 1e-15 + 1e-300) {
      // step underflow at a sample point: emit and move on
      while (next_sample < times.size() && times[next_sample] <= t + 1e-12 * std::abs(t)) {
        sample(times[next_sample], y);
        ++next_sample;
      }
      h = std::max(h, 1e-12 * std::max(1.0, std::abs(t)));
      continue;
    }

    const Vector k2 = rhs_(t + c2 * h, y + h * (a21 * k1));
    const Vector k3 = rhs_(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vector k4 = rhs_(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vector k5 = rhs_(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vector k6 =
        rhs_(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vector y5 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const Vector k7 = rhs_(t + h, y5);
    const Vector err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    double err_norm = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
      const double sc = atol_ + rtol_ * std::max(std::abs(y[i]), std::abs(y5[i]));
      const double q = err[i] / sc;
      err_norm += q * q;
    }
    err_norm = std::sqrt(err_norm / double(y.size()));

    if (err_norm <= 1.0) {
      t += h;
      y = y5;
      k1 = k7;  // FSAL
      ++steps_;
      while (next_sample < times.size() &&
             times[next_sample] <= t + 1e-12 * std::max(1.0, std::abs(t))) {
        sample(times[next_sample], y);
        ++next_sample;
      }
    } else {
      ++rejects_;
    }
    const double factor =
        std::clamp(0.9 * std::pow(std::max(err_norm, 1e-10), -0.2), 0.2, 5.0);
    h *= factor;
  }
  if (t < t1 - 1e-9 * std::max(1.0, std::abs(t1)))
    throw SolveError("Dopri5: step budget exhausted before reaching t1");
}

inline Vector Dopri5::solve(double t0, const Vector& y0, double t1) const {
  Vector out;
  integrate(t0, y0, t1, {t1}, [&](double, const Vector& y) { out = y; });
  if (out.size() == 0)
    throw SolveError("Dopri5: end point not reached");
  return out;
}

}  // namespace parab
