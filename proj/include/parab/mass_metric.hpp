#pragma once

#include <cmath>
#include <utility>

#include "parab/types.hpp"

namespace parab {

/// Diagonal mass metric <x,y> = sum_j mu_j x_j y_j. All norms, gradients and
/// Hessians in the library are taken with respect to this scalar product
/// (grad = M^{-1} D, hess = M^{-1} D^2).
class MassMetric {
 public:
  MassMetric() = default;

  explicit MassMetric(Vector weights) : mu_(std::move(weights)) {
    if (mu_.size() == 0 || (mu_.array() <= 0.0).any())
      throw ContractError("MassMetric: weights must be strictly positive");
  }

  /// Metric with all weights equal to one (Euclidean case).
  static MassMetric identity(Eigen::Index d) {
    return MassMetric(Vector::Ones(d));
  }

  Eigen::Index dim() const { return mu_.size(); }
  const Vector& weights() const { return mu_; }

  double inner(const Vector& x, const Vector& y) const {
    if (x.size() != mu_.size() || y.size() != mu_.size())
      throw ContractError("MassMetric::inner: dimension mismatch");
    return (mu_.array() * x.array() * y.array()).sum();
  }

  double squared_norm(const Vector& x) const { return inner(x, x); }
  double norm(const Vector& x) const { return std::sqrt(squared_norm(x)); }

  Vector normalized(const Vector& x) const {
    const double n = norm(x);
    if (n == 0.0) throw ContractError("MassMetric: cannot normalize zero vector");
    return x / n;
  }

  /// M^{-1} v, the raising map from Euclidean to mass-metric derivatives.
  Vector apply_inverse(const Vector& v) const {
    return v.array() / mu_.array();
  }

  /// M^{-1} A, mass-metric Hessian from a Euclidean one.
  Matrix apply_inverse(const Matrix& a) const {
    return mu_.cwiseInverse().asDiagonal() * a;
  }

  /// M v, the lowering map (mass-metric gradient back to Euclidean form).
  Vector apply(const Vector& v) const { return v.array() * mu_.array(); }

  /// Operator norm |A| = sup_{|x|<=1} |Ax| of a mass-Hessian M^{-1} D^2.
  /// Computed as the spectral norm of the symmetrization M^{-1/2} D^2 M^{-1/2}.
  double operator_norm_of_mass_hessian(const Matrix& mass_hess) const {
    const Vector s = mu_.array().sqrt();
    Matrix sym = s.asDiagonal() * mass_hess * s.cwiseInverse().asDiagonal();
    sym = 0.5 * (sym + sym.transpose());  // kill rounding asymmetry
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
  }

  bool operator==(const MassMetric& other) const { return mu_ == other.mu_; }

 private:
  Vector mu_;
};

inline double mass_inner(const MassMetric& m, const Vector& x, const Vector& y) {
  return m.inner(x, y);
}

inline double mass_norm(const MassMetric& m, const Vector& x) {
  return m.norm(x);
}

}  // namespace parab
