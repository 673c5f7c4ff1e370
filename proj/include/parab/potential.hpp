#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "parab/mass_metric.hpp"
#include "parab/types.hpp"

namespace parab {

/// Value, mass-metric gradient and mass-metric Hessian at a point.
struct Eval2 {
  double value = 0.0;
  Vector grad;   // M^{-1} D f
  Matrix hess;   // M^{-1} D^2 f (self-adjoint w.r.t. the mass metric)
};

/// Implementation interface for a concrete potential: analytic value and
/// Euclidean derivatives, plus the domain predicate for Sigma.
class PotentialImpl {
 public:
  virtual ~PotentialImpl() = default;
  virtual double value(const Vector& x) const = 0;
  virtual Vector euclid_grad(const Vector& x) const = 0;
  virtual Matrix euclid_hess(const Vector& x) const = 0;
  /// Throws DomainError (with offending indices) when x is outside Sigma.
  virtual void check_domain(const Vector& x) const = 0;
  virtual bool in_domain(const Vector& x) const {
    try {
      check_domain(x);
      return true;
    } catch (const DomainError&) {
      return false;
    }
  }
};

/// A positive potential, -alpha-homogeneous on a scale-invariant open set,
/// evaluated under a diagonal mass metric.
class PotentialSpec {
 public:
  PotentialSpec() = default;
  PotentialSpec(double alpha, MassMetric metric,
                std::shared_ptr<const PotentialImpl> impl)
      : alpha_(alpha), metric_(std::move(metric)), impl_(std::move(impl)) {
    if (!(alpha_ > 0.0 && alpha_ < 2.0))
      throw ContractError("PotentialSpec: alpha must lie in ]0,2[");
  }

  double alpha() const { return alpha_; }
  Eigen::Index dim() const { return metric_.dim(); }
  const MassMetric& metric() const { return metric_; }
  const PotentialImpl& impl() const { return *impl_; }

  bool in_domain(const Vector& x) const { return impl_->in_domain(x); }
  void check_domain(const Vector& x) const { impl_->check_domain(x); }

  double value(const Vector& x) const {
    impl_->check_domain(x);
    return impl_->value(x);
  }

  /// Euclidean gradient D U (no metric raise applied).
  Vector euclid_grad(const Vector& x) const {
    impl_->check_domain(x);
    return impl_->euclid_grad(x);
  }

  /// Euclidean Hessian D^2 U, symmetric.
  Matrix euclid_hess(const Vector& x) const {
    impl_->check_domain(x);
    return impl_->euclid_hess(x);
  }

  Eval2 eval(const Vector& x) const {
    impl_->check_domain(x);
    Eval2 e;
    e.value = impl_->value(x);
    e.grad = metric_.apply_inverse(impl_->euclid_grad(x));
    e.hess = metric_.apply_inverse(impl_->euclid_hess(x));
    return e;
  }

 private:
  double alpha_ = 1.0;
  MassMetric metric_;
  std::shared_ptr<const PotentialImpl> impl_;
};

/// Cone T(xi+, R, eta): |x| > R and <x/|x|, xi+> > eta, in the mass metric.
class ConeRegion {
 public:
  ConeRegion() = default;
  ConeRegion(MassMetric metric, Vector direction, double radius, double aperture)
      : metric_(std::move(metric)),
        xi_(std::move(direction)),
        radius_(radius),
        aperture_(aperture) {
    if (std::abs(metric_.norm(xi_) - 1.0) > 1e-12)
      throw ContractError("ConeRegion: direction must have unit mass norm");
    if (!(radius_ > 0.0)) throw ContractError("ConeRegion: radius must be positive");
    if (!(aperture_ > 0.0 && aperture_ < 1.0))
      throw ContractError("ConeRegion: aperture must lie in ]0,1[");
  }

  const Vector& direction() const { return xi_; }
  double radius() const { return radius_; }
  double aperture() const { return aperture_; }
  const MassMetric& metric() const { return metric_; }

  bool contains(const Vector& x) const {
    const double n = metric_.norm(x);
    if (!(n > radius_)) return false;
    return metric_.inner(x / n, xi_) > aperture_;
  }

 private:
  MassMetric metric_;
  Vector xi_;
  double radius_ = 1.0;
  double aperture_ = 0.5;
};

inline bool cone_contains(const ConeRegion& c, const Vector& x) {
  return c.contains(x);
}

/// Implementation interface for the time-dependent lower-order term W.
class PerturbationImpl {
 public:
  virtual ~PerturbationImpl() = default;
  virtual double value(double t, const Vector& x) const = 0;
  virtual Vector euclid_grad(double t, const Vector& x) const = 0;
  virtual Matrix euclid_hess(double t, const Vector& x) const = 0;
};

/// The perturbation W(t,x) with decay exponent beta, valid on a cone.
class PerturbationSpec {
 public:
  PerturbationSpec() = default;
  PerturbationSpec(double beta, double paired_alpha, MassMetric metric,
                   ConeRegion validity, std::shared_ptr<const PerturbationImpl> impl,
                   bool continuous_in_time_only = false)
      : beta_(beta),
        metric_(std::move(metric)),
        cone_(std::move(validity)),
        impl_(std::move(impl)),
        continuous_in_time_only_(continuous_in_time_only) {
    if (!(4.0 * beta_ - 3.0 * paired_alpha > 2.0))
      throw ContractError("PerturbationSpec: hypothesis 4*beta - 3*alpha > 2 fails");
  }

  double beta() const { return beta_; }
  const ConeRegion& validity_cone() const { return cone_; }
  const MassMetric& metric() const { return metric_; }
  bool continuous_in_time_only() const { return continuous_in_time_only_; }

  double value(double t, const Vector& x) const { return impl_->value(t, x); }
  Vector euclid_grad(double t, const Vector& x) const { return impl_->euclid_grad(t, x); }
  Matrix euclid_hess(double t, const Vector& x) const { return impl_->euclid_hess(t, x); }

  Eval2 eval(double t, const Vector& x) const {
    Eval2 e;
    e.value = impl_->value(t, x);
    e.grad = metric_.apply_inverse(impl_->euclid_grad(t, x));
    e.hess = metric_.apply_inverse(impl_->euclid_hess(t, x));
    return e;
  }

 private:
  double beta_ = 2.0;
  MassMetric metric_;
  ConeRegion cone_;
  std::shared_ptr<const PerturbationImpl> impl_;
  bool continuous_in_time_only_ = false;
};

/// Relative residuals of the homogeneity identities:
///   euler       = |<grad U(x), x> + alpha U(x)| / U(x)
///   radial_hess = |hess U(x) x + (alpha+1) grad U(x)| / |grad U(x)|
struct IdentityResiduals {
  double euler = 0.0;
  double radial_hess = 0.0;
};

IdentityResiduals homogeneity_identity_residuals(const PotentialSpec& p, const Vector& x);

/// Relative errors of analytic derivatives against central finite differences
/// with step h = eps_mach^{1/3} * scale.
struct FdErrors {
  double grad_err = 0.0;
  double hess_err = 0.0;
};

FdErrors fd_derivative_check(const PotentialSpec& p, const Vector& x);
FdErrors fd_derivative_check(const PerturbationSpec& w, double t, const Vector& x);

/// Fitted log-log slope of f along the ray lambda -> lambda * x0,
/// lambda in [1, lambda_max] (n geometric samples). Used for decay probes.
double ray_decay_slope(const std::function<double(const Vector&)>& f,
                       const MassMetric& metric, const Vector& x0,
                       double lambda_max = 1e4, int n = 40);

/// Optional diagnostic: finite-difference probe of the third-derivative decay
/// |D^3 U| ~ |x|^{-alpha-3} along a ray (log-log slope).
double third_derivative_decay_probe(const PotentialSpec& p, const Vector& x0,
                                    double lambda_max = 1e3, int n = 24);

}  // namespace parab
