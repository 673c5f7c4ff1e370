#include "parab/applications.hpp"

#include <cmath>
#include <limits>

#include "parab/central_config.hpp"

namespace parab {

namespace {

// Hessian of 1/||u|| with respect to u.
Matrix inverse_norm_hess(const Vector& u) {
  const double r = u.norm();
  const double r3 = r * r * r;
  const double r5 = r3 * r * r;
  Matrix h = 3.0 * (u * u.transpose()) / r5;
  h.diagonal().array() -= 1.0 / r3;
  return h;
}

class KeplerImpl : public PotentialImpl {
 public:
  KeplerImpl(double nu, Eigen::Index d) : nu_(nu), d_(d) {}

  double value(const Vector& x) const override { return nu_ / x.norm(); }

  Vector euclid_grad(const Vector& x) const override {
    const double r = x.norm();
    return -nu_ * x / (r * r * r);
  }

  Matrix euclid_hess(const Vector& x) const override {
    return nu_ * inverse_norm_hess(x);
  }

  void check_domain(const Vector& x) const override {
    if (x.size() != d_) throw ContractError("Kepler: dimension mismatch");
    if (x.norm() == 0.0) throw DomainError("Kepler: x = 0", 0);
  }

 private:
  double nu_;
  Eigen::Index d_;
};

class NBodyImpl : public PotentialImpl {
 public:
  NBodyImpl(std::vector<double> masses, Eigen::Index k)
      : m_(std::move(masses)), k_(k) {}

  double value(const Vector& x) const override {
    double u = 0.0;
    const Eigen::Index n = Eigen::Index(m_.size());
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        u += m_[size_t(i)] * m_[size_t(j)] / (body(x, i) - body(x, j)).norm();
    return u;
  }

  Vector euclid_grad(const Vector& x) const override {
    Vector g = Vector::Zero(x.size());
    const Eigen::Index n = Eigen::Index(m_.size());
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const Vector u = body(x, i) - body(x, j);
        const double r = u.norm();
        const Vector gij = -m_[size_t(i)] * m_[size_t(j)] * u / (r * r * r);
        g.segment(i * k_, k_) += gij;
        g.segment(j * k_, k_) -= gij;
      }
    return g;
  }

  Matrix euclid_hess(const Vector& x) const override {
    Matrix h = Matrix::Zero(x.size(), x.size());
    const Eigen::Index n = Eigen::Index(m_.size());
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const Matrix hij =
            m_[size_t(i)] * m_[size_t(j)] * inverse_norm_hess(body(x, i) - body(x, j));
        h.block(i * k_, i * k_, k_, k_) += hij;
        h.block(j * k_, j * k_, k_, k_) += hij;
        h.block(i * k_, j * k_, k_, k_) -= hij;
        h.block(j * k_, i * k_, k_, k_) -= hij;
      }
    return h;
  }

  void check_domain(const Vector& x) const override {
    if (x.size() != Eigen::Index(m_.size()) * k_)
      throw ContractError("NBody: dimension mismatch");
    const Eigen::Index n = Eigen::Index(m_.size());
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if ((body(x, i) - body(x, j)).norm() == 0.0)
          throw DomainError("NBody: collision q_i = q_j", int(i), int(j));
  }

 private:
  Vector body(const Vector& x, Eigen::Index i) const { return x.segment(i * k_, k_); }
  std::vector<double> m_;
  Eigen::Index k_;
};

class RestrictedNHImpl : public PotentialImpl {
 public:
  RestrictedNHImpl(double mtilde, std::vector<double> masses, Eigen::Index k)
      : mtilde_(mtilde), m_(std::move(masses)), k_(k) {}

  double value(const Vector& x) const override {
    double u = 0.0;
    const Eigen::Index h = Eigen::Index(m_.size());
    for (Eigen::Index j = 0; j < h; ++j) u += mtilde_ * m_[size_t(j)] / body(x, j).norm();
    for (Eigen::Index l = 0; l < h; ++l)
      for (Eigen::Index j = l + 1; j < h; ++j)
        u += m_[size_t(l)] * m_[size_t(j)] / (body(x, l) - body(x, j)).norm();
    return u;
  }

  Vector euclid_grad(const Vector& x) const override {
    Vector g = Vector::Zero(x.size());
    const Eigen::Index h = Eigen::Index(m_.size());
    for (Eigen::Index j = 0; j < h; ++j) {
      const Vector q = body(x, j);
      const double r = q.norm();
      g.segment(j * k_, k_) -= mtilde_ * m_[size_t(j)] * q / (r * r * r);
    }
    for (Eigen::Index l = 0; l < h; ++l)
      for (Eigen::Index j = l + 1; j < h; ++j) {
        const Vector u = body(x, l) - body(x, j);
        const double r = u.norm();
        const Vector glj = -m_[size_t(l)] * m_[size_t(j)] * u / (r * r * r);
        g.segment(l * k_, k_) += glj;
        g.segment(j * k_, k_) -= glj;
      }
    return g;
  }

  Matrix euclid_hess(const Vector& x) const override {
    Matrix hess = Matrix::Zero(x.size(), x.size());
    const Eigen::Index h = Eigen::Index(m_.size());
    for (Eigen::Index j = 0; j < h; ++j)
      hess.block(j * k_, j * k_, k_, k_) +=
          mtilde_ * m_[size_t(j)] * inverse_norm_hess(body(x, j));
    for (Eigen::Index l = 0; l < h; ++l)
      for (Eigen::Index j = l + 1; j < h; ++j) {
        const Matrix hlj =
            m_[size_t(l)] * m_[size_t(j)] * inverse_norm_hess(body(x, l) - body(x, j));
        hess.block(l * k_, l * k_, k_, k_) += hlj;
        hess.block(j * k_, j * k_, k_, k_) += hlj;
        hess.block(l * k_, j * k_, k_, k_) -= hlj;
        hess.block(j * k_, l * k_, k_, k_) -= hlj;
      }
    return hess;
  }

  void check_domain(const Vector& x) const override {
    if (x.size() != Eigen::Index(m_.size()) * k_)
      throw ContractError("RestrictedNH: dimension mismatch");
    const Eigen::Index h = Eigen::Index(m_.size());
    for (Eigen::Index j = 0; j < h; ++j)
      if (body(x, j).norm() == 0.0) throw DomainError("RestrictedNH: q_j = 0", int(j));
    for (Eigen::Index l = 0; l < h; ++l)
      for (Eigen::Index j = l + 1; j < h; ++j)
        if ((body(x, l) - body(x, j)).norm() == 0.0)
          throw DomainError("RestrictedNH: collision q_l = q_j", int(l), int(j));
  }

 private:
  Vector body(const Vector& x, Eigen::Index j) const { return x.segment(j * k_, k_); }
  double mtilde_;
  std::vector<double> m_;
  Eigen::Index k_;
};

class AnisotropicKeplerImpl : public PotentialImpl {
 public:
  explicit AnisotropicKeplerImpl(double delta) : delta_(delta) {}

  double value(const Vector& x) const override {
    const double r = x.norm();
    const double s = x[0] * x[0] - x[1] * x[1];
    return 1.0 / r + delta_ * s / (r * r * r);
  }

  Vector euclid_grad(const Vector& x) const override {
    const double r = x.norm();
    const double r3 = r * r * r, r5 = r3 * r * r;
    const double s = x[0] * x[0] - x[1] * x[1];
    Vector ds(2);
    ds << 2.0 * x[0], -2.0 * x[1];
    return -x / r3 + delta_ * (ds / r3 - 3.0 * s * x / r5);
  }

  Matrix euclid_hess(const Vector& x) const override {
    const double r = x.norm();
    const double r3 = r * r * r, r5 = r3 * r * r, r7 = r5 * r * r;
    const double s = x[0] * x[0] - x[1] * x[1];
    Vector ds(2);
    ds << 2.0 * x[0], -2.0 * x[1];
    Matrix d2s = Matrix::Zero(2, 2);
    d2s(0, 0) = 2.0;
    d2s(1, 1) = -2.0;
    Matrix h = inverse_norm_hess(x);
    h += delta_ * (d2s / r3 - 3.0 * (ds * x.transpose() + x * ds.transpose()) / r5 -
                   3.0 * s * Matrix::Identity(2, 2) / r5 + 15.0 * s * (x * x.transpose()) / r7);
    return h;
  }

  void check_domain(const Vector& x) const override {
    if (x.size() != 2) throw ContractError("AnisotropicKepler: dimension must be 2");
    if (x.norm() == 0.0) throw DomainError("AnisotropicKepler: x = 0", 0);
  }

 private:
  double delta_;
};

// W(t,x) = sum_i m_i/||x - c_i(t)|| - m/||x|| for a single zero-mass particle.
class MovingCentresPerturbationImpl : public PerturbationImpl {
 public:
  explicit MovingCentresPerturbationImpl(MovingCentres mc) : mc_(std::move(mc)) {}

  double value(double t, const Vector& x) const override {
    double w = -mc_.total_mass() / x.norm();
    for (Eigen::Index i = 0; i < mc_.count(); ++i)
      w += mc_.masses()[size_t(i)] / (x - mc_.position(i, t)).norm();
    return w;
  }

  Vector euclid_grad(double t, const Vector& x) const override {
    const double r = x.norm();
    Vector g = mc_.total_mass() * x / (r * r * r);
    for (Eigen::Index i = 0; i < mc_.count(); ++i) {
      const Vector u = x - mc_.position(i, t);
      const double ri = u.norm();
      g -= mc_.masses()[size_t(i)] * u / (ri * ri * ri);
    }
    return g;
  }

  Matrix euclid_hess(double t, const Vector& x) const override {
    Matrix h = -mc_.total_mass() * inverse_norm_hess(x);
    for (Eigen::Index i = 0; i < mc_.count(); ++i)
      h += mc_.masses()[size_t(i)] * inverse_norm_hess(x - mc_.position(i, t));
    return h;
  }

 private:
  MovingCentres mc_;
};

// W(t,x) = sum_j sum_i mtilde_i m_j/||q_j - c_i(t)|| - mtilde sum_j m_j/||q_j||.
class RestrictedNHPerturbationImpl : public PerturbationImpl {
 public:
  RestrictedNHPerturbationImpl(MovingCentres mc, std::vector<double> satellite_masses,
                               Eigen::Index k)
      : mc_(std::move(mc)), m_(std::move(satellite_masses)), k_(k) {}

  double value(double t, const Vector& x) const override {
    double w = 0.0;
    const double mt = mc_.total_mass();
    for (Eigen::Index j = 0; j < Eigen::Index(m_.size()); ++j) {
      const Vector q = x.segment(j * k_, k_);
      w -= mt * m_[size_t(j)] / q.norm();
      for (Eigen::Index i = 0; i < mc_.count(); ++i)
        w += mc_.masses()[size_t(i)] * m_[size_t(j)] / (q - mc_.position(i, t)).norm();
    }
    return w;
  }

  Vector euclid_grad(double t, const Vector& x) const override {
    Vector g = Vector::Zero(x.size());
    const double mt = mc_.total_mass();
    for (Eigen::Index j = 0; j < Eigen::Index(m_.size()); ++j) {
      const Vector q = x.segment(j * k_, k_);
      const double r = q.norm();
      Vector gj = mt * m_[size_t(j)] * q / (r * r * r);
      for (Eigen::Index i = 0; i < mc_.count(); ++i) {
        const Vector u = q - mc_.position(i, t);
        const double ri = u.norm();
        gj -= mc_.masses()[size_t(i)] * m_[size_t(j)] * u / (ri * ri * ri);
      }
      g.segment(j * k_, k_) = gj;
    }
    return g;
  }

  Matrix euclid_hess(double t, const Vector& x) const override {
    Matrix h = Matrix::Zero(x.size(), x.size());
    const double mt = mc_.total_mass();
    for (Eigen::Index j = 0; j < Eigen::Index(m_.size()); ++j) {
      const Vector q = x.segment(j * k_, k_);
      Matrix hj = -mt * m_[size_t(j)] * inverse_norm_hess(q);
      for (Eigen::Index i = 0; i < mc_.count(); ++i)
        hj += mc_.masses()[size_t(i)] * m_[size_t(j)] *
              inverse_norm_hess(q - mc_.position(i, t));
      h.block(j * k_, j * k_, k_, k_) = hj;
    }
    return h;
  }

 private:
  MovingCentres mc_;
  std::vector<double> m_;
  Eigen::Index k_;
};

class ZeroPerturbationImpl : public PerturbationImpl {
 public:
  double value(double, const Vector&) const override { return 0.0; }
  Vector euclid_grad(double, const Vector& x) const override {
    return Vector::Zero(x.size());
  }
  Matrix euclid_hess(double, const Vector& x) const override {
    return Matrix::Zero(x.size(), x.size());
  }
};

Vector metric_weights_per_body(const std::vector<double>& masses, Eigen::Index k) {
  Vector mu(Eigen::Index(masses.size()) * k);
  for (Eigen::Index i = 0; i < Eigen::Index(masses.size()); ++i)
    mu.segment(i * k, k).setConstant(masses[size_t(i)]);
  return mu;
}

}  // namespace

MovingCentres::MovingCentres(std::vector<Trajectory> trajectories,
                             std::vector<double> masses, Eigen::Index k,
                             double sample_window, int sample_count)
    : traj_(std::move(trajectories)), masses_(std::move(masses)), k_(k) {
  if (traj_.size() != masses_.size())
    throw ContractError("MovingCentres: one mass per trajectory required");
  for (double m : masses_)
    if (!(m > 0.0)) throw ContractError("MovingCentres: masses must be positive");
  double xi = 0.0;
  for (const auto& c : traj_)
    for (int s = 0; s <= sample_count; ++s) {
      const double t = sample_window * double(s) / double(sample_count);
      const double n = c(t).norm();
      if (!std::isfinite(n)) throw ContractError("MovingCentres: unbounded trajectory sample");
      xi = std::max(xi, n);
    }
  xi_ = xi;
}

MovingCentres MovingCentres::fixed(const std::vector<Vector>& points,
                                   std::vector<double> masses) {
  std::vector<Trajectory> traj;
  traj.reserve(points.size());
  for (const auto& p : points) traj.push_back([p](double) { return p; });
  const Eigen::Index k = points.empty() ? 2 : points.front().size();
  return MovingCentres(std::move(traj), std::move(masses), k);
}

MovingCentres MovingCentres::circular(const std::vector<Vector>& centres,
                                      const std::vector<double>& radii,
                                      const std::vector<double>& omegas,
                                      const std::vector<double>& phases,
                                      std::vector<double> masses) {
  std::vector<Trajectory> traj;
  double window = 2.0 * M_PI;
  for (size_t i = 0; i < centres.size(); ++i) {
    const Vector c0 = centres[i];
    const double r = radii[i], w = omegas[i], ph = phases[i];
    if (w != 0.0) window = std::max(window, 2.0 * M_PI / std::abs(w));
    traj.push_back([c0, r, w, ph](double t) {
      Vector c = c0;
      c[0] += r * std::cos(w * t + ph);
      c[1] += r * std::sin(w * t + ph);
      return c;
    });
  }
  return MovingCentres(std::move(traj), std::move(masses),
                       centres.empty() ? 2 : centres.front().size(), window);
}

double MovingCentres::total_mass() const {
  double m = 0.0;
  for (double mi : masses_) m += mi;
  return m;
}

PotentialSpec make_kepler(double nu, Eigen::Index d) {
  return PotentialSpec(1.0, MassMetric::identity(d),
                       std::make_shared<KeplerImpl>(nu, d));
}

PotentialSpec make_nbody(const std::vector<double>& masses, Eigen::Index k) {
  return PotentialSpec(1.0, MassMetric(metric_weights_per_body(masses, k)),
                       std::make_shared<NBodyImpl>(masses, k));
}

PotentialSpec make_restricted_nh_potential(double mtilde,
                                           const std::vector<double>& satellite_masses,
                                           Eigen::Index k) {
  return PotentialSpec(1.0, MassMetric(metric_weights_per_body(satellite_masses, k)),
                       std::make_shared<RestrictedNHImpl>(mtilde, satellite_masses, k));
}

PotentialSpec make_anisotropic_kepler(double delta) {
  return PotentialSpec(1.0, MassMetric::identity(2),
                       std::make_shared<AnisotropicKeplerImpl>(delta));
}

ProblemPair make_kepler_ncentre(const MovingCentres& mc, Eigen::Index d,
                                const Vector& xi_plus, double eta) {
  if (mc.space_dim() != d)
    throw ContractError("make_kepler_ncentre: centre dimension mismatch");
  MassMetric metric = MassMetric::identity(d);
  PotentialSpec u(1.0, metric, std::make_shared<KeplerImpl>(mc.total_mass(), d));
  ConeRegion cone(metric, metric.normalized(xi_plus), mc.bound_xi() + 1.0, eta);
  PerturbationSpec w(2.0, 1.0, metric, cone,
                     std::make_shared<MovingCentresPerturbationImpl>(mc),
                     /*continuous_in_time_only=*/true);
  return ProblemPair{std::move(u), std::move(w)};
}

ProblemPair make_restricted_nh(const MovingCentres& mc, Eigen::Index H,
                               const std::vector<double>& satellite_masses,
                               const Vector& xi_plus, double eta) {
  if (Eigen::Index(satellite_masses.size()) != H)
    throw ContractError("make_restricted_nh: need one satellite mass per body");
  const Eigen::Index k = mc.space_dim();
  MassMetric metric(metric_weights_per_body(satellite_masses, k));
  PotentialSpec u(1.0, metric,
                  std::make_shared<RestrictedNHImpl>(mc.total_mass(), satellite_masses, k));
  const Vector xi = metric.normalized(xi_plus);

  // The cone must avoid the satellite-origin and satellite-satellite collision
  // subspaces: eta has to exceed the cosine of the angle between xi+ and each
  // subspace. This is the quantitative form of the "fix R > 0 so large" step.
  double eta_min = 0.0;
  for (Eigen::Index j = 0; j < H; ++j) {
    const double aj = metric.norm([&] {
      Vector v = Vector::Zero(xi.size());
      v.segment(j * k, k) = xi.segment(j * k, k);
      return v;
    }());
    eta_min = std::max(eta_min, std::sqrt(std::max(0.0, 1.0 - aj * aj)));
  }
  for (Eigen::Index l = 0; l < H; ++l)
    for (Eigen::Index j = l + 1; j < H; ++j) {
      const double ml = satellite_masses[size_t(l)], mj = satellite_masses[size_t(j)];
      const double kap = ml * mj / (ml + mj);
      const double sep2 =
          kap * (xi.segment(l * k, k) - xi.segment(j * k, k)).squaredNorm();
      eta_min = std::max(eta_min, std::sqrt(std::max(0.0, 1.0 - sep2)));
    }
  if (eta <= eta_min) eta = eta_min + 0.25 * (1.0 - eta_min);

  // Radius: |x| > R inside the cone must force ||q_j|| > Xi + 1 for every j.
  const double phi = std::acos(eta);
  double radius = 1.0;
  for (Eigen::Index j = 0; j < H; ++j) {
    Vector v = Vector::Zero(xi.size());
    v.segment(j * k, k) = xi.segment(j * k, k);
    const double aj = std::min(1.0, metric.norm(v));
    const double margin = std::asin(aj) - phi;
    if (!(margin > 0.0))
      throw ContractError("make_restricted_nh: cone aperture too wide for domain");
    radius = std::max(radius, (mc.bound_xi() + 1.0) *
                                  std::sqrt(satellite_masses[size_t(j)]) /
                                  std::sin(margin));
  }

  ConeRegion cone(metric, xi, radius, eta);
  PerturbationSpec w(
      2.0, 1.0, metric, cone,
      std::make_shared<RestrictedNHPerturbationImpl>(mc, satellite_masses, k),
      /*continuous_in_time_only=*/true);
  return ProblemPair{std::move(u), std::move(w)};
}

PerturbationSpec make_zero_perturbation(double beta, double alpha,
                                        const MassMetric& metric,
                                        const ConeRegion& cone) {
  return PerturbationSpec(beta, alpha, metric, cone,
                          std::make_shared<ZeroPerturbationImpl>());
}

HgonConfiguration hgon_configuration(const HgonSpec& spec) {
  if (spec.H < 2) throw ContractError("hgon_configuration: H must be >= 2");
  const int H = spec.H;
  const double m = spec.m;
  const double radius = 1.0 / std::sqrt(double(H) * m);
  HgonConfiguration out;
  out.xi_plus.resize(2 * H);
  for (int j = 0; j < H; ++j) {
    const double th = 2.0 * M_PI * double(j) / double(H);
    out.xi_plus[2 * j] = radius * std::cos(th);
    out.xi_plus[2 * j + 1] = radius * std::sin(th);
  }
  const double sinH = std::sin(M_PI / double(H));
  out.u_value_paper = std::pow(double(H) * m, 1.5) +
                      std::pow(double(H), 1.5) * double(H - 1) * std::pow(m, 2.5) /
                          (4.0 * sinH);
  const PotentialSpec u = make_restricted_nh_potential(
      spec.mtilde, std::vector<double>(size_t(H), m), 2);
  out.u_value_direct = u.value(out.xi_plus);
  return out;
}

double hgon_bs_threshold(int H) {
  if (H < 2) throw ContractError("hgon_bs_threshold: H must be >= 2");
  if (H <= 3) return std::numeric_limits<double>::infinity();
  const double s = std::sin(M_PI / double(H));
  return 100.0 * s * s * s / (double(H - 1) * (2.0 * double(H) - 9.0 * s * s));
}

HgonBsResult hgon_bs_direct(const HgonSpec& spec) {
  const HgonConfiguration conf = hgon_configuration(spec);
  const PotentialSpec u = make_restricted_nh_potential(
      spec.mtilde, std::vector<double>(size_t(spec.H), spec.m), 2);
  const CentralConfiguration cc = certify_central_configuration(u, conf.xi_plus);
  const BsCertificate bs = check_bs(cc);
  return HgonBsResult{cc.nu1, bs.margin, bs.holds};
}

MovingCentres make_elliptic_r3bp_centres(double mu, double eccentricity) {
  if (!(mu > 0.0 && mu < 1.0))
    throw ContractError("elliptic_r3bp: mu must lie in ]0,1[");
  if (!(eccentricity >= 0.0 && eccentricity < 1.0))
    throw ContractError("elliptic_r3bp: eccentricity must lie in [0,1[");
  const double e = eccentricity;
  auto q0 = [e](double t) {
    // Kepler ellipse with semi-major axis 1: solve E - e sin E = t (mod 2*pi).
    double M = std::fmod(t, 2.0 * M_PI);
    if (M < 0) M += 2.0 * M_PI;
    double E = M;
    for (int it = 0; it < 12; ++it) E -= (E - e * std::sin(E) - M) / (1.0 - e * std::cos(E));
    Vector q(2);
    q << std::cos(E) - e, std::sqrt(1.0 - e * e) * std::sin(E);
    return q;
  };
  std::vector<MovingCentres::Trajectory> traj;
  traj.push_back([q0, mu](double t) { return Vector(-mu * q0(t)); });
  traj.push_back([q0, mu](double t) { return Vector((1.0 - mu) * q0(t)); });
  return MovingCentres(std::move(traj), {mu, 1.0 - mu}, 2);
}

}  // namespace parab
