#include <doctest.h>

#include "helpers.hpp"
#include "parab/mesh.hpp"
#include "parab/transform.hpp"

using namespace parab;
using namespace parab::test;

namespace {

CentralConfiguration kepler_cc() {
  return certify_central_configuration(make_kepler(1.0, 2), vec2(1, 0));
}

CentralConfiguration two_centre_cc() {
  const ProblemPair pair = two_centre_pair();
  return certify_central_configuration(pair.potential, vec2(1, 0));
}

}  // namespace

TEST_CASE("select_t0") {
  const double omega = std::cbrt(4.5);
  SUBCASE("angle constraint binds: t0 = 11.40") {
    CHECK(select_t0(1.0, 0.5, omega, 1.0) == doctest::Approx(11.40).epsilon(1e-12));
  }
  SUBCASE("constraints vacuous at t0 = 1") {
    CHECK(select_t0(0.01, 0.01, omega, 1.0) == doctest::Approx(1.0));
  }
  SUBCASE("radius constraint binds") {
    const double expected = std::ceil(std::pow(20.0 / omega, 1.5) * 100.0) / 100.0;
    CHECK(select_t0(10.0, 0.1, omega, 1.0) == doctest::Approx(expected));
  }
  SUBCASE("returned value satisfies both inequalities strictly") {
    for (double r : {0.5, 2.0, 30.0})
      for (double eta : {0.1, 0.5, 0.9}) {
        const double t0 = select_t0(r, eta, omega, 1.0);
        CHECK(omega / 2.0 * std::pow(t0, 2.0 / 3.0) > r);
        CHECK(cone_angle_bound(1.0, t0) > eta);
      }
  }
}

TEST_CASE("quintic cutoff") {
  const CutoffW w{11.4};
  SUBCASE("boundary values") {
    const auto a = w.eval(11.4);
    CHECK(a.w == doctest::Approx(1.0));
    CHECK(a.wd == doctest::Approx(0.0));
    CHECK(a.wdd == doctest::Approx(0.0));
    const auto mid = w.eval(11.9);
    CHECK(mid.w == doctest::Approx(0.5).epsilon(1e-14));
    const auto past = w.eval(13.4);
    CHECK(past.w == 0.0);
    CHECK(past.wd == 0.0);
    CHECK(past.wdd == 0.0);
  }
  SUBCASE("C2 across t0 + 1") {
    const auto just_before = w.eval(12.4 - 1e-7);
    CHECK(std::abs(just_before.w) <= 1e-20);
    CHECK(std::abs(just_before.wd) <= 1e-12);
    CHECK(std::abs(just_before.wdd) <= 1e-5);
  }
  SUBCASE("monotone, so max |w| = 1") {
    double prev = 1.0;
    for (double u = 0.05; u <= 1.0; u += 0.05) {
      const double cur = w.eval(11.4 + u).w;
      CHECK(cur <= prev + 1e-15);
      prev = cur;
    }
  }
  CHECK_THROWS_AS(w.eval(11.0), ContractError);
}

TEST_CASE("y_sigma evaluation") {
  const CentralConfiguration cc = kepler_cc();
  SUBCASE("sigma = 0 at t = t0 = 1") {
    const ScalingParams sp = ScalingParams::make(0.0, Vector::Zero(2), 1.0, cc,
                                                 MassMetric::identity(2));
    CHECK(sp.omega == doctest::Approx(1.650964).epsilon(1e-6));
    const Curve2 c = y_sigma_eval(sp, 1.0);
    CHECK((c.y - sp.omega * cc.xi_plus).norm() <= 1e-14);
  }
  SUBCASE("homothetic solution solves the unperturbed equation") {
    const PotentialSpec kepler = make_kepler(1.0, 2);
    const ScalingParams sp = ScalingParams::make(0.0, Vector::Zero(2), 1.0, cc,
                                                 MassMetric::identity(2));
    for (int i = 0; i < 20; ++i) {
      const double t = 1.0 + 0.7 * i * i;
      const Curve2 c = y_sigma_eval(sp, t);
      const Vector rhs = kepler.eval(c.y).grad;
      CHECK((c.ydd - rhs).norm() <= 1e-12 * rhs.norm());
    }
  }
  SUBCASE("y_sigma coincides with y_0 past t0 + 1") {
    Vector sigma = vec2(0.1, -0.2);
    const ScalingParams sp =
        ScalingParams::make(0.0, sigma, 1.0, cc, MassMetric::identity(2));
    const ScalingParams sp0 =
        ScalingParams::make(0.0, Vector::Zero(2), 1.0, cc, MassMetric::identity(2));
    for (double t : {2.0, 2.5, 10.0}) {
      CHECK((y_sigma_eval(sp, t).y - y_sigma_eval(sp0, t).y).norm() == 0.0);
    }
    CHECK((y_sigma_eval(sp, 1.0).y - (sp.omega * cc.xi_plus + sigma)).norm() <= 1e-14);
  }
}

TEST_CASE("scaled perturbation") {
  const ProblemPair pair = two_centre_pair();
  const CentralConfiguration cc = two_centre_cc();
  const double t0 = select_t0(pair.perturbation.validity_cone().radius(), 0.5,
                              omega_from(1.0, cc.u_value), 1.0);

  SUBCASE("eps = 1 reduces to a time shift") {
    // make(): eps must be < 1, so build the parameters directly
    ScalingParams sp = ScalingParams::make(0.99, Vector::Zero(2), t0, cc,
                                           MassMetric::identity(2));
    sp.epsilon = 1.0;
    const Vector y = vec2(7.0, 0.5);
    const Eval2 we = scaled_perturbation(sp, pair.perturbation, t0 + 3.0, y);
    CHECK(we.value == doctest::Approx(pair.perturbation.value(3.0, y)).epsilon(1e-14));
    CHECK((we.grad - pair.perturbation.eval(3.0, y).grad).norm() <= 1e-14);
  }
  SUBCASE("eps = 0 is the smooth zero extension") {
    const ScalingParams sp =
        ScalingParams::make(0.0, Vector::Zero(2), t0, cc, MassMetric::identity(2));
    const Eval2 we = scaled_perturbation(sp, pair.perturbation, t0 + 1.0, vec2(9.0, 0.0));
    CHECK(we.value == 0.0);
    CHECK(we.grad.norm() == 0.0);
    CHECK(we.hess.norm() == 0.0);
  }
  SUBCASE("scaling bound |W_eps| <= C eps^{3(b-a)/(2+a)} |y|^{-beta} on rays") {
    // fit C over a reference epsilon, then check the bound across epsilons
    const MassMetric metric = MassMetric::identity(2);
    double c_fit = 0.0;
    auto w_eps = [&](double eps, double t, const Vector& y) {
      ScalingParams sp = ScalingParams::make(eps, Vector::Zero(2), t0, cc, metric);
      return scaled_perturbation(sp, pair.perturbation, t, y).value;
    };
    std::mt19937_64 rng(41);
    std::vector<Vector> pts;
    for (int s = 0; s < 30; ++s)
      pts.push_back(random_cone_point(rng, metric, vec2(1, 0), 5.0, 500.0, 0.1));
    for (const Vector& y : pts)
      c_fit = std::max(c_fit, std::abs(w_eps(0.5, t0 + 1.0, y)) /
                                  (0.5 * std::pow(metric.norm(y), -2.0)));
    for (const Vector& y : pts)
      for (double eps : {0.3, 0.1, 0.03})
        CHECK(std::abs(w_eps(eps, t0 + 1.0, y)) <=
              1.05 * c_fit * eps * std::pow(metric.norm(y), -2.0) + 1e-14);
  }
  SUBCASE("pointwise eps-rate has the predicted exponent (asymmetric centres)") {
    const ProblemPair asym = two_centre_pair_asymmetric();
    const MassMetric metric = MassMetric::identity(2);
    const Vector y = 5.0 * vec2(1.0, 0.05).normalized();
    std::vector<double> le, lw;
    for (double eps = 0.1; eps > 1e-3; eps *= 0.6) {
      ScalingParams sp = ScalingParams::make(eps, Vector::Zero(2), t0, cc, metric);
      const double wv =
          std::abs(scaled_perturbation(sp, asym.perturbation, t0 + 0.5, y).value);
      le.push_back(std::log(eps));
      lw.push_back(std::log(wv));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < le.size(); ++i) {
      sx += le[i];
      sy += lw[i];
      sxx += le[i] * le[i];
      sxy += le[i] * lw[i];
    }
    const double slope =
        (double(le.size()) * sxy - sx * sy) / (double(le.size()) * sxx - sx * sx);
    CHECK(slope == doctest::Approx(1.0).epsilon(0.05));  // 3(beta-alpha)/(2+alpha) = 1
  }
}

TEST_CASE("forcing term h") {
  const ProblemPair pair = two_centre_pair();
  const CentralConfiguration cc = two_centre_cc();
  const MassMetric metric = MassMetric::identity(2);
  const double t0 = select_t0(pair.perturbation.validity_cone().radius(), 0.5,
                              omega_from(1.0, cc.u_value), 1.0);

  SUBCASE("h vanishes identically at (0,0)") {
    const ScalingParams sp = ScalingParams::make(0.0, Vector::Zero(2), t0, cc, metric);
    for (double t : {t0, t0 + 0.5, t0 + 3.0, t0 * 50.0}) {
      const Vector h = forcing_h(sp, pair.potential, &pair.perturbation, t);
      CHECK(metric.norm(h) <= 1e-13);
    }
  }
  SUBCASE("h = -grad W_eps(t, y0) past t0 + 1") {
    const ScalingParams sp = ScalingParams::make(0.05, Vector::Zero(2), t0, cc, metric);
    for (double t : {t0 + 1.0, t0 + 4.0, t0 * 20.0}) {
      const Vector h = forcing_h(sp, pair.potential, &pair.perturbation, t);
      const Curve2 y = y_sigma_eval(sp, t);
      const Vector expected =
          -scaled_perturbation(sp, pair.perturbation, t, y.y).grad;
      CHECK((h - expected).norm() <= 1e-12 * std::max(1.0, expected.norm()));
    }
  }
  SUBCASE("log-log decay slope of |h|") {
    const ScalingParams sp = ScalingParams::make(0.05, Vector::Zero(2), t0, cc, metric);
    std::vector<double> lt, lh;
    for (double t = t0 + 1.0; t < t0 * 1e3; t *= 1.4) {
      const double hn = metric.norm(forcing_h(sp, pair.potential, &pair.perturbation, t));
      if (hn <= 0.0) continue;
      lt.push_back(std::log(t));
      lh.push_back(std::log(hn));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < lt.size(); ++i) {
      sx += lt[i];
      sy += lh[i];
      sxx += lt[i] * lt[i];
      sxy += lt[i] * lh[i];
    }
    const double slope =
        (double(lt.size()) * sxy - sx * sy) / (double(lt.size()) * sxx - sx * sx);
    CHECK(slope <= -2.0 * (pair.perturbation.beta() + 1.0) / 3.0 + 0.1);
  }
}

TEST_CASE("remainder K") {
  const ProblemPair pair = two_centre_pair();
  const CentralConfiguration cc = two_centre_cc();
  const MassMetric metric = MassMetric::identity(2);
  const double t0 = select_t0(pair.perturbation.validity_cone().radius(), 0.5,
                              omega_from(1.0, cc.u_value), 1.0);

  SUBCASE("phi = 0 gives the pure Hessian") {
    const ScalingParams sp = ScalingParams::make(0.05, Vector::Zero(2), t0, cc, metric);
    const double t = t0 + 2.0;
    const Eval2 k = remainder_K(sp, pair.potential, &pair.perturbation, t, vec2(0, 0));
    CHECK(k.value == 0.0);
    CHECK(k.grad.norm() == 0.0);
    const Curve2 y = y_sigma_eval(sp, t);
    Eval2 ue = pair.potential.eval(y.y);
    const Eval2 we = scaled_perturbation(sp, pair.perturbation, t, y.y);
    CHECK((k.hess - (ue.hess + we.hess)).norm() <= 1e-13 * ue.hess.norm());
  }
  SUBCASE("at (0,0) the Hessian reduces to hess U(y0)") {
    const ScalingParams sp = ScalingParams::make(0.0, Vector::Zero(2), t0, cc, metric);
    const double t = t0 + 5.0;
    const Eval2 k = remainder_K(sp, pair.potential, &pair.perturbation, t, vec2(0, 0));
    const Curve2 y = y_sigma_eval(sp, t);
    CHECK((k.hess - pair.potential.eval(y.y).hess).norm() == 0.0);
  }
  SUBCASE("|K| <= C_K |phi|^2 / t^2 on the trust region") {
    const ScalingParams sp = ScalingParams::make(0.05, Vector::Zero(2), t0, cc, metric);
    const double rho = sp.trust_radius_phi();
    std::mt19937_64 rng(43);
    double c_fit = 0.0;
    std::vector<std::tuple<double, Vector, double>> samples;
    for (int s = 0; s < 100; ++s) {
      const double t = t0 * std::pow(100.0, std::uniform_real_distribution<>(0, 1)(rng));
      // |phi(t)| <= ||phi|| sqrt(t) <= rho sqrt(t): sample inside that envelope
      const Vector phi =
          0.9 * rho * std::sqrt(t) * random_unit(rng, metric) *
          std::uniform_real_distribution<>(0.1, 1.0)(rng);
      const Eval2 k = remainder_K(sp, pair.potential, &pair.perturbation, t, phi);
      const double ratio =
          std::abs(k.value) * t * t / metric.squared_norm(phi);
      samples.emplace_back(t, phi, ratio);
      c_fit = std::max(c_fit, ratio);
    }
    CHECK(std::isfinite(c_fit));
    CHECK(c_fit > 0.0);
    for (const auto& [t, phi, ratio] : samples)
      CHECK(ratio <= c_fit * (1.0 + 1e-12));
  }
}

TEST_CASE("parameter maps") {
  const CentralConfiguration cc = two_centre_cc();
  const MassMetric metric = MassMetric::identity(2);
  const double omega = omega_from(1.0, cc.u_value);

  SUBCASE("aligned x0 at distance 10 omega gives eps = 0.1, sigma = 0") {
    const Vector x0 = 10.0 * omega * cc.xi_plus;
    const ScalingParams sp = params_from_initial(x0, cc, 1.0, metric, 11.4);
    CHECK(sp.epsilon == doctest::Approx(0.1).epsilon(1e-13));
    CHECK(metric.norm(sp.sigma) <= 1e-13);
  }
  SUBCASE("round trip on random admissible-cone points") {
    const ConeRegion cone = admissible_cone(cc, metric, 0.2, 0.3, 1.3, 0.5);
    std::mt19937_64 rng(47);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int s = 0; s < 100; ++s) {
      const double c = cone.aperture() + (1.0 - cone.aperture()) * uni(rng) * 0.999;
      Vector u = random_unit(rng, metric);
      u -= metric.inner(u, cc.xi_plus) * cc.xi_plus;
      u /= metric.norm(u);
      const double r = cone.radius() * (1.0 + 4.0 * uni(rng));
      const Vector x0 = r * (c * cc.xi_plus + std::sqrt(1.0 - c * c) * u);
      REQUIRE(cone.contains(x0));
      const ScalingParams sp = params_from_initial(x0, cc, 1.0, metric, 11.4);
      CHECK(metric.inner(sp.sigma, cc.xi_plus) <= 1e-12);
      CHECK((initial_from_params(sp) - x0).norm() <= 1e-12 * x0.norm());
      // |sigma|^2 identity
      const double proj = metric.inner(x0, cc.xi_plus);
      const double expected =
          omega * omega * (metric.squared_norm(x0) / (proj * proj) - 1.0);
      CHECK(metric.squared_norm(sp.sigma) == doctest::Approx(expected).epsilon(1e-10));
    }
  }
  SUBCASE("reverse round trip (eps, sigma) -> x0 -> (eps, sigma)") {
    std::mt19937_64 rng(53);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int s = 0; s < 100; ++s) {
      const double eps = 0.01 + 0.8 * uni(rng);
      Vector u = random_unit(rng, metric);
      u -= metric.inner(u, cc.xi_plus) * cc.xi_plus;
      const Vector sigma = 0.2 * omega * uni(rng) * u;
      ScalingParams sp = ScalingParams::make(eps, sigma, 11.4, cc, metric);
      const Vector x0 = initial_from_params(sp);
      const ScalingParams back = params_from_initial(x0, cc, 1.0, metric, 11.4);
      CHECK(back.epsilon == doctest::Approx(eps).epsilon(1e-12));
      CHECK((back.sigma - sigma).norm() <= 1e-12 * std::max(1.0, sigma.norm()));
    }
  }
  SUBCASE("x0 behind the configuration is rejected") {
    CHECK_THROWS_AS(params_from_initial(-5.0 * cc.xi_plus, cc, 1.0, metric, 11.4),
                    ContractError);
  }
}

TEST_CASE("admissible cone") {
  const CentralConfiguration cc = two_centre_cc();
  const MassMetric metric = MassMetric::identity(2);
  const double omega = omega_from(1.0, cc.u_value);

  SUBCASE("shrinking r* collapses the cone to the ray") {
    const ConeRegion tight = admissible_cone(cc, metric, 0.2, 1e-6, 1.3, 0.5);
    CHECK(tight.aperture() == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("plug-in arithmetic") {
    const ConeRegion cone = admissible_cone(cc, metric, 0.1, 0.3, 1.0, 0.5);
    const double hyp = std::sqrt(omega * omega + 0.09);
    CHECK(cone.radius() == doctest::Approx(10.0 * hyp).epsilon(1e-12));
    CHECK(cone.aperture() == doctest::Approx(omega / hyp).epsilon(1e-12));
  }
  SUBCASE("membership consistency: 1000 samples map inside ]0,eps*[ x B_r*") {
    const double eps_star = 0.15, r_star = 0.25;
    const ConeRegion cone = admissible_cone(cc, metric, eps_star, r_star, 1.3, 0.5);
    std::mt19937_64 rng(59);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int s = 0; s < 1000; ++s) {
      const double c = cone.aperture() + (1.0 - cone.aperture()) * uni(rng) * 0.9999;
      Vector u = random_unit(rng, metric);
      u -= metric.inner(u, cc.xi_plus) * cc.xi_plus;
      u /= metric.norm(u);
      const double r = cone.radius() * (1.0 + 10.0 * uni(rng)) * 1.0000001;
      const Vector x0 = r * (c * cc.xi_plus + std::sqrt(1.0 - c * c) * u);
      REQUIRE(cone.contains(x0));
      const ScalingParams sp = params_from_initial(x0, cc, 1.0, metric, 11.4);
      CHECK(sp.epsilon < eps_star);
      CHECK(metric.norm(sp.sigma) < r_star);
    }
  }
}

TEST_CASE("lemma-level lower bounds hold on the trust region") {
  const CentralConfiguration cc = kepler_cc();
  const MassMetric metric = MassMetric::identity(2);
  const auto mesh = build_mesh(1.0, 1e3, 1.05, 0.1);
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int s = 0; s < 100; ++s) {
    Vector sigma = random_unit(rng, metric);
    ScalingParams sp0 = ScalingParams::make(0.0, Vector::Zero(2), 1.0, cc, metric);
    sigma *= 0.95 * sp0.trust_radius_sigma() * uni(rng);
    const ScalingParams sp = ScalingParams::make(0.0, sigma, 1.0, cc, metric);
    MeshedFunction phi = random_meshed_function(mesh, metric, 2, 7000 + std::uint64_t(s));
    phi *= 0.95 * sp.trust_radius_phi() * uni(rng) / d12_norm(phi);
    for (Eigen::Index k = 0; k < mesh->node_count(); ++k) {
      const double t = mesh->node(k);
      const Vector z = y_sigma_eval(sp, t).y + phi.value_at_node(k);
      const double zn = metric.norm(z);
      CHECK(zn >= stima_lower_bound(sp, t) * (1.0 - 1e-12));
      CHECK(metric.inner(z / zn, cc.xi_plus) > cone_angle_bound(1.0, t) - 1e-12);
    }
  }
}

TEST_CASE("change of variables maps residuals with the exact scaling factor") {
  const ProblemPair pair = two_centre_pair();
  const CentralConfiguration cc = two_centre_cc();
  const MassMetric metric = MassMetric::identity(2);
  const double alpha = 1.0;
  const double eps = 0.3;
  const double t0 = select_t0(pair.perturbation.validity_cone().radius(), 0.5,
                              omega_from(alpha, cc.u_value), alpha);
  ScalingParams sp = ScalingParams::make(eps, Vector::Zero(2), t0, cc, metric);

  // a smooth non-solution path close to the homothetic parabola
  auto y_path = [&](double s) {
    const Curve2 c = y_sigma_eval(sp, s);
    Vector out = c.y;
    out[0] += 0.1 * std::sin(s - t0);
    out[1] += 0.05 * (s - t0);
    return out;
  };
  const double space = std::pow(eps, 3.0 / (2.0 + alpha));
  const double time = std::pow(eps, 1.5);
  auto x_path = [&](double t) { return Vector(y_path(time * t + t0) / space); };

  auto fd2 = [](auto&& f, double t, double h) {
    return Vector((f(t + h) - 2.0 * f(t) + f(t - h)) / (h * h));
  };

  auto residual_y = [&](double s) {
    const double h = 3e-4 * std::max(1.0, s);
    Vector r = fd2(y_path, s, h) - pair.potential.eval(y_path(s)).grad -
               scaled_perturbation(sp, pair.perturbation, s, y_path(s)).grad;
    return r;
  };
  auto residual_x = [&](double t) {
    const double h = 3e-4 * std::max(1.0, t);
    Vector r = fd2(x_path, t, h) - pair.potential.eval(x_path(t)).grad -
               pair.perturbation.eval(t, x_path(t)).grad;
    return r;
  };

  const double factor = std::pow(eps, 3.0 * (alpha + 1.0) / (2.0 + alpha));
  for (double ds : {0.7, 1.9, 3.4, 4.6}) {
    const double s = t0 + ds;
    const double t = ds / time;
    const Vector ry = residual_y(s);
    const Vector rx = residual_x(t);
    CHECK((rx - factor * ry).norm() <= 1e-6 * std::max(1.0, (factor * ry).norm()));
  }
}
