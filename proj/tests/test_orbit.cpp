#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "helpers.hpp"
#include "parab/orbit.hpp"
#include "parab/rk.hpp"

using namespace parab;
using namespace parab::test;

namespace {

ActionProblem two_centre_problem(double big_t, double gamma = 1.05, double band = 0.1) {
  const ProblemPair pair = two_centre_pair();
  const CentralConfiguration cc =
      certify_central_configuration(pair.potential, vec2(1, 0));
  const double t0 = select_t0(pair.perturbation.validity_cone().radius(), 0.5,
                              omega_from(cc.alpha, cc.u_value), cc.alpha);
  const ScalingParams sp =
      ScalingParams::make(0.0, Vector::Zero(2), t0, cc, pair.potential.metric());
  return ActionProblem{pair.potential, pair.perturbation, cc, sp,
                       build_mesh(t0, big_t, gamma, band)};
}

}  // namespace

TEST_CASE("dopri5 integrates the kepler parabola to high accuracy") {
  // exact homothetic solution |y| = omega t^{2/3} with U = 1/|y|
  const double omega = std::cbrt(4.5);
  auto rhs = [](double, const Vector& s) {
    Vector out(4);
    out.head(2) = s.tail(2);
    const double r = s.head(2).norm();
    out.tail(2) = -s.head(2) / (r * r * r);
    return out;
  };
  Vector s0(4);
  s0 << omega, 0.0, 0.0, 0.0;
  s0.tail(2) << 2.0 / 3.0 * omega, 0.0;
  Dopri5 integ(rhs, 1e-12, 1e-14);
  const Vector s1 = integ.solve(1.0, s0, 100.0);
  CHECK(s1.head(2).norm() ==
        doctest::Approx(omega * std::pow(100.0, 2.0 / 3.0)).epsilon(1e-10));
}

TEST_CASE("reconstruction of the trivial solve is the exact homothetic parabola") {
  ActionProblem ap = two_centre_problem(2e3);
  const SolveResult sr = newton_continuation_solve(ap, 0.0, Vector::Zero(2));
  ParabolicOrbit po = reconstruct_orbit(sr, ap);
  CHECK(po.y_frame_only);  // eps = 0 has no physical pullback

  // give the orbit a physical frame by solving at small positive eps = 0.05
  ActionProblem ap2 = ap;
  const SolveResult sr2 = newton_continuation_solve(ap2, 0.05, Vector::Zero(2));
  ap2.params.epsilon = 0.05;
  ap2.params.sigma = Vector::Zero(2);
  const ParabolicOrbit po2 = reconstruct_orbit(sr2, ap2);
  CHECK_FALSE(po2.y_frame_only);
  // x(0) = eps^{-3/(2+a)} (omega xi + sigma)
  const Vector expected_x0 =
      std::pow(0.05, -1.0) * (ap2.params.omega * ap2.cc.xi_plus);
  CHECK((po2.x0 - expected_x0).norm() <= 1e-10 * expected_x0.norm());
  const auto [x_at_0, xd_at_0] = po2.state(0.0);
  CHECK((x_at_0 - po2.x0).norm() <= 1e-10 * expected_x0.norm());
}

TEST_CASE("round trip: params_from_initial feeds back the same x0") {
  ActionProblem ap = two_centre_problem(2e3);
  const Vector x0 = initial_from_params([&] {
    ScalingParams sp = ap.params;
    sp.epsilon = 0.07;
    sp.sigma = vec2(0.0, 0.05);
    return sp;
  }());
  const ScalingParams sp =
      params_from_initial(x0, ap.cc, 1.0, ap.potential.metric(), ap.params.t0);
  CHECK(sp.epsilon == doctest::Approx(0.07).epsilon(1e-12));
  const SolveResult sr = newton_continuation_solve(ap, sp.epsilon, sp.sigma);
  ActionProblem solved = ap;
  solved.params.epsilon = sp.epsilon;
  solved.params.sigma = sp.sigma;
  const ParabolicOrbit po = reconstruct_orbit(sr, solved);
  CHECK((po.x0 - x0).norm() <= 1e-12 * x0.norm());
}

TEST_CASE("verification of a full two-centre solve") {
  ActionProblem ap = two_centre_problem(2e4, 1.05, 0.05);
  const SolveResult sr = newton_continuation_solve(ap, 0.05, Vector::Zero(2));
  ActionProblem solved = ap;
  solved.params.epsilon = 0.05;
  solved.params.sigma = Vector::Zero(2);
  const ParabolicOrbit po = reconstruct_orbit(sr, solved);
  const VerificationReport rep = verify_orbit(po, solved);

  CHECK(rep.first_decade_deviation <= 1e-3);
  CHECK(rep.lemma_bounds.stima_lower_ok);
  CHECK(rep.lemma_bounds.stima_angle_ok);
  CHECK(rep.lemma_bounds.h_slope_ok);
  CHECK(rep.lemma_bounds.k_constants_finite);
  CHECK(rep.lemma_bounds.ydot_tail_ok);
  CHECK(rep.radial_ratio.back() == doctest::Approx(1.0).epsilon(0.05));
  CHECK(rep.direction_tail.back() >= 0.999);
  CHECK(rep.final_speed <= 1e-2);
  CHECK(rep.speed_trend_ok);

  SUBCASE("frame equivalence: transformed-frame verdicts match") {
    VerifyOptions vy;
    vy.frame = VerifyFrame::Transformed;
    const VerificationReport rep_y = verify_orbit(po, solved, vy);
    CHECK(rep_y.lemma_bounds.all_ok() == rep.lemma_bounds.all_ok());
    CHECK(rep_y.speed_trend_ok == rep.speed_trend_ok);
    CHECK(rep_y.direction_trend_ok == rep.direction_trend_ok);
    // the transformed-frame integration must track the reconstruction too
    CHECK(rep_y.ode_deviation <= 1e-3);
  }

  SUBCASE("orbit csv dump") {
    const auto path = std::filesystem::temp_directory_path() / "parab_orbit.csv";
    write_orbit_csv(po, solved, path.string());
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header ==
          "t,x0,x1,xdot0,xdot1,radial_ratio,direction_cos");
    std::filesystem::remove(path);
  }
}

TEST_CASE("unperturbed homothetic orbit verifies against the closed form") {
  // sigma = 0, W = 0, phi = 0: radial ratio is (1 + t0/(eps^{3/2} t))^{2/3}
  const PotentialSpec kepler = make_kepler(1.0, 2);
  const CentralConfiguration cc = certify_central_configuration(kepler, vec2(1, 0));
  const ScalingParams sp0 =
      ScalingParams::make(0.0, Vector::Zero(2), 1.0, cc, kepler.metric());
  ActionProblem ap{kepler, std::nullopt, cc, sp0, build_mesh(1.0, 1e4, 1.05, 0.1)};
  const SolveResult sr = newton_continuation_solve(ap, 0.2, Vector::Zero(2));
  ActionProblem solved = ap;
  solved.params.epsilon = 0.2;
  const ParabolicOrbit po = reconstruct_orbit(sr, solved);
  const VerificationReport rep = verify_orbit(po, solved);
  CHECK(rep.ode_deviation <= 1e-8);
  const double time = std::pow(0.2, 1.5);
  for (size_t i = 0; i < rep.sample_times.size(); ++i) {
    const double t = rep.sample_times[i];
    const double expected = std::pow(1.0 + 1.0 / (time * t), 2.0 / 3.0);
    CHECK(rep.radial_ratio[i] == doctest::Approx(expected).epsilon(1e-9));
  }
}
