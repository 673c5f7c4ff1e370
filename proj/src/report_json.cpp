#include "parab/report_json.hpp"

#include <fstream>

namespace parab {

Json to_json(const Vector& v) {
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Vector vector_from_json(const Json& j) {
  if (!j.is_array()) throw ContractError("expected a JSON array of numbers");
  Vector v(Eigen::Index(j.size()));
  Eigen::Index i = 0;
  for (const auto& x : j) {
    if (!x.is_number()) throw ContractError("expected a JSON array of numbers");
    v[i++] = x.get<double>();
  }
  return v;
}

Json certificate_json(const CentralConfiguration& cc, const BsCertificate& bs) {
  return Json{{"xi_plus", to_json(cc.xi_plus)},
              {"u_value", cc.u_value},
              {"cc_residual", cc.cc_residual},
              {"spectrum", to_json(cc.tangent_spectrum)},
              {"nu1", cc.nu1},
              {"bs_margin", bs.margin},
              {"holds", bs.holds},
              {"zeta", bs.zeta},
              {"alpha", cc.alpha}};
}

Json diagnostics_json(const DiagnosticsReport& d) {
  return Json{{"c_h", d.c_h},
              {"c_k", d.c_k},
              {"kappa_estimate", d.kappa_estimate},
              {"zeta", d.zeta},
              {"hardy_slack", d.hardy_slack},
              {"lipschitz_eps", d.lipschitz_eps}};
}

Json solve_json(const SolveResult& sr, const ScalingParams& params) {
  Json path = Json::array();
  for (const auto& s : sr.path)
    path.push_back(Json{{"epsilon", s.epsilon},
                        {"sigma_norm", s.sigma_norm},
                        {"phi_norm", s.phi_norm},
                        {"newton_iters", s.newton_iters}});
  return Json{{"epsilon", params.epsilon},
              {"sigma", to_json(params.sigma)},
              {"t0", params.t0},
              {"omega", params.omega},
              {"gradient_norm", sr.gradient_norm},
              {"newton_iters_max", sr.newton_iters},
              {"newton_iters_total", sr.newton_iters_total},
              {"phi_norm", d12_norm(sr.phi)},
              {"hessian_min_eig", sr.hessian_min_eig},
              {"continuation_path", path},
              {"diagnostics", diagnostics_json(sr.diagnostics)}};
}

Json lemma_bounds_json(const LemmaBounds& lb) {
  return Json{{"stima_lower_ok", lb.stima_lower_ok},
              {"stima_angle_ok", lb.stima_angle_ok},
              {"h_slope_applicable", lb.h_slope_applicable},
              {"h_slope", lb.h_slope},
              {"h_slope_ok", lb.h_slope_ok},
              {"c_k1", lb.c_k1},
              {"c_k2", lb.c_k2},
              {"c_k3", lb.c_k3},
              {"k_constants_finite", lb.k_constants_finite},
              {"c_second", lb.c_second},
              {"ydot_tail_ok", lb.ydot_tail_ok},
              {"all_ok", lb.all_ok()}};
}

Json verification_json(const VerificationReport& rep) {
  Json samples{{"t", rep.sample_times},
               {"rel_gap", rep.rel_gap},
               {"radial_ratio", rep.radial_ratio},
               {"speed", rep.speed_tail},
               {"direction", rep.direction_tail}};
  return Json{{"frame", rep.frame == VerifyFrame::Physical ? "physical" : "transformed"},
              {"ode_deviation", rep.ode_deviation},
              {"first_decade_deviation", rep.first_decade_deviation},
              {"final_speed", rep.final_speed},
              {"final_direction_gap", rep.final_direction_gap},
              {"speed_trend_ok", rep.speed_trend_ok},
              {"direction_trend_ok", rep.direction_trend_ok},
              {"scaled_residual", rep.scaled_residual},
              {"integrator_steps", rep.integrator_steps},
              {"samples", samples},
              {"lemma_bounds", lemma_bounds_json(rep.lemma_bounds)}};
}

void write_json(const Json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ContractError("write_json: cannot open " + path);
  out << j.dump(2) << "\n";
}

}  // namespace parab
