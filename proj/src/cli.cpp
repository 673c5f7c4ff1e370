#include "parab/cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "parab/applications.hpp"
#include "parab/report_json.hpp"

namespace parab::cli {

namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double get_number(const Json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    throw ConfigError("config field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

double require_number(const Json& j, const std::string& key) {
  if (!j.contains(key)) throw ConfigError("config field '" + key + "' is required");
  if (!j.at(key).is_number())
    throw ConfigError("config field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

/// Everything a subcommand needs, assembled from one config document.
struct LoadedProblem {
  std::string preset;
  PotentialSpec potential;
  std::optional<PerturbationSpec> perturbation;
  Vector cc_seed;
  bool xi_exact = false;  // seed is already the known central configuration
  double cone_radius = 1.0;
  double cone_eta = 0.5;
  double horizon = 1e4;
  double gamma = 1.05;
  double band_step = 0.1;
  int steps = 10;
  double tol = 1e-10;
  std::optional<double> eps_target;
  std::optional<Vector> sigma_target;
  std::optional<Vector> x0_target;
  int cc_restarts = 0;
  std::uint64_t seed = 0;
  Json raw;
};

MovingCentres centres_from_config(const Json& j, const std::vector<Vector>& fallback_pts,
                                  const std::vector<double>& fallback_masses) {
  if (!j.contains("centres")) return MovingCentres::fixed(fallback_pts, fallback_masses);
  if (!j.at("centres").is_array() || j.at("centres").empty())
    throw ConfigError("config field 'centres' must be a non-empty array");
  std::vector<Vector> pts;
  std::vector<double> masses;
  for (const auto& c : j.at("centres")) {
    if (!c.contains("c")) throw ConfigError("each centre needs a position 'c'");
    pts.push_back(vector_from_json(c.at("c")));
    const double m = require_number(c, "mass");
    if (!(m > 0.0)) throw ConfigError("centre masses must be positive");
    masses.push_back(m);
  }
  return MovingCentres::fixed(pts, masses);
}

LoadedProblem load_problem(const Json& cfg) {
  LoadedProblem lp;
  lp.raw = cfg;
  if (!cfg.contains("preset") || !cfg.at("preset").is_string())
    throw ConfigError("config field 'preset' (string) is required");
  lp.preset = cfg.at("preset").get<std::string>();
  lp.seed = std::uint64_t(get_number(cfg, "seed", 20240913.0));

  const Json solver = cfg.contains("solver") ? cfg.at("solver") : Json::object();
  lp.horizon = get_number(solver, "T", 1e4);
  lp.gamma = get_number(solver, "gamma", 1.05);
  lp.band_step = get_number(solver, "band_step", 0.1);
  lp.steps = int(get_number(solver, "steps", 10));
  lp.tol = get_number(solver, "tol", 1e-10);
  lp.cc_restarts = int(get_number(cfg, "cc_restarts", 0));

  double cone_r_cfg = 0.0, cone_eta_cfg = 0.0;
  if (cfg.contains("cone")) {
    cone_r_cfg = get_number(cfg.at("cone"), "R", 0.0);
    cone_eta_cfg = get_number(cfg.at("cone"), "eta", 0.0);
    if (cone_eta_cfg < 0.0 || cone_eta_cfg >= 1.0)
      throw ConfigError("cone.eta must lie in [0,1[");
  }

  auto seed_or = [&](const Vector& fallback) {
    if (cfg.contains("xi_seed")) return vector_from_json(cfg.at("xi_seed"));
    return fallback;
  };

  if (lp.preset == "kepler") {
    const auto d = Eigen::Index(get_number(cfg, "dimension", 2));
    if (d < 2) throw ConfigError("kepler: dimension must be >= 2");
    lp.potential = make_kepler(get_number(cfg, "nu", 1.0), d);
    Vector e1 = Vector::Zero(d);
    e1[0] = 1.0;
    lp.cc_seed = seed_or(e1);
    lp.xi_exact = !cfg.contains("xi_seed");
    lp.cone_radius = cone_r_cfg > 0.0 ? cone_r_cfg : 1.0;
    lp.cone_eta = cone_eta_cfg > 0.0 ? cone_eta_cfg : 0.5;
  } else if (lp.preset == "two-centre" || lp.preset == "elliptic-r3bp") {
    MovingCentres mc = [&] {
      if (lp.preset == "elliptic-r3bp")
        return make_elliptic_r3bp_centres(get_number(cfg, "mu", 0.5),
                                          get_number(cfg, "eccentricity", 0.3));
      Vector c1(2), c2(2);
      c1 << 0.3, 0.0;
      c2 << -0.3, 0.0;
      return centres_from_config(cfg, {c1, c2}, {0.5, 0.5});
    }();
    const Eigen::Index d = mc.space_dim();
    Vector e1 = Vector::Zero(d);
    e1[0] = 1.0;
    lp.cc_seed = seed_or(e1);
    lp.xi_exact = true;  // every direction is central for the radial potential
    const double eta = cone_eta_cfg > 0.0 ? cone_eta_cfg : 0.5;
    ProblemPair pair = make_kepler_ncentre(mc, d, lp.cc_seed, eta);
    lp.potential = pair.potential;
    lp.perturbation = pair.perturbation;
    lp.cone_radius = std::max(cone_r_cfg, pair.perturbation.validity_cone().radius());
    lp.cone_eta = eta;
  } else if (lp.preset == "nbody") {
    if (!cfg.contains("masses")) throw ConfigError("nbody: 'masses' is required");
    std::vector<double> masses = cfg.at("masses").get<std::vector<double>>();
    const auto k = Eigen::Index(get_number(cfg, "k", 2));
    lp.potential = make_nbody(masses, k);
    const Eigen::Index n = Eigen::Index(masses.size());
    Vector poly(n * k);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double th = 2.0 * M_PI * double(i) / double(n);
      poly.segment(i * k, k).setZero();
      poly[i * k] = std::cos(th);
      poly[i * k + 1] = std::sin(th);
    }
    lp.cc_seed = seed_or(poly);
    lp.cone_radius = cone_r_cfg > 0.0 ? cone_r_cfg : 1.0;
    lp.cone_eta = cone_eta_cfg > 0.0 ? cone_eta_cfg : 0.5;
  } else if (lp.preset == "restricted-nh" || lp.preset == "hgon") {
    std::vector<double> masses;
    Eigen::Index big_h = 0;
    if (lp.preset == "hgon") {
      const Json hj = cfg.contains("hgon") ? cfg.at("hgon") : Json::object();
      const int h = int(get_number(hj, "H", 2));
      const double m = get_number(hj, "m", 1.0);
      masses.assign(size_t(h), m);
      big_h = h;
    } else {
      if (!cfg.contains("masses")) throw ConfigError("restricted-nh: 'masses' is required");
      masses = cfg.at("masses").get<std::vector<double>>();
      big_h = Eigen::Index(masses.size());
    }
    Vector c1(2), c2(2);
    c1 << 0.1, 0.0;
    c2 << -0.1, 0.0;
    MovingCentres mc = centres_from_config(cfg, {c1, c2}, {0.5, 0.5});
    Vector xi_default;
    if (lp.preset == "hgon") {
      HgonSpec hs{int(big_h), masses.front(), 1.0};
      xi_default = hgon_configuration(hs).xi_plus;
    } else {
      HgonSpec hs{int(big_h), masses.front(), 1.0};
      xi_default = hgon_configuration(hs).xi_plus;
    }
    lp.cc_seed = seed_or(xi_default);
    lp.xi_exact = !cfg.contains("xi_seed");
    ProblemPair pair = make_restricted_nh(mc, big_h, masses, lp.cc_seed,
                                          cone_eta_cfg > 0.0 ? cone_eta_cfg : 0.9);
    lp.potential = pair.potential;
    lp.perturbation = pair.perturbation;
    lp.cone_radius = std::max(cone_r_cfg, pair.perturbation.validity_cone().radius());
    lp.cone_eta = pair.perturbation.validity_cone().aperture();
  } else {
    throw ConfigError("unknown preset '" + lp.preset + "'");
  }

  if (cfg.contains("target")) {
    const Json& t = cfg.at("target");
    if (t.contains("x0")) {
      lp.x0_target = vector_from_json(t.at("x0"));
    } else {
      if (t.contains("epsilon")) lp.eps_target = require_number(t, "epsilon");
      if (t.contains("sigma")) lp.sigma_target = vector_from_json(t.at("sigma"));
    }
  }
  return lp;
}

Json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

struct OutputSink {
  fs::path dir;
  bool quiet = false;

  void ensure() const { fs::create_directories(dir); }

  void emit(const Json& j, const std::string& filename) const {
    ensure();
    write_json(j, (dir / filename).string());
    if (!quiet) std::cout << j.dump(2) << std::endl;
  }
};

void write_manifest(const OutputSink& sink, const std::string& command,
                    const Json& config, std::uint64_t seed, int threads) {
  const auto now = std::chrono::system_clock::now().time_since_epoch();
  Json manifest{{"command", command},
                {"config", config},
                {"seed", seed},
                {"threads", threads},
                {"version", kVersion},
                {"timestamp_unix_ms",
                 std::chrono::duration_cast<std::chrono::milliseconds>(now).count()}};
  sink.ensure();
  write_json(manifest, (sink.dir / "manifest.json").string());
}

CentralConfiguration resolve_cc(const LoadedProblem& lp) {
  if (lp.xi_exact) return certify_central_configuration(lp.potential, lp.cc_seed);
  FindCcOptions opts;
  opts.restarts = lp.cc_restarts;
  opts.rng_seed = lp.seed;
  return find_central_configuration(lp.potential, lp.cc_seed, opts);
}

struct BuiltProblem {
  ActionProblem ap;
  double eps_target = 0.0;
  Vector sigma_target;
};

BuiltProblem build_action_problem(const LoadedProblem& lp) {
  BuiltProblem bp;
  CentralConfiguration cc = resolve_cc(lp);
  const BsCertificate bs = check_bs(cc);
  if (!bs.holds)
    throw ContractError("solve: the (BS) condition fails at the central configuration");
  const double omega = omega_from(cc.alpha, cc.u_value);
  const double t0 = select_t0(lp.cone_radius, lp.cone_eta, omega, cc.alpha);
  if (!(lp.horizon >= t0 + 1.0))
    throw ContractError("solver.T must exceed t0 + 1 (t0 = " + std::to_string(t0) + ")");

  ScalingParams params;
  Vector sigma_target = Vector::Zero(lp.potential.dim());
  double eps_target = 0.0;
  if (lp.x0_target) {
    params = params_from_initial(*lp.x0_target, cc, cc.alpha, lp.potential.metric(), t0);
    eps_target = params.epsilon;
    sigma_target = params.sigma;
  } else {
    eps_target = lp.eps_target.value_or(0.0);
    if (lp.sigma_target) sigma_target = *lp.sigma_target;
  }
  // The solver continues from (0,0); the problem object starts there.
  params = ScalingParams::make(0.0, Vector::Zero(lp.potential.dim()), t0, cc,
                               lp.potential.metric());

  bp.ap = ActionProblem{lp.potential, lp.perturbation, cc, params,
                        build_mesh(t0, lp.horizon, lp.gamma, lp.band_step)};
  bp.ap.validate();
  bp.eps_target = eps_target;
  bp.sigma_target = sigma_target;
  return bp;
}

int cmd_check_identities(const LoadedProblem& lp, const OutputSink& sink) {
  std::mt19937_64 rng(lp.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const MassMetric& metric = lp.potential.metric();
  const Eigen::Index d = lp.potential.dim();
  const Vector xi = metric.normalized(lp.cc_seed);

  double euler_max = 0.0, radial_max = 0.0;
  const int n_samples = 100;
  for (int s = 0; s < n_samples; ++s) {
    // random point in the cone around the seed direction
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = gauss(rng);
    v = metric.normalized(v);
    const double radius = lp.cone_radius * (1.5 + 10.0 * std::abs(gauss(rng)));
    Vector x = radius * metric.normalized(xi + 0.2 * v);
    if (!lp.potential.in_domain(x)) {
      --s;
      continue;
    }
    const IdentityResiduals r = homogeneity_identity_residuals(lp.potential, x);
    euler_max = std::max(euler_max, r.euler);
    radial_max = std::max(radial_max, r.radial_hess);
  }

  double fd_grad_max = 0.0, fd_hess_max = 0.0;
  for (int s = 0; s < 10; ++s) {
    Vector v(d);
    for (Eigen::Index i = 0; i < d; ++i) v[i] = gauss(rng);
    Vector x = lp.cone_radius * 2.0 * metric.normalized(xi + 0.2 * metric.normalized(v));
    if (!lp.potential.in_domain(x)) {
      --s;
      continue;
    }
    const FdErrors e = fd_derivative_check(lp.potential, x);
    fd_grad_max = std::max(fd_grad_max, e.grad_err);
    fd_hess_max = std::max(fd_hess_max, e.hess_err);
    if (lp.perturbation) {
      const FdErrors ew = fd_derivative_check(*lp.perturbation, 0.0, x);
      fd_grad_max = std::max(fd_grad_max, ew.grad_err);
      fd_hess_max = std::max(fd_hess_max, ew.hess_err);
    }
  }

  const bool pass = euler_max <= 1e-9 && radial_max <= 1e-9 && fd_grad_max <= 1e-6 &&
                    fd_hess_max <= 1e-5;
  sink.emit(Json{{"preset", lp.preset},
                 {"samples", n_samples},
                 {"euler_max", euler_max},
                 {"radial_hess_max", radial_max},
                 {"fd_grad_max", fd_grad_max},
                 {"fd_hess_max", fd_hess_max},
                 {"pass", pass}},
            "identities.json");
  return pass ? 0 : 2;
}

int cmd_find_cc(const LoadedProblem& lp, const OutputSink& sink) {
  FindCcOptions opts;
  opts.restarts = lp.cc_restarts;
  opts.rng_seed = lp.seed;
  const CentralConfiguration cc =
      find_central_configuration(lp.potential, lp.cc_seed, opts);
  sink.emit(certificate_json(cc, check_bs(cc)), "certificate.json");
  return 0;
}

int cmd_check_bs(const LoadedProblem& lp, const OutputSink& sink) {
  const CentralConfiguration cc = resolve_cc(lp);
  const BsCertificate bs = check_bs(cc);
  sink.emit(certificate_json(cc, bs), "certificate.json");
  return bs.holds ? 0 : 2;
}

int cmd_solve(const LoadedProblem& lp, const OutputSink& sink, bool verify_both_frames) {
  BuiltProblem bp = build_action_problem(lp);
  const SolveResult sr =
      newton_continuation_solve(bp.ap, bp.eps_target, bp.sigma_target, lp.steps, lp.tol);

  ActionProblem solved = bp.ap;
  solved.params.epsilon = bp.eps_target;
  solved.params.sigma = bp.sigma_target;
  const ParabolicOrbit po = reconstruct_orbit(sr, solved);
  VerifyOptions vo;
  const VerificationReport rep = verify_orbit(po, solved, vo);

  sink.emit(certificate_json(bp.ap.cc, check_bs(bp.ap.cc)), "certificate.json");
  sink.emit(solve_json(sr, solved.params), "solve.json");
  sink.emit(verification_json(rep), "report.json");
  write_orbit_csv(po, solved, (sink.dir / "orbit.csv").string());
  write_csv(sr.phi, (sink.dir / "phi.csv").string());

  bool ok = rep.lemma_bounds.all_ok();
  if (verify_both_frames) {
    VerifyOptions vy = vo;
    vy.frame = VerifyFrame::Transformed;
    const VerificationReport rep_y = verify_orbit(po, solved, vy);
    sink.emit(verification_json(rep_y), "report_transformed.json");
    ok = ok && rep_y.lemma_bounds.all_ok() &&
         rep_y.lemma_bounds.all_ok() == rep.lemma_bounds.all_ok();
  }
  return ok ? 0 : 2;
}

int cmd_hgon_threshold(int big_h, double m, const OutputSink& sink) {
  const double threshold = hgon_bs_threshold(big_h);
  const HgonConfiguration conf = hgon_configuration(HgonSpec{big_h, m, 1.0});
  sink.emit(Json{{"H", big_h},
                 {"m", m},
                 {"threshold", threshold},
                 {"u_paper", conf.u_value_paper},
                 {"u_direct", conf.u_value_direct},
                 {"closed_form_gap", conf.u_value_paper - conf.u_value_direct}},
            "hgon.json");
  return 0;
}

int cmd_epsilon_star(const LoadedProblem& lp, const OutputSink& sink) {
  BuiltProblem bp = build_action_problem(lp);
  std::vector<Vector> grid;
  grid.push_back(Vector::Zero(lp.potential.dim()));
  // two transverse shifts inside the trust ball complete the default grid
  const Matrix basis = tangent_basis(lp.potential.metric(), bp.ap.cc.xi_plus);
  const double r = bp.ap.params.trust_radius_sigma();
  grid.push_back(Vector(0.25 * r * basis.col(0)));
  grid.push_back(Vector(-0.25 * r * basis.col(0)));
  const double eps_max = lp.eps_target.value_or(0.5);
  const EpsilonStarResult es =
      empirical_epsilon_star(bp.ap, grid, eps_max, lp.steps, lp.tol);
  Json grid_json = Json::array();
  for (const auto& s : es.sigma_grid) grid_json.push_back(to_json(s));
  sink.emit(Json{{"eps_star", es.eps_star},
                 {"eps_max", eps_max},
                 {"sigma_grid", grid_json},
                 {"probes", es.probes}},
            "epsilon_star.json");
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"parabolic escape-orbit solver"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  int threads = 1;
  bool quiet = false;
  app.add_option("--config", config_path, "problem configuration (JSON)");
  app.add_option("--out", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed_override, "RNG seed override");
  app.add_option("--threads", threads, "worker threads for linear algebra");
  app.add_flag("--quiet", quiet, "suppress stdout echo of results");

  auto* c_ident = app.add_subcommand("check-identities", "homogeneity identity suite");
  auto* c_findcc = app.add_subcommand("find-cc", "search a central configuration");
  auto* c_bs = app.add_subcommand("check-bs", "certify the (BS) spectral condition");
  auto* c_solve = app.add_subcommand("solve-parabolic", "Newton continuation solve");
  auto* c_verify = app.add_subcommand("verify-orbit", "solve and verify both frames");
  auto* c_hgon = app.add_subcommand("hgon-threshold", "H-gon (BS) mass threshold");
  auto* c_eps = app.add_subcommand("epsilon-star", "empirical continuation range");

  int hgon_h = 4;
  double hgon_m = 1.0;
  c_hgon->add_option("--H", hgon_h, "number of satellites")->required();
  c_hgon->add_option("--m", hgon_m, "satellite mass");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    Eigen::setNbThreads(threads);
    OutputSink sink{fs::path(out_dir), quiet};

    if (c_hgon->parsed()) {
      write_manifest(sink, "hgon-threshold", Json{{"H", hgon_h}, {"m", hgon_m}},
                     seed_given ? seed_override : 0, threads);
      return cmd_hgon_threshold(hgon_h, hgon_m, sink);
    }

    if (config_path.empty()) throw ConfigError("--config is required for this command");
    Json cfg = load_config_file(config_path);
    LoadedProblem lp = load_problem(cfg);
    if (*seed_opt) {
      seed_given = true;
      lp.seed = seed_override;
    }

    std::string command;
    int rc = 0;
    if (c_ident->parsed()) {
      command = "check-identities";
      write_manifest(sink, command, cfg, lp.seed, threads);
      rc = cmd_check_identities(lp, sink);
    } else if (c_findcc->parsed()) {
      command = "find-cc";
      write_manifest(sink, command, cfg, lp.seed, threads);
      rc = cmd_find_cc(lp, sink);
    } else if (c_bs->parsed()) {
      command = "check-bs";
      write_manifest(sink, command, cfg, lp.seed, threads);
      rc = cmd_check_bs(lp, sink);
    } else if (c_solve->parsed()) {
      command = "solve-parabolic";
      write_manifest(sink, command, cfg, lp.seed, threads);
      rc = cmd_solve(lp, sink, false);
    } else if (c_verify->parsed()) {
      command = "verify-orbit";
      write_manifest(sink, command, cfg, lp.seed, threads);
      rc = cmd_solve(lp, sink, true);
    } else if (c_eps->parsed()) {
      command = "epsilon-star";
      write_manifest(sink, command, cfg, lp.seed, threads);
      rc = cmd_epsilon_star(lp, sink);
    }
    return rc;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << std::endl;
    return 1;
  } catch (const ContractError& e) {
    std::cerr << "contract violation: " << e.what() << std::endl;
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "domain violation: " << e.what() << std::endl;
    return 2;
  } catch (const SolveError& e) {
    std::cerr << "solver failure: " << e.what() << std::endl;
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 3;
  }
}

}  // namespace parab::cli
