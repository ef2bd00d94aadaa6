#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "etfc/config.hpp"
#include "etfc/errors.hpp"
#include "etfc/report.hpp"
#include "etfc/sim.hpp"
#include "etfc/synthesis.hpp"
#include "etfc/verify.hpp"

namespace fs = std::filesystem;
using namespace etfc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitVerifyFailed = 3;

fs::path resolve_output(const std::string& dir) {
  fs::path p(dir);
  if (p.is_relative()) {
    if (const char* root = std::getenv("ETFC_OUT_ROOT")) p = fs::path(root) / p;
  }
  fs::create_directories(p);
  return p;
}

int cmd_synth(const std::string& config_path, std::string output_override) {
  ScenarioConfig cfg = load_config(config_path);
  const LaplacianSpectrum spectrum = build_laplacian(cfg.graph);
  SynthesisProblem problem = make_problem(cfg, spectrum);

  sdp::InteriorPointBackend backend;
  SynthesisResult result = synthesize(problem, backend);

  const fs::path out =
      resolve_output(output_override.empty() ? cfg.output_directory : output_override);
  save_certificate((out / "certificate.json").string(), result.certificate);
  save_controllers((out / "controllers.json").string(), result.controllers, cfg.model);

  std::cout << "feasible: gamma=" << result.certificate.gamma
            << " sigma=" << result.certificate.sigma
            << " margin=" << result.certificate.solver_margin << "\n";
  std::cout << "lmi block min eigenvalues:";
  for (double e : result.certificate.min_eig_per_block) std::cout << ' ' << e;
  std::cout << "\nwrote " << (out / "certificate.json").string() << "\n";
  std::cout << "wrote " << (out / "controllers.json").string() << "\n";
  return kExitOk;
}

int cmd_simulate(const std::string& config_path, const std::string& controller_path,
                 const std::string& estimator_override, std::string output_override) {
  ScenarioConfig cfg = load_config(config_path);
  if (!estimator_override.empty()) cfg.estimator = estimator_from_name(estimator_override);
  VertexControllerSet controllers = load_controllers(controller_path, cfg.model);
  NetworkScenario scenario = make_scenario(cfg, controllers);

  RunOutput out = run(scenario);

  const fs::path base =
      resolve_output(output_override.empty() ? cfg.output_directory : output_override);
  const fs::path dir = base / estimator_name(cfg.estimator);
  fs::create_directories(dir);
  write_trace_csv((dir / "trace.csv").string(), out.trace);
  write_messages_csv((dir / "messages.csv").string(), out.trace);
  write_metrics_json((dir / "metrics.json").string(), out.metrics,
                     estimator_name(cfg.estimator));
  std::cout << "estimator=" << estimator_name(cfg.estimator)
            << " mean_formation_error=" << out.metrics.mean_formation_error
            << " trigger_events=" << out.metrics.trigger_events
            << " trigger_rate=" << out.metrics.trigger_rate << "\n";
  std::cout << "wrote " << dir.string() << "/{trace.csv,metrics.json,messages.csv}\n";
  return kExitOk;
}

int cmd_verify(const std::string& config_path, const std::string& certificate_path,
               const std::string& controller_path, std::uint64_t seed_override,
               bool has_seed) {
  ScenarioConfig cfg = load_config(config_path);
  const LaplacianSpectrum spectrum = build_laplacian(cfg.graph);
  SynthesisCertificate cert = load_certificate(certificate_path);
  VertexControllerSet controllers = load_controllers(controller_path, cfg.model);
  if (cert.S.rows() != cfg.model.dims.n_psi())
    throw ScenarioError("certificate dims do not match the model");

  bool all_ok = true;
  auto line = [&](const char* name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << "\n";
    all_ok = all_ok && ok;
  };

  // 1. modal spectral radii at vertices + sampled interior points
  {
    ModalStabilityReport rep = verify_modal_stability(
        cfg.model, controllers, spectrum.lambda2(), spectrum.lambda_max(), cert.alpha_z,
        cert.beta_z, cfg.verification.stability_samples);
    std::ostringstream os;
    os << "max spectral radius " << rep.max_spectral_radius << " (agreement plant rho "
       << rep.agreement_plant_radius << ")";
    line("modal_stability", rep.stable, os.str());
  }
  // 2. full-network LMI equivalence
  {
    if (cfg.graph.node_count() <= 4) {
      double worst = 0.0;
      for (int l = 0; l < cfg.model.polytope.vertex_count(); ++l)
        worst = std::max(worst,
                         verify_full_network_equivalence(cfg.model, cert, spectrum, l));
      std::ostringstream os;
      os << "max deviation " << worst << " (tol 1e-8)";
      line("network_equivalence", worst < 1e-8, os.str());
    } else {
      line("network_equivalence", true, "skipped (N > 4)");
    }
  }
  // 3. empirical l2 gain over seeded trials
  try {
    NetworkScenario scenario = make_scenario(cfg, controllers);
    const std::uint64_t seed = has_seed ? seed_override : cfg.verification.gain_seed;
    GainTrialReport rep =
        empirical_l2_gain(scenario, cfg.verification.gain_trials, seed,
                          cfg.verification.gain_horizon_steps,
                          cfg.verification.gain_input_magnitude);
    std::ostringstream os;
    os << "max ratio " << rep.max_ratio << " vs gamma " << controllers.gamma << " ("
       << rep.trials << " trials, seed " << seed << ")";
    line("empirical_l2_gain", rep.max_ratio <= controllers.gamma * (1.0 + 1e-3), os.str());
  } catch (const Error& e) {
    line("empirical_l2_gain", false, e.what());
  }
  // 4. Lyapunov dissipation on a homogeneous run
  try {
    NetworkScenario scenario = make_scenario(cfg, controllers);
    scenario.homogeneous_scheduling = true;
    RunOutput out = run(scenario);
    DissipationReport rep = verify_lyapunov_decrease(out.trace, cert, spectrum);
    std::ostringstream os;
    os << "max normalized violation " << rep.max_violation << " over " << rep.steps_checked
       << " steps";
    line("lyapunov_dissipation", rep.pass, os.str());
  } catch (const Error& e) {
    line("lyapunov_dissipation", false, e.what());
  }

  return all_ok ? kExitOk : kExitVerifyFailed;
}

int cmd_report(const std::vector<std::string>& dirs, std::string output_override) {
  const fs::path out = resolve_output(output_override.empty() ? "report" : output_override);
  ReportBundle bundle = build_report(dirs, out.string());
  std::cout << bundle.table_text;
  std::cout << "wrote " << (out / "report.txt").string() << " and report.json\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "event-triggered gain-scheduled formation control for polytopic LPV agent networks"};
  app.require_subcommand(1);

  std::string config_path, controller_path, certificate_path, estimator, output;
  std::vector<std::string> report_dirs;
  std::uint64_t seed = 0;
  bool has_seed = false;

  auto* synth = app.add_subcommand("synth", "solve the per-mode LMIs and write controllers");
  synth->add_option("config", config_path, "scenario config (JSON)")->required();
  synth->add_option("--output", output, "output directory override");

  auto* sim = app.add_subcommand("simulate", "run the event-triggered closed loop");
  sim->add_option("config", config_path, "scenario config (JSON)")->required();
  sim->add_option("--controller", controller_path, "controller file")->required();
  sim->add_option("--estimator", estimator, "override: zoh|ole|cle");
  sim->add_option("--output", output, "output directory override");

  auto* ver = app.add_subcommand("verify", "run the certificate checks");
  ver->add_option("config", config_path, "scenario config (JSON)")->required();
  ver->add_option("--certificate", certificate_path, "certificate file")->required();
  ver->add_option("--controller", controller_path, "controller file")->required();
  auto* seed_opt = ver->add_option("--seed", seed, "seed for the gain trials");

  auto* rep = app.add_subcommand("report", "aggregate run directories into a comparison");
  rep->add_option("dirs", report_dirs, "run directories (simulate outputs)")->required();
  rep->add_option("--output", output, "report output directory");

  try {
    app.parse(argc, argv);
    has_seed = seed_opt->count() > 0;
    if (synth->parsed()) return cmd_synth(config_path, output);
    if (sim->parsed()) return cmd_simulate(config_path, controller_path, estimator, output);
    if (ver->parsed())
      return cmd_verify(config_path, certificate_path, controller_path, seed, has_seed);
    if (rep->parsed()) return cmd_report(report_dirs, output);
    return kExitUsage;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Infeasible& e) {
    std::cerr << "etfc: error: infeasible: " << e.what() << "\n";
    return kExitInfeasible;
  } catch (const Error& e) {
    std::cerr << "etfc: error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "etfc: error: " << e.what() << "\n";
    return kExitUsage;
  }
}
