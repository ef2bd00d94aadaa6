#ifndef ETFC_CONFIG_HPP
#define ETFC_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "etfc/graph.hpp"
#include "etfc/lpv.hpp"
#include "etfc/sim.hpp"
#include "etfc/synthesis.hpp"

namespace etfc {

struct VerificationSettings {
  int gain_trials = 20;
  std::uint64_t gain_seed = 1;
  int gain_horizon_steps = 8000;
  double gain_input_magnitude = 0.05;
  int stability_samples = 100;
};

// Parsed scenario document. Unknown keys are rejected everywhere.
struct ScenarioConfig {
  double ts = 0.01;
  PolytopicLpvModel model;
  CommGraph graph = CommGraph(1, {});
  // synthesis
  double gamma = 0.0;
  double sigma = 1e-3;
  double alpha_z = 0.5;
  double beta_z = 0.5;
  double scale_cap = 1000.0;
  SynthesisProblem::Mode mode = SynthesisProblem::Mode::Feasibility;
  // simulation
  double horizon_seconds = 30.0;
  EstimatorKind estimator = EstimatorKind::Zoh;
  Eigen::VectorXd reference;
  std::vector<DisturbancePulse> disturbances;
  Eigen::VectorXd initial_states;
  bool homogeneous_scheduling = false;
  bool clamp_scheduling = false;
  VerificationSettings verification;
  std::string output_directory = "out";

  int horizon_steps() const { return static_cast<int>(std::lround(horizon_seconds / ts)); }
};

ScenarioConfig load_config(const std::string& path);
std::string canonical_config_json(const ScenarioConfig& config);

SynthesisProblem make_problem(const ScenarioConfig& config, const LaplacianSpectrum& spectrum);
NetworkScenario make_scenario(const ScenarioConfig& config,
                              const VertexControllerSet& controllers);

void save_certificate(const std::string& path, const SynthesisCertificate& cert);
SynthesisCertificate load_certificate(const std::string& path);

void save_controllers(const std::string& path, const VertexControllerSet& controllers,
                      const PolytopicLpvModel& model);
VertexControllerSet load_controllers(const std::string& path, const PolytopicLpvModel& model);

void write_trace_csv(const std::string& path, const SimulationTrace& trace);
void write_messages_csv(const std::string& path, const SimulationTrace& trace);
void write_metrics_json(const std::string& path, const RunMetrics& metrics,
                        const std::string& estimator);

}  // namespace etfc

#endif
