#ifndef ETFC_ESTIMATORS_HPP
#define ETFC_ESTIMATORS_HPP

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "etfc/graph.hpp"
#include "etfc/lpv.hpp"
#include "etfc/synthesis.hpp"

namespace etfc {

enum class EstimatorKind { Zoh, Ole, Cle };

const char* estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_name(const std::string& name);

// kappa^i_k: the information broadcast when agent i's trigger fires.
//   ZOH:  y
//   OLE:  (x, theta)
//   CLE:  (theta, x, zeta)
struct TriggerMessage {
  int sender = -1;
  EstimatorKind kind = EstimatorKind::Zoh;
  Eigen::VectorXd y, x, theta, zeta;

  int payload_scalars() const;
};

// Snapshot of an agent's true signals at the current step.
struct AgentTruth {
  Eigen::VectorXd x, y, theta, zeta;
};

TriggerMessage make_trigger_message(EstimatorKind kind, int sender, const AgentTruth& truth);

enum class GraphRequirement { Connected, FullyConnected };

GraphRequirement required_graph(EstimatorKind kind);
void validate_estimator_graph(EstimatorKind kind, const CommGraph& graph);

struct EstimatorOptions {
  bool clamp_scheduling = false;
  // Verification harness: the plant schedules on the mean state; CLE mirrors
  // that rule on its own estimates so exactness is preserved.
  bool homogeneous = false;
};

// One estimator replica as held by a single agent. Replicas with identical
// message histories stay bit-identical (fixed operation order, no randomness).
class AgentEstimator {
 public:
  virtual ~AgentEstimator() = default;
  virtual EstimatorKind kind() const = 0;
  virtual const std::vector<int>& tracked() const = 0;
  virtual Eigen::VectorXd output_estimate(int agent) const = 0;  // yhat^agent
  virtual void apply_message(const TriggerMessage& msg) = 0;
  virtual void advance(const Eigen::VectorXd& global_reference) = 0;  // k -> k+1
  virtual std::unique_ptr<AgentEstimator> clone() const = 0;

  bool tracks(int agent) const;
};

std::unique_ptr<AgentEstimator> make_estimator(EstimatorKind kind, int self,
                                               const CommGraph& graph,
                                               const LaplacianSpectrum& spectrum,
                                               const PolytopicLpvModel& model,
                                               const VertexControllerSet& controllers,
                                               const std::vector<AgentTruth>& initial_truth,
                                               const EstimatorOptions& options);

}  // namespace etfc

#endif
