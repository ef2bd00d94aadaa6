#include "etfc/estimators.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "etfc/errors.hpp"

namespace etfc {

const char* estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Zoh: return "zoh";
    case EstimatorKind::Ole: return "ole";
    case EstimatorKind::Cle: return "cle";
  }
  return "?";
}

EstimatorKind estimator_from_name(const std::string& name) {
  if (name == "zoh") return EstimatorKind::Zoh;
  if (name == "ole") return EstimatorKind::Ole;
  if (name == "cle") return EstimatorKind::Cle;
  throw ConfigError("unknown estimator: " + name + " (expected zoh|ole|cle)");
}

int TriggerMessage::payload_scalars() const {
  switch (kind) {
    case EstimatorKind::Zoh: return static_cast<int>(y.size());
    case EstimatorKind::Ole: return static_cast<int>(x.size() + theta.size());
    case EstimatorKind::Cle: return static_cast<int>(theta.size() + x.size() + zeta.size());
  }
  return 0;
}

TriggerMessage make_trigger_message(EstimatorKind kind, int sender, const AgentTruth& truth) {
  TriggerMessage msg;
  msg.sender = sender;
  msg.kind = kind;
  switch (kind) {
    case EstimatorKind::Zoh:
      msg.y = truth.y;
      break;
    case EstimatorKind::Ole:
      msg.x = truth.x;
      msg.theta = truth.theta;
      break;
    case EstimatorKind::Cle:
      msg.theta = truth.theta;
      msg.x = truth.x;
      msg.zeta = truth.zeta;
      break;
  }
  return msg;
}

GraphRequirement required_graph(EstimatorKind kind) {
  return kind == EstimatorKind::Cle ? GraphRequirement::FullyConnected
                                    : GraphRequirement::Connected;
}

void validate_estimator_graph(EstimatorKind kind, const CommGraph& graph) {
  if (required_graph(kind) == GraphRequirement::FullyConnected && !is_fully_connected(graph))
    throw ScenarioError("closed-loop estimation requires a fully connected graph");
}

bool AgentEstimator::tracks(int agent) const {
  const auto& t = tracked();
  return std::find(t.begin(), t.end(), agent) != t.end();
}

namespace {

std::vector<int> local_neighborhood(const CommGraph& graph, int self) {
  std::vector<int> t = graph.neighbors(self);
  t.push_back(self);
  std::sort(t.begin(), t.end());
  return t;
}

void check_kind(const TriggerMessage& msg, EstimatorKind kind) {
  if (msg.kind != kind)
    throw ScenarioError("trigger message kind does not match the active estimator");
}

SchedulingValue schedule(const PolytopicLpvModel& model, const Eigen::VectorXd& theta,
                         bool clamp) {
  return clamp ? convex_coordinates_clamped(model.polytope, theta)
               : convex_coordinates(model.polytope, theta);
}

class ZohEstimator final : public AgentEstimator {
 public:
  ZohEstimator(int self, const CommGraph& graph, const std::vector<AgentTruth>& truth)
      : tracked_(local_neighborhood(graph, self)) {
    for (int j : tracked_) yhat_[j] = truth.at(j).y;
  }

  EstimatorKind kind() const override { return EstimatorKind::Zoh; }
  const std::vector<int>& tracked() const override { return tracked_; }

  Eigen::VectorXd output_estimate(int agent) const override {
    auto it = yhat_.find(agent);
    if (it == yhat_.end()) throw UnknownSender("agent not tracked by ZOH estimator");
    return it->second;
  }

  void apply_message(const TriggerMessage& msg) override {
    check_kind(msg, EstimatorKind::Zoh);
    auto it = yhat_.find(msg.sender);
    if (it == yhat_.end()) throw UnknownSender("ZOH message from untracked agent");
    it->second = msg.y;
  }

  void advance(const Eigen::VectorXd&) override {}  // hold

  std::unique_ptr<AgentEstimator> clone() const override {
    return std::make_unique<ZohEstimator>(*this);
  }

 private:
  std::vector<int> tracked_;
  std::map<int, Eigen::VectorXd> yhat_;
};

class OleEstimator final : public AgentEstimator {
 public:
  OleEstimator(int self, const CommGraph& graph, const PolytopicLpvModel& model,
               const std::vector<AgentTruth>& truth, const EstimatorOptions& options)
      : model_(model), options_(options), tracked_(local_neighborhood(graph, self)) {
    for (int j : tracked_) state_[j] = {truth.at(j).x, truth.at(j).theta};
  }

  EstimatorKind kind() const override { return EstimatorKind::Ole; }
  const std::vector<int>& tracked() const override { return tracked_; }

  Eigen::VectorXd output_estimate(int agent) const override {
    auto it = state_.find(agent);
    if (it == state_.end()) throw UnknownSender("agent not tracked by OLE estimator");
    const auto& [x, theta] = it->second;
    VertexMatrices vm = evaluate_model(model_, schedule(model_, theta, options_.clamp_scheduling));
    return vm.Cy * x;
  }

  void apply_message(const TriggerMessage& msg) override {
    check_kind(msg, EstimatorKind::Ole);
    auto it = state_.find(msg.sender);
    if (it == state_.end()) throw UnknownSender("OLE message from untracked agent");
    it->second = {msg.x, msg.theta};
  }

  // xhat_{k+1} = A(thetahat_k) xhat_k; the neighbor's input is unknown and
  // deliberately omitted. thetahat_{k+1} = g(xhat_{k+1}).
  void advance(const Eigen::VectorXd&) override {
    for (int j : tracked_) {
      auto& [x, theta] = state_[j];
      VertexMatrices vm =
          evaluate_model(model_, schedule(model_, theta, options_.clamp_scheduling));
      x = vm.A * x;
      theta = model_.scheduling(x);
    }
  }

  std::unique_ptr<AgentEstimator> clone() const override {
    return std::make_unique<OleEstimator>(*this);
  }

 private:
  PolytopicLpvModel model_;
  EstimatorOptions options_;
  std::vector<int> tracked_;
  std::map<int, std::pair<Eigen::VectorXd, Eigen::VectorXd>> state_;  // (xhat, thetahat)
};

class CleEstimator final : public AgentEstimator {
 public:
  CleEstimator(const CommGraph& graph, const LaplacianSpectrum& spectrum,
               const PolytopicLpvModel& model, const VertexControllerSet& controllers,
               const std::vector<AgentTruth>& truth, const EstimatorOptions& options)
      : model_(model), controllers_(controllers), options_(options) {
    const int n = graph.node_count();
    tracked_.resize(n);
    for (int j = 0; j < n; ++j) tracked_[j] = j;
    lap_ny_ = kron_expand(spectrum.laplacian, model.dims.ny);
    for (int j = 0; j < n; ++j) {
      xhat_.push_back(truth.at(j).x);
      zetahat_.push_back(truth.at(j).zeta);
      thetahat_.push_back(truth.at(j).theta);
    }
  }

  EstimatorKind kind() const override { return EstimatorKind::Cle; }
  const std::vector<int>& tracked() const override { return tracked_; }

  Eigen::VectorXd output_estimate(int agent) const override {
    if (agent < 0 || agent >= static_cast<int>(xhat_.size()))
      throw UnknownSender("agent not tracked by CLE estimator");
    VertexMatrices vm = evaluate_model(
        model_, schedule(model_, thetahat_[agent], options_.clamp_scheduling));
    return vm.Cy * xhat_[agent];
  }

  void apply_message(const TriggerMessage& msg) override {
    check_kind(msg, EstimatorKind::Cle);
    if (msg.sender < 0 || msg.sender >= static_cast<int>(xhat_.size()))
      throw UnknownSender("CLE message from untracked agent");
    xhat_[msg.sender] = msg.x;
    zetahat_[msg.sender] = msg.zeta;
    thetahat_[msg.sender] = msg.theta;
  }

  // Propagates the full estimated closed loop:
  //   xhat+   = (A + Bu Fx) xhat + Bu Fzeta zetahat     (per agent)
  //   zetahat+ = zetahat + L_(ny) (r - yhat)
  void advance(const Eigen::VectorXd& reference) override {
    const int n = static_cast<int>(xhat_.size());
    const int ny = model_.dims.ny;
    Eigen::VectorXd yhat(n * ny);
    std::vector<Eigen::VectorXd> xnext(n);
    for (int j = 0; j < n; ++j) {
      SchedulingValue sv = schedule(model_, thetahat_[j], options_.clamp_scheduling);
      VertexMatrices vm = evaluate_model(model_, sv);
      Eigen::MatrixXd fx = controllers_.blend_F_x(sv.alpha);
      Eigen::MatrixXd fz = controllers_.blend_F_zeta(sv.alpha);
      yhat.segment(j * ny, ny) = vm.Cy * xhat_[j];
      xnext[j] = vm.A * xhat_[j] + vm.Bu * (fx * xhat_[j] + fz * zetahat_[j]);
    }
    Eigen::VectorXd zeta_update = lap_ny_ * (reference - yhat);
    for (int j = 0; j < n; ++j) {
      xhat_[j] = xnext[j];
      zetahat_[j] += zeta_update.segment(j * ny, ny);
    }
    if (options_.homogeneous) {
      Eigen::VectorXd xbar = Eigen::VectorXd::Zero(model_.dims.nx);
      for (int j = 0; j < n; ++j) xbar += xhat_[j];
      xbar /= n;
      const Eigen::VectorXd shared = model_.scheduling(xbar);
      for (int j = 0; j < n; ++j) thetahat_[j] = shared;
    } else {
      for (int j = 0; j < n; ++j) thetahat_[j] = model_.scheduling(xhat_[j]);
    }
  }

  std::unique_ptr<AgentEstimator> clone() const override {
    return std::make_unique<CleEstimator>(*this);
  }

 private:
  PolytopicLpvModel model_;
  VertexControllerSet controllers_;
  EstimatorOptions options_;
  std::vector<int> tracked_;
  Eigen::MatrixXd lap_ny_;
  std::vector<Eigen::VectorXd> xhat_, zetahat_, thetahat_;
};

}  // namespace

std::unique_ptr<AgentEstimator> make_estimator(EstimatorKind kind, int self,
                                               const CommGraph& graph,
                                               const LaplacianSpectrum& spectrum,
                                               const PolytopicLpvModel& model,
                                               const VertexControllerSet& controllers,
                                               const std::vector<AgentTruth>& initial_truth,
                                               const EstimatorOptions& options) {
  validate_estimator_graph(kind, graph);
  switch (kind) {
    case EstimatorKind::Zoh:
      return std::make_unique<ZohEstimator>(self, graph, initial_truth);
    case EstimatorKind::Ole:
      return std::make_unique<OleEstimator>(self, graph, model, initial_truth, options);
    case EstimatorKind::Cle:
      return std::make_unique<CleEstimator>(graph, spectrum, model, controllers,
                                            initial_truth, options);
  }
  throw Error("unreachable estimator kind");
}

}  // namespace etfc
