#include "etfc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "etfc/errors.hpp"
#include "etfc/rng.hpp"

namespace etfc {

void NetworkScenario::validate() const {
  model.validate();
  const int n = graph.node_count();
  if (sigma <= 0.0) throw ScenarioError("trigger level sigma must be positive");
  if (Ts <= 0.0) throw ScenarioError("sampling time must be positive");
  if (horizon_steps < 1) throw ScenarioError("horizon must be at least one step");
  if (reference.size() != n * model.dims.ny)
    throw ScenarioError("reference must stack N agent references of size ny");
  if (initial_states.size() != n * model.dims.nx)
    throw ScenarioError("initial states must stack N agent states of size nx");
  if (std::abs(alpha_z) >= 1.0) throw ScenarioError("|alpha_z| < 1 required");
  if (static_cast<int>(controllers.F_x.size()) != model.polytope.vertex_count())
    throw ScenarioError("controller vertex count does not match the model");
  for (const auto& f : controllers.F_x)
    if (f.rows() != model.dims.nu || f.cols() != model.dims.nx)
      throw ScenarioError("F_x dimensions do not match the model");
  for (const auto& f : controllers.F_zeta)
    if (f.rows() != model.dims.nu || f.cols() != model.dims.ny)
      throw ScenarioError("F_zeta dimensions do not match the model");
  for (const auto& d : disturbances) {
    if (d.agent < 0 || d.agent >= n) throw ScenarioError("disturbance agent out of range");
    if (d.channel < 0 || d.channel >= model.dims.nw)
      throw ScenarioError("disturbance channel out of range");
    if (d.end_s < d.start_s) throw ScenarioError("disturbance window end before start");
  }
  validate_estimator_graph(estimator, graph);
}

namespace {

SchedulingValue schedule_or_diagnose(const NetworkScenario& sc, const Eigen::VectorXd& theta,
                                     int agent, int k) {
  try {
    return sc.clamp_scheduling ? convex_coordinates_clamped(sc.model.polytope, theta)
                               : convex_coordinates(sc.model.polytope, theta);
  } catch (const OutOfPolytope& e) {
    std::ostringstream os;
    os << "scheduling left the polytope at step " << k << ", agent " << agent << ": "
       << e.what();
    throw OutOfPolytope(os.str());
  }
}

}  // namespace

WorldState init_world(const NetworkScenario& scenario, const LaplacianSpectrum& spectrum) {
  const int n = scenario.graph.node_count();
  const ModelDims& dims = scenario.model.dims;
  WorldState w;
  w.k = 0;
  w.x = scenario.initial_states;
  w.zeta = Eigen::VectorXd::Zero(n * dims.ny);
  w.ztilde = Eigen::VectorXd::Zero(n * dims.ny);
  w.heading.assign(n, 0.0);

  // Every agent is assumed to have just broadcast at k = 0: all estimates
  // start at the truth, so e_0 = 0 and step 0 is trigger-free.
  std::vector<AgentTruth> truth(n);
  for (int i = 0; i < n; ++i) {
    truth[i].x = w.x.segment(i * dims.nx, dims.nx);
    truth[i].zeta = Eigen::VectorXd::Zero(dims.ny);
    truth[i].theta = scenario.model.scheduling(truth[i].x);
    SchedulingValue sv = schedule_or_diagnose(scenario, truth[i].theta, i, 0);
    truth[i].theta = sv.theta;
    truth[i].y = evaluate_model(scenario.model, sv).Cy * truth[i].x;
  }
  if (scenario.homogeneous_scheduling) {
    Eigen::VectorXd xbar = Eigen::VectorXd::Zero(dims.nx);
    for (int i = 0; i < n; ++i) xbar += truth[i].x;
    xbar /= n;
    SchedulingValue sv =
        schedule_or_diagnose(scenario, scenario.model.scheduling(xbar), -1, 0);
    for (int i = 0; i < n; ++i) {
      truth[i].theta = sv.theta;
      truth[i].y = evaluate_model(scenario.model, sv).Cy * truth[i].x;
    }
  }

  EstimatorOptions opts;
  opts.clamp_scheduling = scenario.clamp_scheduling;
  opts.homogeneous = scenario.homogeneous_scheduling;
  for (int i = 0; i < n; ++i)
    w.estimators.push_back(make_estimator(scenario.estimator, i, scenario.graph, spectrum,
                                          scenario.model, scenario.controllers, truth, opts));
  return w;
}

StepResult step(const NetworkScenario& scenario, const LaplacianSpectrum& spectrum,
                WorldState& world, const Eigen::VectorXd& r_k, const Eigen::VectorXd& w_k) {
  const int n = scenario.graph.node_count();
  const ModelDims& dims = scenario.model.dims;
  const int nx = dims.nx, ny = dims.ny, nth = scenario.model.polytope.dimension;
  const Eigen::MatrixXd& L = spectrum.laplacian;

  StepResult out;
  out.theta.resize(n * nth);
  out.triggered.assign(n, 0);

  // Scheduling and plant matrices for this step.
  std::vector<SchedulingValue> sched(n);
  if (scenario.homogeneous_scheduling) {
    Eigen::VectorXd xbar = Eigen::VectorXd::Zero(nx);
    for (int i = 0; i < n; ++i) xbar += world.x.segment(i * nx, nx);
    xbar /= n;
    SchedulingValue sv =
        schedule_or_diagnose(scenario, scenario.model.scheduling(xbar), -1, world.k);
    for (int i = 0; i < n; ++i) sched[i] = sv;
  } else {
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd theta =
          scenario.model.scheduling(world.x.segment(i * nx, nx));
      sched[i] = schedule_or_diagnose(scenario, theta, i, world.k);
    }
  }
  std::vector<VertexMatrices> plant(n);
  out.y.resize(n * ny);
  for (int i = 0; i < n; ++i) {
    plant[i] = evaluate_model(scenario.model, sched[i]);
    out.y.segment(i * ny, ny) = plant[i].Cy * world.x.segment(i * nx, nx);
    out.theta.segment(i * nth, nth) = sched[i].theta;
  }

  // Trigger fixed point: evaluate all conditions on the current estimates,
  // broadcast, apply, re-check. Triggered agents have e = 0 afterwards, so the
  // set only grows and the loop ends within N rounds.
  auto estimation_error = [&](int i) -> Eigen::VectorXd {
    return world.estimators[i]->output_estimate(i) - out.y.segment(i * ny, ny);
  };
  auto local_formation_error = [&](int i) -> Eigen::VectorXd {
    // etahat^i = (q_i' L)_(ny) (r - yhat), using agent i's own estimates.
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(ny);
    for (int j : world.estimators[i]->tracked()) {
      const double lij = L(i, j);
      if (lij == 0.0) continue;
      acc += lij * (r_k.segment(j * ny, ny) - world.estimators[i]->output_estimate(j));
    }
    return acc;
  };

  for (int round = 0; round <= n; ++round) {
    std::vector<int> newly;
    for (int i = 0; i < n; ++i) {
      if (out.triggered[i]) continue;
      const Eigen::VectorXd e = estimation_error(i);
      const Eigen::VectorXd etahat = local_formation_error(i);
      if (e.squaredNorm() > scenario.sigma * etahat.squaredNorm()) newly.push_back(i);
    }
    if (newly.empty()) break;
    for (int i : newly) {
      out.triggered[i] = 1;
      AgentTruth truth;
      truth.x = world.x.segment(i * nx, nx);
      truth.y = out.y.segment(i * ny, ny);
      truth.theta = sched[i].theta;
      truth.zeta = world.zeta.segment(i * ny, ny);
      TriggerMessage msg = make_trigger_message(scenario.estimator, i, truth);
      for (int a = 0; a < n; ++a)
        if (world.estimators[a]->tracks(i)) world.estimators[a]->apply_message(msg);
      out.messages.push_back(std::move(msg));
    }
  }

  // Post-resolution signals; Eq. 5 must hold for every agent now.
  out.yhat.resize(n * ny);
  out.e.resize(n * ny);
  out.etahat.resize(n * ny);
  for (int i = 0; i < n; ++i) {
    out.yhat.segment(i * ny, ny) = world.estimators[i]->output_estimate(i);
    out.e.segment(i * ny, ny) = estimation_error(i);
    out.etahat.segment(i * ny, ny) = local_formation_error(i);
    if (out.e.segment(i * ny, ny).squaredNorm() >
        scenario.sigma * out.etahat.segment(i * ny, ny).squaredNorm())
      throw Error("trigger condition violated after resolution (internal error)");
  }
  out.eta = kron_expand(L, ny) * (r_k - out.y);

  // Integrator, feedback, performance filter, plant.
  out.u.resize(n * dims.nu);
  Eigen::VectorXd x_next(n * nx), zeta_next(n * ny), ztilde_next(n * ny);
  out.z = kron_expand(L, ny) * world.ztilde;
  for (int i = 0; i < n; ++i) {
    zeta_next.segment(i * ny, ny) =
        world.zeta.segment(i * ny, ny) + out.etahat.segment(i * ny, ny);
    const Eigen::MatrixXd fx = scenario.controllers.blend_F_x(sched[i].alpha);
    const Eigen::MatrixXd fz = scenario.controllers.blend_F_zeta(sched[i].alpha);
    out.u.segment(i * dims.nu, dims.nu) =
        fz * world.zeta.segment(i * ny, ny) + fx * world.x.segment(i * nx, nx);
    ztilde_next.segment(i * ny, ny) = -scenario.alpha_z * world.ztilde.segment(i * ny, ny) +
                                      scenario.beta_z * (r_k.segment(i * ny, ny) -
                                                         out.y.segment(i * ny, ny));
    x_next.segment(i * nx, nx) =
        plant[i].A * world.x.segment(i * nx, nx) +
        plant[i].Bw * w_k.segment(i * dims.nw, dims.nw) +
        plant[i].Bu * out.u.segment(i * dims.nu, dims.nu);
  }
  if (x_next.lpNorm<Eigen::Infinity>() > 1e9) {
    std::ostringstream os;
    os << "state norm exceeded 1e9 at step " << world.k << " (closed loop unstable?)";
    throw NumericOverflow(os.str());
  }

  for (int i = 0; i < n; ++i) world.estimators[i]->advance(r_k);

  if (scenario.model.body_frame) {
    const auto& bf = *scenario.model.body_frame;
    for (int i = 0; i < n; ++i)
      world.heading[i] +=
          scenario.Ts * world.x[i * nx + bf.vt_index] / bf.handle_offset;
  }

  world.x = x_next;
  world.zeta = zeta_next;
  world.ztilde = ztilde_next;
  ++world.k;
  return out;
}

namespace {

RunOutput run_impl(const NetworkScenario& scenario, const InputSignals& inputs) {
  scenario.validate();
  const LaplacianSpectrum spectrum = build_laplacian(scenario.graph);
  const int n = scenario.graph.node_count();
  const ModelDims& dims = scenario.model.dims;
  const int steps = inputs.horizon_steps;
  const int nth = scenario.model.polytope.dimension;

  RunOutput out;
  SimulationTrace& tr = out.trace;
  tr.Ts = scenario.Ts;
  tr.steps = steps;
  tr.agents = n;
  tr.dims = dims;
  tr.x.resize(n * dims.nx, steps);
  tr.y.resize(n * dims.ny, steps);
  tr.yhat.resize(n * dims.ny, steps);
  tr.eta.resize(n * dims.ny, steps);
  tr.etahat.resize(n * dims.ny, steps);
  tr.zeta.resize(n * dims.ny, steps);
  tr.u.resize(n * dims.nu, steps);
  tr.ztilde.resize(n * dims.ny, steps);
  tr.z.resize(n * dims.ny, steps);
  tr.e.resize(n * dims.ny, steps);
  tr.w.resize(n * dims.nw, steps);
  tr.theta.resize(n * nth, steps);
  tr.r.resize(n * dims.ny, steps);
  tr.triggered.resize(n, steps);
  const bool has_frame = scenario.model.body_frame.has_value();
  if (has_frame) tr.global_xy.resize(2 * n, steps);

  WorldState world = init_world(scenario, spectrum);
  for (int k = 0; k < steps; ++k) {
    const Eigen::VectorXd r_k = inputs.reference(k);
    const Eigen::VectorXd w_k = inputs.disturbance(k);
    if (has_frame) {
      const auto& bf = *scenario.model.body_frame;
      for (int i = 0; i < n; ++i) {
        const double phi = world.heading[i];
        const double bx = world.x[i * dims.nx + bf.pos_x_index];
        const double by = world.x[i * dims.nx + bf.pos_y_index];
        // global = T_phi^T * body
        tr.global_xy(2 * i, k) = std::cos(phi) * bx - std::sin(phi) * by;
        tr.global_xy(2 * i + 1, k) = std::sin(phi) * bx + std::cos(phi) * by;
      }
    }
    tr.x.col(k) = world.x;
    tr.zeta.col(k) = world.zeta;
    tr.ztilde.col(k) = world.ztilde;
    StepResult sr = step(scenario, spectrum, world, r_k, w_k);
    tr.y.col(k) = sr.y;
    tr.yhat.col(k) = sr.yhat;
    tr.eta.col(k) = sr.eta;
    tr.etahat.col(k) = sr.etahat;
    tr.u.col(k) = sr.u;
    tr.z.col(k) = sr.z;
    tr.e.col(k) = sr.e;
    tr.w.col(k) = w_k;
    tr.theta.col(k) = sr.theta;
    tr.r.col(k) = r_k;
    for (int i = 0; i < n; ++i) tr.triggered(i, k) = sr.triggered[i];
    for (const auto& m : sr.messages)
      tr.messages.push_back({k, m.sender, m.payload_scalars()});
  }
  out.metrics = compute_metrics(tr);
  return out;
}

}  // namespace

RunOutput run(const NetworkScenario& scenario) {
  const int n = scenario.graph.node_count();
  const ModelDims& dims = scenario.model.dims;
  InputSignals inputs;
  inputs.horizon_steps = scenario.horizon_steps;
  inputs.reference = [&scenario](int) { return scenario.reference; };
  inputs.disturbance = [&scenario, n, dims](int k) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n * dims.nw);
    const double t = k * scenario.Ts;
    for (const auto& d : scenario.disturbances)
      if (t >= d.start_s && t < d.end_s) w[d.agent * dims.nw + d.channel] += d.magnitude;
    return w;
  };
  return run_impl(scenario, inputs);
}

RunOutput run_with_inputs(const NetworkScenario& scenario, const InputSignals& inputs) {
  return run_impl(scenario, inputs);
}

RunMetrics compute_metrics(const SimulationTrace& trace) {
  RunMetrics m;
  m.possible_events_steps = trace.steps;
  m.possible_events_agent_steps = static_cast<long>(trace.steps) * trace.agents;
  m.per_agent_events.assign(trace.agents, 0);
  double sum = 0.0;
  for (int k = 0; k < trace.steps; ++k) sum += trace.eta.col(k).norm();
  m.mean_formation_error = trace.steps > 0 ? sum / trace.steps : 0.0;
  for (int k = 0; k < trace.steps; ++k)
    for (int i = 0; i < trace.agents; ++i)
      if (trace.triggered(i, k)) {
        ++m.trigger_events;
        ++m.per_agent_events[i];
      }
  m.trigger_rate =
      trace.steps > 0 ? static_cast<double>(m.trigger_events) / trace.steps : 0.0;
  for (const auto& rec : trace.messages) m.payload_scalars_total += rec.payload_scalars;
  return m;
}

GainTrialReport empirical_l2_gain(const NetworkScenario& scenario, int trials,
                                  std::uint64_t seed, int trial_horizon_steps,
                                  double input_magnitude) {
  NetworkScenario sc = scenario;
  sc.initial_states = Eigen::VectorXd::Zero(scenario.initial_states.size());
  sc.disturbances.clear();
  sc.homogeneous_scheduling = true;
  sc.horizon_steps = trial_horizon_steps;

  const int n = sc.graph.node_count();
  const int nr = n * sc.model.dims.ny;
  const int nw = n * sc.model.dims.nw;
  const int cutoff = static_cast<int>(0.4 * trial_horizon_steps);

  GainTrialReport rep;
  rep.trials = trials;
  rep.gamma = sc.controllers.gamma;

  for (int trial = 0; trial < trials; ++trial) {
    double mag = input_magnitude;
    for (int attempt = 0;; ++attempt) {
      Rng rng(seed + 977 * trial);
      Eigen::MatrixXd r_seq = Eigen::MatrixXd::Zero(nr, trial_horizon_steps);
      Eigen::MatrixXd w_seq = Eigen::MatrixXd::Zero(nw, trial_horizon_steps);
      for (int k = 0; k < cutoff; ++k) {
        r_seq.col(k) = rng.uniform_vector(nr, -mag, mag);
        w_seq.col(k) = rng.uniform_vector(nw, -mag, mag);
      }
      InputSignals inputs;
      inputs.horizon_steps = trial_horizon_steps;
      inputs.reference = [&r_seq](int k) { return Eigen::VectorXd(r_seq.col(k)); };
      inputs.disturbance = [&w_seq](int k) { return Eigen::VectorXd(w_seq.col(k)); };
      try {
        RunOutput ro = run_with_inputs(sc, inputs);
        double z_energy = 0.0, f_energy = 0.0, tail_energy = 0.0;
        const int tail_start = trial_horizon_steps - std::max(1, trial_horizon_steps / 50);
        for (int k = 0; k < trial_horizon_steps; ++k) {
          const double zk = ro.trace.z.col(k).squaredNorm();
          z_energy += zk;
          if (k >= tail_start) tail_energy += zk;
          f_energy += r_seq.col(k).squaredNorm() + w_seq.col(k).squaredNorm();
        }
        const double tail_fraction = z_energy > 0.0 ? tail_energy / z_energy : 0.0;
        rep.worst_tail_fraction = std::max(rep.worst_tail_fraction, tail_fraction);
        if (tail_fraction > 1e-9) {
          std::ostringstream os;
          os << "z tail energy fraction " << tail_fraction
             << " exceeds 1e-9; trial horizon too short";
          throw NonConvergence(os.str());
        }
        const double ratio = f_energy > 0.0 ? std::sqrt(z_energy / f_energy) : 0.0;
        rep.ratios.push_back(ratio);
        rep.max_ratio = std::max(rep.max_ratio, ratio);
        rep.input_magnitude = mag;
        break;
      } catch (const OutOfPolytope&) {
        if (attempt >= 6) throw;
        mag *= 0.5;  // deterministic shrink keeps the schedule inside Theta
      }
    }
  }
  return rep;
}

}  // namespace etfc
