#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "etfc/config.hpp"
#include "etfc/errors.hpp"
#include "etfc/synthesis.hpp"

using namespace etfc;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("etfc_test_" + name);
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

const char* kMinimalConfig = R"({
  "ts": 0.01,
  "model": {
    "dims": { "nx": 1, "nw": 1, "nu": 1, "ny": 1 },
    "vertices": [ { "theta": [0.0], "A": [0.5], "Bw": [1.0], "Bu": [1.0], "Cy": [1.0] } ],
    "scheduling_map": "constant"
  },
  "graph": { "nodes": 2, "edges": [[0, 1]] },
  "synthesis": { "gamma": 20.0, "sigma": 1e-3, "beta_z": 0.1 },
  "simulation": {
    "horizon_seconds": 1.0,
    "estimator": "zoh",
    "reference": [[1.0], [0.0]]
  }
})";

}  // namespace

TEST_CASE("config parses with defaults applied") {
  auto p = temp_file("min.json");
  write_file(p, kMinimalConfig);
  ScenarioConfig cfg = load_config(p.string());
  CHECK(cfg.ts == 0.01);
  CHECK(cfg.horizon_steps() == 100);
  CHECK(cfg.gamma == 20.0);
  CHECK(cfg.alpha_z == 0.5);      // default
  CHECK(cfg.beta_z == 0.1);
  CHECK(cfg.scale_cap == 1000.0); // default
  CHECK(cfg.estimator == EstimatorKind::Zoh);
  CHECK(cfg.initial_states.size() == 2);
  CHECK(cfg.initial_states.cwiseAbs().maxCoeff() == 0.0);
  CHECK(cfg.output_directory == "out");
}

TEST_CASE("unknown keys are rejected everywhere") {
  auto reject = [](const std::string& text) {
    auto p = temp_file("bad.json");
    write_file(p, text);
    CHECK_THROWS_AS(load_config(p.string()), ConfigError);
  };
  std::string base(kMinimalConfig);
  reject(base.substr(0, base.size() - 2) + ", \"extra\": 1}");
  std::string bad_sim = base;
  bad_sim.replace(bad_sim.find("\"estimator\""), 11, "\"estimatr\"");
  reject(bad_sim);
  reject("{\"ts\": true}");
  reject("not json at all");
}

TEST_CASE("config -> canonical -> config round trip is semantically identical") {
  auto p = temp_file("rt.json");
  write_file(p, kMinimalConfig);
  ScenarioConfig a = load_config(p.string());
  auto p2 = temp_file("rt2.json");
  write_file(p2, canonical_config_json(a));
  ScenarioConfig b = load_config(p2.string());
  CHECK(canonical_config_json(a) == canonical_config_json(b));
  CHECK((a.reference - b.reference).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.model.vertex_matrices[0].A == b.model.vertex_matrices[0].A);
  CHECK(a.graph.node_count() == b.graph.node_count());
}

TEST_CASE("CLE on a non-complete graph is rejected at scenario validation") {
  auto p = temp_file("cle.json");
  std::string text(kMinimalConfig);
  text.replace(text.find("\"zoh\""), 5, "\"cle\"");
  text.replace(text.find("\"nodes\": 2, \"edges\": [[0, 1]]"), 29,
               "\"nodes\": 3, \"edges\": [[0, 1], [1, 2]]");
  text.replace(text.find("[[1.0], [0.0]]"), 14, "[[1.0], [0.0], [0.5]]");
  write_file(p, text);
  ScenarioConfig cfg = load_config(p.string());
  VertexControllerSet ctl;
  ctl.F_x = {Eigen::MatrixXd::Zero(1, 1)};
  ctl.F_zeta = {Eigen::MatrixXd::Zero(1, 1)};
  CHECK_THROWS_AS(make_scenario(cfg, ctl), ScenarioError);
}

TEST_CASE("certificate and controller files round trip") {
  SynthesisCertificate cert;
  cert.S = (Eigen::MatrixXd(3, 3) << 2, 0.1, 0, 0.1, 3, 0.2, 0, 0.2, 4).finished();
  cert.G1 = {(Eigen::MatrixXd(2, 2) << 1, 0.5, -0.25, 2).finished()};
  cert.G2 = {Eigen::MatrixXd::Constant(1, 1, 1.5)};
  cert.K1 = {(Eigen::MatrixXd(1, 2) << -0.4, 0.7).finished()};
  cert.t = 4.0;
  cert.sigma_x = 1000.0;
  cert.gamma = 2.0;
  cert.sigma = 1e-3;
  cert.alpha_z = 0.5;
  cert.beta_z = 0.1;
  cert.lambda2 = 2.0;
  cert.lambda_max = 3.0;
  cert.min_eig_per_block = {0.01, 0.02};
  cert.solver_status = "optimal";
  cert.solver_iterations = 37;
  cert.solver_margin = 0.01;

  auto cp = temp_file("cert.json");
  save_certificate(cp.string(), cert);
  SynthesisCertificate back = load_certificate(cp.string());
  CHECK((back.S - cert.S).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((back.K1[0] - cert.K1[0]).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(back.t == cert.t);
  CHECK(back.min_eig_per_block == cert.min_eig_per_block);

  PolytopicLpvModel model;
  model.dims = ModelDims{1, 1, 1, 1};
  model.polytope.dimension = 1;
  model.polytope.vertices = {Eigen::VectorXd::Zero(1)};
  VertexMatrices vm;
  vm.A = vm.Bw = vm.Bu = vm.Cy = Eigen::MatrixXd::Identity(1, 1);
  model.vertex_matrices = {vm};
  model.scheduling = SchedulingMap::constant(Eigen::VectorXd::Zero(1));

  VertexControllerSet ctl;
  ctl.gamma = 2.0;
  ctl.sigma = 1e-3;
  ctl.alpha_z = 0.5;
  ctl.beta_z = 0.1;
  ctl.F_x = {Eigen::MatrixXd::Constant(1, 1, -0.8)};
  ctl.F_zeta = {Eigen::MatrixXd::Constant(1, 1, 0.05)};
  auto kp = temp_file("ctl.json");
  save_controllers(kp.string(), ctl, model);
  VertexControllerSet cback = load_controllers(kp.string(), model);
  CHECK(cback.F_x[0](0, 0) == -0.8);
  CHECK(cback.gamma == 2.0);

  // loading against mismatched dims fails
  PolytopicLpvModel wrong = model;
  wrong.dims.nx = 2;
  wrong.vertex_matrices[0].A = Eigen::MatrixXd::Identity(2, 2);
  wrong.vertex_matrices[0].Bw = Eigen::MatrixXd::Ones(2, 1);
  wrong.vertex_matrices[0].Bu = Eigen::MatrixXd::Ones(2, 1);
  wrong.vertex_matrices[0].Cy = Eigen::MatrixXd::Ones(1, 2);
  CHECK_THROWS_AS(load_controllers(kp.string(), wrong), ScenarioError);
  CHECK_THROWS_AS(load_certificate(kp.string()), ConfigError);  // wrong format tag
}
