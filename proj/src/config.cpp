#include "etfc/config.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "etfc/errors.hpp"

namespace etfc {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& ctx) {
  if (!j.is_object()) throw ConfigError(ctx + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        ok = true;
        break;
      }
    if (!ok) throw ConfigError(ctx + ": unknown key '" + it.key() + "'");
  }
}

const json& require(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(ctx + ": missing key '" + key + "'");
  return *it;
}

double get_number(const json& j, const char* key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_number()) throw ConfigError(ctx + "." + key + ": expected a number");
  return v.get<double>();
}

double get_number_or(const json& j, const char* key, double fallback, const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  return get_number(j, key, ctx);
}

int get_int(const json& j, const char* key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_number_integer()) throw ConfigError(ctx + "." + key + ": expected an integer");
  return v.get<int>();
}

bool get_bool_or(const json& j, const char* key, bool fallback, const std::string& ctx) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_boolean()) throw ConfigError(ctx + "." + key + ": expected a boolean");
  return v.get<bool>();
}

std::string get_string(const json& j, const char* key, const std::string& ctx) {
  const json& v = require(j, key, ctx);
  if (!v.is_string()) throw ConfigError(ctx + "." + key + ": expected a string");
  return v.get<std::string>();
}

Eigen::VectorXd parse_vector(const json& arr, const std::string& ctx) {
  if (!arr.is_array()) throw ConfigError(ctx + ": expected an array of numbers");
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) throw ConfigError(ctx + ": expected numbers");
    v[i] = arr[i].get<double>();
  }
  return v;
}

// Matrices are stored as flat row-major lists.
Eigen::MatrixXd parse_matrix(const json& arr, int rows, int cols, const std::string& ctx) {
  Eigen::VectorXd flat = parse_vector(arr, ctx);
  if (flat.size() != rows * cols) {
    std::ostringstream os;
    os << ctx << ": expected " << rows * cols << " entries (" << rows << "x" << cols
       << " row-major), got " << flat.size();
    throw ConfigError(os.str());
  }
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = flat[r * cols + c];
  return m;
}

json dump_matrix(const Eigen::MatrixXd& m) {
  json arr = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) arr.push_back(m(r, c));
  return arr;
}

json dump_vector(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

PolytopicLpvModel parse_model(const json& jm, double ts) {
  const std::string ctx = "model";
  if (jm.contains("builtin")) {
    check_keys(jm, {"builtin", "mass", "inertia", "handle_offset", "vt_range"}, ctx);
    const std::string name = get_string(jm, "builtin", ctx);
    if (name != "unicycle") throw ConfigError("unknown builtin model: " + name);
    const double mass = get_number_or(jm, "mass", 1.0, ctx);
    const double inertia = get_number_or(jm, "inertia", 1.0, ctx);
    const double d = get_number_or(jm, "handle_offset", 0.5, ctx);
    std::pair<double, double> vt{-1.0, 1.0};
    if (jm.contains("vt_range")) {
      Eigen::VectorXd r = parse_vector(jm.at("vt_range"), ctx + ".vt_range");
      if (r.size() != 2) throw ConfigError("vt_range must have two entries");
      vt = {r[0], r[1]};
    }
    return build_unicycle_lpv(mass, inertia, d, ts, vt);
  }

  check_keys(jm, {"dims", "vertices", "scheduling_map", "body_frame"}, ctx);
  const json& jd = require(jm, "dims", ctx);
  check_keys(jd, {"nx", "nw", "nu", "ny"}, ctx + ".dims");
  PolytopicLpvModel m;
  m.dims.nx = get_int(jd, "nx", ctx);
  m.dims.nw = get_int(jd, "nw", ctx);
  m.dims.nu = get_int(jd, "nu", ctx);
  m.dims.ny = get_int(jd, "ny", ctx);

  const json& jv = require(jm, "vertices", ctx);
  if (!jv.is_array() || jv.empty()) throw ConfigError("model.vertices: nonempty array needed");
  for (std::size_t l = 0; l < jv.size(); ++l) {
    const std::string vctx = ctx + ".vertices[" + std::to_string(l) + "]";
    check_keys(jv[l], {"theta", "A", "Bw", "Bu", "Cy"}, vctx);
    Eigen::VectorXd theta = parse_vector(require(jv[l], "theta", vctx), vctx + ".theta");
    if (l == 0) m.polytope.dimension = static_cast<int>(theta.size());
    m.polytope.vertices.push_back(theta);
    VertexMatrices vm;
    vm.A = parse_matrix(require(jv[l], "A", vctx), m.dims.nx, m.dims.nx, vctx + ".A");
    vm.Bw = parse_matrix(require(jv[l], "Bw", vctx), m.dims.nx, m.dims.nw, vctx + ".Bw");
    vm.Bu = parse_matrix(require(jv[l], "Bu", vctx), m.dims.nx, m.dims.nu, vctx + ".Bu");
    vm.Cy = parse_matrix(require(jv[l], "Cy", vctx), m.dims.ny, m.dims.nx, vctx + ".Cy");
    m.vertex_matrices.push_back(vm);
  }
  m.scheduling =
      SchedulingMap::parse(get_string(jm, "scheduling_map", ctx), m.polytope.dimension);
  if (jm.contains("body_frame")) {
    const json& jb = jm.at("body_frame");
    check_keys(jb, {"handle_offset", "vt_index", "pos_x_index", "pos_y_index"},
               ctx + ".body_frame");
    BodyFrameInfo bf;
    bf.handle_offset = get_number(jb, "handle_offset", ctx + ".body_frame");
    bf.vt_index = get_int(jb, "vt_index", ctx + ".body_frame");
    bf.pos_x_index = get_int(jb, "pos_x_index", ctx + ".body_frame");
    bf.pos_y_index = get_int(jb, "pos_y_index", ctx + ".body_frame");
    m.body_frame = bf;
  }
  m.validate();
  return m;
}

CommGraph parse_graph(const json& jg) {
  check_keys(jg, {"nodes", "edges"}, "graph");
  const int n = get_int(jg, "nodes", "graph");
  std::vector<std::pair<int, int>> edges;
  const json& je = require(jg, "edges", "graph");
  if (!je.is_array()) throw ConfigError("graph.edges: expected an array of [i,j] pairs");
  for (const auto& e : je) {
    if (!e.is_array() || e.size() != 2) throw ConfigError("graph.edges: entries are [i,j]");
    edges.emplace_back(e[0].get<int>(), e[1].get<int>());
  }
  try {
    return CommGraph(n, edges);
  } catch (const Error& err) {
    throw ConfigError(std::string("graph: ") + err.what());
  }
}

Eigen::VectorXd parse_stacked(const json& arr, int agents, int per_agent,
                              const std::string& ctx) {
  if (!arr.is_array() || static_cast<int>(arr.size()) != agents)
    throw ConfigError(ctx + ": expected one entry per agent");
  Eigen::VectorXd out(agents * per_agent);
  for (int i = 0; i < agents; ++i) {
    Eigen::VectorXd v = parse_vector(arr[i], ctx + "[" + std::to_string(i) + "]");
    if (v.size() != per_agent) throw ConfigError(ctx + ": wrong per-agent size");
    out.segment(i * per_agent, per_agent) = v;
  }
  return out;
}

}  // namespace

ScenarioConfig load_config(const std::string& path) {
  const json j = load_json_file(path);
  check_keys(j, {"ts", "model", "graph", "synthesis", "simulation", "verification", "output"},
             "config");
  ScenarioConfig cfg;
  cfg.ts = get_number(j, "ts", "config");
  if (cfg.ts <= 0.0) throw ConfigError("ts must be positive");
  cfg.model = parse_model(require(j, "model", "config"), cfg.ts);
  cfg.graph = parse_graph(require(j, "graph", "config"));
  const int n = cfg.graph.node_count();

  const json& js = require(j, "synthesis", "config");
  check_keys(js, {"gamma", "sigma", "alpha_z", "beta_z", "mode", "scale_cap"}, "synthesis");
  cfg.gamma = get_number(js, "gamma", "synthesis");
  cfg.sigma = get_number(js, "sigma", "synthesis");
  cfg.alpha_z = get_number_or(js, "alpha_z", 0.5, "synthesis");
  cfg.beta_z = get_number_or(js, "beta_z", 0.5, "synthesis");
  cfg.scale_cap = get_number_or(js, "scale_cap", 1000.0, "synthesis");
  const std::string mode = js.contains("mode") ? get_string(js, "mode", "synthesis")
                                               : std::string("feasibility");
  if (mode == "feasibility")
    cfg.mode = SynthesisProblem::Mode::Feasibility;
  else if (mode == "minimize_gamma")
    cfg.mode = SynthesisProblem::Mode::MinimizeGammaSquared;
  else
    throw ConfigError("synthesis.mode must be feasibility|minimize_gamma");

  const json& jsim = require(j, "simulation", "config");
  check_keys(jsim,
             {"horizon_seconds", "estimator", "reference", "disturbances", "initial_states",
              "homogeneous_scheduling", "clamp_scheduling"},
             "simulation");
  cfg.horizon_seconds = get_number(jsim, "horizon_seconds", "simulation");
  cfg.estimator = estimator_from_name(get_string(jsim, "estimator", "simulation"));
  cfg.reference = parse_stacked(require(jsim, "reference", "simulation"), n, cfg.model.dims.ny,
                                "simulation.reference");
  if (jsim.contains("initial_states"))
    cfg.initial_states = parse_stacked(jsim.at("initial_states"), n, cfg.model.dims.nx,
                                       "simulation.initial_states");
  else
    cfg.initial_states = Eigen::VectorXd::Zero(n * cfg.model.dims.nx);
  if (jsim.contains("disturbances")) {
    const json& jd = jsim.at("disturbances");
    if (!jd.is_array()) throw ConfigError("simulation.disturbances: expected an array");
    for (const auto& d : jd) {
      check_keys(d, {"agent", "channel", "start", "end", "magnitude"},
                 "simulation.disturbances[]");
      DisturbancePulse p;
      p.agent = get_int(d, "agent", "disturbance");
      p.channel = get_int(d, "channel", "disturbance");
      p.start_s = get_number(d, "start", "disturbance");
      p.end_s = get_number(d, "end", "disturbance");
      p.magnitude = get_number(d, "magnitude", "disturbance");
      cfg.disturbances.push_back(p);
    }
  }
  cfg.homogeneous_scheduling =
      get_bool_or(jsim, "homogeneous_scheduling", false, "simulation");
  cfg.clamp_scheduling = get_bool_or(jsim, "clamp_scheduling", false, "simulation");

  if (j.contains("verification")) {
    const json& jv = j.at("verification");
    check_keys(jv,
               {"gain_trials", "gain_seed", "gain_horizon_steps", "gain_input_magnitude",
                "stability_samples"},
               "verification");
    if (jv.contains("gain_trials")) cfg.verification.gain_trials = get_int(jv, "gain_trials", "verification");
    if (jv.contains("gain_seed"))
      cfg.verification.gain_seed = static_cast<std::uint64_t>(get_int(jv, "gain_seed", "verification"));
    if (jv.contains("gain_horizon_steps"))
      cfg.verification.gain_horizon_steps = get_int(jv, "gain_horizon_steps", "verification");
    if (jv.contains("gain_input_magnitude"))
      cfg.verification.gain_input_magnitude =
          get_number(jv, "gain_input_magnitude", "verification");
    if (jv.contains("stability_samples"))
      cfg.verification.stability_samples = get_int(jv, "stability_samples", "verification");
  }
  if (j.contains("output")) {
    const json& jo = j.at("output");
    check_keys(jo, {"directory"}, "output");
    if (jo.contains("directory")) cfg.output_directory = get_string(jo, "directory", "output");
  }
  return cfg;
}

std::string canonical_config_json(const ScenarioConfig& cfg) {
  // Canonical form normalizes builtin models to their explicit vertex matrices.
  json j;
  j["ts"] = cfg.ts;
  json jm;
  jm["dims"] = {{"nx", cfg.model.dims.nx},
                {"nw", cfg.model.dims.nw},
                {"nu", cfg.model.dims.nu},
                {"ny", cfg.model.dims.ny}};
  json verts = json::array();
  for (int l = 0; l < cfg.model.polytope.vertex_count(); ++l) {
    json v;
    v["theta"] = dump_vector(cfg.model.polytope.vertices[l]);
    v["A"] = dump_matrix(cfg.model.vertex_matrices[l].A);
    v["Bw"] = dump_matrix(cfg.model.vertex_matrices[l].Bw);
    v["Bu"] = dump_matrix(cfg.model.vertex_matrices[l].Bu);
    v["Cy"] = dump_matrix(cfg.model.vertex_matrices[l].Cy);
    verts.push_back(v);
  }
  jm["vertices"] = verts;
  jm["scheduling_map"] = cfg.model.scheduling.id();
  if (cfg.model.body_frame) {
    jm["body_frame"] = {{"handle_offset", cfg.model.body_frame->handle_offset},
                        {"vt_index", cfg.model.body_frame->vt_index},
                        {"pos_x_index", cfg.model.body_frame->pos_x_index},
                        {"pos_y_index", cfg.model.body_frame->pos_y_index}};
  }
  j["model"] = jm;
  json edges = json::array();
  for (int a = 0; a < cfg.graph.node_count(); ++a)
    for (int b = a + 1; b < cfg.graph.node_count(); ++b)
      if (cfg.graph.adjacent(a, b)) edges.push_back({a, b});
  j["graph"] = {{"nodes", cfg.graph.node_count()}, {"edges", edges}};
  j["synthesis"] = {{"gamma", cfg.gamma},
                    {"sigma", cfg.sigma},
                    {"alpha_z", cfg.alpha_z},
                    {"beta_z", cfg.beta_z},
                    {"scale_cap", cfg.scale_cap},
                    {"mode", cfg.mode == SynthesisProblem::Mode::Feasibility
                                 ? "feasibility"
                                 : "minimize_gamma"}};
  const int n = cfg.graph.node_count();
  json refs = json::array(), inits = json::array();
  for (int i = 0; i < n; ++i) {
    refs.push_back(dump_vector(cfg.reference.segment(i * cfg.model.dims.ny, cfg.model.dims.ny)));
    inits.push_back(
        dump_vector(cfg.initial_states.segment(i * cfg.model.dims.nx, cfg.model.dims.nx)));
  }
  json dist = json::array();
  for (const auto& d : cfg.disturbances)
    dist.push_back({{"agent", d.agent},
                    {"channel", d.channel},
                    {"start", d.start_s},
                    {"end", d.end_s},
                    {"magnitude", d.magnitude}});
  j["simulation"] = {{"horizon_seconds", cfg.horizon_seconds},
                     {"estimator", estimator_name(cfg.estimator)},
                     {"reference", refs},
                     {"disturbances", dist},
                     {"initial_states", inits},
                     {"homogeneous_scheduling", cfg.homogeneous_scheduling},
                     {"clamp_scheduling", cfg.clamp_scheduling}};
  j["verification"] = {{"gain_trials", cfg.verification.gain_trials},
                       {"gain_seed", static_cast<int>(cfg.verification.gain_seed)},
                       {"gain_horizon_steps", cfg.verification.gain_horizon_steps},
                       {"gain_input_magnitude", cfg.verification.gain_input_magnitude},
                       {"stability_samples", cfg.verification.stability_samples}};
  j["output"] = {{"directory", cfg.output_directory}};
  return j.dump(2);
}

SynthesisProblem make_problem(const ScenarioConfig& cfg, const LaplacianSpectrum& spectrum) {
  SynthesisProblem p;
  p.model = cfg.model;
  p.lambda2 = spectrum.lambda2();
  p.lambda_max = spectrum.lambda_max();
  p.gamma = cfg.gamma;
  p.sigma = cfg.sigma;
  p.alpha_z = cfg.alpha_z;
  p.beta_z = cfg.beta_z;
  p.mode = cfg.mode;
  p.variable_scale_cap = cfg.scale_cap;
  return p;
}

NetworkScenario make_scenario(const ScenarioConfig& cfg,
                              const VertexControllerSet& controllers) {
  NetworkScenario sc;
  sc.model = cfg.model;
  sc.graph = cfg.graph;
  sc.controllers = controllers;
  sc.estimator = cfg.estimator;
  sc.sigma = cfg.sigma;
  sc.Ts = cfg.ts;
  sc.horizon_steps = cfg.horizon_steps();
  sc.reference = cfg.reference;
  sc.disturbances = cfg.disturbances;
  sc.initial_states = cfg.initial_states;
  sc.alpha_z = cfg.alpha_z;
  sc.beta_z = cfg.beta_z;
  sc.homogeneous_scheduling = cfg.homogeneous_scheduling;
  sc.clamp_scheduling = cfg.clamp_scheduling;
  sc.validate();
  return sc;
}

namespace {

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write file: " + path);
  out << text;
}

}  // namespace

void save_certificate(const std::string& path, const SynthesisCertificate& cert) {
  json j;
  j["format"] = "etfc-certificate-v1";
  j["n_psi"] = cert.S.rows();
  j["vertex_count"] = cert.G1.size();
  j["S"] = dump_matrix(cert.S);
  json g1 = json::array(), g2 = json::array(), k1 = json::array();
  for (std::size_t l = 0; l < cert.G1.size(); ++l) {
    g1.push_back(dump_matrix(cert.G1[l]));
    g2.push_back(dump_matrix(cert.G2[l]));
    k1.push_back(dump_matrix(cert.K1[l]));
  }
  j["G1"] = g1;
  j["G2"] = g2;
  j["K1"] = k1;
  j["G1_rows"] = cert.G1.empty() ? 0 : cert.G1[0].rows();
  j["G2_rows"] = cert.G2.empty() ? 0 : cert.G2[0].rows();
  j["K1_rows"] = cert.K1.empty() ? 0 : cert.K1[0].rows();
  j["t"] = cert.t;
  j["sigma_x"] = cert.sigma_x;
  j["gamma"] = cert.gamma;
  j["sigma"] = cert.sigma;
  j["alpha_z"] = cert.alpha_z;
  j["beta_z"] = cert.beta_z;
  j["lambda2"] = cert.lambda2;
  j["lambda_max"] = cert.lambda_max;
  j["min_eig_per_block"] = cert.min_eig_per_block;
  j["solver"] = {{"status", cert.solver_status},
                 {"iterations", cert.solver_iterations},
                 {"margin", cert.solver_margin}};
  write_text_file(path, j.dump(2) + "\n");
}

SynthesisCertificate load_certificate(const std::string& path) {
  const json j = load_json_file(path);
  if (!j.contains("format") || j.at("format") != "etfc-certificate-v1")
    throw ConfigError(path + ": not an etfc certificate file");
  SynthesisCertificate cert;
  const int npsi = j.at("n_psi").get<int>();
  const int s = j.at("vertex_count").get<int>();
  const int g1r = j.at("G1_rows").get<int>();
  const int g2r = j.at("G2_rows").get<int>();
  const int k1r = j.at("K1_rows").get<int>();
  cert.S = parse_matrix(j.at("S"), npsi, npsi, "certificate.S");
  for (int l = 0; l < s; ++l) {
    cert.G1.push_back(parse_matrix(j.at("G1")[l], g1r, g1r, "certificate.G1"));
    cert.G2.push_back(parse_matrix(j.at("G2")[l], g2r, g2r, "certificate.G2"));
    cert.K1.push_back(parse_matrix(j.at("K1")[l], k1r, g1r, "certificate.K1"));
  }
  cert.t = j.at("t").get<double>();
  cert.sigma_x = j.at("sigma_x").get<double>();
  cert.gamma = j.at("gamma").get<double>();
  cert.sigma = j.at("sigma").get<double>();
  cert.alpha_z = j.at("alpha_z").get<double>();
  cert.beta_z = j.at("beta_z").get<double>();
  cert.lambda2 = j.at("lambda2").get<double>();
  cert.lambda_max = j.at("lambda_max").get<double>();
  cert.min_eig_per_block = j.at("min_eig_per_block").get<std::vector<double>>();
  cert.solver_status = j.at("solver").at("status").get<std::string>();
  cert.solver_iterations = j.at("solver").at("iterations").get<int>();
  cert.solver_margin = j.at("solver").at("margin").get<double>();
  return cert;
}

void save_controllers(const std::string& path, const VertexControllerSet& controllers,
                      const PolytopicLpvModel& model) {
  json j;
  j["format"] = "etfc-controllers-v1";
  j["dims"] = {{"nx", model.dims.nx},
               {"nw", model.dims.nw},
               {"nu", model.dims.nu},
               {"ny", model.dims.ny}};
  j["gamma"] = controllers.gamma;
  j["sigma"] = controllers.sigma;
  j["alpha_z"] = controllers.alpha_z;
  j["beta_z"] = controllers.beta_z;
  json verts = json::array();
  for (std::size_t l = 0; l < controllers.F_x.size(); ++l) {
    json v;
    v["theta"] = dump_vector(model.polytope.vertices[l]);
    v["F_x"] = dump_matrix(controllers.F_x[l]);
    v["F_zeta"] = dump_matrix(controllers.F_zeta[l]);
    verts.push_back(v);
  }
  j["vertices"] = verts;
  write_text_file(path, j.dump(2) + "\n");
}

VertexControllerSet load_controllers(const std::string& path, const PolytopicLpvModel& model) {
  const json j = load_json_file(path);
  if (!j.contains("format") || j.at("format") != "etfc-controllers-v1")
    throw ConfigError(path + ": not an etfc controller file");
  const json& jd = j.at("dims");
  if (jd.at("nx").get<int>() != model.dims.nx || jd.at("nu").get<int>() != model.dims.nu ||
      jd.at("ny").get<int>() != model.dims.ny || jd.at("nw").get<int>() != model.dims.nw)
    throw ScenarioError(path + ": controller dims do not match the model");
  const json& jv = j.at("vertices");
  if (static_cast<int>(jv.size()) != model.polytope.vertex_count())
    throw ScenarioError(path + ": controller vertex count does not match the model");
  VertexControllerSet c;
  c.gamma = j.at("gamma").get<double>();
  c.sigma = j.at("sigma").get<double>();
  c.alpha_z = j.at("alpha_z").get<double>();
  c.beta_z = j.at("beta_z").get<double>();
  for (std::size_t l = 0; l < jv.size(); ++l) {
    c.F_x.push_back(
        parse_matrix(jv[l].at("F_x"), model.dims.nu, model.dims.nx, "controllers.F_x"));
    c.F_zeta.push_back(
        parse_matrix(jv[l].at("F_zeta"), model.dims.nu, model.dims.ny, "controllers.F_zeta"));
  }
  return c;
}

namespace {

void append_group(std::ostringstream& header, const char* name, int agents, int per_agent) {
  for (int i = 0; i < agents; ++i)
    for (int c = 0; c < per_agent; ++c) header << ',' << name << '_' << i << '_' << c;
}

void append_row_group(std::ostringstream& os, const Eigen::MatrixXd& m, int col) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    os << ',';
    os.precision(17);
    os << m(r, col);
  }
}

}  // namespace

void write_trace_csv(const std::string& path, const SimulationTrace& trace) {
  std::ostringstream os;
  const int n = trace.agents;
  const ModelDims& d = trace.dims;
  const int nth = n > 0 ? static_cast<int>(trace.theta.rows()) / n : 0;
  os << "# etfc simulation trace; one row per step; columns grouped per signal,\n"
        "# named <signal>_<agent>_<component>. trig_<agent> is 1 when that agent\n"
        "# broadcast at the step. gx/gy are reconstructed global positions.\n";
  os << "# agents=" << n << " nx=" << d.nx << " ny=" << d.ny << " nu=" << d.nu
     << " nw=" << d.nw << " ntheta=" << nth << " Ts=" << trace.Ts << "\n";
  std::ostringstream header;
  header << "k,t";
  append_group(header, "x", n, d.nx);
  append_group(header, "y", n, d.ny);
  append_group(header, "yhat", n, d.ny);
  append_group(header, "eta", n, d.ny);
  append_group(header, "etahat", n, d.ny);
  append_group(header, "zeta", n, d.ny);
  append_group(header, "u", n, d.nu);
  append_group(header, "ztilde", n, d.ny);
  append_group(header, "z", n, d.ny);
  append_group(header, "e", n, d.ny);
  append_group(header, "w", n, d.nw);
  append_group(header, "theta", n, nth);
  append_group(header, "r", n, d.ny);
  for (int i = 0; i < n; ++i) header << ",trig_" << i;
  if (trace.global_xy.size() > 0)
    for (int i = 0; i < n; ++i) header << ",gx_" << i << ",gy_" << i;
  os << header.str() << "\n";
  for (int k = 0; k < trace.steps; ++k) {
    os << k << ',';
    os.precision(17);
    os << k * trace.Ts;
    append_row_group(os, trace.x, k);
    append_row_group(os, trace.y, k);
    append_row_group(os, trace.yhat, k);
    append_row_group(os, trace.eta, k);
    append_row_group(os, trace.etahat, k);
    append_row_group(os, trace.zeta, k);
    append_row_group(os, trace.u, k);
    append_row_group(os, trace.ztilde, k);
    append_row_group(os, trace.z, k);
    append_row_group(os, trace.e, k);
    append_row_group(os, trace.w, k);
    append_row_group(os, trace.theta, k);
    append_row_group(os, trace.r, k);
    for (int i = 0; i < n; ++i) os << ',' << trace.triggered(i, k);
    if (trace.global_xy.size() > 0)
      for (int i = 0; i < n; ++i) {
        os << ',';
        os.precision(17);
        os << trace.global_xy(2 * i, k);
        os << ',';
        os.precision(17);
        os << trace.global_xy(2 * i + 1, k);
      }
    os << '\n';
  }
  write_text_file(path, os.str());
}

void write_messages_csv(const std::string& path, const SimulationTrace& trace) {
  std::ostringstream os;
  os << "step,agent,payload_scalars\n";
  for (const auto& m : trace.messages)
    os << m.step << ',' << m.agent << ',' << m.payload_scalars << '\n';
  write_text_file(path, os.str());
}

void write_metrics_json(const std::string& path, const RunMetrics& metrics,
                        const std::string& estimator) {
  json j;
  j["estimator"] = estimator;
  j["mean_formation_error"] = metrics.mean_formation_error;
  j["trigger_events"] = metrics.trigger_events;
  j["trigger_rate"] = metrics.trigger_rate;
  j["possible_events_steps"] = metrics.possible_events_steps;
  j["possible_events_agent_steps"] = metrics.possible_events_agent_steps;
  j["payload_scalars_total"] = metrics.payload_scalars_total;
  j["per_agent_events"] = metrics.per_agent_events;
  write_text_file(path, j.dump(2) + "\n");
}

}  // namespace etfc
