#include "etfc/synthesis.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "etfc/errors.hpp"
#include "etfc/rng.hpp"

namespace etfc {

namespace {

Eigen::MatrixXd zeros(int r, int c) { return Eigen::MatrixXd::Zero(r, c); }
Eigen::MatrixXd eye(int n) { return Eigen::MatrixXd::Identity(n, n); }

}  // namespace

ModeMatrices assemble_mode_matrices(const VertexMatrices& vm, const ModelDims& dims,
                                    double lambda, double alpha_z, double beta_z) {
  const int nx = dims.nx, ny = dims.ny, nw = dims.nw;
  const int npsi = dims.n_psi(), nf = dims.nf();
  if (vm.A.rows() != nx || vm.Cy.rows() != ny || vm.Bw.cols() != nw)
    throw DimensionMismatch("mode matrices: vertex matrices inconsistent with dims");

  ModeMatrices mm;
  mm.A_ol = zeros(npsi, npsi);
  mm.A_ol.topLeftCorner(nx, nx) = vm.A;
  mm.A_ol.block(nx, 0, ny, nx) = -lambda * vm.Cy;
  mm.A_ol.block(nx, nx, ny, ny) = eye(ny);
  mm.A_ol.block(nx + ny, 0, ny, nx) = -beta_z * vm.Cy;
  mm.A_ol.block(nx + ny, nx + ny, ny, ny) = -alpha_z * eye(ny);

  mm.B_e = zeros(npsi, ny);
  mm.B_e.block(nx, 0, ny, ny) = -lambda * eye(ny);

  mm.B_f = zeros(npsi, nf);
  mm.B_f.block(0, ny, nx, nw) = vm.Bw;
  mm.B_f.block(nx, 0, ny, ny) = lambda * eye(ny);
  mm.B_f.block(nx + ny, 0, ny, ny) = beta_z * eye(ny);

  mm.C_eta = zeros(ny, npsi);
  mm.C_eta.leftCols(nx) = -lambda * vm.Cy;
  mm.D_eta_e = -lambda * eye(ny);
  mm.D_eta_f = zeros(ny, nf);
  mm.D_eta_f.leftCols(ny) = lambda * eye(ny);

  mm.C_z = zeros(ny, npsi);
  mm.C_z.rightCols(ny) = lambda * eye(ny);
  mm.D_ze = zeros(ny, ny);
  mm.D_zf = zeros(ny, nf);
  return mm;
}

ModeMatrices assemble_mode_matrices(const PolytopicLpvModel& model, int vertex,
                                    double lambda, double alpha_z, double beta_z) {
  if (vertex < 0 || vertex >= model.polytope.vertex_count())
    throw DimensionMismatch("vertex index out of range");
  return assemble_mode_matrices(model.vertex_matrices[vertex], model.dims, lambda, alpha_z,
                                beta_z);
}

void SynthesisProblem::validate() const {
  model.validate();
  if (lambda2 <= 0.0) throw ScenarioError("lambda2 must be positive (connected graph)");
  if (lambda2 > lambda_max + 1e-12) throw ScenarioError("lambda2 must not exceed lambda_max");
  if (sigma <= 0.0) throw ScenarioError("trigger level sigma must be positive");
  if (std::abs(alpha_z) >= 1.0) throw ScenarioError("|alpha_z| < 1 required (filter stability)");
  if (beta_z == 0.0) throw ScenarioError("beta_z must be nonzero");
  if (mode == Mode::Feasibility && gamma <= 0.0)
    throw ScenarioError("gamma must be positive in feasibility mode");
  if (psd_epsilon <= 0.0) throw ScenarioError("psd_epsilon must be positive");
}

Eigen::MatrixXd VertexControllerSet::blend_F_x(const Eigen::VectorXd& alpha) const {
  if (alpha.size() != static_cast<Eigen::Index>(F_x.size()))
    throw DimensionMismatch("controller blend: alpha size mismatch");
  Eigen::MatrixXd out = zeros(F_x[0].rows(), F_x[0].cols());
  for (Eigen::Index l = 0; l < alpha.size(); ++l) out += alpha[l] * F_x[l];
  return out;
}

Eigen::MatrixXd VertexControllerSet::blend_F_zeta(const Eigen::VectorXd& alpha) const {
  if (alpha.size() != static_cast<Eigen::Index>(F_zeta.size()))
    throw DimensionMismatch("controller blend: alpha size mismatch");
  Eigen::MatrixXd out = zeros(F_zeta[0].rows(), F_zeta[0].cols());
  for (Eigen::Index l = 0; l < alpha.size(); ++l) out += alpha[l] * F_zeta[l];
  return out;
}

sdp::AffineMatrix assemble_lmi_block(const ModeMatrices& mm, const Eigen::MatrixXd& Bu,
                                     const ModelDims& dims, const sdp::AffineMatrix& S,
                                     const sdp::AffineMatrix& G1,
                                     const sdp::AffineMatrix& G2,
                                     const sdp::AffineMatrix& K1, const sdp::LinExpr& t,
                                     double sigma_x) {
  const int nx = dims.nx, ny = dims.ny, nu = dims.nu;
  const int npsi = dims.n_psi(), nf = dims.nf();
  if (S.rows() != npsi || G1.rows() != nx + ny || G2.rows() != ny || K1.rows() != nu ||
      K1.cols() != nx + ny)
    throw DimensionMismatch("assemble_lmi_block: decision variable dimensions");

  sdp::AffineMatrix G(npsi, npsi);
  G.set_block(0, 0, G1);
  G.set_block(nx + ny, nx + ny, G2);

  sdp::AffineMatrix K(nu, npsi);  // K = [K1 0]
  K.set_block(0, 0, K1);

  Eigen::MatrixXd B_F = zeros(npsi, nu);  // B_F = [Bu; 0]
  B_F.topRows(nx) = Bu;

  sdp::AffineMatrix t_block(nf, nf);
  for (int i = 0; i < nf; ++i) t_block(i, i) = t;

  sdp::SymmetricBlockBuilder b(std::vector<int>{npsi, ny, nf, npsi, ny, ny});
  b.place(0, 0, G.transpose() + G - S);
  b.place(1, 1, eye(ny));
  b.place(2, 2, t_block);
  b.place(3, 0, mm.A_ol * G + B_F * K);
  b.place(3, 1, mm.B_e);
  b.place(3, 2, mm.B_f);
  b.place(3, 3, S);
  b.place(4, 0, mm.C_eta * G);
  b.place(4, 1, mm.D_eta_e);
  b.place(4, 2, mm.D_eta_f);
  b.place(4, 4, sigma_x * eye(ny));
  b.place(5, 0, mm.C_z * G);
  b.place(5, 1, mm.D_ze);
  b.place(5, 2, mm.D_zf);
  b.place(5, 5, eye(ny));
  return b.finish();
}

Eigen::MatrixXd assemble_lmi_block_numeric(const ModeMatrices& mm, const Eigen::MatrixXd& Bu,
                                           const ModelDims& dims, const Eigen::MatrixXd& S,
                                           const Eigen::MatrixXd& G1,
                                           const Eigen::MatrixXd& G2,
                                           const Eigen::MatrixXd& K1, double t,
                                           double sigma_x) {
  return assemble_lmi_block(mm, Bu, dims, sdp::AffineMatrix::constant(S),
                            sdp::AffineMatrix::constant(G1), sdp::AffineMatrix::constant(G2),
                            sdp::AffineMatrix::constant(K1), sdp::LinExpr(t), sigma_x)
      .eval(Eigen::VectorXd::Zero(0));
}

namespace {

std::vector<double> unique_lambdas(double lambda2, double lambda_max) {
  std::vector<double> l{lambda2};
  if (std::abs(lambda_max - lambda2) > 1e-12) l.push_back(lambda_max);
  return l;
}

SynthesisResult solve_at_gamma(const SynthesisProblem& p, sdp::Backend& backend,
                               double gamma) {
  const ModelDims& dims = p.model.dims;
  const int s = p.model.polytope.vertex_count();
  const double t = gamma * gamma;
  const double sigma_x = 1.0 / p.sigma;
  const auto lambdas = unique_lambdas(p.lambda2, p.lambda_max);

  sdp::Model m;
  sdp::AffineMatrix S = m.new_symmetric(dims.n_psi());
  std::vector<sdp::AffineMatrix> G1, G2, K1;
  for (int l = 0; l < s; ++l) {
    G1.push_back(m.new_matrix(dims.nx + dims.ny, dims.nx + dims.ny));
    G2.push_back(m.new_matrix(dims.ny, dims.ny));
    K1.push_back(m.new_matrix(dims.nu, dims.nx + dims.ny));
  }
  for (int l = 0; l < s; ++l)
    for (double lambda : lambdas) {
      ModeMatrices mm = assemble_mode_matrices(p.model, l, lambda, p.alpha_z, p.beta_z);
      m.require_psd(assemble_lmi_block(mm, p.model.vertex_matrices[l].Bu, dims, S, G1[l],
                                       G2[l], K1[l], sdp::LinExpr(t), sigma_x));
    }
  m.require_psd(sdp::AffineMatrix::constant(p.variable_scale_cap *
                                            eye(dims.n_psi())) -
                S);

  sdp::SolveOptions opts;
  sdp::Solution sol = backend.solve_feasibility(m, opts);

  SynthesisResult out;
  SynthesisCertificate& cert = out.certificate;
  cert.S = S.eval(sol.y);
  cert.t = t;
  cert.sigma_x = sigma_x;
  cert.gamma = gamma;
  cert.sigma = p.sigma;
  cert.alpha_z = p.alpha_z;
  cert.beta_z = p.beta_z;
  cert.lambda2 = p.lambda2;
  cert.lambda_max = p.lambda_max;
  cert.solver_margin = sol.margin;
  cert.solver_iterations = sol.iterations;
  cert.solver_status = sol.status == sdp::SolveStatus::Optimal ? "optimal" : "stalled";

  VertexControllerSet& ctl = out.controllers;
  ctl.gamma = gamma;
  ctl.sigma = p.sigma;
  ctl.alpha_z = p.alpha_z;
  ctl.beta_z = p.beta_z;

  for (int l = 0; l < s; ++l) {
    cert.G1.push_back(G1[l].eval(sol.y));
    cert.G2.push_back(G2[l].eval(sol.y));
    cert.K1.push_back(K1[l].eval(sol.y));
  }

  // Feasibility is decided on the theorem blocks re-evaluated by a direct
  // eigensolve; the scale-cap block is a solver artifact and not part of it.
  for (int l = 0; l < s; ++l)
    for (double lambda : lambdas) {
      ModeMatrices mm = assemble_mode_matrices(p.model, l, lambda, p.alpha_z, p.beta_z);
      Eigen::MatrixXd blk =
          assemble_lmi_block_numeric(mm, p.model.vertex_matrices[l].Bu, dims, cert.S,
                                     cert.G1[l], cert.G2[l], cert.K1[l], t, sigma_x);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(blk, Eigen::EigenvaluesOnly);
      cert.min_eig_per_block.push_back(eig.eigenvalues().minCoeff());
    }
  const double block_margin =
      *std::min_element(cert.min_eig_per_block.begin(), cert.min_eig_per_block.end());
  if (block_margin < p.psd_epsilon) {
    std::ostringstream os;
    os << "LMI margin " << block_margin << " below epsilon " << p.psd_epsilon
       << " at gamma " << gamma;
    if (sol.status == sdp::SolveStatus::Optimal) throw Infeasible(os.str());
    // Weak duality: the margin optimum cannot exceed the near-feasible primal value.
    if (sol.primal_residual < 1e-7 &&
        sol.objective_upper_bound + 1e-6 * (1.0 + std::abs(sol.objective_upper_bound)) <
            p.psd_epsilon) {
      os << " (primal bound " << sol.objective_upper_bound << ")";
      throw Infeasible(os.str());
    }
    throw BackendFailure("solver did not reach a feasibility decision: " + os.str());
  }

  for (int l = 0; l < s; ++l) {
    const Eigen::MatrixXd& g1 = cert.G1[l];
    const Eigen::MatrixXd& k1 = cert.K1[l];

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(g1);
    const double cond =
        svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
    if (!std::isfinite(cond) || cond > 1e10) {
      std::ostringstream os;
      os << "cond(G1^" << l << ") = " << cond << "; controller recovery unreliable";
      throw IllConditioned(os.str());
    }

    // (Fx Fzeta) = K1 G1^-1
    Eigen::MatrixXd f = g1.transpose().partialPivLu().solve(k1.transpose()).transpose();
    const double resid = (f * g1 - k1).norm() / std::max(1.0, k1.norm());
    if (resid > 1e-8) {
      std::ostringstream os;
      os << "controller recovery residual " << resid << " at vertex " << l;
      throw IllConditioned(os.str());
    }
    ctl.F_x.push_back(f.leftCols(dims.nx));
    ctl.F_zeta.push_back(f.rightCols(dims.ny));
  }
  return out;
}

bool gamma_feasible(const SynthesisProblem& p, sdp::Backend& backend, double gamma) {
  try {
    solve_at_gamma(p, backend, gamma);
    return true;
  } catch (const Infeasible&) {
    return false;
  } catch (const IllConditioned&) {
    return false;
  } catch (const BackendFailure&) {
    return false;  // undecided counts as infeasible; the bisection stays conservative
  }
}

}  // namespace

SynthesisResult synthesize(const SynthesisProblem& problem, sdp::Backend& backend) {
  problem.validate();
  if (problem.mode == SynthesisProblem::Mode::Feasibility)
    return solve_at_gamma(problem, backend, problem.gamma);

  // MinimizeGammaSquared: bisection over the feasibility oracle. Feasibility is
  // monotone in t = gamma^2 (a larger t only relaxes the exogenous-input row).
  double hi = problem.gamma > 0.0 ? problem.gamma : 10.0;
  int expand = 0;
  while (!gamma_feasible(problem, backend, hi)) {
    hi *= 4.0;
    if (++expand > 12) throw Infeasible("no feasible gamma up to " + std::to_string(hi));
  }
  double lo = hi / 4.0;
  while (lo > 1e-9 && gamma_feasible(problem, backend, lo)) {
    hi = lo;
    lo /= 4.0;
  }
  while (hi / lo > 1.02) {
    const double mid = std::sqrt(hi * lo);
    if (gamma_feasible(problem, backend, mid))
      hi = mid;
    else
      lo = mid;
  }
  return solve_at_gamma(problem, backend, hi);
}

double spectral_radius(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> eig(m, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

VertexMatrices blend_vertices(const PolytopicLpvModel& model, const Eigen::VectorXd& alpha) {
  SchedulingValue sv;
  sv.alpha = alpha;
  sv.theta = Eigen::VectorXd::Zero(model.polytope.dimension);
  for (int l = 0; l < model.polytope.vertex_count(); ++l)
    sv.theta += alpha[l] * model.polytope.vertices[l];
  return evaluate_model(model, sv);
}

Eigen::MatrixXd modal_closed_loop(const PolytopicLpvModel& model,
                                  const VertexControllerSet& controllers,
                                  const Eigen::VectorXd& alpha, double lambda,
                                  double alpha_z, double beta_z) {
  const ModelDims& dims = model.dims;
  VertexMatrices vm = blend_vertices(model, alpha);
  ModeMatrices mm = assemble_mode_matrices(vm, dims, lambda, alpha_z, beta_z);
  Eigen::MatrixXd f = zeros(dims.nu, dims.n_psi());  // [Fx Fzeta 0]
  f.leftCols(dims.nx) = controllers.blend_F_x(alpha);
  f.middleCols(dims.nx, dims.ny) = controllers.blend_F_zeta(alpha);
  Eigen::MatrixXd a_cl = mm.A_ol;
  a_cl.topRows(dims.nx) += vm.Bu * f;
  return a_cl;
}

ModalStabilityReport verify_modal_stability(const PolytopicLpvModel& model,
                                            const VertexControllerSet& controllers,
                                            double lambda2, double lambda_max,
                                            double alpha_z, double beta_z, int samples,
                                            std::uint64_t seed) {
  const int s = model.polytope.vertex_count();
  ModalStabilityReport rep;
  rep.max_spectral_radius = 0.0;

  auto check = [&](const Eigen::VectorXd& alpha, double lambda) {
    const double rho =
        spectral_radius(modal_closed_loop(model, controllers, alpha, lambda, alpha_z, beta_z));
    if (rho > rep.max_spectral_radius) {
      rep.max_spectral_radius = rho;
      rep.worst_lambda = lambda;
      rep.worst_theta = Eigen::VectorXd::Zero(model.polytope.dimension);
      for (int l = 0; l < s; ++l) rep.worst_theta += alpha[l] * model.polytope.vertices[l];
    }
  };

  const auto lambdas = unique_lambdas(lambda2, lambda_max);
  for (int l = 0; l < s; ++l) {
    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(s);
    alpha[l] = 1.0;
    for (double lambda : lambdas) check(alpha, lambda);
    VertexMatrices vm = blend_vertices(model, alpha);
    rep.agreement_plant_radius =
        std::max(rep.agreement_plant_radius,
                 spectral_radius(vm.A + vm.Bu * controllers.blend_F_x(alpha)));
  }

  Rng rng(seed);
  for (int it = 0; it < samples; ++it) {
    Eigen::VectorXd alpha(s);  // uniform over the simplex
    double sum = 0.0;
    for (int l = 0; l < s; ++l) {
      alpha[l] = -std::log(std::max(rng.uniform01(), 1e-300));
      sum += alpha[l];
    }
    alpha /= sum;
    check(alpha, rng.uniform(lambda2, lambda_max));
  }

  rep.stable = rep.max_spectral_radius < 1.0;
  return rep;
}

Eigen::MatrixXd network_lift(const Eigen::MatrixXd& m, const std::vector<int>& row_sizes,
                             const std::vector<int>& col_sizes, int agents) {
  const int N = agents;
  std::vector<int> roff(row_sizes.size()), coff(col_sizes.size());
  int rtot = 0, ctot = 0;
  for (std::size_t i = 0; i < row_sizes.size(); ++i) roff[i] = rtot, rtot += row_sizes[i];
  for (std::size_t j = 0; j < col_sizes.size(); ++j) coff[j] = ctot, ctot += col_sizes[j];
  if (m.rows() != rtot || m.cols() != ctot)
    throw DimensionMismatch("network_lift partition mismatch");
  Eigen::MatrixXd out = zeros(N * rtot, N * ctot);
  for (std::size_t a = 0; a < row_sizes.size(); ++a)
    for (std::size_t b = 0; b < col_sizes.size(); ++b)
      out.block(N * roff[a], N * coff[b], N * row_sizes[a], N * col_sizes[b]) =
          kron(eye(N), m.block(roff[a], coff[b], row_sizes[a], col_sizes[b]));
  return out;
}

double verify_full_network_equivalence(const PolytopicLpvModel& model,
                                       const SynthesisCertificate& certificate,
                                       const LaplacianSpectrum& spectrum, int vertex) {
  const int N = static_cast<int>(spectrum.eigenvalues.size());
  if (N > 4) throw DimensionMismatch("full-network equivalence check supports N <= 4");
  const ModelDims& dims = model.dims;
  const int nx = dims.nx, ny = dims.ny, nw = dims.nw, nu = dims.nu;
  const int npsi = dims.n_psi(), nf = dims.nf();
  const auto& vm = model.vertex_matrices.at(vertex);
  const Eigen::MatrixXd& L = spectrum.laplacian;
  const Eigen::MatrixXd& Z = spectrum.basis;
  const double az = certificate.alpha_z, bz = certificate.beta_z;
  const double t = certificate.t, sigma_x = certificate.sigma_x;

  const std::vector<int> psi_sizes{nx, ny, ny};

  // Stacked network matrices, agent-major within each signal.
  Eigen::MatrixXd A_net = zeros(N * npsi, N * npsi);
  A_net.block(0, 0, N * nx, N * nx) = kron(eye(N), vm.A);
  A_net.block(N * nx, 0, N * ny, N * nx) = -kron(L, vm.Cy);
  A_net.block(N * nx, N * nx, N * ny, N * ny) = eye(N * ny);
  A_net.block(N * (nx + ny), 0, N * ny, N * nx) = -bz * kron(eye(N), vm.Cy);
  A_net.block(N * (nx + ny), N * (nx + ny), N * ny, N * ny) = -az * eye(N * ny);

  Eigen::MatrixXd Be_net = zeros(N * npsi, N * ny);
  Be_net.block(N * nx, 0, N * ny, N * ny) = -kron_expand(L, ny);

  Eigen::MatrixXd Bf_net = zeros(N * npsi, N * nf);
  Bf_net.block(0, N * ny, N * nx, N * nw) = kron(eye(N), vm.Bw);
  Bf_net.block(N * nx, 0, N * ny, N * ny) = kron_expand(L, ny);
  Bf_net.block(N * (nx + ny), 0, N * ny, N * ny) = bz * eye(N * ny);

  Eigen::MatrixXd Ceta_net = zeros(N * ny, N * npsi);
  Ceta_net.leftCols(N * nx) = -kron(L, vm.Cy);
  Eigen::MatrixXd Detae_net = -kron_expand(L, ny);
  Eigen::MatrixXd Detaf_net = zeros(N * ny, N * nf);
  Detaf_net.leftCols(N * ny) = kron_expand(L, ny);

  Eigen::MatrixXd Cz_net = zeros(N * ny, N * npsi);
  Cz_net.rightCols(N * ny) = kron_expand(L, ny);

  Eigen::MatrixXd G_agent = zeros(npsi, npsi);
  G_agent.topLeftCorner(nx + ny, nx + ny) = certificate.G1.at(vertex);
  G_agent.bottomRightCorner(ny, ny) = certificate.G2.at(vertex);
  Eigen::MatrixXd G_net = network_lift(G_agent, psi_sizes, psi_sizes, N);
  Eigen::MatrixXd S_net = network_lift(certificate.S, psi_sizes, psi_sizes, N);

  Eigen::MatrixXd K_agent = zeros(nu, npsi);
  K_agent.leftCols(nx + ny) = certificate.K1.at(vertex);
  Eigen::MatrixXd K_net = network_lift(K_agent, {nu}, psi_sizes, N);
  Eigen::MatrixXd BF_agent = zeros(npsi, nu);
  BF_agent.topRows(nx) = vm.Bu;
  Eigen::MatrixXd BF_net = network_lift(BF_agent, psi_sizes, {nu}, N);

  const int n1 = N * (npsi + ny + nf);  // rows of M11
  const int n2 = N * (npsi + ny + ny);  // rows of M22
  Eigen::MatrixXd M11 = zeros(n1, n1);
  M11.topLeftCorner(N * npsi, N * npsi) = G_net + G_net.transpose() - S_net;
  M11.block(N * npsi, N * npsi, N * ny, N * ny) = eye(N * ny);
  M11.bottomRightCorner(N * nf, N * nf) = t * eye(N * nf);

  Eigen::MatrixXd M21 = zeros(n2, n1);
  M21.topLeftCorner(N * npsi, N * npsi) = A_net * G_net + BF_net * K_net;
  M21.block(0, N * npsi, N * npsi, N * ny) = Be_net;
  M21.block(0, N * (npsi + ny), N * npsi, N * nf) = Bf_net;
  M21.block(N * npsi, 0, N * ny, N * npsi) = Ceta_net * G_net;
  M21.block(N * npsi, N * npsi, N * ny, N * ny) = Detae_net;
  M21.block(N * npsi, N * (npsi + ny), N * ny, N * nf) = Detaf_net;
  M21.block(N * (npsi + ny), 0, N * ny, N * npsi) = Cz_net * G_net;

  Eigen::MatrixXd M22 = zeros(n2, n2);
  M22.topLeftCorner(N * npsi, N * npsi) = S_net;
  M22.block(N * npsi, N * npsi, N * ny, N * ny) = sigma_x * eye(N * ny);
  M22.bottomRightCorner(N * ny, N * ny) = eye(N * ny);

  Eigen::MatrixXd Mbar = zeros(n1 + n2, n1 + n2);
  Mbar.topLeftCorner(n1, n1) = M11;
  Mbar.bottomLeftCorner(n2, n1) = M21;
  Mbar.topRightCorner(n1, n2) = M21.transpose();
  Mbar.bottomRightCorner(n2, n2) = M22;

  // Orthonormal modal transformation, one Z block per signal space.
  const std::vector<int> signal_sizes{nx, ny, ny, ny, ny, nw, nx, ny, ny, ny, ny};
  const int total = n1 + n2;
  Eigen::MatrixXd T = zeros(total, total);
  {
    int off = 0;
    for (int sz : signal_sizes) {
      T.block(off, off, N * sz, N * sz) = kron(Z, eye(sz));
      off += N * sz;
    }
  }
  Eigen::MatrixXd Mt = T.transpose() * Mbar * T;

  // Regroup rows/columns from signal-major (mode inside) to mode-major.
  const int per_mode = npsi + ny + nf + npsi + ny + ny;
  std::vector<int> dst(total);
  {
    int src_sig_off = 0, mode_off = 0;
    for (int sz : signal_sizes) {
      for (int i = 0; i < N; ++i)
        for (int c = 0; c < sz; ++c) dst[src_sig_off + i * sz + c] = i * per_mode + mode_off + c;
      src_sig_off += N * sz;
      mode_off += sz;
    }
  }
  Eigen::MatrixXd regrouped = zeros(total, total);
  for (int r = 0; r < total; ++r)
    for (int c = 0; c < total; ++c) regrouped(dst[r], dst[c]) = Mt(r, c);

  Eigen::MatrixXd direct = zeros(total, total);
  for (int i = 0; i < N; ++i) {
    ModeMatrices mm =
        assemble_mode_matrices(vm, dims, spectrum.eigenvalues[i], az, bz);
    direct.block(i * per_mode, i * per_mode, per_mode, per_mode) = assemble_lmi_block_numeric(
        mm, vm.Bu, dims, certificate.S, certificate.G1.at(vertex), certificate.G2.at(vertex),
        certificate.K1.at(vertex), t, sigma_x);
  }

  return (regrouped - direct).cwiseAbs().maxCoeff();
}

}  // namespace etfc
