#include <doctest.h>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "etfc/errors.hpp"
#include "etfc/graph.hpp"
#include "etfc/lpv.hpp"
#include "etfc/rng.hpp"
#include "etfc/sdp.hpp"
#include "etfc/synthesis.hpp"

using namespace etfc;

namespace {

Eigen::VectorXd scalar(double v) { return Eigen::VectorXd::Constant(1, v); }

// Single-vertex LTI test plant: A=0.5, Bw=Bu=Cy=1.
PolytopicLpvModel scalar_plant() {
  PolytopicLpvModel m;
  m.dims = ModelDims{1, 1, 1, 1};
  m.polytope.dimension = 1;
  m.polytope.vertices = {scalar(0.0)};
  VertexMatrices vm;
  vm.A = Eigen::MatrixXd::Constant(1, 1, 0.5);
  vm.Bw = Eigen::MatrixXd::Constant(1, 1, 1.0);
  vm.Bu = Eigen::MatrixXd::Constant(1, 1, 1.0);
  vm.Cy = Eigen::MatrixXd::Constant(1, 1, 1.0);
  m.vertex_matrices = {vm};
  m.scheduling = SchedulingMap::constant(scalar(0.0));
  return m;
}

SynthesisProblem scalar_problem(double gamma) {
  SynthesisProblem p;
  p.model = scalar_plant();
  p.lambda2 = 3.0;
  p.lambda_max = 3.0;
  p.gamma = gamma;
  p.sigma = 1e-3;
  p.alpha_z = 0.5;
  p.beta_z = 0.1;  // beta_z = 0.5 is infeasible at lambda = 3 for any gamma
  return p;
}

SynthesisCertificate random_certificate(const PolytopicLpvModel& model, std::uint64_t seed) {
  Rng rng(seed);
  const ModelDims& d = model.dims;
  auto mat = [&](int r, int c) {
    return Eigen::MatrixXd::NullaryExpr(r, c, [&](int, int) { return rng.uniform(-1, 1); });
  };
  SynthesisCertificate cert;
  Eigen::MatrixXd s = mat(d.n_psi(), d.n_psi());
  cert.S = 0.5 * (s + s.transpose());
  for (int l = 0; l < model.polytope.vertex_count(); ++l) {
    cert.G1.push_back(mat(d.nx + d.ny, d.nx + d.ny));
    cert.G2.push_back(mat(d.ny, d.ny));
    cert.K1.push_back(mat(d.nu, d.nx + d.ny));
  }
  cert.t = 4.0;
  cert.sigma_x = 1000.0;
  cert.alpha_z = 0.5;
  cert.beta_z = 0.5;
  return cert;
}

}  // namespace

TEST_CASE("mode matrix assembly: structural entries") {
  auto model = build_unicycle_lpv(1.0, 1.0, 0.5, 0.01, {-1.0, 1.0});
  ModeMatrices mm = assemble_mode_matrices(model, 0, 3.0, 0.5, 0.5);
  CHECK((mm.D_eta_e + 3.0 * Eigen::MatrixXd::Identity(2, 2)).lpNorm<Eigen::Infinity>() ==
        0.0);
  CHECK(mm.A_ol.rows() == 8);
  // lambda = 0 (agreement mode): coupling vanishes
  ModeMatrices agr = assemble_mode_matrices(model, 0, 0.0, 0.5, 0.5);
  CHECK(agr.C_z.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(agr.B_e.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("mode matrix assembly: hand-assembled unicycle vertex 1 at lambda = 3") {
  const double az = 0.4, bz = 0.7, lam = 3.0;
  auto model = build_unicycle_lpv(1.0, 1.0, 0.5, 0.01, {-1.0, 1.0});
  const auto& vm = model.vertex_matrices[0];
  ModeMatrices mm = assemble_mode_matrices(model, 0, lam, az, bz);

  Eigen::MatrixXd a_ol = Eigen::MatrixXd::Zero(8, 8);
  a_ol.block(0, 0, 4, 4) = vm.A;
  a_ol.block(4, 0, 2, 4) = -lam * vm.Cy;
  a_ol.block(4, 4, 2, 2) = Eigen::MatrixXd::Identity(2, 2);
  a_ol.block(6, 0, 2, 4) = -bz * vm.Cy;
  a_ol.block(6, 6, 2, 2) = -az * Eigen::MatrixXd::Identity(2, 2);
  CHECK((mm.A_ol - a_ol).lpNorm<Eigen::Infinity>() == 0.0);

  Eigen::MatrixXd b_f = Eigen::MatrixXd::Zero(8, 4);
  b_f.block(0, 2, 4, 2) = vm.Bw;
  b_f.block(4, 0, 2, 2) = lam * Eigen::MatrixXd::Identity(2, 2);
  b_f.block(6, 0, 2, 2) = bz * Eigen::MatrixXd::Identity(2, 2);
  CHECK((mm.B_f - b_f).lpNorm<Eigen::Infinity>() == 0.0);

  CHECK((mm.C_eta.leftCols(4) + lam * vm.Cy).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(mm.C_eta.rightCols(4).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((mm.D_eta_f.leftCols(2) - lam * Eigen::MatrixXd::Identity(2, 2))
            .lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((mm.C_z.rightCols(2) - lam * Eigen::MatrixXd::Identity(2, 2))
            .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("LMI block dimension bookkeeping") {
  auto model = build_unicycle_lpv(1.0, 1.0, 0.5, 0.01, {-1.0, 1.0});
  const ModelDims& d = model.dims;
  CHECK(d.n_psi() + d.ny + d.nf() + d.n_psi() + d.ny + d.ny == 26);
  ModeMatrices mm = assemble_mode_matrices(model, 0, 3.0, 0.5, 0.5);
  Eigen::MatrixXd blk = assemble_lmi_block_numeric(
      mm, model.vertex_matrices[0].Bu, d, Eigen::MatrixXd::Identity(8, 8),
      Eigen::MatrixXd::Identity(6, 6), Eigen::MatrixXd::Identity(2, 2),
      Eigen::MatrixXd::Zero(2, 6), 1.0, 1.0);
  CHECK(blk.rows() == 26);
  CHECK((blk - blk.transpose()).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("degenerate zero plant: block with identity variables is PSD") {
  // All model matrices zero, S = I, G = I, K = 0, t = sigma_x = 1, lambda = 0,
  // alpha_z = beta_z = 0. The integrator identity inside A_OL keeps the block
  // on the PSD boundary (paired identity blocks), so the smallest eigenvalue
  // is exactly 0 rather than positive.
  PolytopicLpvModel m = scalar_plant();
  m.vertex_matrices[0].A.setZero();
  m.vertex_matrices[0].Bw.setZero();
  m.vertex_matrices[0].Bu.setZero();
  m.vertex_matrices[0].Cy.setZero();
  ModeMatrices mm = assemble_mode_matrices(m, 0, 0.0, 0.0, 0.0);
  Eigen::MatrixXd blk = assemble_lmi_block_numeric(
      mm, m.vertex_matrices[0].Bu, m.dims, Eigen::MatrixXd::Identity(3, 3),
      Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(1, 1),
      Eigen::MatrixXd::Zero(1, 2), 1.0, 1.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(blk, Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues().minCoeff() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK((blk.diagonal() - Eigen::VectorXd::Ones(blk.rows())).lpNorm<Eigen::Infinity>() ==
        0.0);
}

TEST_CASE("symbolic and numeric LMI assembly agree") {
  auto model = build_unicycle_lpv(1.0, 1.0, 0.5, 0.01, {-1.0, 1.0});
  const ModelDims& d = model.dims;
  ModeMatrices mm = assemble_mode_matrices(model, 1, 3.0, 0.5, 0.5);

  sdp::Model m;
  sdp::AffineMatrix S = m.new_symmetric(d.n_psi());
  sdp::AffineMatrix G1 = m.new_matrix(6, 6), G2 = m.new_matrix(2, 2), K1 = m.new_matrix(2, 6);
  sdp::AffineMatrix blk = assemble_lmi_block(mm, model.vertex_matrices[1].Bu, d, S, G1, G2,
                                             K1, sdp::LinExpr(2.5), 100.0);
  Rng rng(23);
  Eigen::VectorXd y = rng.uniform_vector(m.variable_count(), -2.0, 2.0);
  Eigen::MatrixXd sym = blk.eval(y);
  Eigen::MatrixXd num = assemble_lmi_block_numeric(mm, model.vertex_matrices[1].Bu, d,
                                                   S.eval(y), G1.eval(y), G2.eval(y),
                                                   K1.eval(y), 2.5, 100.0);
  CHECK((sym - num).lpNorm<Eigen::Infinity>() < 1e-13);
}

TEST_CASE("scalar plant synthesis: feasible, stable, consistent") {
  sdp::InteriorPointBackend backend;
  SynthesisResult res = synthesize(scalar_problem(20.0), backend);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(res.certificate.S,
                                                     Eigen::EigenvaluesOnly);
  CHECK(eig.eigenvalues().minCoeff() > 0.0);
  for (double me : res.certificate.min_eig_per_block) CHECK(me > -1e-7);

  Eigen::MatrixXd f(1, 2);
  f << res.controllers.F_x[0](0, 0), res.controllers.F_zeta[0](0, 0);
  const double resid = (f * res.certificate.G1[0] - res.certificate.K1[0]).norm() /
                       std::max(1.0, res.certificate.K1[0].norm());
  CHECK(resid < 1e-8);

  ModalStabilityReport rep = verify_modal_stability(scalar_plant(), res.controllers, 3.0,
                                                    3.0, 0.5, 0.1, 50);
  CHECK(rep.stable);
  CHECK(rep.max_spectral_radius < 1.0);
}

TEST_CASE("synthesis determinism") {
  sdp::InteriorPointBackend backend;
  SynthesisResult a = synthesize(scalar_problem(20.0), backend);
  SynthesisResult b = synthesize(scalar_problem(20.0), backend);
  CHECK((a.controllers.F_x[0] - b.controllers.F_x[0]).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.certificate.S - b.certificate.S).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("gamma near zero is infeasible") {
  sdp::InteriorPointBackend backend;
  CHECK_THROWS_AS(synthesize(scalar_problem(1e-9), backend), Infeasible);
}

TEST_CASE("gamma monotonicity probe") {
  sdp::InteriorPointBackend backend;
  CHECK_NOTHROW(synthesize(scalar_problem(20.0), backend));
  CHECK_NOTHROW(synthesize(scalar_problem(40.0), backend));
  CHECK_NOTHROW(synthesize(scalar_problem(200.0), backend));
}

TEST_CASE("zero feedback is flagged unstable (integrator eigenvalue)") {
  VertexControllerSet zero;
  zero.F_x = {Eigen::MatrixXd::Zero(1, 1)};
  zero.F_zeta = {Eigen::MatrixXd::Zero(1, 1)};
  ModalStabilityReport rep =
      verify_modal_stability(scalar_plant(), zero, 3.0, 3.0, 0.5, 0.1, 10);
  CHECK_FALSE(rep.stable);
  CHECK(rep.max_spectral_radius >= 1.0);
}

TEST_CASE("full-network equivalence at N=3 for arbitrary certificate values") {
  auto model = build_unicycle_lpv(1.0, 1.0, 0.5, 0.01, {-1.0, 1.0});
  auto spectrum = build_laplacian(CommGraph::complete(3));
  for (int vertex : {0, 1}) {
    SynthesisCertificate cert = random_certificate(model, 100 + vertex);
    const double dev = verify_full_network_equivalence(model, cert, spectrum, vertex);
    CHECK(dev < 1e-8);
  }
}

TEST_CASE("full-network equivalence: N=1 graph is exactly diagonal") {
  auto model = build_unicycle_lpv(1.0, 1.0, 0.5, 0.01, {-1.0, 1.0});
  auto spectrum = build_laplacian(CommGraph(1, {}));
  SynthesisCertificate cert = random_certificate(model, 7);
  CHECK(verify_full_network_equivalence(model, cert, spectrum, 0) < 1e-12);
}

TEST_CASE("full-network equivalence test has power: perturbed eigenvalue is caught") {
  auto model = build_unicycle_lpv(1.0, 1.0, 0.5, 0.01, {-1.0, 1.0});
  auto spectrum = build_laplacian(CommGraph::complete(3));
  spectrum.eigenvalues[1] += 1e-3;
  SynthesisCertificate cert = random_certificate(model, 13);
  const double dev = verify_full_network_equivalence(model, cert, spectrum, 0);
  CHECK(dev > 1e-5);
  CHECK(dev < 1.0);
}
