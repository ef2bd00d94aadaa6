#ifndef ETFC_SYNTHESIS_HPP
#define ETFC_SYNTHESIS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "etfc/graph.hpp"
#include "etfc/lpv.hpp"
#include "etfc/sdp.hpp"

namespace etfc {

// One modal open-loop system: the per-mode blocks of the stacked closed loop
// after diagonalization, with the Laplacian replaced by the eigenvalue lambda.
// State ordering is psi = (x, zeta, ztilde), n_psi = n_x + 2 n_y; the exogenous
// input is f = (r, w), n_f = n_y + n_w.
struct ModeMatrices {
  Eigen::MatrixXd A_ol;     // n_psi x n_psi
  Eigen::MatrixXd B_e;      // n_psi x n_y
  Eigen::MatrixXd B_f;      // n_psi x n_f
  Eigen::MatrixXd C_eta;    // n_y x n_psi
  Eigen::MatrixXd D_eta_e;  // n_y x n_y
  Eigen::MatrixXd D_eta_f;  // n_y x n_f
  Eigen::MatrixXd C_z;      // n_y x n_psi
  Eigen::MatrixXd D_ze;     // n_y x n_y
  Eigen::MatrixXd D_zf;     // n_y x n_f
};

ModeMatrices assemble_mode_matrices(const VertexMatrices& vm, const ModelDims& dims,
                                    double lambda, double alpha_z, double beta_z);
ModeMatrices assemble_mode_matrices(const PolytopicLpvModel& model, int vertex,
                                    double lambda, double alpha_z, double beta_z);

struct SynthesisProblem {
  enum class Mode { Feasibility, MinimizeGammaSquared };

  PolytopicLpvModel model;
  double lambda2 = 0.0;
  double lambda_max = 0.0;
  double gamma = 0.0;  // l2-gain bound; in MinimizeGammaSquared an initial guess
  double sigma = 0.0;  // trigger level
  double alpha_z = 0.5;
  double beta_z = 0.5;
  Mode mode = Mode::Feasibility;
  double psd_epsilon = 1e-7;  // strict inequality realized as block >= eps*I
  // Bounds S from above (S <= cap*I). The margin supremum is approached only
  // as the decision variables blow up in scale; the cap keeps the maximizer
  // attained and G invertible at working precision.
  double variable_scale_cap = 1000.0;

  void validate() const;
};

struct SynthesisCertificate {
  Eigen::MatrixXd S;                  // shared n_psi x n_psi, S > 0
  std::vector<Eigen::MatrixXd> G1;    // per vertex, (n_x+n_y) x (n_x+n_y)
  std::vector<Eigen::MatrixXd> G2;    // per vertex, n_y x n_y
  std::vector<Eigen::MatrixXd> K1;    // per vertex, n_u x (n_x+n_y)
  double t = 0.0;                     // gamma^2
  double sigma_x = 0.0;               // sigma^-1
  double gamma = 0.0, sigma = 0.0;
  double alpha_z = 0.0, beta_z = 0.0;
  double lambda2 = 0.0, lambda_max = 0.0;
  std::vector<double> min_eig_per_block;  // re-evaluated at the solution
  double solver_margin = 0.0;
  int solver_iterations = 0;
  std::string solver_status;
};

struct VertexControllerSet {
  std::vector<Eigen::MatrixXd> F_x;     // per vertex, n_u x n_x
  std::vector<Eigen::MatrixXd> F_zeta;  // per vertex, n_u x n_y
  double gamma = 0.0, sigma = 0.0;
  double alpha_z = 0.0, beta_z = 0.0;

  Eigen::MatrixXd blend_F_x(const Eigen::VectorXd& alpha) const;
  Eigen::MatrixXd blend_F_zeta(const Eigen::VectorXd& alpha) const;
};

struct SynthesisResult {
  SynthesisCertificate certificate;
  VertexControllerSet controllers;
};

// Theorem-style LMI block for one (vertex, mode) pair; symmetric, required > 0.
// Row/column structure: [n_psi | n_y | n_f | n_psi | n_y | n_y].
sdp::AffineMatrix assemble_lmi_block(const ModeMatrices& mm, const Eigen::MatrixXd& Bu,
                                     const ModelDims& dims, const sdp::AffineMatrix& S,
                                     const sdp::AffineMatrix& G1,
                                     const sdp::AffineMatrix& G2,
                                     const sdp::AffineMatrix& K1, const sdp::LinExpr& t,
                                     double sigma_x);

Eigen::MatrixXd assemble_lmi_block_numeric(const ModeMatrices& mm, const Eigen::MatrixXd& Bu,
                                           const ModelDims& dims, const Eigen::MatrixXd& S,
                                           const Eigen::MatrixXd& G1,
                                           const Eigen::MatrixXd& G2,
                                           const Eigen::MatrixXd& K1, double t,
                                           double sigma_x);

SynthesisResult synthesize(const SynthesisProblem& problem, sdp::Backend& backend);

struct ModalStabilityReport {
  bool stable = false;
  double max_spectral_radius = 0.0;
  Eigen::VectorXd worst_theta;
  double worst_lambda = 0.0;
  // Diagnostics outside the theorem's claim (agreement mode, lambda = 0).
  double agreement_plant_radius = 0.0;  // rho(A + Bu Fx) at the worst vertex
};

ModalStabilityReport verify_modal_stability(const PolytopicLpvModel& model,
                                            const VertexControllerSet& controllers,
                                            double lambda2, double lambda_max,
                                            double alpha_z, double beta_z,
                                            int samples = 100, std::uint64_t seed = 20220901);

// Assembles the stacked-network inequality directly from the Laplacian,
// conjugates it with the orthonormal modal transformation, and compares
// against the direct sum of per-mode blocks. Returns the max elementwise
// deviation between both assembly paths.
double verify_full_network_equivalence(const PolytopicLpvModel& model,
                                       const SynthesisCertificate& certificate,
                                       const LaplacianSpectrum& spectrum, int vertex);

// Closed-loop modal matrix A_ol(theta, lambda) + B_F(theta) [Fx Fzeta 0].
Eigen::MatrixXd modal_closed_loop(const PolytopicLpvModel& model,
                                  const VertexControllerSet& controllers,
                                  const Eigen::VectorXd& alpha, double lambda,
                                  double alpha_z, double beta_z);

double spectral_radius(const Eigen::MatrixXd& m);

// Convex blend of the vertex matrices for a given weight vector.
VertexMatrices blend_vertices(const PolytopicLpvModel& model, const Eigen::VectorXd& alpha);

// Lifts a per-agent block-partitioned matrix to the N-agent network: each
// sub-block B becomes I_N (x) B, agent-major inside every signal block.
Eigen::MatrixXd network_lift(const Eigen::MatrixXd& m, const std::vector<int>& row_sizes,
                             const std::vector<int>& col_sizes, int agents);

}  // namespace etfc

#endif
