#ifndef ETFC_LPV_HPP
#define ETFC_LPV_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace etfc {

// Compact scheduling set Theta given by its vertex vectors.
struct ParameterPolytope {
  int dimension = 0;                      // n_theta
  std::vector<Eigen::VectorXd> vertices;  // s vertex vectors

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  static ParameterPolytope interval(double lo, double hi);
  void validate() const;
};

// theta together with its convex coordinates over the polytope vertices:
// alpha_l >= 0, sum alpha_l = 1, sum alpha_l theta_l = theta.
struct SchedulingValue {
  Eigen::VectorXd theta;
  Eigen::VectorXd alpha;
};

struct VertexMatrices {
  Eigen::MatrixXd A, Bw, Bu, Cy;
};

struct ModelDims {
  int nx = 0, nw = 0, nu = 0, ny = 0;
  int n_psi() const { return nx + 2 * ny; }  // (x, zeta, ztilde)
  int nf() const { return ny + nw; }         // f = (r, w)
  bool operator==(const ModelDims&) const = default;
};

// theta source: either a fixed vector or one component of the agent state.
class SchedulingMap {
 public:
  SchedulingMap() = default;  // constant zero-dimensional map
  static SchedulingMap state_component(int index);
  static SchedulingMap constant(const Eigen::VectorXd& theta0);
  static SchedulingMap parse(const std::string& id, int n_theta);

  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
  bool is_constant() const { return index_ < 0; }
  std::string id() const;

 private:
  int index_ = -1;
  Eigen::VectorXd theta0_;
};

// Reporting-only mapping from body-frame states back to global coordinates:
// heading integrates phi' = v_t / d, positions are rotated by T_phi^T.
struct BodyFrameInfo {
  double handle_offset = 0.0;  // d
  int vt_index = 0;
  int pos_x_index = 0;
  int pos_y_index = 1;
};

struct PolytopicLpvModel {
  ModelDims dims;
  ParameterPolytope polytope;
  std::vector<VertexMatrices> vertex_matrices;  // one tuple per polytope vertex
  SchedulingMap scheduling;
  std::optional<BodyFrameInfo> body_frame;

  void validate() const;
};

// Unique convex coordinates of theta; throws OutOfPolytope when theta lies
// outside the hull beyond 1e-9.
SchedulingValue convex_coordinates(const ParameterPolytope& polytope,
                                   const Eigen::VectorXd& theta);

// Same, but projects theta onto the hull first (interval polytopes only).
SchedulingValue convex_coordinates_clamped(const ParameterPolytope& polytope,
                                           const Eigen::VectorXd& theta);

VertexMatrices evaluate_model(const PolytopicLpvModel& model, const SchedulingValue& sv);

// Handle-point unicycle, state (x~d, y~d, v_n, v_t), inputs (f, tau).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> unicycle_continuous(double mass,
                                                                double inertia,
                                                                double handle_offset,
                                                                double vt);

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> euler_discretize(const Eigen::MatrixXd& Ac,
                                                             const Eigen::MatrixXd& Bc,
                                                             double Ts);

PolytopicLpvModel build_unicycle_lpv(double mass, double inertia, double handle_offset,
                                     double Ts, std::pair<double, double> vt_range);

}  // namespace etfc

#endif
