#include "etfc/lpv.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "etfc/errors.hpp"

namespace etfc {

namespace {
constexpr double kHullTol = 1e-9;
}

ParameterPolytope ParameterPolytope::interval(double lo, double hi) {
  ParameterPolytope p;
  p.dimension = 1;
  p.vertices = {Eigen::VectorXd::Constant(1, lo), Eigen::VectorXd::Constant(1, hi)};
  p.validate();
  return p;
}

void ParameterPolytope::validate() const {
  if (vertex_count() < 1) throw UnsupportedPolytope("polytope needs at least one vertex");
  for (const auto& v : vertices)
    if (v.size() != dimension) throw DimensionMismatch("polytope vertex dimension mismatch");
  for (int i = 0; i < vertex_count(); ++i)
    for (int j = i + 1; j < vertex_count(); ++j)
      if ((vertices[i] - vertices[j]).lpNorm<Eigen::Infinity>() < 1e-14)
        throw UnsupportedPolytope("duplicate polytope vertices");
  if (dimension == 1 && vertex_count() == 2 && vertices[0][0] >= vertices[1][0])
    throw UnsupportedPolytope("interval polytope requires theta_min < theta_max");
}

SchedulingMap SchedulingMap::state_component(int index) {
  SchedulingMap m;
  m.index_ = index;
  return m;
}

SchedulingMap SchedulingMap::constant(const Eigen::VectorXd& theta0) {
  SchedulingMap m;
  m.theta0_ = theta0;
  return m;
}

SchedulingMap SchedulingMap::parse(const std::string& id, int n_theta) {
  if (id.rfind("state_component:", 0) == 0) {
    int k = std::stoi(id.substr(std::string("state_component:").size()));
    if (n_theta != 1)
      throw UnsupportedPolytope("state_component scheduling map requires n_theta = 1");
    return state_component(k);
  }
  if (id == "constant") return constant(Eigen::VectorXd::Zero(n_theta));
  throw ConfigError("unknown scheduling map: " + id);
}

Eigen::VectorXd SchedulingMap::operator()(const Eigen::VectorXd& x) const {
  if (index_ < 0) return theta0_;
  if (index_ >= x.size()) throw DimensionMismatch("scheduling state component out of range");
  return Eigen::VectorXd::Constant(1, x[index_]);
}

std::string SchedulingMap::id() const {
  return index_ < 0 ? "constant" : "state_component:" + std::to_string(index_);
}

void PolytopicLpvModel::validate() const {
  polytope.validate();
  if (static_cast<int>(vertex_matrices.size()) != polytope.vertex_count())
    throw DimensionMismatch("one matrix tuple per polytope vertex required");
  for (const auto& vm : vertex_matrices) {
    if (vm.A.rows() != dims.nx || vm.A.cols() != dims.nx ||
        vm.Bw.rows() != dims.nx || vm.Bw.cols() != dims.nw ||
        vm.Bu.rows() != dims.nx || vm.Bu.cols() != dims.nu ||
        vm.Cy.rows() != dims.ny || vm.Cy.cols() != dims.nx)
      throw DimensionMismatch("vertex matrices inconsistent with model dims");
  }
}

namespace {

SchedulingValue coordinates_impl(const ParameterPolytope& p, const Eigen::VectorXd& theta,
                                 bool clamp) {
  if (theta.size() != p.dimension) throw DimensionMismatch("theta dimension mismatch");
  const int s = p.vertex_count();
  SchedulingValue sv;
  sv.theta = theta;

  if (s == 1) {
    if (!clamp && (theta - p.vertices[0]).lpNorm<Eigen::Infinity>() > kHullTol) {
      throw OutOfPolytope("theta outside singleton polytope");
    }
    sv.theta = p.vertices[0];
    sv.alpha = Eigen::VectorXd::Ones(1);
    return sv;
  }

  if (s == 2) {
    // Segment between the two vertices; u is the interpolation weight of v1.
    const Eigen::VectorXd d = p.vertices[1] - p.vertices[0];
    const double dd = d.squaredNorm();
    double u = d.dot(theta - p.vertices[0]) / dd;
    const Eigen::VectorXd residual = theta - (p.vertices[0] + u * d);
    if (residual.lpNorm<Eigen::Infinity>() > kHullTol)
      throw OutOfPolytope("theta off the segment spanned by the polytope vertices");
    if (u < -kHullTol || u > 1.0 + kHullTol) {
      if (!clamp) {
        std::ostringstream os;
        os << "theta outside scheduling polytope (u = " << u << ")";
        throw OutOfPolytope(os.str());
      }
      u = std::clamp(u, 0.0, 1.0);
    }
    u = std::clamp(u, 0.0, 1.0);
    sv.alpha = Eigen::VectorXd(2);
    sv.alpha << 1.0 - u, u;
    sv.theta = p.vertices[0] + u * d;
    return sv;
  }

  // Affinely independent vertex sets (s <= n_theta + 1) have unique
  // coordinates: solve [theta_l; 1] alpha = [theta; 1].
  if (s > p.dimension + 1)
    throw UnsupportedPolytope("convex coordinates are not unique for s > n_theta + 1");
  Eigen::MatrixXd m(p.dimension + 1, s);
  for (int l = 0; l < s; ++l) {
    m.block(0, l, p.dimension, 1) = p.vertices[l];
    m(p.dimension, l) = 1.0;
  }
  Eigen::VectorXd rhs(p.dimension + 1);
  rhs.head(p.dimension) = theta;
  rhs[p.dimension] = 1.0;
  Eigen::VectorXd alpha = m.colPivHouseholderQr().solve(rhs);
  if ((m * alpha - rhs).lpNorm<Eigen::Infinity>() > kHullTol)
    throw OutOfPolytope("theta outside the affine span of the polytope vertices");
  if (alpha.minCoeff() < -kHullTol) {
    if (!clamp) throw OutOfPolytope("theta outside scheduling polytope");
    throw UnsupportedPolytope("clamping is only implemented for interval polytopes");
  }
  sv.alpha = alpha.cwiseMax(0.0);
  sv.alpha /= sv.alpha.sum();
  return sv;
}

}  // namespace

SchedulingValue convex_coordinates(const ParameterPolytope& polytope,
                                   const Eigen::VectorXd& theta) {
  return coordinates_impl(polytope, theta, false);
}

SchedulingValue convex_coordinates_clamped(const ParameterPolytope& polytope,
                                           const Eigen::VectorXd& theta) {
  return coordinates_impl(polytope, theta, true);
}

VertexMatrices evaluate_model(const PolytopicLpvModel& model, const SchedulingValue& sv) {
  if (sv.alpha.size() != model.polytope.vertex_count())
    throw DimensionMismatch("alpha size does not match vertex count");
  VertexMatrices out;
  out.A = Eigen::MatrixXd::Zero(model.dims.nx, model.dims.nx);
  out.Bw = Eigen::MatrixXd::Zero(model.dims.nx, model.dims.nw);
  out.Bu = Eigen::MatrixXd::Zero(model.dims.nx, model.dims.nu);
  out.Cy = Eigen::MatrixXd::Zero(model.dims.ny, model.dims.nx);
  for (int l = 0; l < model.polytope.vertex_count(); ++l) {
    const auto& vm = model.vertex_matrices[l];
    out.A += sv.alpha[l] * vm.A;
    out.Bw += sv.alpha[l] * vm.Bw;
    out.Bu += sv.alpha[l] * vm.Bu;
    out.Cy += sv.alpha[l] * vm.Cy;
  }
  return out;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> unicycle_continuous(double mass, double inertia,
                                                                double handle_offset,
                                                                double vt) {
  if (mass <= 0.0 || inertia <= 0.0 || handle_offset <= 0.0)
    throw InvalidPhysicalParameter("mass, inertia and handle offset must be positive");
  Eigen::MatrixXd Ac = Eigen::MatrixXd::Zero(4, 4);
  const double w = vt / handle_offset;  // body rotation rate
  Ac(0, 1) = w;
  Ac(1, 0) = -w;
  Ac(0, 2) = 1.0;
  Ac(1, 3) = 1.0;
  Eigen::MatrixXd Bc = Eigen::MatrixXd::Zero(4, 2);
  Bc(2, 0) = 1.0 / mass;
  Bc(3, 1) = handle_offset / inertia;
  return {Ac, Bc};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> euler_discretize(const Eigen::MatrixXd& Ac,
                                                             const Eigen::MatrixXd& Bc,
                                                             double Ts) {
  if (Ts <= 0.0) throw InvalidPhysicalParameter("sampling time must be positive");
  if (Ac.rows() != Ac.cols() || Ac.rows() != Bc.rows())
    throw DimensionMismatch("euler_discretize dimension mismatch");
  Eigen::MatrixXd Ad = Eigen::MatrixXd::Identity(Ac.rows(), Ac.cols()) + Ts * Ac;
  return {Ad, Ts * Bc};
}

PolytopicLpvModel build_unicycle_lpv(double mass, double inertia, double handle_offset,
                                     double Ts, std::pair<double, double> vt_range) {
  if (vt_range.first >= vt_range.second)
    throw InvalidPhysicalParameter("vt range must satisfy vt_min < vt_max");
  PolytopicLpvModel m;
  m.dims = ModelDims{4, 2, 2, 2};
  m.polytope = ParameterPolytope::interval(vt_range.first, vt_range.second);
  for (double vt : {vt_range.first, vt_range.second}) {
    auto [Ac, Bc] = unicycle_continuous(mass, inertia, handle_offset, vt);
    auto [Ad, Bd] = euler_discretize(Ac, Bc, Ts);
    VertexMatrices vm;
    vm.A = Ad;
    vm.Bu = Bd;
    vm.Bw = Bd;  // disturbance enters through the actuation channels
    vm.Cy = Eigen::MatrixXd::Zero(2, 4);
    vm.Cy(0, 0) = 1.0;
    vm.Cy(1, 1) = 1.0;
    m.vertex_matrices.push_back(vm);
  }
  m.scheduling = SchedulingMap::state_component(3);  // theta = v_t
  m.body_frame = BodyFrameInfo{handle_offset, 3, 0, 1};
  m.validate();
  return m;
}

}  // namespace etfc
