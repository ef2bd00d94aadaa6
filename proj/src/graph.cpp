#include "etfc/graph.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <queue>
#include <string>

#include "etfc/errors.hpp"

namespace etfc {

namespace {
constexpr double kConnectivityTol = 1e-9;
}

CommGraph::CommGraph(int node_count, const std::vector<std::pair<int, int>>& edges)
    : n_(node_count), adj_(Eigen::MatrixXi::Zero(node_count, node_count)) {
  if (node_count < 1) throw DimensionMismatch("graph needs at least one node");
  for (auto [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n_ || j >= n_)
      throw DimensionMismatch("edge endpoint out of range: (" + std::to_string(i) + "," +
                              std::to_string(j) + ")");
    if (i == j) throw DimensionMismatch("self-loops are not allowed");
    adj_(i, j) = adj_(j, i) = 1;
  }
  neighbors_.resize(n_);
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j)
      if (adj_(i, j)) neighbors_[i].push_back(j);

  // BFS connectivity; the spectral test lambda2 > 0 is equivalent.
  std::vector<bool> seen(n_, false);
  std::queue<int> q;
  q.push(0);
  seen[0] = true;
  int reached = 1;
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int w : neighbors_[v])
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        q.push(w);
      }
  }
  if (reached != n_) throw DisconnectedGraph("communication graph is not connected");
}

CommGraph CommGraph::complete(int node_count) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < node_count; ++i)
    for (int j = i + 1; j < node_count; ++j) edges.emplace_back(i, j);
  return CommGraph(node_count, edges);
}

CommGraph CommGraph::path(int node_count) {
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i + 1 < node_count; ++i) edges.emplace_back(i, i + 1);
  return CommGraph(node_count, edges);
}

LaplacianSpectrum build_laplacian(const CommGraph& graph) {
  const int n = graph.node_count();
  Eigen::MatrixXd a = graph.adjacency();
  Eigen::MatrixXd lap = -a;
  for (int i = 0; i < n; ++i) lap(i, i) = a.row(i).sum();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lap);
  if (eig.info() != Eigen::Success) throw Error("Laplacian eigensolve failed");

  LaplacianSpectrum s;
  s.laplacian = lap;
  s.eigenvalues = eig.eigenvalues();  // ascending
  s.basis = eig.eigenvectors();
  if (n > 1 && s.eigenvalues[1] <= kConnectivityTol)
    throw DisconnectedGraph("lambda2 <= tolerance: graph is numerically disconnected");

  // Pin the agreement vector exactly; the remaining columns are orthogonal to
  // it up to eigensolver accuracy.
  s.basis.col(0) = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  return s;
}

bool is_fully_connected(const CommGraph& graph) {
  const int n = graph.node_count();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (!graph.adjacent(i, j)) return false;
  return true;
}

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Eigen::MatrixXd kron_expand(const Eigen::MatrixXd& m, int n) {
  if (n < 1) throw DimensionMismatch("kron_expand needs n >= 1");
  return kron(m, Eigen::MatrixXd::Identity(n, n));
}

}  // namespace etfc
