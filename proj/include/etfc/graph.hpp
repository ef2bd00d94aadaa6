#ifndef ETFC_GRAPH_HPP
#define ETFC_GRAPH_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace etfc {

// Undirected communication graph over agents 0..N-1. Connectivity is part of
// the type contract and is checked at construction.
class CommGraph {
 public:
  CommGraph(int node_count, const std::vector<std::pair<int, int>>& edges);

  int node_count() const { return n_; }
  bool adjacent(int i, int j) const { return adj_(i, j) != 0; }
  const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }
  Eigen::MatrixXd adjacency() const { return adj_.cast<double>(); }
  int degree(int i) const { return static_cast<int>(neighbors_[i].size()); }

  static CommGraph complete(int node_count);
  static CommGraph path(int node_count);

 private:
  int n_;
  Eigen::MatrixXi adj_;
  std::vector<std::vector<int>> neighbors_;
};

// Laplacian L = D - A together with its ordered spectrum and an orthonormal
// eigenbasis Z whose first column is the agreement vector 1/sqrt(N).
struct LaplacianSpectrum {
  Eigen::MatrixXd laplacian;
  Eigen::VectorXd eigenvalues;  // ascending, eigenvalues[0] == 0
  Eigen::MatrixXd basis;        // columns = eigenvectors, Z^T L Z diagonal

  double lambda2() const { return eigenvalues.size() > 1 ? eigenvalues[1] : 0.0; }
  double lambda_max() const { return eigenvalues[eigenvalues.size() - 1]; }
};

LaplacianSpectrum build_laplacian(const CommGraph& graph);

bool is_fully_connected(const CommGraph& graph);

Eigen::MatrixXd kron(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

// M_(n) = M (x) I_n
Eigen::MatrixXd kron_expand(const Eigen::MatrixXd& m, int n);

}  // namespace etfc

#endif
