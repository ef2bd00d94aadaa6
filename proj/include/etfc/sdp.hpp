#ifndef ETFC_SDP_HPP
#define ETFC_SDP_HPP

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace etfc::sdp {

// Affine scalar expression  c0 + sum_i coeff_i * y_i  over solver variables.
class LinExpr {
 public:
  LinExpr() = default;
  LinExpr(double constant) : constant_(constant) {}  // NOLINT implicit

  static LinExpr variable(int index, double coeff = 1.0);

  double constant() const { return constant_; }
  const std::vector<std::pair<int, double>>& terms() const { return terms_; }

  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double s);
  friend LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
  friend LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
  friend LinExpr operator*(double s, LinExpr a) { return a *= s; }
  friend LinExpr operator*(LinExpr a, double s) { return a *= s; }
  LinExpr operator-() const;

  double eval(const Eigen::VectorXd& y) const;

 private:
  void add_term(int index, double coeff);
  double constant_ = 0.0;
  std::vector<std::pair<int, double>> terms_;  // sorted by index, merged
};

// Dense matrix of affine expressions.
class AffineMatrix {
 public:
  AffineMatrix() = default;
  AffineMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(rows * cols) {}
  static AffineMatrix constant(const Eigen::MatrixXd& m);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  LinExpr& operator()(int r, int c) { return data_[r * cols_ + c]; }
  const LinExpr& operator()(int r, int c) const { return data_[r * cols_ + c]; }

  AffineMatrix transpose() const;
  AffineMatrix operator+(const AffineMatrix& o) const;
  AffineMatrix operator-(const AffineMatrix& o) const;
  AffineMatrix scaled(double s) const;
  void set_block(int r0, int c0, const AffineMatrix& m);
  void set_block(int r0, int c0, const Eigen::MatrixXd& m);

  friend AffineMatrix operator*(const Eigen::MatrixXd& lhs, const AffineMatrix& rhs);
  friend AffineMatrix operator*(const AffineMatrix& lhs, const Eigen::MatrixXd& rhs);

  Eigen::MatrixXd eval(const Eigen::VectorXd& y) const;

 private:
  int rows_ = 0, cols_ = 0;
  std::vector<LinExpr> data_;
};

// Assembles a symmetric block matrix from its lower-triangle blocks.
class SymmetricBlockBuilder {
 public:
  explicit SymmetricBlockBuilder(std::vector<int> block_sizes);
  void place(int block_row, int block_col, const AffineMatrix& m);
  void place(int block_row, int block_col, const Eigen::MatrixXd& m);
  AffineMatrix finish() const;  // mirrors the strict lower triangle
  int total_size() const { return total_; }

 private:
  std::vector<int> sizes_, offsets_;
  int total_ = 0;
  AffineMatrix acc_;
};

// Declaration side of the backend interface: symmetric / rectangular matrix
// variables, scalar variables, PSD constraints on affine symmetric matrices,
// and an optional linear objective.
class Model {
 public:
  int variable_count() const { return nvars_; }
  LinExpr new_scalar();
  AffineMatrix new_matrix(int rows, int cols);
  AffineMatrix new_symmetric(int n);
  void require_psd(const AffineMatrix& block);
  const std::vector<AffineMatrix>& psd_blocks() const { return blocks_; }

 private:
  int nvars_ = 0;
  std::vector<AffineMatrix> blocks_;
};

enum class SolveStatus { Optimal, Stalled, IterationLimit };

struct Solution {
  SolveStatus status = SolveStatus::Stalled;
  Eigen::VectorXd y;      // values for the model's variables
  double margin = -1e30;  // min over blocks of lambda_min(block(y))
  double objective = 0.0;
  // Weak-duality bound from the primal iterate: objective <= this value up to
  // the primal residual. Lets callers certify infeasibility at a stall.
  double objective_upper_bound = 1e30;
  int iterations = 0;
  double primal_residual = 0.0, dual_residual = 0.0, mu = 0.0;
  std::string detail;
};

struct SolveOptions {
  int max_iterations = 250;
  double tolerance = 1e-10;    // relative residual / gap target
  double step_fraction = 0.98; // fraction-to-boundary
  double tau_cap = 1e4;        // upper bound on the feasibility margin variable
  bool verbose = false;
};

class Backend {
 public:
  virtual ~Backend() = default;
  // Maximizes the smallest-eigenvalue margin over all PSD blocks. The reported
  // margin is recomputed from the returned variables by a direct eigensolve.
  virtual Solution solve_feasibility(const Model& model, const SolveOptions& opts) = 0;
  // Minimizes a linear objective subject to the PSD constraints.
  virtual Solution solve_minimize(const Model& model, const LinExpr& objective,
                                  const SolveOptions& opts) = 0;
};

// Built-in primal-dual interior point method (Nesterov-Todd scaling,
// Mehrotra-style adaptive centering, infeasible start).
class InteriorPointBackend final : public Backend {
 public:
  Solution solve_feasibility(const Model& model, const SolveOptions& opts) override;
  Solution solve_minimize(const Model& model, const LinExpr& objective,
                          const SolveOptions& opts) override;
};

// Smallest eigenvalue over all PSD blocks evaluated at y.
double evaluate_margin(const Model& model, const Eigen::VectorXd& y);

}  // namespace etfc::sdp

#endif
