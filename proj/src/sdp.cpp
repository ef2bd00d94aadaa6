#include "etfc/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "etfc/errors.hpp"

namespace etfc::sdp {

// ---------------------------------------------------------------------------
// LinExpr / AffineMatrix
// ---------------------------------------------------------------------------

LinExpr LinExpr::variable(int index, double coeff) {
  LinExpr e;
  e.terms_.emplace_back(index, coeff);
  return e;
}

void LinExpr::add_term(int index, double coeff) {
  auto it = std::lower_bound(terms_.begin(), terms_.end(), index,
                             [](const auto& t, int i) { return t.first < i; });
  if (it != terms_.end() && it->first == index) {
    it->second += coeff;
  } else {
    terms_.insert(it, {index, coeff});
  }
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  constant_ += o.constant_;
  for (const auto& [i, v] : o.terms_) add_term(i, v);
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  constant_ -= o.constant_;
  for (const auto& [i, v] : o.terms_) add_term(i, -v);
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  constant_ *= s;
  for (auto& [i, v] : terms_) v *= s;
  return *this;
}

LinExpr LinExpr::operator-() const {
  LinExpr e(*this);
  e *= -1.0;
  return e;
}

double LinExpr::eval(const Eigen::VectorXd& y) const {
  double v = constant_;
  for (const auto& [i, c] : terms_) v += c * y[i];
  return v;
}

AffineMatrix AffineMatrix::constant(const Eigen::MatrixXd& m) {
  AffineMatrix a(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int r = 0; r < a.rows_; ++r)
    for (int c = 0; c < a.cols_; ++c) a(r, c) = LinExpr(m(r, c));
  return a;
}

AffineMatrix AffineMatrix::transpose() const {
  AffineMatrix t(cols_, rows_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

AffineMatrix AffineMatrix::operator+(const AffineMatrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("AffineMatrix +");
  AffineMatrix out(*this);
  for (int i = 0; i < rows_ * cols_; ++i) out.data_[i] += o.data_[i];
  return out;
}

AffineMatrix AffineMatrix::operator-(const AffineMatrix& o) const {
  if (rows_ != o.rows_ || cols_ != o.cols_) throw DimensionMismatch("AffineMatrix -");
  AffineMatrix out(*this);
  for (int i = 0; i < rows_ * cols_; ++i) out.data_[i] -= o.data_[i];
  return out;
}

AffineMatrix AffineMatrix::scaled(double s) const {
  AffineMatrix out(*this);
  for (auto& e : out.data_) e *= s;
  return out;
}

void AffineMatrix::set_block(int r0, int c0, const AffineMatrix& m) {
  if (r0 + m.rows() > rows_ || c0 + m.cols() > cols_)
    throw DimensionMismatch("AffineMatrix::set_block out of range");
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) (*this)(r0 + r, c0 + c) = m(r, c);
}

void AffineMatrix::set_block(int r0, int c0, const Eigen::MatrixXd& m) {
  set_block(r0, c0, AffineMatrix::constant(m));
}

AffineMatrix operator*(const Eigen::MatrixXd& lhs, const AffineMatrix& rhs) {
  if (lhs.cols() != rhs.rows()) throw DimensionMismatch("const * AffineMatrix");
  AffineMatrix out(static_cast<int>(lhs.rows()), rhs.cols());
  for (int r = 0; r < out.rows(); ++r)
    for (int k = 0; k < rhs.rows(); ++k) {
      const double v = lhs(r, k);
      if (v == 0.0) continue;
      for (int c = 0; c < rhs.cols(); ++c) out(r, c) += v * rhs(k, c);
    }
  return out;
}

AffineMatrix operator*(const AffineMatrix& lhs, const Eigen::MatrixXd& rhs) {
  if (lhs.cols() != rhs.rows()) throw DimensionMismatch("AffineMatrix * const");
  AffineMatrix out(lhs.rows(), static_cast<int>(rhs.cols()));
  for (int r = 0; r < out.rows(); ++r)
    for (int k = 0; k < lhs.cols(); ++k) {
      const LinExpr& e = lhs(r, k);
      for (int c = 0; c < out.cols(); ++c) {
        const double v = rhs(k, c);
        if (v != 0.0) out(r, c) += v * e;
      }
    }
  return out;
}

Eigen::MatrixXd AffineMatrix::eval(const Eigen::VectorXd& y) const {
  Eigen::MatrixXd m(rows_, cols_);
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) m(r, c) = (*this)(r, c).eval(y);
  return m;
}

// ---------------------------------------------------------------------------
// SymmetricBlockBuilder
// ---------------------------------------------------------------------------

SymmetricBlockBuilder::SymmetricBlockBuilder(std::vector<int> block_sizes)
    : sizes_(std::move(block_sizes)) {
  offsets_.resize(sizes_.size());
  for (std::size_t i = 0; i < sizes_.size(); ++i) {
    offsets_[i] = total_;
    total_ += sizes_[i];
  }
  acc_ = AffineMatrix(total_, total_);
}

void SymmetricBlockBuilder::place(int block_row, int block_col, const AffineMatrix& m) {
  if (block_col > block_row) throw DimensionMismatch("place only lower-triangle blocks");
  if (m.rows() != sizes_[block_row] || m.cols() != sizes_[block_col])
    throw DimensionMismatch("block size mismatch in SymmetricBlockBuilder");
  acc_.set_block(offsets_[block_row], offsets_[block_col], m);
}

void SymmetricBlockBuilder::place(int block_row, int block_col, const Eigen::MatrixXd& m) {
  place(block_row, block_col, AffineMatrix::constant(m));
}

AffineMatrix SymmetricBlockBuilder::finish() const {
  AffineMatrix out(acc_);
  for (int r = 0; r < total_; ++r)
    for (int c = r + 1; c < total_; ++c) out(r, c) = out(c, r);
  return out;
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

LinExpr Model::new_scalar() { return LinExpr::variable(nvars_++); }

AffineMatrix Model::new_matrix(int rows, int cols) {
  AffineMatrix m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = LinExpr::variable(nvars_++);
  return m;
}

AffineMatrix Model::new_symmetric(int n) {
  AffineMatrix m(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = r; c < n; ++c) {
      LinExpr v = LinExpr::variable(nvars_++);
      m(r, c) = v;
      m(c, r) = v;
    }
  return m;
}

void Model::require_psd(const AffineMatrix& block) {
  if (block.rows() != block.cols()) throw DimensionMismatch("PSD block must be square");
  blocks_.push_back(block);
}

double evaluate_margin(const Model& model, const Eigen::VectorXd& y) {
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& blk : model.psd_blocks()) {
    Eigen::MatrixXd m = blk.eval(y);
    m = 0.5 * (m + m.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    margin = std::min(margin, eig.eigenvalues().minCoeff());
  }
  return margin;
}

// ---------------------------------------------------------------------------
// Interior point core.
//
// Dual standard form over blocks:   max b'y  s.t.  Z_k = C_k - sum_i y_i A_ki,
// Z_k >= 0, with primal  min <C,X>  s.t.  <A_i,X> = b_i, X >= 0.  Nesterov-Todd
// scaling W solves W Z W = X; the Newton system reduces to the Schur equation
// M dy = h with M_ij = sum_k <A_ki, W_k A_kj W_k>.
// ---------------------------------------------------------------------------

namespace {

struct StdBlock {
  int n = 0;
  Eigen::MatrixXd C;
  std::vector<std::pair<int, Eigen::MatrixXd>> A;  // (var index, symmetric matrix)
};

struct StdForm {
  int m = 0;
  Eigen::VectorXd b;
  std::vector<StdBlock> blocks;
};

// Converts F(y) = F0 + sum y_i F_i (PSD required) into C = F0, A_i = -F_i.
StdBlock to_std_block(const AffineMatrix& blk, int extra_margin_var) {
  const int n = blk.rows();
  StdBlock out;
  out.n = n;
  out.C = Eigen::MatrixXd::Zero(n, n);
  std::map<int, Eigen::MatrixXd> per_var;
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      out.C(r, c) = blk(r, c).constant();
      for (const auto& [i, v] : blk(r, c).terms()) {
        auto [it, inserted] = per_var.try_emplace(i, Eigen::MatrixXd::Zero(n, n));
        it->second(r, c) += v;
      }
    }
  out.C = 0.5 * (out.C + out.C.transpose()).eval();
  for (auto& [i, f] : per_var) {
    Eigen::MatrixXd sym = -0.5 * (f + f.transpose());
    out.A.emplace_back(i, std::move(sym));
  }
  if (extra_margin_var >= 0)
    out.A.emplace_back(extra_margin_var, Eigen::MatrixXd::Identity(n, n));
  return out;
}

double frob_dot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a.array() * b.array()).sum();
}

// Largest step alpha with M + alpha dM > 0, via lambda_min(L^-1 dM L^-T).
double max_step(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::MatrixXd& dM) {
  Eigen::MatrixXd l = llt.matrixL();
  Eigen::MatrixXd t = l.triangularView<Eigen::Lower>().solve(dM);
  Eigen::MatrixXd b =
      l.triangularView<Eigen::Lower>().solve(t.transpose()).transpose();
  b = 0.5 * (b + b.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b, Eigen::EigenvaluesOnly);
  const double lmin = eig.eigenvalues().minCoeff();
  if (lmin >= -1e-14) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

struct IpmState {
  Eigen::VectorXd y;
  std::vector<Eigen::MatrixXd> X, Z;
};

Solution run_ipm(const StdForm& p, const SolveOptions& opts,
                 const std::function<void(const Eigen::VectorXd&)>& observer) {
  const int m = p.m;
  const int nblocks = static_cast<int>(p.blocks.size());
  int n_tot = 0;
  for (const auto& b : p.blocks) n_tot += b.n;

  IpmState s;
  s.y = Eigen::VectorXd::Zero(m);
  s.X.resize(nblocks);
  s.Z.resize(nblocks);
  for (int k = 0; k < nblocks; ++k) {
    const double scale = 1.0 + p.blocks[k].C.norm();
    s.X[k] = scale * Eigen::MatrixXd::Identity(p.blocks[k].n, p.blocks[k].n);
    s.Z[k] = scale * Eigen::MatrixXd::Identity(p.blocks[k].n, p.blocks[k].n);
  }

  Solution sol;
  const double bnorm = 1.0 + p.b.norm();
  int stall_count = 0;
  double prev_mu = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    sol.iterations = iter;

    // Residuals.
    Eigen::VectorXd rp = p.b;
    std::vector<Eigen::MatrixXd> Rd(nblocks);
    double cnorm = 1.0;
    for (int k = 0; k < nblocks; ++k) {
      const auto& blk = p.blocks[k];
      Rd[k] = blk.C - s.Z[k];
      for (const auto& [i, a] : blk.A) {
        Rd[k] -= s.y[i] * a;
        rp[i] -= frob_dot(a, s.X[k]);
      }
      cnorm = std::max(cnorm, blk.C.norm());
    }
    double mu = 0.0;
    for (int k = 0; k < nblocks; ++k) mu += frob_dot(s.X[k], s.Z[k]);
    mu /= n_tot;

    double rd_norm = 0.0;
    for (int k = 0; k < nblocks; ++k) rd_norm = std::max(rd_norm, Rd[k].norm());
    const double rel_p = rp.norm() / bnorm;
    const double rel_d = rd_norm / cnorm;
    const double bty = p.b.dot(s.y);
    const double rel_mu = mu / (1.0 + std::abs(bty));

    sol.primal_residual = rel_p;
    sol.dual_residual = rel_d;
    sol.mu = mu;
    double cx = 0.0;
    for (int k = 0; k < nblocks; ++k) cx += frob_dot(p.blocks[k].C, s.X[k]);
    sol.objective_upper_bound = cx;
    if (observer) observer(s.y);

    if (opts.verbose) {
      std::fprintf(stderr, "ipm %3d  mu=%9.2e  rp=%9.2e  rd=%9.2e  b'y=%+.6e\n", iter, mu,
                   rel_p, rel_d, bty);
    }
    if (rel_p < opts.tolerance && rel_d < opts.tolerance && rel_mu < opts.tolerance) {
      sol.status = SolveStatus::Optimal;
      sol.y = s.y;
      sol.objective = bty;
      return sol;
    }
    if (!std::isfinite(mu) || mu > 1e60) break;

    // Factorizations and NT scaling per block.
    std::vector<Eigen::LLT<Eigen::MatrixXd>> lltX(nblocks), lltZ(nblocks);
    std::vector<Eigen::MatrixXd> W(nblocks), Zinv(nblocks);
    bool fact_ok = true;
    for (int k = 0; k < nblocks; ++k) {
      lltX[k].compute(s.X[k]);
      lltZ[k].compute(s.Z[k]);
      if (lltX[k].info() != Eigen::Success || lltZ[k].info() != Eigen::Success) {
        fact_ok = false;
        break;
      }
      const int n = p.blocks[k].n;
      Zinv[k] = lltZ[k].solve(Eigen::MatrixXd::Identity(n, n));
      // W = Lz^-T (Lz^T X Lz)^{1/2} Lz^-1
      Eigen::MatrixXd lz = lltZ[k].matrixL();
      Eigen::MatrixXd mid = lz.transpose() * s.X[k] * lz;
      mid = 0.5 * (mid + mid.transpose()).eval();
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(mid);
      Eigen::VectorXd sq = eig.eigenvalues().cwiseMax(1e-300).cwiseSqrt();
      Eigen::MatrixXd sqrt_mid =
          eig.eigenvectors() * sq.asDiagonal() * eig.eigenvectors().transpose();
      Eigen::MatrixXd t1 =
          lz.transpose().triangularView<Eigen::Upper>().solve(sqrt_mid);
      W[k] = lz.transpose()
                 .triangularView<Eigen::Upper>()
                 .solve(t1.transpose())
                 .transpose();
      W[k] = 0.5 * (W[k] + W[k].transpose()).eval();
    }
    if (!fact_ok) break;

    // Schur complement M and the mu-affine rhs pieces.
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd h_const = rp;  // h(mu_t) = h_const - mu_t * h_mu
    Eigen::VectorXd h_mu = Eigen::VectorXd::Zero(m);
    std::vector<std::vector<Eigen::MatrixXd>> WAW(nblocks);
    for (int k = 0; k < nblocks; ++k) {
      const auto& blk = p.blocks[k];
      const int nv = static_cast<int>(blk.A.size());
      WAW[k].resize(nv);
      Eigen::MatrixXd q = s.X[k] + W[k] * Rd[k] * W[k];
      for (int a = 0; a < nv; ++a) {
        WAW[k][a] = W[k] * blk.A[a].second * W[k];
        const int i = blk.A[a].first;
        h_const[i] += frob_dot(blk.A[a].second, q);
        h_mu[i] += frob_dot(blk.A[a].second, Zinv[k]);
      }
      for (int a = 0; a < nv; ++a)
        for (int c = 0; c <= a; ++c) {
          const double v = frob_dot(blk.A[a].second, WAW[k][c]);
          M(blk.A[a].first, blk.A[c].first) += v;
          if (a != c) M(blk.A[c].first, blk.A[a].first) += v;
        }
    }

    Eigen::LDLT<Eigen::MatrixXd> ldlt;
    double ridge = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      Eigen::MatrixXd mreg = M;
      if (ridge > 0.0) mreg += ridge * Eigen::MatrixXd::Identity(m, m);
      ldlt.compute(mreg);
      if (ldlt.info() == Eigen::Success && ldlt.isPositive()) break;
      ridge = (ridge == 0.0) ? 1e-14 * (1.0 + M.trace() / m) : ridge * 100.0;
    }

    auto solve_direction = [&](double mu_t, IpmState& d) {
      Eigen::VectorXd h = h_const - mu_t * h_mu;
      d.y = ldlt.solve(h);
      d.X.resize(nblocks);
      d.Z.resize(nblocks);
      for (int k = 0; k < nblocks; ++k) {
        const auto& blk = p.blocks[k];
        d.Z[k] = Rd[k];
        for (const auto& [i, a] : blk.A) d.Z[k] -= d.y[i] * a;
        d.Z[k] = 0.5 * (d.Z[k] + d.Z[k].transpose()).eval();
        d.X[k] = mu_t * Zinv[k] - s.X[k] - W[k] * d.Z[k] * W[k];
        d.X[k] = 0.5 * (d.X[k] + d.X[k].transpose()).eval();
      }
    };

    auto step_lengths = [&](const IpmState& d) {
      double ap = std::numeric_limits<double>::infinity();
      double ad = std::numeric_limits<double>::infinity();
      for (int k = 0; k < nblocks; ++k) {
        ap = std::min(ap, max_step(lltX[k], d.X[k]));
        ad = std::min(ad, max_step(lltZ[k], d.Z[k]));
      }
      return std::make_pair(ap, ad);
    };

    // Predictor to pick the centering weight.
    IpmState aff;
    solve_direction(0.0, aff);
    auto [apa, ada] = step_lengths(aff);
    const double ap_aff = std::min(1.0, apa);
    const double ad_aff = std::min(1.0, ada);
    double mu_aff = 0.0;
    for (int k = 0; k < nblocks; ++k)
      mu_aff += frob_dot(s.X[k] + ap_aff * aff.X[k], s.Z[k] + ad_aff * aff.Z[k]);
    mu_aff = std::max(mu_aff / n_tot, 0.0);
    double sigma = std::clamp(std::pow(mu_aff / mu, 3.0), 1e-4, 0.9);
    if (rel_p > 1e-7 || rel_d > 1e-7) sigma = std::max(sigma, 0.2);

    IpmState dir;
    solve_direction(sigma * mu, dir);
    auto [apm, adm] = step_lengths(dir);
    const double ap = std::min(1.0, opts.step_fraction * apm);
    const double ad = std::min(1.0, opts.step_fraction * adm);

    for (int k = 0; k < nblocks; ++k) {
      s.X[k] += ap * dir.X[k];
      s.Z[k] += ad * dir.Z[k];
      s.X[k] = 0.5 * (s.X[k] + s.X[k].transpose()).eval();
      s.Z[k] = 0.5 * (s.Z[k] + s.Z[k].transpose()).eval();
    }
    s.y += ad * dir.y;

    if (ap < 1e-10 && ad < 1e-10) {
      if (++stall_count >= 8) {
        sol.status = SolveStatus::Stalled;
        sol.detail = "step lengths collapsed";
        sol.y = s.y;
        sol.objective = p.b.dot(s.y);
        return sol;
      }
    } else {
      stall_count = 0;
    }
    if (mu > 0.9999 * prev_mu && rel_p < 1e-12 && rel_d < 1e-12 && rel_mu < 1e-11) {
      // Good enough; mu no longer shrinking.
      sol.status = SolveStatus::Optimal;
      sol.y = s.y;
      sol.objective = p.b.dot(s.y);
      return sol;
    }
    prev_mu = mu;
  }

  sol.status = SolveStatus::IterationLimit;
  sol.y = s.y;
  sol.objective = p.b.dot(s.y);
  return sol;
}

StdForm build_std_form(const Model& model, const Eigen::VectorXd& b, bool add_margin_var,
                       double tau_cap) {
  StdForm p;
  p.m = model.variable_count() + (add_margin_var ? 1 : 0);
  const int tau = add_margin_var ? model.variable_count() : -1;
  p.b = Eigen::VectorXd::Zero(p.m);
  p.b.head(b.size()) = b;
  if (add_margin_var) p.b[tau] = 1.0;
  for (const auto& blk : model.psd_blocks()) p.blocks.push_back(to_std_block(blk, tau));
  if (add_margin_var) {
    StdBlock cap;
    cap.n = 1;
    cap.C = Eigen::MatrixXd::Constant(1, 1, tau_cap);
    cap.A.emplace_back(tau, Eigen::MatrixXd::Constant(1, 1, 1.0));
    p.blocks.push_back(cap);
  }
  return p;
}

}  // namespace

Solution InteriorPointBackend::solve_feasibility(const Model& model,
                                                 const SolveOptions& opts) {
  if (model.psd_blocks().empty()) throw BackendFailure("no PSD blocks declared");
  StdForm p = build_std_form(model, Eigen::VectorXd::Zero(model.variable_count()), true,
                             opts.tau_cap);

  // Track the best interior point seen, judged by the true eigenvalue margin.
  Eigen::VectorXd best_y;
  double best_margin = -std::numeric_limits<double>::infinity();
  int since_eval = 0;
  auto observer = [&](const Eigen::VectorXd& y_full) {
    if (++since_eval < 5) return;  // margin evals are cheap but not free
    since_eval = 0;
    Eigen::VectorXd ym = y_full.head(model.variable_count());
    const double margin = evaluate_margin(model, ym);
    if (margin > best_margin) {
      best_margin = margin;
      best_y = ym;
    }
  };

  Solution sol = run_ipm(p, opts, observer);
  Eigen::VectorXd y_final = sol.y.head(model.variable_count());
  const double final_margin = evaluate_margin(model, y_final);
  if (final_margin >= best_margin) {
    best_margin = final_margin;
    best_y = y_final;
  }
  sol.y = best_y;
  sol.margin = best_margin;
  return sol;
}

Solution InteriorPointBackend::solve_minimize(const Model& model, const LinExpr& objective,
                                              const SolveOptions& opts) {
  if (model.psd_blocks().empty()) throw BackendFailure("no PSD blocks declared");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(model.variable_count());
  for (const auto& [i, v] : objective.terms()) b[i] -= v;  // maximize -cost
  StdForm p = build_std_form(model, b, false, opts.tau_cap);
  Solution sol = run_ipm(p, opts, nullptr);
  sol.margin = evaluate_margin(model, sol.y);
  sol.objective = objective.eval(sol.y);
  return sol;
}

}  // namespace etfc::sdp
