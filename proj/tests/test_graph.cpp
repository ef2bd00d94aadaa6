#include <doctest.h>

#include <Eigen/Dense>
#include <functional>

#include "etfc/errors.hpp"
#include "etfc/graph.hpp"
#include "etfc/rng.hpp"

using namespace etfc;

TEST_CASE("complete graph Laplacian: L = N I - 11'") {
  auto g = CommGraph::complete(3);
  auto s = build_laplacian(g);
  Eigen::MatrixXd expected =
      3.0 * Eigen::MatrixXd::Identity(3, 3) - Eigen::MatrixXd::Ones(3, 3);
  CHECK((s.laplacian - expected).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(s.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.eigenvalues[1] == doctest::Approx(3.0));
  CHECK(s.eigenvalues[2] == doctest::Approx(3.0));
}

TEST_CASE("path graph 1-2-3 spectrum") {
  // brute-force eigensolve of [[1,-1,0],[-1,2,-1],[0,-1,1]]
  auto s = build_laplacian(CommGraph::path(3));
  CHECK(s.eigenvalues[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s.eigenvalues[1] == doctest::Approx(1.0));
  CHECK(s.eigenvalues[2] == doctest::Approx(3.0));
}

TEST_CASE("disconnected graphs are rejected at construction") {
  CHECK_THROWS_AS(CommGraph(2, {}), DisconnectedGraph);
  CHECK_THROWS_AS(CommGraph(4, {{0, 1}, {2, 3}}), DisconnectedGraph);
}

TEST_CASE("basis: agreement vector first, orthonormal, diagonalizes L") {
  for (int n : {1, 2, 3, 5}) {
    auto s = build_laplacian(CommGraph::complete(n));
    Eigen::VectorXd ones = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(double(n)));
    CHECK((s.basis.col(0) - ones).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((s.basis.transpose() * s.basis - Eigen::MatrixXd::Identity(n, n))
              .lpNorm<Eigen::Infinity>() < 1e-10);
    Eigen::MatrixXd d = s.basis.transpose() * s.laplacian * s.basis;
    d.diagonal() -= s.eigenvalues;
    CHECK(d.lpNorm<Eigen::Infinity>() < 1e-10);
  }
}

namespace {

// All connected graphs up to N agents, enumerated over edge subsets.
void for_each_connected(int n, const std::function<void(const CommGraph&)>& fn) {
  std::vector<std::pair<int, int>> all;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) all.emplace_back(i, j);
  const int m = static_cast<int>(all.size());
  for (long mask = 0; mask < (1L << m); ++mask) {
    std::vector<std::pair<int, int>> edges;
    for (int b = 0; b < m; ++b)
      if (mask & (1L << b)) edges.push_back(all[b]);
    try {
      fn(CommGraph(n, edges));
    } catch (const DisconnectedGraph&) {
    }
  }
}

}  // namespace

TEST_CASE("enumerated connected graphs up to N=6: nullspace, lambda2, diagonalization") {
  for (int n = 2; n <= 6; ++n) {
    int count = 0;
    for_each_connected(n, [&](const CommGraph& g) {
      ++count;
      auto s = build_laplacian(g);
      CHECK((s.laplacian * Eigen::VectorXd::Ones(n)).lpNorm<Eigen::Infinity>() == 0.0);
      CHECK(s.lambda2() > 0.0);
      Eigen::MatrixXd d = s.basis.transpose() * s.laplacian * s.basis;
      d.diagonal() -= s.eigenvalues;
      CHECK(d.lpNorm<Eigen::Infinity>() < 1e-10);
    });
    CHECK(count > 0);
  }
}

TEST_CASE("is_fully_connected") {
  CHECK(is_fully_connected(CommGraph::complete(3)));
  CHECK_FALSE(is_fully_connected(CommGraph::path(3)));
  CHECK(is_fully_connected(CommGraph(1, {})));  // vacuous
}

TEST_CASE("kron_expand basics") {
  CHECK((kron_expand(Eigen::MatrixXd::Identity(2, 2), 3) -
         Eigen::MatrixXd::Identity(6, 6))
            .lpNorm<Eigen::Infinity>() == 0.0);

  Eigen::MatrixXd swap(2, 2);
  swap << 0, 1, 1, 0;
  Eigen::MatrixXd k = kron_expand(swap, 2);
  Eigen::MatrixXd expected(4, 4);
  expected << 0, 0, 1, 0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 1, 0, 0;
  CHECK((k - expected).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("kron_expand of the complete-graph Laplacian vs elementwise oracle") {
  auto s = build_laplacian(CommGraph::complete(3));
  Eigen::MatrixXd k = kron_expand(s.laplacian, 2);
  REQUIRE(k.rows() == 6);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
          CHECK(k(2 * i + a, 2 * j + b) == s.laplacian(i, j) * (a == b ? 1.0 : 0.0));
}

TEST_CASE("agreement-space annihilation: L_(n) (1 kron v) = 0") {
  Rng rng(7);
  auto s = build_laplacian(CommGraph::path(4));
  Eigen::VectorXd v = rng.uniform_vector(3, -2.0, 2.0);
  Eigen::VectorXd stacked(12);
  for (int i = 0; i < 4; ++i) stacked.segment(3 * i, 3) = v;
  CHECK((kron_expand(s.laplacian, 3) * stacked).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("mixed product property on random matrices") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    auto mat = [&](int r, int c) {
      Eigen::MatrixXd m(r, c);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
      return m;
    };
    Eigen::MatrixXd a = mat(2, 2), b = mat(3, 3), c = mat(2, 2), d = mat(3, 3);
    Eigen::MatrixXd lhs = kron(a, b) * kron(c, d);
    Eigen::MatrixXd rhs = kron((a * c).eval(), (b * d).eval());
    CHECK((lhs - rhs).lpNorm<Eigen::Infinity>() < 1e-12);
  }
}
