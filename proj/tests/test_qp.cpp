#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "hmpc/problem.hpp"
#include "hmpc/qp.hpp"

using namespace hmpc;

namespace {

Eigen::SparseMatrix<double> sparse(const Eigen::MatrixXd& m) {
  return m.sparseView();
}
Eigen::SparseMatrix<double, Eigen::RowMajor> sparse_rm(const Eigen::MatrixXd& m) {
  return Eigen::SparseMatrix<double, Eigen::RowMajor>(m.sparseView());
}

QPProblem make_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                  const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                  const Eigen::MatrixXd& C, const Eigen::VectorXd& d) {
  QPProblem qp;
  qp.H = sparse(H);
  qp.g = g;
  qp.A = sparse_rm(A);
  qp.b = b;
  qp.C = sparse_rm(C);
  qp.d = d;
  qp.lb = Eigen::VectorXd::Constant(g.size(), -kInfinity);
  qp.ub = Eigen::VectorXd::Constant(g.size(), kInfinity);
  return qp;
}

// Brute-force oracle for small dense QPs: enumerate every active subset of
// inequality rows, solve the equality-constrained KKT system, and keep the
// best feasible candidate.
Eigen::VectorXd enumerate_qp(const Eigen::MatrixXd& H, const Eigen::VectorXd& g,
                             const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                             const Eigen::MatrixXd& C,
                             const Eigen::VectorXd& d) {
  const int n = static_cast<int>(g.size());
  const int me = static_cast<int>(b.size());
  const int mi = static_cast<int>(d.size());
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x = Eigen::VectorXd::Zero(n);
  for (int mask = 0; mask < (1 << mi); ++mask) {
    std::vector<int> active;
    for (int i = 0; i < mi; ++i) {
      if (mask & (1 << i)) active.push_back(i);
    }
    const int ma = static_cast<int>(active.size());
    Eigen::MatrixXd kkt(n + me + ma, n + me + ma);
    kkt.setZero();
    kkt.topLeftCorner(n, n) = H;
    Eigen::VectorXd rhs(n + me + ma);
    rhs.head(n) = -g;
    if (me > 0) {
      kkt.block(n, 0, me, n) = A;
      kkt.block(0, n, n, me) = A.transpose();
      rhs.segment(n, me) = b;
    }
    for (int k = 0; k < ma; ++k) {
      kkt.block(n + me + k, 0, 1, n) = C.row(active[k]);
      kkt.block(0, n + me + k, n, 1) = C.row(active[k]).transpose();
      rhs[n + me + k] = d[active[k]];
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd x = sol.head(n);
    bool ok = true;
    for (int i = 0; i < mi; ++i) {
      if (C.row(i).dot(x) > d[i] + 1e-8) ok = false;
    }
    for (int k = 0; k < ma; ++k) {
      if (sol[n + me + k] < -1e-8) ok = false;  // multiplier sign
    }
    if (!ok) continue;
    const double obj = 0.5 * x.dot(H * x) + g.dot(x);
    if (obj < best - 1e-12) {
      best = obj;
      best_x = x;
    }
  }
  return best_x;
}

}  // namespace

TEST_CASE("equality-constrained QP matches the closed-form KKT solution") {
  std::mt19937 rng(1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 6;
    const int me = 3;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) M(i, j) = gauss(rng);
    }
    const Eigen::MatrixXd H =
        M * M.transpose() + Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = gauss(rng);
    Eigen::MatrixXd A(me, n);
    for (int i = 0; i < me; ++i) {
      for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
    }
    Eigen::VectorXd b(me);
    for (int i = 0; i < me; ++i) b[i] = gauss(rng);

    Eigen::MatrixXd kkt(n + me, n + me);
    kkt.setZero();
    kkt.topLeftCorner(n, n) = H;
    kkt.block(n, 0, me, n) = A;
    kkt.block(0, n, n, me) = A.transpose();
    Eigen::VectorXd rhs(n + me);
    rhs << -g, b;
    const Eigen::VectorXd expect = kkt.fullPivLu().solve(rhs).head(n);

    const QPProblem qp = make_qp(H, g, A, b, Eigen::MatrixXd::Zero(0, n),
                                 Eigen::VectorXd::Zero(0));
    const QPSolution sol = solve_qp(qp);
    REQUIRE(sol.ok);
    CHECK((sol.p - expect).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("box-constrained projection QP") {
  const int n = 5;
  QPProblem qp;
  qp.H = sparse(Eigen::MatrixXd::Identity(n, n));
  Eigen::VectorXd q(n);
  q << 3.0, -2.5, 0.2, -0.1, 10.0;
  qp.g = -q;  // min 0.5||p - q||^2
  qp.A = sparse_rm(Eigen::MatrixXd::Zero(0, n));
  qp.b = Eigen::VectorXd::Zero(0);
  qp.C = sparse_rm(Eigen::MatrixXd::Zero(0, n));
  qp.d = Eigen::VectorXd::Zero(0);
  qp.lb = Eigen::VectorXd::Constant(n, -1.0);
  qp.ub = Eigen::VectorXd::Constant(n, 1.0);
  const QPSolution sol = solve_qp(qp);
  REQUIRE(sol.ok);
  for (int i = 0; i < n; ++i) {
    CHECK(sol.p[i] == doctest::Approx(std::clamp(q[i], -1.0, 1.0)).epsilon(1e-6));
  }
}

TEST_CASE("inequality QP agrees with the active-set enumeration oracle") {
  std::mt19937 rng(2);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4;
    const int mi = 5;
    Eigen::MatrixXd M(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) M(i, j) = gauss(rng);
    }
    const Eigen::MatrixXd H =
        M * M.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
    Eigen::VectorXd g(n);
    for (int i = 0; i < n; ++i) g[i] = gauss(rng);
    Eigen::MatrixXd C(mi, n);
    for (int i = 0; i < mi; ++i) {
      for (int j = 0; j < n; ++j) C(i, j) = gauss(rng);
    }
    // Keep the feasible set nonempty: origin strictly feasible.
    Eigen::VectorXd d(mi);
    for (int i = 0; i < mi; ++i) d[i] = 0.5 + std::abs(gauss(rng));

    const Eigen::VectorXd expect = enumerate_qp(
        H, g, Eigen::MatrixXd::Zero(0, n), Eigen::VectorXd::Zero(0), C, d);
    const QPProblem qp = make_qp(H, g, Eigen::MatrixXd::Zero(0, n),
                                 Eigen::VectorXd::Zero(0), C, d);
    const QPSolution sol = solve_qp(qp);
    REQUIRE(sol.ok);
    CHECK((sol.p - expect).lpNorm<Eigen::Infinity>() < 2e-4);
    // The objective comparison is robust to weakly-active degeneracy.
    const auto objective = [&](const Eigen::VectorXd& x) {
      return 0.5 * x.dot(H * x) + g.dot(x);
    };
    CHECK(objective(sol.p) <=
          objective(expect) + 1e-6 * (1.0 + std::abs(objective(expect))));
    for (int i = 0; i < mi; ++i) {
      CHECK(C.row(i).dot(sol.p) <= d[i] + 1e-7);
    }
  }
}

TEST_CASE("mixed QP satisfies its KKT conditions") {
  std::mt19937 rng(3);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int n = 30;
  const int me = 10;
  const int mi = 25;
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) H(i, i) = 0.1 + std::abs(gauss(rng));
  Eigen::VectorXd g(n);
  for (int i = 0; i < n; ++i) g[i] = gauss(rng);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(me, n);
  for (int i = 0; i < me; ++i) {
    A(i, i) = 1.0;
    A(i, me + i) = gauss(rng);
  }
  Eigen::VectorXd b(me);
  for (int i = 0; i < me; ++i) b[i] = 0.3 * gauss(rng);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(mi, n);
  Eigen::VectorXd d(mi);
  for (int i = 0; i < mi; ++i) {
    C(i, i % n) = gauss(rng);
    C(i, (i * 3 + 1) % n) = gauss(rng);
    d[i] = 0.4 + std::abs(gauss(rng));
  }
  QPProblem qp = make_qp(H, g, A, b, C, d);
  qp.lb = Eigen::VectorXd::Constant(n, -2.0);
  qp.ub = Eigen::VectorXd::Constant(n, 2.0);
  const QPSolution sol = solve_qp(qp);
  REQUIRE(sol.ok);

  // Stationarity.
  Eigen::VectorXd stat = H * sol.p + g + A.transpose() * sol.y +
                         C.transpose() * sol.z - sol.z_lower + sol.z_upper;
  CHECK(stat.lpNorm<Eigen::Infinity>() < 1e-6);
  // Primal feasibility.
  CHECK((A * sol.p - b).lpNorm<Eigen::Infinity>() < 1e-6);
  for (int i = 0; i < mi; ++i) {
    CHECK(C.row(i).dot(sol.p) <= d[i] + 1e-6);
    CHECK(sol.z[i] >= -1e-9);
    // Complementarity.
    CHECK(sol.z[i] * (d[i] - C.row(i).dot(sol.p)) < 1e-5);
  }
  for (int i = 0; i < n; ++i) {
    CHECK(sol.p[i] >= -2.0 - 1e-8);
    CHECK(sol.p[i] <= 2.0 + 1e-8);
  }
}

TEST_CASE("contradictory inequalities are reported as failure") {
  const int n = 2;
  Eigen::MatrixXd C(2, n);
  C << 1, 0, -1, 0;
  Eigen::VectorXd d(2);
  d << -1.0, -1.0;  // x <= -1 and -x <= -1: empty
  const QPProblem qp =
      make_qp(Eigen::MatrixXd::Identity(n, n), Eigen::VectorXd::Zero(n),
              Eigen::MatrixXd::Zero(0, n), Eigen::VectorXd::Zero(0), C, d);
  const QPSolution sol = solve_qp(qp);
  CHECK_FALSE(sol.ok);
}
