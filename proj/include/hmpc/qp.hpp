#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace hmpc {

/// Convex QP:  min 0.5 p'Hp + g'p  s.t.  A p = b,  C p <= d,  lb <= p <= ub.
/// Bound entries at +-1e20 are treated as absent.
struct QPProblem {
  Eigen::SparseMatrix<double> H;  // symmetric positive definite
  Eigen::VectorXd g;
  Eigen::SparseMatrix<double, Eigen::RowMajor> A;
  Eigen::VectorXd b;
  Eigen::SparseMatrix<double, Eigen::RowMajor> C;
  Eigen::VectorXd d;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;
};

struct QPSettings {
  int max_iter = 60;
  double tolerance = 1e-9;
  double fraction_to_boundary = 0.995;
};

struct QPSolution {
  bool ok = false;
  Eigen::VectorXd p;
  Eigen::VectorXd y;        // equality multipliers
  Eigen::VectorXd z;        // inequality multipliers, >= 0
  Eigen::VectorXd z_lower;  // bound multipliers (full length, 0 if unbounded)
  Eigen::VectorXd z_upper;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
};

/// Primal-dual interior-point method (Mehrotra predictor-corrector) with a
/// sparse LU factorization of the reduced KKT system.
QPSolution solve_qp(const QPProblem& qp, const QPSettings& settings = {});

}  // namespace hmpc
