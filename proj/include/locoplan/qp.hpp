#pragma once

#include <Eigen/Core>

namespace locoplan {
namespace qp {

/// Dense convex QP:  min 1/2 x'Hx + g'x  s.t.  Ax = b,  Cx >= d.
struct QpProblem {
  Eigen::MatrixXd hessian;      // H, symmetric PSD
  Eigen::VectorXd linear;       // g
  Eigen::MatrixXd eq_matrix;    // A (0 rows allowed)
  Eigen::VectorXd eq_rhs;       // b
  Eigen::MatrixXd ineq_matrix;  // C (0 rows allowed)
  Eigen::VectorXd ineq_rhs;     // d

  int variables() const { return static_cast<int>(hessian.rows()); }
  void validate() const;
};

enum class QpStatus { Optimal, Infeasible, MaxIterations };

struct QpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd eq_duals;    // lambda
  Eigen::VectorXd ineq_duals;  // mu >= 0
  QpStatus status = QpStatus::MaxIterations;
  double stationarity_residual = 0.0;    // ||Hx+g-A'lambda-C'mu||_inf
  double primal_residual = 0.0;          // max equality/inequality violation
  double complementarity_residual = 0.0; // max |mu_i * slack_i|
  bool regularized = false;              // Hessian needed a ridge to factor
  int iterations = 0;

  double objective(const QpProblem& p) const;
};

/// Primal active-set solve. A feasible start is found by a least-squares
/// equality solve plus a single-slack phase-1 subproblem; infeasibility is
/// certified when that subproblem's optimal violation stays positive.
/// Deterministic: ties in the drop/block choices resolve by lowest index.
QpSolution solve(const QpProblem& problem, double tol = 1e-9, int max_iterations = 0);

}  // namespace qp
}  // namespace locoplan
