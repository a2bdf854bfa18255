#include "locoplan/qp.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace locoplan {
namespace qp {

void QpProblem::validate() const {
  const int n = variables();
  if (n < 1 || hessian.cols() != n) throw std::invalid_argument("QpProblem: bad Hessian shape");
  if (linear.size() != n) throw std::invalid_argument("QpProblem: bad linear term size");
  if ((hessian - hessian.transpose()).cwiseAbs().maxCoeff() >
      1e-12 * std::max(1.0, hessian.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("QpProblem: Hessian not symmetric");
  if (eq_matrix.rows() != eq_rhs.size())
    throw std::invalid_argument("QpProblem: equality rows/rhs mismatch");
  if (eq_matrix.rows() > 0 && eq_matrix.cols() != n)
    throw std::invalid_argument("QpProblem: equality column mismatch");
  if (ineq_matrix.rows() != ineq_rhs.size())
    throw std::invalid_argument("QpProblem: inequality rows/rhs mismatch");
  if (ineq_matrix.rows() > 0 && ineq_matrix.cols() != n)
    throw std::invalid_argument("QpProblem: inequality column mismatch");
}

double QpSolution::objective(const QpProblem& p) const {
  return 0.5 * x.dot(p.hessian * x) + p.linear.dot(x);
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct CoreResult {
  VectorXd x;
  VectorXd eq_duals;
  VectorXd ineq_duals;
  bool converged = false;
  int iterations = 0;
};

// Primal active-set iteration for PD Hessians from a (near-)feasible start.
// Subproblem directions come from the Schur complement of the factored
// Hessian over the working-set rows; working-set residuals are corrected in
// the same solve, which polishes slightly infeasible iterates onto their
// constraints.
CoreResult active_set_core(const Eigen::LLT<MatrixXd>& hessian_factor, const MatrixXd& hessian,
                           const VectorXd& linear, const MatrixXd& eq, const VectorXd& eq_rhs,
                           const MatrixXd& ineq, const VectorXd& ineq_rhs, VectorXd x, double tol,
                           int max_iter) {
  const int n = static_cast<int>(x.size());
  const int n_eq = static_cast<int>(eq.rows());
  const int n_ineq = static_cast<int>(ineq.rows());

  std::vector<int> working;  // sorted inequality indices
  std::vector<char> in_working(n_ineq, 0);

  // Start with the active, linearly independent inequalities.
  {
    MatrixXd basis(n, 0);
    if (n_eq > 0) {
      basis.resize(n, n_eq);
      basis = eq.transpose();
    }
    for (int i = 0; i < n_ineq; ++i) {
      const double slack = ineq.row(i).dot(x) - ineq_rhs(i);
      if (slack > tol * 1e3) continue;
      MatrixXd trial(n, basis.cols() + 1);
      if (basis.cols() > 0) trial.leftCols(basis.cols()) = basis;
      trial.col(basis.cols()) = ineq.row(i).transpose();
      if (trial.cols() > n) break;
      Eigen::ColPivHouseholderQR<MatrixXd> qr(trial);
      qr.setThreshold(1e-10);
      if (qr.rank() == trial.cols()) {
        basis = trial;
        working.push_back(i);
        in_working[i] = 1;
      }
    }
  }

  CoreResult res;
  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    const int nw = static_cast<int>(working.size());
    const int rows = n_eq + nw;

    MatrixXd active(rows, n);
    VectorXd residual(rows);
    active.topRows(n_eq) = eq;
    if (n_eq > 0) residual.head(n_eq) = eq_rhs - eq * x;
    for (int k = 0; k < nw; ++k) {
      active.row(n_eq + k) = ineq.row(working[k]);
      residual(n_eq + k) = ineq_rhs(working[k]) - ineq.row(working[k]).dot(x);
    }

    const VectorXd grad = hessian * x + linear;
    const VectorXd h_inv_grad = hessian_factor.solve(grad);
    VectorXd p;
    VectorXd duals = VectorXd::Zero(rows);
    // Numerical noise floor of the direction solve; directions below it are
    // cancellation residue, not progress.
    double solve_scale = 1.0 + x.cwiseAbs().maxCoeff() + h_inv_grad.cwiseAbs().maxCoeff();
    if (rows == 0) {
      p = -h_inv_grad;
    } else {
      const MatrixXd h_inv_at = hessian_factor.solve(active.transpose());
      const MatrixXd schur = active * h_inv_at;
      duals = schur.ldlt().solve(active * h_inv_grad + residual);
      p = h_inv_at * duals - h_inv_grad;
      solve_scale += (h_inv_at * duals).cwiseAbs().maxCoeff();
    }

    if (p.cwiseAbs().maxCoeff() <= 1e-11 * solve_scale) {
      // Stationary on the working set; check the inequality multipliers.
      int drop = -1;
      double most_negative = -tol;
      for (int k = 0; k < nw; ++k) {
        const double mu = duals(n_eq + k);
        if (mu < most_negative) {
          most_negative = mu;
          drop = k;
        }
      }
      if (drop < 0) {
        res.x = x;
        res.eq_duals = duals.head(n_eq);
        res.ineq_duals = VectorXd::Zero(n_ineq);
        for (int k = 0; k < nw; ++k)
          res.ineq_duals(working[k]) = std::max(0.0, duals(n_eq + k));
        res.converged = true;
        return res;
      }
      in_working[working[drop]] = 0;
      working.erase(working.begin() + drop);
      continue;
    }

    // Ratio test against the inactive constraints.
    double alpha = 1.0;
    int blocking = -1;
    for (int i = 0; i < n_ineq; ++i) {
      if (in_working[i]) continue;
      const double descent = ineq.row(i).dot(p);
      if (descent >= -1e-14) continue;
      const double slack = std::max(0.0, ineq.row(i).dot(x) - ineq_rhs(i));
      const double limit = slack / (-descent);
      if (limit < alpha - 1e-15) {
        alpha = limit;
        blocking = i;
      }
    }
    x += alpha * p;
    if (blocking >= 0) {
      working.insert(std::lower_bound(working.begin(), working.end(), blocking), blocking);
      in_working[blocking] = 1;
    }
  }

  res.x = x;
  res.eq_duals = VectorXd::Zero(n_eq);
  res.ineq_duals = VectorXd::Zero(n_ineq);
  return res;
}

// Rank-revealing reduction to an independent equality subset; dependent but
// consistent rows are dropped (their duals stay zero).
struct EqualityBasis {
  MatrixXd matrix;
  VectorXd rhs;
  std::vector<int> kept;
};

EqualityBasis reduce_equalities(const MatrixXd& eq, const VectorXd& rhs) {
  EqualityBasis out;
  if (eq.rows() == 0) {
    out.matrix = eq;
    out.rhs = rhs;
    return out;
  }
  Eigen::ColPivHouseholderQR<MatrixXd> qr(eq.transpose());
  qr.setThreshold(1e-12);
  const int rank = static_cast<int>(qr.rank());
  // Greedy re-scan keeps the original ordering deterministic.
  MatrixXd basis(eq.cols(), 0);
  for (int i = 0; i < eq.rows() && static_cast<int>(out.kept.size()) < rank; ++i) {
    MatrixXd trial(eq.cols(), basis.cols() + 1);
    if (basis.cols() > 0) trial.leftCols(basis.cols()) = basis;
    trial.col(basis.cols()) = eq.row(i).transpose();
    Eigen::ColPivHouseholderQR<MatrixXd> check(trial);
    check.setThreshold(1e-12);
    if (check.rank() == trial.cols()) {
      basis = trial;
      out.kept.push_back(i);
    }
  }
  out.matrix.resize(out.kept.size(), eq.cols());
  out.rhs.resize(out.kept.size());
  for (std::size_t k = 0; k < out.kept.size(); ++k) {
    out.matrix.row(k) = eq.row(out.kept[k]);
    out.rhs(k) = rhs(out.kept[k]);
  }
  return out;
}

}  // namespace

QpSolution solve(const QpProblem& problem, double tol, int max_iterations) {
  problem.validate();
  if (tol <= 0.0) throw std::invalid_argument("qp::solve: tol must be > 0");

  const int n = problem.variables();
  const int n_eq = static_cast<int>(problem.eq_matrix.rows());
  const int n_ineq = static_cast<int>(problem.ineq_matrix.rows());
  if (max_iterations <= 0) max_iterations = 50 * (n + n_ineq + 5);

  QpSolution sol;
  sol.x = VectorXd::Zero(n);
  sol.eq_duals = VectorXd::Zero(n_eq);
  sol.ineq_duals = VectorXd::Zero(n_ineq);

  // Factor the Hessian, escalating the ridge until it is PD.
  MatrixXd hessian = 0.5 * (problem.hessian + problem.hessian.transpose());
  Eigen::LLT<MatrixXd> factor(hessian);
  double ridge = 0.0;
  if (factor.info() != Eigen::Success) {
    for (ridge = 1e-10; ridge <= 1e-4; ridge *= 100.0) {
      factor.compute(hessian + ridge * MatrixXd::Identity(n, n));
      if (factor.info() == Eigen::Success) break;
    }
    if (factor.info() != Eigen::Success)
      throw std::invalid_argument("qp::solve: Hessian is not positive semidefinite");
    hessian += ridge * MatrixXd::Identity(n, n);
    sol.regularized = true;
  }

  const auto reduced = reduce_equalities(problem.eq_matrix, problem.eq_rhs);

  // Least-squares equality point; a residual certifies contradictory rows.
  VectorXd x0 = VectorXd::Zero(n);
  if (n_eq > 0) {
    x0 = problem.eq_matrix.colPivHouseholderQr().solve(problem.eq_rhs);
    const double residual = (problem.eq_matrix * x0 - problem.eq_rhs).cwiseAbs().maxCoeff();
    if (residual > 1e-8 * (1.0 + problem.eq_rhs.cwiseAbs().maxCoeff())) {
      sol.status = QpStatus::Infeasible;
      sol.primal_residual = residual;
      return sol;
    }
  }

  double violation = 0.0;
  if (n_ineq > 0)
    violation = std::max(0.0, (problem.ineq_rhs - problem.ineq_matrix * x0).maxCoeff());

  CoreResult core;
  if (violation <= tol) {
    core = active_set_core(factor, hessian, problem.linear, reduced.matrix, reduced.rhs,
                           problem.ineq_matrix, problem.ineq_rhs, x0, tol, max_iterations);
    sol.iterations = core.iterations;
  } else {
    // Exact-penalty solve with one violation slack:
    //   min 1/2 x'Hx + g'x + 1/2 h_t t^2 + M t   s.t.  Ax = b, Cx + t 1 >= d, t >= 0.
    // For M above the dual scale the optimum has t = 0 and the x-part carries
    // the original KKT conditions; M escalates until t vanishes.
    const int na = n + 1;
    const double h_scale = std::max(1.0, hessian.diagonal().maxCoeff());
    MatrixXd h_aux = MatrixXd::Zero(na, na);
    h_aux.topLeftCorner(n, n) = hessian;
    h_aux(n, n) = h_scale;

    MatrixXd eq_aux(reduced.matrix.rows(), na);
    eq_aux.setZero();
    eq_aux.leftCols(n) = reduced.matrix;
    MatrixXd ineq_aux(n_ineq + 1, na);
    ineq_aux.setZero();
    ineq_aux.block(0, 0, n_ineq, n) = problem.ineq_matrix;
    ineq_aux.block(0, n, n_ineq, 1).setOnes();
    ineq_aux(n_ineq, n) = 1.0;  // t >= 0
    VectorXd d_aux(n_ineq + 1);
    d_aux.head(n_ineq) = problem.ineq_rhs;
    d_aux(n_ineq) = 0.0;

    VectorXd z0(na);
    z0.head(n) = x0;
    z0(n) = violation;
    const Eigen::LLT<MatrixXd> aux_factor(h_aux);
    const double feas_threshold =
        std::max(1e-8, 10.0 * tol) * (1.0 + problem.ineq_rhs.cwiseAbs().maxCoeff());

    double big_m = 1e4 * (1.0 + problem.linear.cwiseAbs().maxCoeff() + h_scale);
    bool feasible = false;
    CoreResult aux;
    for (int attempt = 0; attempt < 4; ++attempt, big_m *= 1e3) {
      VectorXd g_aux(na);
      g_aux.head(n) = problem.linear;
      g_aux(n) = big_m;
      aux = active_set_core(aux_factor, h_aux, g_aux, eq_aux, reduced.rhs, ineq_aux, d_aux, z0,
                            tol, max_iterations);
      sol.iterations += aux.iterations;
      if (aux.converged && aux.x(n) <= feas_threshold) {
        feasible = true;
        break;
      }
    }
    if (!feasible) {
      sol.status = QpStatus::Infeasible;
      sol.primal_residual = std::max(aux.x(n), 0.0);
      return sol;
    }
    core.converged = aux.converged;
    core.x = aux.x.head(n);
    core.eq_duals = aux.eq_duals;
    core.ineq_duals = aux.ineq_duals.head(n_ineq);
  }

  sol.x = core.x;
  sol.ineq_duals = core.converged ? core.ineq_duals : VectorXd::Zero(n_ineq);
  if (core.converged) {
    for (std::size_t k = 0; k < reduced.kept.size(); ++k)
      sol.eq_duals(reduced.kept[k]) = core.eq_duals(k);
  }
  sol.status = core.converged ? QpStatus::Optimal : QpStatus::MaxIterations;

  // KKT residuals against the original (unregularized) data.
  VectorXd stationarity = problem.hessian * sol.x + problem.linear;
  if (n_eq > 0) stationarity -= problem.eq_matrix.transpose() * sol.eq_duals;
  if (n_ineq > 0) stationarity -= problem.ineq_matrix.transpose() * sol.ineq_duals;
  sol.stationarity_residual = stationarity.cwiseAbs().maxCoeff();

  double primal = 0.0;
  if (n_eq > 0) primal = (problem.eq_matrix * sol.x - problem.eq_rhs).cwiseAbs().maxCoeff();
  double compl_res = 0.0;
  if (n_ineq > 0) {
    const VectorXd slack = problem.ineq_matrix * sol.x - problem.ineq_rhs;
    primal = std::max(primal, std::max(0.0, (-slack).maxCoeff()));
    compl_res = (sol.ineq_duals.array() * slack.array()).abs().maxCoeff();
  }
  sol.primal_residual = primal;
  sol.complementarity_residual = compl_res;
  return sol;
}

}  // namespace qp
}  // namespace locoplan
