#pragma once

#include <Eigen/Dense>
#include <vector>

#include "lbsc/constraints.hpp"

namespace lbsc {

// min_u,eps,eta  1/2 u^T H u + k_eps*eps^2 + k_eta*eta^2
// s.t.           coeff_u . u + rhs_const <= eps    (safety rows)
//                coeff_u . u + rhs_const <= eta    (stability row)
//                coeff_u . u + rhs_const <= 0      (hard rows)
//                u_min <= u <= u_max
//
// The slack weights encode the priority ordering, so k_eps >= k_eta > 0 is
// required. Hard rows must be consistent with the box; slack rows never make
// the problem infeasible.
struct QProblem {
  Eigen::MatrixXd H;
  double k_eps = 1e30;
  double k_eta = 1e20;
  std::vector<ConstraintRow> rows;
  Eigen::VectorXd u_min;
  Eigen::VectorXd u_max;
};

enum class SolveStatus { optimal, max_iter };

struct QPSolution {
  Eigen::VectorXd u_star;
  double eps = 0.0;
  double eta = 0.0;
  SolveStatus status = SolveStatus::optimal;
  int iterations = 0;
  double kkt_residual = 0.0;
};

struct SolveOptions {
  int max_iterations = 100;
};

// Primal active-set iteration over (u, eps, eta). Equality subproblems are
// solved as least squares with rows presorted by magnitude, which keeps the
// extreme slack weights from contaminating the control block. Feasible
// iterates throughout; on hitting the iteration cap the best (last feasible)
// iterate is returned with status max_iter.
QPSolution solve(const QProblem& problem, const SolveOptions& options = {});

// Objective value at a candidate point (slack variables given explicitly).
double objective(const QProblem& problem, const Eigen::VectorXd& u, double eps, double eta);

// First-order optimality report for a candidate point (u, eps, eta).
// Primal is the worst relative constraint violation. The slack variables are
// separable, so the other two conditions are checked on the reduced problem
// in u alone: complementarity measures how far each slack sits from its
// channel's worst violation, and stationarity is the relative displacement
// of a curvature-scaled projected-gradient probe of the reduced objective.
// All three are scale-normalized; max_residual() is the solver's
// post-condition metric.
struct KktReport {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;

  double max_residual() const;
};

KktReport kkt_verify(const QProblem& problem, const QPSolution& solution);

}  // namespace lbsc
