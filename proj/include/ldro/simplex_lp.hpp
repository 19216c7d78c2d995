#pragma once

#include <Eigen/Dense>

#include "ldro/errors.hpp"

namespace ldro {

// maximize c'x  subject to  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0.
struct LpProblem {
  Eigen::VectorXd c;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd a_ub;
  Eigen::VectorXd b_ub;
};

struct LpSolution {
  enum class Status { Optimal, Infeasible, Unbounded };
  Status status = Status::Optimal;
  double value = 0.0;
  Eigen::VectorXd x;

  bool optimal() const { return status == Status::Optimal; }
};

// Two-phase dense simplex. Dantzig pricing with a permanent switch to
// Bland's rule once the objective stalls, which rules out cycling. Intended
// for the desk-scale instances here (tens of rows, ~a hundred columns).
LpSolution solve_lp(const LpProblem& problem);

}  // namespace ldro
