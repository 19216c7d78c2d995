#include "ldro/simplex_lp.hpp"

#include <cmath>
#include <vector>

namespace ldro {

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-10;
constexpr double kFeasTol = 1e-7;

// Tableau with rows 0..m-1 for constraints and row m for reduced costs;
// column n_total holds the right-hand side.
struct Tableau {
  Eigen::MatrixXd t;
  std::vector<int> basis;
  int rows;
  int cols;  // structural + slack + artificial
  bool bland = false;
  double last_objective = -std::numeric_limits<double>::infinity();
  int stall_count = 0;

  void pivot(int r, int j) {
    t.row(r) /= t(r, j);
    for (int i = 0; i <= rows; ++i) {
      if (i == r) continue;
      const double factor = t(i, j);
      if (factor != 0.0) t.row(i) -= factor * t.row(r);
    }
    basis[r] = j;
  }

  int choose_entering(int limit_cols) {
    if (bland) {
      for (int j = 0; j < limit_cols; ++j)
        if (t(rows, j) > kCostTol) return j;
      return -1;
    }
    int best = -1;
    double best_cost = kCostTol;
    for (int j = 0; j < limit_cols; ++j) {
      if (t(rows, j) > best_cost) {
        best_cost = t(rows, j);
        best = j;
      }
    }
    return best;
  }

  int choose_leaving(int j) {
    int row = -1;
    double best_ratio = 0.0;
    for (int i = 0; i < rows; ++i) {
      if (t(i, j) <= kPivotTol) continue;
      const double ratio = t(i, cols) / t(i, j);
      if (row < 0 || ratio < best_ratio - 1e-12 ||
          (std::abs(ratio - best_ratio) <= 1e-12 && basis[i] < basis[row])) {
        row = i;
        best_ratio = ratio;
      }
    }
    return row;
  }

  // Returns false on unboundedness.
  bool run(int limit_cols, long max_iters) {
    for (long it = 0; it < max_iters; ++it) {
      const int j = choose_entering(limit_cols);
      if (j < 0) return true;
      const int r = choose_leaving(j);
      if (r < 0) return false;
      pivot(r, j);
      // Degenerate pivots leave the objective unchanged; switch to Bland
      // permanently once progress stalls so cycling cannot occur.
      const double obj = -t(rows, cols);
      if (!bland) {
        if (obj <= last_objective + 1e-13) {
          if (++stall_count > 16) bland = true;
        } else {
          stall_count = 0;
        }
        last_objective = obj;
      }
    }
    throw StabilityError("simplex: iteration limit exceeded");
  }
};

}  // namespace

LpSolution solve_lp(const LpProblem& problem) {
  const int n = static_cast<int>(problem.c.size());
  const int me = static_cast<int>(problem.b_eq.size());
  const int mu = static_cast<int>(problem.b_ub.size());
  const int m = me + mu;
  if ((me > 0 && problem.a_eq.cols() != n) ||
      (mu > 0 && problem.a_ub.cols() != n))
    throw UsageError("lp: constraint matrix width mismatch");

  // Columns: n structural, mu slacks, m artificials, then RHS.
  const int n_slack = n + mu;
  const int n_total = n_slack + m;
  Tableau tab;
  tab.rows = m;
  tab.cols = n_total;
  tab.t = Eigen::MatrixXd::Zero(m + 1, n_total + 1);
  tab.basis.resize(m);

  for (int i = 0; i < me; ++i) {
    tab.t.block(i, 0, 1, n) = problem.a_eq.row(i);
    tab.t(i, n_total) = problem.b_eq[i];
  }
  for (int i = 0; i < mu; ++i) {
    tab.t.block(me + i, 0, 1, n) = problem.a_ub.row(i);
    tab.t(me + i, n + i) = 1.0;
    tab.t(me + i, n_total) = problem.b_ub[i];
  }
  for (int i = 0; i < m; ++i) {
    // Equilibrate: the absolute pivot tolerances assume O(1) rows.
    const double scale = tab.t.row(i).head(n).cwiseAbs().maxCoeff();
    if (scale > 0.0) tab.t.row(i) /= scale;
    if (tab.t(i, n_total) < 0.0) tab.t.row(i) = -tab.t.row(i);
    tab.t(i, n_slack + i) = 1.0;
    tab.basis[i] = n_slack + i;
  }

  // Phase 1: maximize minus the sum of artificials. With the artificial
  // basis, the reduced cost of column j is its column sum over constraint
  // rows, and the stored right-hand side is -z = sum(b).
  for (int j = 0; j <= n_total; ++j)
    tab.t(m, j) = tab.t.block(0, j, m, 1).sum();
  for (int i = 0; i < m; ++i) tab.t(m, n_slack + i) = 0.0;

  if (!tab.run(n_slack, 200000))
    throw StabilityError("simplex: phase 1 unbounded");
  LpSolution out;
  if (-tab.t(m, n_total) < -kFeasTol) {
    out.status = LpSolution::Status::Infeasible;
    return out;
  }
  // Drive surviving artificials out of the basis; rows with no eligible
  // pivot are redundant and harmless to keep.
  for (int i = 0; i < m; ++i) {
    if (tab.basis[i] < n_slack) continue;
    for (int j = 0; j < n_slack; ++j) {
      if (std::abs(tab.t(i, j)) > kPivotTol) {
        tab.pivot(i, j);
        break;
      }
    }
  }

  // Phase 2 objective row: reduced costs of the true objective.
  tab.t.row(m).setZero();
  tab.t.row(m).head(n) = problem.c.transpose();
  for (int i = 0; i < m; ++i) {
    const int b = tab.basis[i];
    if (b < n && problem.c[b] != 0.0)
      tab.t.row(m) -= problem.c[b] * tab.t.row(i);
  }
  tab.bland = false;
  tab.stall_count = 0;
  tab.last_objective = -std::numeric_limits<double>::infinity();
  if (!tab.run(n_slack, 200000)) {
    out.status = LpSolution::Status::Unbounded;
    return out;
  }

  out.status = LpSolution::Status::Optimal;
  out.x = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < m; ++i)
    if (tab.basis[i] < n) out.x[tab.basis[i]] = tab.t(i, n_total);
  out.value = problem.c.dot(out.x);
  return out;
}

}  // namespace ldro
