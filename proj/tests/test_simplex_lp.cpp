#include <doctest.h>

#include <Eigen/Dense>

#include "ldro/rng.hpp"
#include "ldro/simplex_lp.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using ldro::LpProblem;
using ldro::LpSolution;
using ldro::solve_lp;

TEST_CASE("lp: textbook two-variable instance") {
  // max 3x + 5y  s.t.  x <= 4, 2y <= 12, 3x + 2y <= 18.
  LpProblem p;
  p.c = VectorXd(2);
  p.c << 3, 5;
  p.a_ub = MatrixXd(3, 2);
  p.a_ub << 1, 0, 0, 2, 3, 2;
  p.b_ub = VectorXd(3);
  p.b_ub << 4, 12, 18;
  const LpSolution sol = solve_lp(p);
  REQUIRE(sol.optimal());
  CHECK(sol.value == doctest::Approx(36.0));
  CHECK(sol.x[0] == doctest::Approx(2.0));
  CHECK(sol.x[1] == doctest::Approx(6.0));
}

TEST_CASE("lp: equality constraints and a redundant row") {
  // max x1 + 2x2 + 3x3 on the simplex with x1 = x3, stated twice.
  LpProblem p;
  p.c = VectorXd(3);
  p.c << 1, 2, 3;
  p.a_eq = MatrixXd(3, 3);
  p.a_eq << 1, 1, 1, 1, 0, -1, 2, 0, -2;
  p.b_eq = VectorXd(3);
  p.b_eq << 1, 0, 0;
  const LpSolution sol = solve_lp(p);
  REQUIRE(sol.optimal());
  // Optimum splits between x1 = x3 = 1/2: value 1/2 + 3/2 = 2.
  CHECK(sol.value == doctest::Approx(2.0));
  CHECK(sol.x[0] == doctest::Approx(sol.x[2]));
}

TEST_CASE("lp: infeasible system detected") {
  LpProblem p;
  p.c = VectorXd::Ones(2);
  p.a_eq = MatrixXd(2, 2);
  p.a_eq << 1, 1, 1, 1;
  p.b_eq = VectorXd(2);
  p.b_eq << 1, 2;
  CHECK(solve_lp(p).status == LpSolution::Status::Infeasible);
}

TEST_CASE("lp: unbounded direction detected") {
  LpProblem p;
  p.c = VectorXd::Ones(2);
  p.a_ub = MatrixXd(1, 2);
  p.a_ub << 1, -1;
  p.b_ub = VectorXd(1);
  p.b_ub << 1;
  CHECK(solve_lp(p).status == LpSolution::Status::Unbounded);
}

namespace {

// Brute force over vertices: for every choice of n active constraints drawn
// from {rows of A, x_i = 0}, solve the square system and keep feasible
// points.
double brute_force_max(const LpProblem& p) {
  const int n = static_cast<int>(p.c.size());
  const int mu = static_cast<int>(p.b_ub.size());
  const int me = static_cast<int>(p.b_eq.size());
  MatrixXd rows(mu + me + n, n);
  VectorXd rhs(mu + me + n);
  for (int i = 0; i < me; ++i) {
    rows.row(i) = p.a_eq.row(i);
    rhs[i] = p.b_eq[i];
  }
  for (int i = 0; i < mu; ++i) {
    rows.row(me + i) = p.a_ub.row(i);
    rhs[me + i] = p.b_ub[i];
  }
  rows.bottomRows(n) = MatrixXd::Identity(n, n);
  rhs.tail(n).setZero();

  double best = -1e300;
  std::vector<int> pick(n);
  const int total = mu + me + n;
  // Enumerate n-subsets via a simple odometer.
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  for (;;) {
    MatrixXd a(n, n);
    VectorXd b(n);
    for (int i = 0; i < n; ++i) {
      a.row(i) = rows.row(idx[i]);
      b[i] = rhs[idx[i]];
    }
    Eigen::FullPivLU<MatrixXd> lu(a);
    if (lu.isInvertible()) {
      const VectorXd x = lu.solve(b);
      bool feasible = (x.array() >= -1e-8).all();
      if (feasible && me > 0)
        feasible = ((p.a_eq * x - p.b_eq).array().abs() <= 1e-8).all();
      if (feasible && mu > 0)
        feasible = ((p.a_ub * x - p.b_ub).array() <= 1e-8).all();
      if (feasible) best = std::max(best, p.c.dot(x));
    }
    int k = n - 1;
    while (k >= 0 && idx[k] == total - n + k) --k;
    if (k < 0) break;
    ++idx[k];
    for (int i = k + 1; i < n; ++i) idx[i] = idx[i - 1] + 1;
  }
  return best;
}

}  // namespace

TEST_CASE("lp: agrees with vertex enumeration on random instances") {
  ldro::CounterRng rng(20240811);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 2 + static_cast<int>(rng.next_u64() % 3);
    const int mu = 2 + static_cast<int>(rng.next_u64() % 3);
    LpProblem p;
    p.c = VectorXd(n);
    for (int i = 0; i < n; ++i) p.c[i] = 2.0 * rng.next_unit() - 1.0;
    p.a_ub = MatrixXd(mu, n);
    p.b_ub = VectorXd(mu);
    for (int i = 0; i < mu; ++i) {
      for (int j = 0; j < n; ++j) p.a_ub(i, j) = 2.0 * rng.next_unit() - 1.0;
      p.b_ub[i] = rng.next_unit();
    }
    // Keep the region bounded.
    p.a_eq = MatrixXd(1, n);
    p.a_eq.setOnes();
    p.b_eq = VectorXd(1);
    p.b_eq << 1.0;
    const LpSolution sol = solve_lp(p);
    const double brute = brute_force_max(p);
    if (brute < -1e299) {
      CHECK(sol.status == LpSolution::Status::Infeasible);
    } else {
      REQUIRE(sol.optimal());
      CHECK(sol.value == doctest::Approx(brute).epsilon(1e-7));
    }
  }
}
