#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ldro/rates.hpp"
#include "ldro/statistics.hpp"

namespace ldro::dro {

// Finite decision set against a finite state space: entry (x, i) is the
// loss of decision x in state i.
struct LossTable {
  Eigen::MatrixXd losses;
  std::vector<std::string> decisions;

  LossTable() = default;
  LossTable(Eigen::MatrixXd l, std::vector<std::string> d);
  Eigen::Index num_decisions() const { return losses.rows(); }
  Eigen::Index num_states() const { return losses.cols(); }
};

struct AmbiguitySpec {
  enum class Kind {
    Empirical,
    PenalizedEmpirical,
    EntropyBall,
    ConditionalEntropyBall,
    EllipsoidBall,
    ArBall,
    MomentSet,
    WassersteinSet,
  };

  Kind kind = Kind::Empirical;
  double radius = 0.0;
  int moment_order = 4;                       // MomentSet
  Eigen::MatrixXd sigma;                      // EllipsoidBall
  rates::ArRateKind ar_kind = rates::ArRateKind::LeastSquares;  // ArBall

  static AmbiguitySpec empirical() { return {}; }
  static AmbiguitySpec penalized(double epsilon);
  static AmbiguitySpec entropy_ball(double r);
  static AmbiguitySpec conditional_entropy_ball(double r);
  static AmbiguitySpec ellipsoid_ball(double r, Eigen::MatrixXd sigma);
  static AmbiguitySpec ar_ball(double r, rates::ArRateKind kind);
  static AmbiguitySpec moment_set(double epsilon, int order = 4);
  static AmbiguitySpec wasserstein_set(double epsilon);
};

const char* spec_kind_name(AmbiguitySpec::Kind kind);
AmbiguitySpec::Kind spec_kind_from_name(const std::string& name);

struct PredictorOutput {
  enum class Branch { BallFeasible, BallEmpty };

  double value = 0.0;
  std::optional<Eigen::VectorXd> worst_case_model;  // doublets flattened row-major
  Branch branch = Branch::BallFeasible;
};

// Worst-case expected loss over the relative-entropy ball {theta : D(s||theta) <= r},
// through the one-dimensional convex dual
//   min_{alpha >= max_i l_i} alpha - e^{-r} prod_i (alpha - l_i)^{s_i}.
// r = 0 collapses to the plain expectation.
PredictorOutput entropy_dro_dual(const Eigen::VectorXd& loss_row,
                                 const Eigen::VectorXd& s, double r);

// Brute-force lower bound for the same maximization: projected-gradient
// ascent with radial retraction from random interior starts, plus a
// Dirichlet-sampled screen. Test oracle for the dual; d <= 6.
double entropy_primal_oracle(const Eigen::VectorXd& loss_row,
                             const Eigen::VectorXd& s, double r,
                             std::uint64_t seed = 1,
                             long screen_samples = 1000000, int starts = 32);

// Exact maximum over {theta in simplex : |moment_j(theta) - moment_j(s)| <= eps,
// j = 1..order} with moment_j(theta) = sum_i i^j theta_i, by dense LP.
PredictorOutput moment_set_worst_case(const Eigen::VectorXd& loss_row,
                                      const Eigen::VectorXd& s, double epsilon,
                                      int order);

// Exact maximum over the 1-Wasserstein ball with ground cost |i - j|,
// as a joint LP over the distribution and a transport plan.
PredictorOutput wasserstein_set_worst_case(const Eigen::VectorXd& loss_row,
                                           const Eigen::VectorXd& s,
                                           double epsilon);

// Worst case of the affine cost a'theta + b over the quadratic-rate ball
// {theta : (theta-s)' Sigma^{-1} (theta-s) / 2 <= r}; closed form.
PredictorOutput ellipsoid_linear_worst_case(const Eigen::VectorXd& a, double b,
                                            const Eigen::VectorXd& s,
                                            const Eigen::MatrixXd& sigma,
                                            double r);

// Worst case of a continuous cost over the autoregressive rate ball, which
// is an interval of [-1, 1] by radial monotonicity. Empty balls fall back
// to the supremum over the whole model space.
PredictorOutput ar_ball_worst_case(const std::function<double(double)>& cost,
                                   double s, double r, rates::ArRateKind kind);

// Worst-case stationary expected loss sum_ij l_ij theta_ij over the
// conditional-relative-entropy ball within the balanced doublet simplex.
// Frank-Wolfe on a linearized constraint with multi-starts; the feasible
// set is nonconvex, so the result is a certified-feasible lower bound.
PredictorOutput markov_ball_worst_case(const Eigen::MatrixXd& loss_doublet,
                                       const Eigen::MatrixXd& s, double r,
                                       std::uint64_t seed = 1, int starts = 16,
                                       int max_iters = 500);

// Evaluates the predictor for every decision of the table.
std::vector<PredictorOutput> predictor(const LossTable& table,
                                       const StatisticValue& s,
                                       const AmbiguitySpec& spec);

// Index of the smallest predicted value; ties break to the smallest index.
std::size_t prescriptor(const std::vector<PredictorOutput>& predictions);

}  // namespace ldro::dro
