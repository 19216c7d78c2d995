#pragma once

#include <functional>
#include <limits>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "ldro/processes.hpp"

namespace ldro::rates {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class ArRateKind { LeastSquares, YuleWalker };

// D(s || theta) = sum_i s_i log(s_i / theta_i) on the closed simplex, with
// 0 log(0/p) = 0 and p log(p/0) = +inf. Inputs further than 1e-9 from the
// simplex are rejected.
double relative_entropy(const Eigen::VectorXd& s, const Eigen::VectorXd& theta);

// Visitation-weighted relative entropy between transition rows,
// sum_ij s_ij (log(s_ij / sum_k s_ik) - log(theta_ij / sum_k theta_ik)).
// s ranges over the full doublet simplex (unbalanced allowed), theta over
// the closed balanced simplex. +inf when s puts mass where theta has none.
double conditional_relative_entropy(const Eigen::MatrixXd& s,
                                    const Eigen::MatrixXd& theta);

// (1/2) (s - theta)^T Sigma^{-1} (s - theta).
double gaussian_quadratic_rate(const Eigen::VectorXd& s,
                               const Eigen::VectorXd& theta,
                               const Eigen::MatrixXd& sigma);

// Rate of the least-squares or Yule-Walker autoregression coefficient.
// The least-squares rate switches to log|theta - 2s| outside
// [a(theta), b(theta)]; the Yule-Walker rate is +inf outside (-1, 1) save
// for the corner points s = theta = +-1.
double ar_rate(double s, double theta, ArRateKind kind);
double ar_branch_lower(double theta);  // a(theta)
double ar_branch_upper(double theta);  // b(theta)

// Fixed nuisance parameters of the parametric families.
struct Nuisance {
  Eigen::MatrixXd sigma;  // Normal
  double shape = 1.0;     // Gamma
  int trials = 1;         // Binomial
};

Nuisance nuisance_of(const ParametricIidModel& model);

// Closed-form Cramer function of the family; +inf outside its domain.
double cramer_rate(Family family, const Eigen::VectorXd& s,
                   const Eigen::VectorXd& theta, const Nuisance& nuisance);
double cramer_rate(Family family, double s, double theta,
                   const Nuisance& nuisance = {});

// Limiting log-moment generating function Lambda(lambda, theta); +inf
// outside its domain.
double limit_log_mgf(Family family, const Eigen::VectorXd& lambda,
                     const Eigen::VectorXd& theta, const Nuisance& nuisance);
double limit_log_mgf(Family family, double lambda, double theta,
                     const Nuisance& nuisance = {});

// log sum_i theta_i e^{lambda_i} for the finite-state i.i.d. family.
double finite_iid_log_mgf(const Eigen::VectorXd& lambda,
                          const Eigen::VectorXd& theta);

// sup_lambda <lambda, s> - Lambda(lambda), by bracketed golden-section in
// one dimension and coordinate ascent with expanding brackets otherwise.
// Reports +inf once the objective exceeds 1e8. Serves as the conjugacy
// oracle for the closed forms above.
double numerical_conjugate(const std::function<double(double)>& log_mgf,
                           double s);
double numerical_conjugate(
    const std::function<double(const Eigen::VectorXd&)>& log_mgf,
    const Eigen::VectorXd& s);

// Log-likelihood ratio of a finite-state i.i.d. path against the uniform
// baseline, evaluated both directly and through the empirical distribution.
// The two agree identically; the pair exposes the identity to tests.
struct LogLikelihoodRatio {
  double direct;
  double exponential_family;
};

LogLikelihoodRatio rn_derivative_finite_iid(const Eigen::VectorXd& theta,
                                            const Trajectory& traj);

// Central finite difference of the limiting log-MGF at lambda = 0 with step
// 1e-6; consistent with the asymptotic statistic to ~1e-10.
Eigen::VectorXd grad_limit_log_mgf_at_zero(Family family,
                                           const Eigen::VectorXd& theta,
                                           const Nuisance& nuisance);
Eigen::VectorXd grad_finite_iid_log_mgf_at_zero(const Eigen::VectorXd& theta);

// Tagged selector over the implemented rate functions, mirroring what the
// CLI exposes.
struct RateSpec {
  enum class Kind {
    RelativeEntropy,
    ConditionalRelativeEntropy,
    GaussianQuadratic,
    ArLeastSquares,
    ArYuleWalker,
    Cramer,
  };

  Kind kind = Kind::RelativeEntropy;
  Family family = Family::Normal;  // Cramer only
  Nuisance nuisance;

  double evaluate(const Eigen::MatrixXd& s, const Eigen::MatrixXd& theta) const;
};

RateSpec::Kind rate_kind_from_name(const std::string& name);

}  // namespace ldro::rates
