#pragma once

#include <utility>

#include <Eigen/Dense>

#include "ldro/processes.hpp"

namespace ldro {

enum class StatisticKind {
  EmpiricalDist,
  DoubletDist,
  ScaledSampleMean,
  SampleMean,
  LeastSquaresCoeff,
  YuleWalkerCoeff,
};

const char* statistic_kind_name(StatisticKind kind);
StatisticKind statistic_kind_from_name(const std::string& name);

// A realization of the summary statistic: vectors are stored as single
// columns, the doublet statistic as an m x m matrix.
struct StatisticValue {
  StatisticKind kind;
  Eigen::MatrixXd value;
  long sample_size = 0;

  double scalar() const { return value(0, 0); }
  Eigen::VectorXd vector() const { return value.col(0); }
};

// Component i holds the empirical frequency of state i, an exact multiple
// of 1/T.
StatisticValue empirical_distribution(const Trajectory& traj, int d);

// Entry (i, j) holds the frequency of the transition i -> j among the T
// transitions of a path carrying xi_0.
StatisticValue doublet_distribution(const Trajectory& traj, int m);

// (I - A) times the sample mean of a vector-valued path.
StatisticValue scaled_sample_mean(const Trajectory& traj,
                                  const Eigen::MatrixXd& coeff);

// Plain sample mean of a vector-valued path.
StatisticValue sample_mean(const Trajectory& traj);

// Least-squares and Yule-Walker autoregression coefficients; they share the
// numerator, and |yw| < 1 always. Throws DegenerateDataError on all-zero
// denominators.
std::pair<StatisticValue, StatisticValue> ar_coefficients(
    const Trajectory& traj);

// The in-probability limit S_inf(theta) of the statistic under the model:
// theta itself for the consistent estimators, the family mean map for
// SampleMean.
StatisticValue asymptotic_statistic(const ProcessModel& model,
                                    StatisticKind kind);

// Convenience: the statistic of the given kind computed from a path.
StatisticValue compute_statistic(const Trajectory& traj, StatisticKind kind,
                                 const ProcessModel& model);

}  // namespace ldro
