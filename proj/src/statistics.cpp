#include "ldro/statistics.hpp"

#include <cmath>
#include <string>

namespace ldro {

const char* statistic_kind_name(StatisticKind kind) {
  switch (kind) {
    case StatisticKind::EmpiricalDist: return "empirical-dist";
    case StatisticKind::DoubletDist: return "doublet-dist";
    case StatisticKind::ScaledSampleMean: return "scaled-sample-mean";
    case StatisticKind::SampleMean: return "sample-mean";
    case StatisticKind::LeastSquaresCoeff: return "least-squares";
    case StatisticKind::YuleWalkerCoeff: return "yule-walker";
  }
  return "?";
}

StatisticKind statistic_kind_from_name(const std::string& name) {
  if (name == "empirical-dist") return StatisticKind::EmpiricalDist;
  if (name == "doublet-dist") return StatisticKind::DoubletDist;
  if (name == "scaled-sample-mean") return StatisticKind::ScaledSampleMean;
  if (name == "sample-mean") return StatisticKind::SampleMean;
  if (name == "least-squares") return StatisticKind::LeastSquaresCoeff;
  if (name == "yule-walker") return StatisticKind::YuleWalkerCoeff;
  throw UsageError("unknown statistic kind: " + name);
}

StatisticValue empirical_distribution(const Trajectory& traj, int d) {
  if (!traj.is_discrete() || traj.length() < 1)
    throw DataError("empirical distribution: need a non-empty discrete path");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(d);
  for (int state : traj.states) {
    if (state < 1 || state > d)
      throw DataError("empirical distribution: state out of range");
    counts[state - 1] += 1.0;
  }
  StatisticValue out;
  out.kind = StatisticKind::EmpiricalDist;
  out.value = counts / static_cast<double>(traj.length());
  out.sample_size = traj.length();
  return out;
}

StatisticValue doublet_distribution(const Trajectory& traj, int m) {
  if (!traj.is_discrete() || traj.length() < 1)
    throw DataError("doublet distribution: need a non-empty discrete path");
  if (!traj.prepended_state)
    throw DataError("doublet distribution: path carries no initial state");
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(m, m);
  int prev = *traj.prepended_state;
  if (prev < 1 || prev > m)
    throw DataError("doublet distribution: initial state out of range");
  for (int state : traj.states) {
    if (state < 1 || state > m)
      throw DataError("doublet distribution: state out of range");
    counts(prev - 1, state - 1) += 1.0;
    prev = state;
  }
  StatisticValue out;
  out.kind = StatisticKind::DoubletDist;
  out.value = counts / static_cast<double>(traj.length());
  out.sample_size = traj.length();
  return out;
}

StatisticValue scaled_sample_mean(const Trajectory& traj,
                                  const Eigen::MatrixXd& coeff) {
  if (traj.is_discrete() || traj.length() < 1)
    throw DataError("scaled sample mean: need a non-empty vector path");
  if (coeff.rows() != traj.reals.cols() || coeff.cols() != traj.reals.cols())
    throw DataError("scaled sample mean: coefficient dimension mismatch");
  const Eigen::VectorXd mean = traj.reals.colwise().mean().transpose();
  StatisticValue out;
  out.kind = StatisticKind::ScaledSampleMean;
  out.value = (Eigen::MatrixXd::Identity(coeff.rows(), coeff.cols()) - coeff) * mean;
  out.sample_size = traj.length();
  return out;
}

StatisticValue sample_mean(const Trajectory& traj) {
  if (traj.is_discrete() || traj.length() < 1)
    throw DataError("sample mean: need a non-empty vector path");
  StatisticValue out;
  out.kind = StatisticKind::SampleMean;
  out.value = traj.reals.colwise().mean().transpose();
  out.sample_size = traj.length();
  return out;
}

std::pair<StatisticValue, StatisticValue> ar_coefficients(
    const Trajectory& traj) {
  if (traj.is_discrete() || traj.reals.cols() != 1 || traj.length() < 2)
    throw DataError("ar coefficients: need a scalar path with T >= 2");
  const auto x = traj.reals.col(0);
  const long t_max = traj.length();
  double cross = 0.0, lagged_sq = 0.0;
  for (long t = 1; t < t_max; ++t) {
    cross += x[t] * x[t - 1];
    lagged_sq += x[t - 1] * x[t - 1];
  }
  const double full_sq = x.squaredNorm();
  if (lagged_sq == 0.0 || full_sq == 0.0)
    throw DegenerateDataError("ar coefficients: all-zero denominator");
  StatisticValue ls, yw;
  ls.kind = StatisticKind::LeastSquaresCoeff;
  ls.value = Eigen::MatrixXd::Constant(1, 1, cross / lagged_sq);
  ls.sample_size = t_max;
  yw.kind = StatisticKind::YuleWalkerCoeff;
  yw.value = Eigen::MatrixXd::Constant(1, 1, cross / full_sq);
  yw.sample_size = t_max;
  return {ls, yw};
}

StatisticValue asymptotic_statistic(const ProcessModel& model,
                                    StatisticKind kind) {
  StatisticValue out;
  out.kind = kind;
  out.sample_size = 0;
  if (const auto* iid = std::get_if<FiniteIidModel>(&model)) {
    if (kind != StatisticKind::EmpiricalDist)
      throw UsageError("asymptotic statistic: finite iid pairs with the empirical distribution");
    out.value = iid->probs;
    return out;
  }
  if (const auto* markov = std::get_if<MarkovDoubletModel>(&model)) {
    if (kind != StatisticKind::DoubletDist)
      throw UsageError("asymptotic statistic: markov pairs with the doublet distribution");
    out.value = markov->doublet;
    return out;
  }
  if (const auto* var = std::get_if<VarDriftModel>(&model)) {
    if (kind != StatisticKind::ScaledSampleMean)
      throw UsageError("asymptotic statistic: var pairs with the scaled sample mean");
    out.value = var->drift;
    return out;
  }
  if (const auto* ar = std::get_if<ScalarArModel>(&model)) {
    if (kind != StatisticKind::LeastSquaresCoeff &&
        kind != StatisticKind::YuleWalkerCoeff)
      throw UsageError("asymptotic statistic: scalar ar pairs with an ar coefficient");
    out.value = Eigen::MatrixXd::Constant(1, 1, ar->coeff);
    return out;
  }
  const auto& par = std::get<ParametricIidModel>(model);
  if (kind != StatisticKind::SampleMean)
    throw UsageError("asymptotic statistic: parametric iid pairs with the sample mean");
  switch (par.family) {
    case Family::Normal:
      out.value = par.theta;
      break;
    case Family::Exponential:
      out.value = Eigen::MatrixXd::Constant(1, 1, 1.0 / par.scalar_theta());
      break;
    case Family::Gamma:
      out.value = Eigen::MatrixXd::Constant(1, 1, par.shape * par.scalar_theta());
      break;
    case Family::Poisson:
    case Family::Bernoulli:
      out.value = Eigen::MatrixXd::Constant(1, 1, par.scalar_theta());
      break;
    case Family::Geometric:
      out.value = Eigen::MatrixXd::Constant(1, 1, 1.0 / par.scalar_theta());
      break;
    case Family::Binomial:
      out.value = Eigen::MatrixXd::Constant(1, 1, par.trials * par.scalar_theta());
      break;
  }
  return out;
}

StatisticValue compute_statistic(const Trajectory& traj, StatisticKind kind,
                                 const ProcessModel& model) {
  switch (kind) {
    case StatisticKind::EmpiricalDist: {
      const auto* iid = std::get_if<FiniteIidModel>(&model);
      if (!iid) throw UsageError("compute statistic: model/kind mismatch");
      return empirical_distribution(traj, static_cast<int>(iid->dimension()));
    }
    case StatisticKind::DoubletDist: {
      const auto* markov = std::get_if<MarkovDoubletModel>(&model);
      if (!markov) throw UsageError("compute statistic: model/kind mismatch");
      return doublet_distribution(traj, static_cast<int>(markov->num_states()));
    }
    case StatisticKind::ScaledSampleMean: {
      const auto* var = std::get_if<VarDriftModel>(&model);
      if (!var) throw UsageError("compute statistic: model/kind mismatch");
      return scaled_sample_mean(traj, var->coeff);
    }
    case StatisticKind::SampleMean:
      return sample_mean(traj);
    case StatisticKind::LeastSquaresCoeff:
      return ar_coefficients(traj).first;
    case StatisticKind::YuleWalkerCoeff:
      return ar_coefficients(traj).second;
  }
  throw UsageError("compute statistic: unknown kind");
}

}  // namespace ldro
