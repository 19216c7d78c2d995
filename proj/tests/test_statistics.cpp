#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "ldro/processes.hpp"
#include "ldro/rng.hpp"
#include "ldro/statistics.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using namespace ldro;

namespace {

Trajectory discrete_path(std::initializer_list<int> states,
                         std::optional<int> prepended = std::nullopt) {
  Trajectory t;
  t.states = states;
  t.prepended_state = prepended;
  return t;
}

Trajectory scalar_path(std::initializer_list<double> values) {
  Trajectory t;
  t.reals.resize(static_cast<long>(values.size()), 1);
  long i = 0;
  for (double v : values) t.reals(i++, 0) = v;
  return t;
}

}  // namespace

TEST_CASE("empirical distribution counts states") {
  CHECK(empirical_distribution(discrete_path({1, 1, 2, 2}), 2)
            .vector()
            .isApprox((VectorXd(2) << 0.5, 0.5).finished()));
  CHECK(empirical_distribution(discrete_path({3}), 3)
            .vector()
            .isApprox((VectorXd(3) << 0, 0, 1).finished()));
  CHECK(empirical_distribution(discrete_path({1, 2, 1, 1, 3}), 3)
            .vector()
            .isApprox((VectorXd(3) << 0.6, 0.2, 0.2).finished()));
  CHECK_THROWS_AS(empirical_distribution(discrete_path({1, 4}), 3), DataError);
}

TEST_CASE("doublet distribution counts transitions") {
  const auto s = doublet_distribution(discrete_path({2, 1, 2, 1}, 1), 2);
  MatrixXd expected(2, 2);
  expected << 0.0, 0.5, 0.5, 0.0;
  CHECK(s.value.isApprox(expected));

  const auto loops = doublet_distribution(discrete_path({1, 1}, 1), 2);
  expected << 1.0, 0.0, 0.0, 0.0;
  CHECK(loops.value.isApprox(expected));

  CHECK_THROWS_AS(doublet_distribution(discrete_path({1, 2}), 2), DataError);
}

TEST_CASE("doublet marginals are balanced up to the path correction") {
  const MarkovDoubletModel model(
      (MatrixXd(2, 2) << 0.35, 0.15, 0.15, 0.35).finished());
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const long horizon = 40;
    const Trajectory traj = simulate(model, horizon, seed);
    const auto s = doublet_distribution(traj, 2);
    const VectorXd rows = s.value.rowwise().sum();
    const VectorXd cols = s.value.colwise().sum();
    CHECK(((rows - cols).array().abs() <= 1.0 / horizon + 1e-12).all());
    // Entries are exact multiples of 1/T.
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        const double scaled = s.value(i, j) * horizon;
        CHECK(std::abs(scaled - std::round(scaled)) < 1e-9);
      }
  }
}

TEST_CASE("scaled sample mean applies the I - A filter") {
  CHECK(scaled_sample_mean(scalar_path({1, 2, 3}), MatrixXd::Zero(1, 1))
            .scalar() == doctest::Approx(2.0));
  CHECK(scaled_sample_mean(scalar_path({2, 2}),
                           MatrixXd::Constant(1, 1, 0.5))
            .scalar() == doctest::Approx(1.0));
  Trajectory two;
  two.reals.resize(1, 2);
  two.reals << 2.0, 2.0;
  MatrixXd a = MatrixXd::Zero(2, 2);
  a(0, 0) = 0.5;
  const auto s = scaled_sample_mean(two, a);
  CHECK(s.vector().isApprox((VectorXd(2) << 1.0, 2.0).finished()));
}

TEST_CASE("ar coefficient estimators") {
  const auto [ls1, yw1] = ar_coefficients(scalar_path({1, 1, 1}));
  CHECK(ls1.scalar() == doctest::Approx(1.0));
  CHECK(yw1.scalar() == doctest::Approx(2.0 / 3.0));

  const auto [ls2, yw2] = ar_coefficients(scalar_path({1, -1, 1}));
  CHECK(ls2.scalar() == doctest::Approx(-1.0));
  CHECK(yw2.scalar() == doctest::Approx(-2.0 / 3.0));

  CHECK_THROWS_AS(ar_coefficients(scalar_path({0, 0})), DegenerateDataError);
}

TEST_CASE("yule-walker dominates least squares in magnitude and stays in (-1,1)") {
  const ScalarArModel model(0.8, 0.1, 1.0);
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    const Trajectory traj = simulate(model, 50, seed);
    const auto [ls, yw] = ar_coefficients(traj);
    CHECK(std::abs(yw.scalar()) < 1.0);
    CHECK(std::abs(yw.scalar()) < std::abs(ls.scalar()));
  }
}

TEST_CASE("asymptotic statistics") {
  const FiniteIidModel iid((VectorXd(3) << 0.2, 0.3, 0.5).finished());
  CHECK(asymptotic_statistic(iid, StatisticKind::EmpiricalDist)
            .vector()
            .isApprox(iid.probs));
  CHECK(asymptotic_statistic(ParametricIidModel::scalar(Family::Exponential, 2.0),
                             StatisticKind::SampleMean)
            .scalar() == doctest::Approx(0.5));
  CHECK(asymptotic_statistic(ParametricIidModel::scalar(Family::Binomial, 0.5, 10),
                             StatisticKind::SampleMean)
            .scalar() == doctest::Approx(5.0));
  const Eigen::Vector2d mean(1.0, -2.0);
  const ParametricIidModel normal(Family::Normal, mean,
                                  MatrixXd::Identity(2, 2));
  CHECK(asymptotic_statistic(normal, StatisticKind::SampleMean)
            .vector()
            .isApprox(mean));
  CHECK_THROWS_AS(asymptotic_statistic(iid, StatisticKind::SampleMean),
                  UsageError);
}

TEST_CASE("statistics are consistent at T = 1e5") {
  const long horizon = 100000;

  const FiniteIidModel iid((VectorXd(3) << 0.2, 0.3, 0.5).finished());
  const auto s_iid =
      compute_statistic(simulate(iid, horizon, 21), StatisticKind::EmpiricalDist, iid);
  for (int i = 0; i < 3; ++i) {
    const double p = iid.probs[i];
    const double se = std::sqrt(p * (1 - p) / horizon);
    CHECK(std::abs(s_iid.value(i, 0) - p) < 3 * se);
  }

  const MarkovDoubletModel markov(
      (MatrixXd(2, 2) << 0.4, 0.1, 0.1, 0.4).finished());
  const auto s_markov = compute_statistic(simulate(markov, horizon, 22),
                                          StatisticKind::DoubletDist, markov);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double p = markov.doublet(i, j);
      // Serial dependence inflates the binomial error; allow a factor 3.
      const double se = 3.0 * std::sqrt(p * (1 - p) / horizon);
      CHECK(std::abs(s_markov.value(i, j) - p) < 3 * se);
    }

  const VarDriftModel var((VectorXd(2) << 1.0, -0.5).finished(),
                          (MatrixXd(2, 2) << 0.4, 0.2, 0.1, 0.3).finished(),
                          MatrixXd::Identity(2, 2));
  const auto s_var = compute_statistic(simulate(var, horizon, 23),
                                       StatisticKind::ScaledSampleMean, var);
  CHECK((s_var.vector() - var.drift).norm() < 0.05);

  const ScalarArModel ar(0.6, 0.0, 1.0);
  const Trajectory ar_traj = simulate(ar, horizon, 24);
  const auto [ls, yw] = ar_coefficients(ar_traj);
  CHECK(std::abs(ls.scalar() - 0.6) < 0.02);
  CHECK(std::abs(yw.scalar() - 0.6) < 0.02);

  const auto pois = ParametricIidModel::scalar(Family::Poisson, 2.0);
  const auto s_pois = compute_statistic(simulate(pois, horizon, 25),
                                        StatisticKind::SampleMean, pois);
  CHECK(std::abs(s_pois.scalar() - 2.0) < 3 * std::sqrt(2.0 / horizon));
}
