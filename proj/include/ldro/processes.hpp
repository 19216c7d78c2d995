#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ldro/errors.hpp"

namespace ldro {

enum class Family { Normal, Exponential, Gamma, Poisson, Bernoulli, Geometric, Binomial };

const char* family_name(Family f);
Family family_from_name(const std::string& name);

// Serially independent draws on {1, ..., d} with strictly positive weights.
struct FiniteIidModel {
  Eigen::VectorXd probs;

  explicit FiniteIidModel(Eigen::VectorXd probs);
  Eigen::Index dimension() const { return probs.size(); }
};

// Ergodic chain on {1, ..., m} parameterized by its stationary doublet
// distribution (strictly positive, balanced marginals). The transition
// matrix and stationary law are derived quantities. The dummy initial
// state defaults to 1; it shifts finite-horizon counts by at most one
// transition and leaves every asymptotic quantity untouched.
struct MarkovDoubletModel {
  Eigen::MatrixXd doublet;
  int initial_state = 1;

  explicit MarkovDoubletModel(Eigen::MatrixXd doublet, int initial_state = 1);
  Eigen::Index num_states() const { return doublet.rows(); }
};

struct MarkovDerived {
  Eigen::VectorXd stationary;  // pi, row sums of the doublet
  Eigen::MatrixXd transition;  // row-stochastic
};

MarkovDerived markov_derived(const MarkovDoubletModel& model);

// R satisfying R = A R A^T + Sigma, by fixed-point iteration from R = Sigma.
// Throws StabilityError if the residual has not reached 1e-10 within 1e6
// sweeps (spectral radius of A too close to 1).
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& coeff,
                               const Eigen::MatrixXd& noise_cov);

// xi_{t+1} = drift + A xi_t + eps_{t+1}, eps ~ N(0, Sigma), started from the
// exact stationary law N((I-A)^{-1} drift, R0).
struct VarDriftModel {
  Eigen::VectorXd drift;
  Eigen::MatrixXd coeff;
  Eigen::MatrixXd noise_cov;
  Eigen::MatrixXd stationary_cov;  // derived: unique Lyapunov solution

  VarDriftModel(Eigen::VectorXd drift, Eigen::MatrixXd coeff,
                Eigen::MatrixXd noise_cov);
  Eigen::Index dimension() const { return drift.size(); }
  Eigen::VectorXd stationary_mean() const;
};

// xi_{t+1} = theta xi_t + eps_{t+1}, eps ~ N(mu, sigma^2), |theta| < 1,
// started from the stationary law.
struct ScalarArModel {
  double coeff;
  double noise_mean;
  double noise_var;

  ScalarArModel(double coeff, double noise_mean, double noise_var);
  double stationary_mean() const { return noise_mean / (1.0 - coeff); }
  double stationary_var() const { return noise_var / (1.0 - coeff * coeff); }
};

// I.i.d. draws from one of the Table-style parametric families. theta is a
// vector only for the multivariate Normal; all other families are scalar.
struct ParametricIidModel {
  Family family;
  Eigen::VectorXd theta;
  Eigen::MatrixXd sigma;  // Normal
  double shape = 1.0;     // Gamma
  int trials = 1;         // Binomial

  ParametricIidModel(Family family, Eigen::VectorXd theta,
                     Eigen::MatrixXd sigma = {}, double shape = 1.0,
                     int trials = 1);
  static ParametricIidModel scalar(Family family, double theta,
                                   double nuisance = 1.0);
  double scalar_theta() const { return theta[0]; }
  Eigen::Index dimension() const {
    return family == Family::Normal ? theta.size() : 1;
  }
};

using ProcessModel = std::variant<FiniteIidModel, MarkovDoubletModel,
                                  VarDriftModel, ScalarArModel,
                                  ParametricIidModel>;

// A simulated path: integer states for the finite-state families, rows of
// reals otherwise. Markov paths carry the dummy initial state xi_0.
struct Trajectory {
  std::vector<int> states;
  Eigen::MatrixXd reals;  // T x d
  std::optional<int> prepended_state;

  bool is_discrete() const { return !states.empty(); }
  long length() const {
    return is_discrete() ? static_cast<long>(states.size())
                         : static_cast<long>(reals.rows());
  }
};

// Deterministic in (model, horizon, seed); a path of length T is a prefix of
// the path of any longer horizon under the same seed.
Trajectory simulate(const ProcessModel& model, long horizon,
                    std::uint64_t seed);

}  // namespace ldro
