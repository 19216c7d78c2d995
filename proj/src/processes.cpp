#include "ldro/processes.hpp"

#include <cmath>
#include <string>

#include "ldro/rng.hpp"

namespace ldro {

namespace {

void check_simplex_weights(const Eigen::VectorXd& w, const char* what) {
  if ((w.array() <= 0.0).any())
    throw ParameterError(std::string(what) + ": entries must be strictly positive");
  if (std::abs(w.sum() - 1.0) > 1e-12)
    throw ParameterError(std::string(what) + ": entries must sum to 1");
}

// Upper bound on the spectral radius via power iteration on A^T A.
double spectral_radius_bound(const Eigen::MatrixXd& a) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(a.cols()).normalized();
  double norm = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd w = a.transpose() * (a * v);
    norm = std::sqrt(w.norm());
    if (w.norm() == 0.0) return 0.0;
    v = w.normalized();
  }
  // sigma_max(A) >= rho(A); use rho(A^k)^(1/k) refinement via A^8 to tighten
  // matrices with large non-normal transients.
  Eigen::MatrixXd p = a;
  for (int k = 0; k < 3; ++k) p = p * p;  // A^8
  Eigen::VectorXd u = Eigen::VectorXd::Ones(p.cols()).normalized();
  double norm8 = 0.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd w = p.transpose() * (p * u);
    norm8 = std::sqrt(w.norm());
    if (w.norm() == 0.0) return 0.0;
    u = w.normalized();
  }
  return std::min(norm, std::pow(norm8, 1.0 / 8.0));
}

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& m,
                                        const char* what) {
  if (m.rows() != m.cols())
    throw ParameterError(std::string(what) + ": matrix must be square");
  if (!m.isApprox(m.transpose(), 1e-10))
    throw ParameterError(std::string(what) + ": matrix must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw ParameterError(std::string(what) + ": matrix must be positive definite");
  return llt;
}

}  // namespace

const char* family_name(Family f) {
  switch (f) {
    case Family::Normal: return "normal";
    case Family::Exponential: return "exponential";
    case Family::Gamma: return "gamma";
    case Family::Poisson: return "poisson";
    case Family::Bernoulli: return "bernoulli";
    case Family::Geometric: return "geometric";
    case Family::Binomial: return "binomial";
  }
  return "?";
}

Family family_from_name(const std::string& name) {
  if (name == "normal") return Family::Normal;
  if (name == "exponential") return Family::Exponential;
  if (name == "gamma") return Family::Gamma;
  if (name == "poisson") return Family::Poisson;
  if (name == "bernoulli") return Family::Bernoulli;
  if (name == "geometric") return Family::Geometric;
  if (name == "binomial") return Family::Binomial;
  throw UsageError("unknown family: " + name);
}

FiniteIidModel::FiniteIidModel(Eigen::VectorXd p) : probs(std::move(p)) {
  if (probs.size() < 2) throw ParameterError("finite iid model: need d >= 2");
  check_simplex_weights(probs, "finite iid model");
}

MarkovDoubletModel::MarkovDoubletModel(Eigen::MatrixXd d, int init)
    : doublet(std::move(d)), initial_state(init) {
  const Eigen::Index m = doublet.rows();
  if (m < 2 || doublet.cols() != m)
    throw ParameterError("markov doublet model: need a square matrix, m >= 2");
  if ((doublet.array() <= 0.0).any())
    throw ParameterError("markov doublet model: entries must be strictly positive");
  if (std::abs(doublet.sum() - 1.0) > 1e-12)
    throw ParameterError("markov doublet model: entries must sum to 1");
  const Eigen::VectorXd row = doublet.rowwise().sum();
  const Eigen::VectorXd col = doublet.colwise().sum();
  if (((row - col).array().abs() > 1e-10).any())
    throw ParameterError("markov doublet model: marginals must balance");
  if (initial_state < 1 || initial_state > m)
    throw ParameterError("markov doublet model: initial state out of range");
}

MarkovDerived markov_derived(const MarkovDoubletModel& model) {
  MarkovDerived out;
  out.stationary = model.doublet.rowwise().sum();
  out.transition = model.doublet.array().colwise() / out.stationary.array();
  return out;
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& coeff,
                               const Eigen::MatrixXd& noise_cov) {
  checked_llt(noise_cov, "lyapunov");
  if (coeff.rows() != noise_cov.rows() || coeff.cols() != noise_cov.rows())
    throw ParameterError("lyapunov: dimension mismatch");
  if (spectral_radius_bound(coeff) >= 1.0)
    throw StabilityError("lyapunov: coefficient matrix is not stable");
  Eigen::MatrixXd r = noise_cov;
  for (long it = 0; it < 1000000; ++it) {
    Eigen::MatrixXd next = noise_cov + coeff * r * coeff.transpose();
    const double residual = (next - coeff * next * coeff.transpose() - noise_cov).norm();
    r = next;
    if (residual <= 1e-10) return r;
  }
  throw StabilityError("lyapunov: fixed-point iteration did not converge");
}

VarDriftModel::VarDriftModel(Eigen::VectorXd d, Eigen::MatrixXd a,
                             Eigen::MatrixXd s)
    : drift(std::move(d)), coeff(std::move(a)), noise_cov(std::move(s)) {
  const Eigen::Index n = drift.size();
  if (coeff.rows() != n || coeff.cols() != n || noise_cov.rows() != n ||
      noise_cov.cols() != n)
    throw ParameterError("var model: dimension mismatch");
  checked_llt(noise_cov, "var model");
  if (spectral_radius_bound(coeff) >= 1.0)
    throw ParameterError("var model: coefficient matrix is not stable");
  stationary_cov = solve_lyapunov(coeff, noise_cov);
}

Eigen::VectorXd VarDriftModel::stationary_mean() const {
  const Eigen::Index n = drift.size();
  return (Eigen::MatrixXd::Identity(n, n) - coeff)
      .partialPivLu()
      .solve(drift);
}

ScalarArModel::ScalarArModel(double c, double mean, double var)
    : coeff(c), noise_mean(mean), noise_var(var) {
  if (!(std::abs(coeff) < 1.0))
    throw ParameterError("scalar ar model: |coefficient| must be < 1");
  if (!(noise_var > 0.0))
    throw ParameterError("scalar ar model: noise variance must be positive");
}

ParametricIidModel::ParametricIidModel(Family f, Eigen::VectorXd th,
                                       Eigen::MatrixXd sg, double k, int n)
    : family(f), theta(std::move(th)), sigma(std::move(sg)), shape(k), trials(n) {
  if (theta.size() < 1) throw ParameterError("parametric model: empty theta");
  if (family == Family::Normal) {
    if (sigma.size() == 0)
      sigma = Eigen::MatrixXd::Identity(theta.size(), theta.size());
    if (sigma.rows() != theta.size() || sigma.cols() != theta.size())
      throw ParameterError("parametric model: covariance dimension mismatch");
    checked_llt(sigma, "parametric model");
    return;
  }
  if (theta.size() != 1)
    throw ParameterError("parametric model: theta must be scalar for this family");
  const double t = theta[0];
  switch (family) {
    case Family::Exponential:
    case Family::Gamma:
    case Family::Poisson:
      if (!(t > 0.0)) throw ParameterError("parametric model: theta must be > 0");
      break;
    case Family::Bernoulli:
    case Family::Geometric:
    case Family::Binomial:
      if (!(t > 0.0 && t < 1.0))
        throw ParameterError("parametric model: theta must lie in (0, 1)");
      break;
    default:
      break;
  }
  if (family == Family::Gamma && !(shape > 0.0))
    throw ParameterError("parametric model: gamma shape must be > 0");
  if (family == Family::Binomial && trials < 1)
    throw ParameterError("parametric model: binomial trials must be >= 1");
}

ParametricIidModel ParametricIidModel::scalar(Family f, double theta,
                                              double nuisance) {
  Eigen::VectorXd t(1);
  t << theta;
  if (f == Family::Normal) {
    Eigen::MatrixXd s(1, 1);
    s << nuisance;
    return ParametricIidModel(f, t, s);
  }
  if (f == Family::Gamma) return ParametricIidModel(f, t, {}, nuisance);
  if (f == Family::Binomial)
    return ParametricIidModel(f, t, {}, 1.0, static_cast<int>(nuisance));
  return ParametricIidModel(f, t);
}

namespace {

Trajectory simulate_finite_iid(const FiniteIidModel& model, long horizon,
                               CounterRng& rng) {
  Eigen::VectorXd cumulative(model.probs.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < model.probs.size(); ++i)
    cumulative[i] = (acc += model.probs[i]);
  Trajectory traj;
  traj.states.resize(horizon);
  for (long t = 0; t < horizon; ++t)
    traj.states[t] = rng.next_categorical(cumulative);
  return traj;
}

Trajectory simulate_markov(const MarkovDoubletModel& model, long horizon,
                           CounterRng& rng) {
  const MarkovDerived derived = markov_derived(model);
  const Eigen::Index m = model.num_states();
  Eigen::MatrixXd cumulative(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < m; ++j)
      cumulative(i, j) = (acc += derived.transition(i, j));
  }
  Trajectory traj;
  traj.prepended_state = model.initial_state;
  traj.states.resize(horizon);
  int state = model.initial_state;
  for (long t = 0; t < horizon; ++t) {
    state = rng.next_categorical(cumulative.row(state - 1));
    traj.states[t] = state;
  }
  return traj;
}

Trajectory simulate_var(const VarDriftModel& model, long horizon,
                        CounterRng& rng) {
  const Eigen::Index n = model.dimension();
  const Eigen::MatrixXd chol_stat =
      Eigen::LLT<Eigen::MatrixXd>(model.stationary_cov).matrixL();
  const Eigen::MatrixXd chol_noise =
      Eigen::LLT<Eigen::MatrixXd>(model.noise_cov).matrixL();
  Trajectory traj;
  traj.reals.resize(horizon, n);
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.next_normal();
  Eigen::VectorXd x = model.stationary_mean() + chol_stat * z;
  traj.reals.row(0) = x.transpose();
  for (long t = 1; t < horizon; ++t) {
    for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.next_normal();
    x = model.drift + model.coeff * x + chol_noise * z;
    traj.reals.row(t) = x.transpose();
  }
  return traj;
}

Trajectory simulate_scalar_ar(const ScalarArModel& model, long horizon,
                              CounterRng& rng) {
  Trajectory traj;
  traj.reals.resize(horizon, 1);
  double x = model.stationary_mean() +
             std::sqrt(model.stationary_var()) * rng.next_normal();
  traj.reals(0, 0) = x;
  const double noise_sd = std::sqrt(model.noise_var);
  for (long t = 1; t < horizon; ++t) {
    x = model.coeff * x + model.noise_mean + noise_sd * rng.next_normal();
    traj.reals(t, 0) = x;
  }
  return traj;
}

Trajectory simulate_parametric(const ParametricIidModel& model, long horizon,
                               CounterRng& rng) {
  Trajectory traj;
  if (model.family == Family::Normal) {
    const Eigen::Index n = model.theta.size();
    const Eigen::MatrixXd chol =
        Eigen::LLT<Eigen::MatrixXd>(model.sigma).matrixL();
    traj.reals.resize(horizon, n);
    Eigen::VectorXd z(n);
    for (long t = 0; t < horizon; ++t) {
      for (Eigen::Index i = 0; i < n; ++i) z[i] = rng.next_normal();
      traj.reals.row(t) = (model.theta + chol * z).transpose();
    }
    return traj;
  }
  traj.reals.resize(horizon, 1);
  const double theta = model.scalar_theta();
  for (long t = 0; t < horizon; ++t) {
    double x = 0.0;
    switch (model.family) {
      case Family::Exponential: x = rng.next_exponential(theta); break;
      case Family::Gamma: x = theta * rng.next_gamma(model.shape); break;
      case Family::Poisson: x = static_cast<double>(rng.next_poisson(theta)); break;
      case Family::Bernoulli: x = static_cast<double>(rng.next_bernoulli(theta)); break;
      case Family::Geometric: x = static_cast<double>(rng.next_geometric(theta)); break;
      case Family::Binomial: x = static_cast<double>(rng.next_binomial(model.trials, theta)); break;
      default: break;
    }
    traj.reals(t, 0) = x;
  }
  return traj;
}

}  // namespace

Trajectory simulate(const ProcessModel& model, long horizon,
                    std::uint64_t seed) {
  if (horizon < 1) throw ParameterError("simulate: horizon must be >= 1");
  CounterRng rng(seed);
  return std::visit(
      [&](const auto& m) -> Trajectory {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, FiniteIidModel>)
          return simulate_finite_iid(m, horizon, rng);
        else if constexpr (std::is_same_v<M, MarkovDoubletModel>)
          return simulate_markov(m, horizon, rng);
        else if constexpr (std::is_same_v<M, VarDriftModel>)
          return simulate_var(m, horizon, rng);
        else if constexpr (std::is_same_v<M, ScalarArModel>)
          return simulate_scalar_ar(m, horizon, rng);
        else
          return simulate_parametric(m, horizon, rng);
      },
      model);
}

}  // namespace ldro
