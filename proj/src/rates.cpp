#include "ldro/rates.hpp"

#include <cmath>

namespace ldro::rates {

namespace {

constexpr double kSimplexTol = 1e-9;

void check_simplex(const Eigen::VectorXd& v, const char* what) {
  if ((v.array() < -kSimplexTol).any() || std::abs(v.sum() - 1.0) > kSimplexTol)
    throw DomainError(std::string(what) + ": point is off the simplex");
}

// x log(x / y) with the 0 log 0 convention.
double xlogxy(double x, double y) {
  if (x <= 0.0) return 0.0;
  if (y <= 0.0) return kInf;
  return x * std::log(x / y);
}

}  // namespace

double relative_entropy(const Eigen::VectorXd& s, const Eigen::VectorXd& theta) {
  if (s.size() != theta.size())
    throw DomainError("relative entropy: dimension mismatch");
  check_simplex(s, "relative entropy");
  check_simplex(theta, "relative entropy");
  double total = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double term = xlogxy(s[i], theta[i]);
    if (term == kInf) return kInf;
    total += term;
  }
  return std::max(total, 0.0);
}

double conditional_relative_entropy(const Eigen::MatrixXd& s,
                                    const Eigen::MatrixXd& theta) {
  if (s.rows() != s.cols() || theta.rows() != theta.cols() ||
      s.rows() != theta.rows())
    throw DomainError("conditional relative entropy: shape mismatch");
  const Eigen::Index m = s.rows();
  const Eigen::VectorXd s_rows = s.rowwise().sum();
  const Eigen::VectorXd theta_rows = theta.rowwise().sum();
  double total = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (s_rows[i] <= 0.0) continue;  // unvisited state, self-loop convention
    for (Eigen::Index j = 0; j < m; ++j) {
      if (s(i, j) <= 0.0) continue;
      if (theta(i, j) <= 0.0 || theta_rows[i] <= 0.0) return kInf;
      total += s(i, j) * (std::log(s(i, j) / s_rows[i]) -
                          std::log(theta(i, j) / theta_rows[i]));
    }
  }
  return std::max(total, 0.0);
}

double gaussian_quadratic_rate(const Eigen::VectorXd& s,
                               const Eigen::VectorXd& theta,
                               const Eigen::MatrixXd& sigma) {
  if (s.size() != theta.size() || sigma.rows() != s.size() ||
      sigma.cols() != s.size())
    throw DomainError("gaussian quadratic rate: dimension mismatch");
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw DomainError("gaussian quadratic rate: covariance must be positive definite");
  const Eigen::VectorXd diff = s - theta;
  return 0.5 * diff.dot(llt.solve(diff));
}

double ar_branch_lower(double theta) {
  return 0.25 * (theta - std::sqrt(theta * theta + 8.0));
}

double ar_branch_upper(double theta) {
  return 0.25 * (theta + std::sqrt(theta * theta + 8.0));
}

double ar_rate(double s, double theta, ArRateKind kind) {
  if (std::abs(theta) > 1.0)
    throw DomainError("ar rate: theta must lie in [-1, 1]");
  if (kind == ArRateKind::LeastSquares) {
    if (s >= ar_branch_lower(theta) && s <= ar_branch_upper(theta))
      return std::max(
          0.5 * std::log((1.0 - 2.0 * theta * s + theta * theta) / (1.0 - s * s)),
          0.0);
    return std::log(std::abs(theta - 2.0 * s));
  }
  if (s > -1.0 && s < 1.0)
    return std::max(
        0.5 * std::log((1.0 - 2.0 * theta * s + theta * theta) / (1.0 - s * s)),
        0.0);
  if ((s == 1.0 && theta == 1.0) || (s == -1.0 && theta == -1.0)) return 0.0;
  return kInf;
}

Nuisance nuisance_of(const ParametricIidModel& model) {
  Nuisance nu;
  nu.sigma = model.sigma;
  nu.shape = model.shape;
  nu.trials = model.trials;
  return nu;
}

namespace {

void check_family_theta(Family family, const Eigen::VectorXd& theta,
                        const Nuisance& nuisance) {
  if (family == Family::Normal) {
    if (nuisance.sigma.rows() != theta.size() ||
        nuisance.sigma.cols() != theta.size())
      throw DomainError("parametric rate: covariance dimension mismatch");
    return;
  }
  if (theta.size() != 1)
    throw DomainError("parametric rate: theta must be scalar for this family");
  const double t = theta[0];
  switch (family) {
    case Family::Exponential:
    case Family::Gamma:
    case Family::Poisson:
      if (!(t > 0.0)) throw DomainError("parametric rate: theta must be > 0");
      break;
    case Family::Bernoulli:
    case Family::Geometric:
    case Family::Binomial:
      if (!(t > 0.0 && t < 1.0))
        throw DomainError("parametric rate: theta must lie in (0, 1)");
      break;
    default:
      break;
  }
  if (family == Family::Gamma && !(nuisance.shape > 0.0))
    throw DomainError("parametric rate: gamma shape must be > 0");
  if (family == Family::Binomial && nuisance.trials < 1)
    throw DomainError("parametric rate: binomial trials must be >= 1");
}

}  // namespace

double cramer_rate(Family family, const Eigen::VectorXd& s,
                   const Eigen::VectorXd& theta, const Nuisance& nuisance) {
  check_family_theta(family, theta, nuisance);
  if (family == Family::Normal)
    return gaussian_quadratic_rate(s, theta, nuisance.sigma);
  if (s.size() != 1) throw DomainError("parametric rate: s must be scalar");
  const double x = s[0];
  const double t = theta[0];
  switch (family) {
    case Family::Exponential:
      if (x <= 0.0) return kInf;
      return t * x - 1.0 - std::log(t * x);
    case Family::Gamma: {
      const double k = nuisance.shape;
      if (x <= 0.0) return kInf;
      return x / t - k + k * std::log(k * t / x);
    }
    case Family::Poisson:
      if (x <= 0.0) return kInf;
      return x * std::log(x / t) - x + t;
    case Family::Bernoulli:
      if (x <= 0.0 || x >= 1.0) return kInf;
      return x * std::log(x * (1.0 - t) / (t * (1.0 - x))) -
             std::log((1.0 - t) / (1.0 - x));
    case Family::Geometric:
      if (x <= 1.0) return kInf;
      return (x - 1.0) * std::log((1.0 - x) / (x * (t - 1.0))) -
             std::log(t * x);
    case Family::Binomial: {
      const double n = static_cast<double>(nuisance.trials);
      if (x <= 0.0 || x >= n) return kInf;
      return x * std::log(x * (t - 1.0) / (t * (x - n))) -
             n * std::log(n * (1.0 - t) / (n - x));
    }
    default:
      break;
  }
  throw DomainError("parametric rate: unsupported family");
}

double cramer_rate(Family family, double s, double theta,
                   const Nuisance& nuisance) {
  Eigen::VectorXd sv(1), tv(1);
  sv << s;
  tv << theta;
  return cramer_rate(family, sv, tv, nuisance);
}

double limit_log_mgf(Family family, const Eigen::VectorXd& lambda,
                     const Eigen::VectorXd& theta, const Nuisance& nuisance) {
  check_family_theta(family, theta, nuisance);
  if (family == Family::Normal) {
    if (lambda.size() != theta.size())
      throw DomainError("log-mgf: dimension mismatch");
    return theta.dot(lambda) + 0.5 * lambda.dot(nuisance.sigma * lambda);
  }
  if (lambda.size() != 1) throw DomainError("log-mgf: lambda must be scalar");
  const double l = lambda[0];
  const double t = theta[0];
  // log(1 - t + t e^l), stable against exp overflow for large l.
  const auto log_mix = [&] {
    if (l <= 0.0) return std::log1p(t * std::expm1(l));
    return l + std::log(t + (1.0 - t) * std::exp(-l));
  };
  switch (family) {
    case Family::Exponential:
      if (l >= t) return kInf;
      return std::log(t / (t - l));
    case Family::Gamma:
      if (l >= 1.0 / t) return kInf;
      return -nuisance.shape * std::log1p(-t * l);
    case Family::Poisson:
      return t * std::expm1(l);
    case Family::Bernoulli:
      return log_mix();
    case Family::Geometric:
      if (l >= -std::log1p(-t)) return kInf;
      return l + std::log(t) - std::log1p(-(1.0 - t) * std::exp(l));
    case Family::Binomial:
      return nuisance.trials * log_mix();
    default:
      break;
  }
  throw DomainError("log-mgf: unsupported family");
}

double limit_log_mgf(Family family, double lambda, double theta,
                     const Nuisance& nuisance) {
  Eigen::VectorXd lv(1), tv(1);
  lv << lambda;
  tv << theta;
  return limit_log_mgf(family, lv, tv, nuisance);
}

double finite_iid_log_mgf(const Eigen::VectorXd& lambda,
                          const Eigen::VectorXd& theta) {
  if (lambda.size() != theta.size())
    throw DomainError("finite iid log-mgf: dimension mismatch");
  check_simplex(theta, "finite iid log-mgf");
  // Shift by max(lambda) for overflow safety.
  const double shift = lambda.maxCoeff();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < lambda.size(); ++i)
    acc += theta[i] * std::exp(lambda[i] - shift);
  return shift + std::log(acc);
}

namespace {

constexpr double kDivergenceCap = 1e8;
constexpr double kGoldenTol = 1e-10;

// Golden-section maximization of a concave objective on [lo, hi]; handles
// -inf plateaus at the edges of the log-MGF domain.
double golden_max(const std::function<double(double)>& f, double lo, double hi,
                  double flo, double fhi) {
  constexpr double invphi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  double best = std::max(std::max(flo, fhi), std::max(f1, f2));
  while (b - a > kGoldenTol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = f(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = f(x1);
    }
    best = std::max(best, std::max(f1, f2));
    if (best > kDivergenceCap) return kInf;
  }
  return best;
}

}  // namespace

double numerical_conjugate(const std::function<double(double)>& log_mgf,
                           double s) {
  const auto objective = [&](double lambda) {
    const double v = log_mgf(lambda);
    return v == kInf ? -kInf : lambda * s - v;
  };
  // Expand a bracket around 0 until both edges fall below the running best.
  double lo = -1.0, hi = 1.0;
  double f0 = objective(0.0);
  double flo = objective(lo), fhi = objective(hi);
  double best = std::max(f0, std::max(flo, fhi));
  for (int round = 0; round < 200; ++round) {
    if (best > kDivergenceCap) return kInf;
    bool grew = false;
    if (fhi >= best - 1e-16 && fhi > -kInf) {
      hi *= 2.0;
      fhi = objective(hi);
      best = std::max(best, fhi);
      grew = true;
    }
    if (flo >= best - 1e-16 && flo > -kInf) {
      lo *= 2.0;
      flo = objective(lo);
      best = std::max(best, flo);
      grew = true;
    }
    if (!grew) break;
  }
  if (best > kDivergenceCap) return kInf;
  const double value = golden_max(objective, lo, hi, flo, fhi);
  // objective(0) = 0, so the conjugate is nonnegative up to roundoff.
  return value < 0.0 && value > -1e-12 ? 0.0 : value;
}

double numerical_conjugate(
    const std::function<double(const Eigen::VectorXd&)>& log_mgf,
    const Eigen::VectorXd& s) {
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(s.size());
  const auto objective = [&](const Eigen::VectorXd& l) {
    const double v = log_mgf(l);
    return v == kInf ? -kInf : l.dot(s) - v;
  };
  double current = objective(lambda);
  for (int sweep = 0; sweep < 400; ++sweep) {
    const double before = current;
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
      const auto coord = [&](double x) {
        Eigen::VectorXd l = lambda;
        l[i] = x;
        return objective(l);
      };
      double lo = lambda[i] - 1.0, hi = lambda[i] + 1.0;
      double flo = coord(lo), fhi = coord(hi);
      double best = std::max(current, std::max(flo, fhi));
      for (int round = 0; round < 200; ++round) {
        if (best > kDivergenceCap) return kInf;
        bool grew = false;
        if (fhi >= best - 1e-16 && fhi > -kInf) {
          hi += (hi - lambda[i]);
          fhi = coord(hi);
          best = std::max(best, fhi);
          grew = true;
        }
        if (flo >= best - 1e-16 && flo > -kInf) {
          lo -= (lambda[i] - lo);
          flo = coord(lo);
          best = std::max(best, flo);
          grew = true;
        }
        if (!grew) break;
      }
      if (best > kDivergenceCap) return kInf;
      // Golden-section along the coordinate; track the arg as well.
      constexpr double invphi = 0.6180339887498949;
      double a = lo, b = hi;
      while (b - a > kGoldenTol * std::max(1.0, std::abs(a) + std::abs(b))) {
        const double x1 = b - invphi * (b - a);
        const double x2 = a + invphi * (b - a);
        if (coord(x1) < coord(x2))
          a = x1;
        else
          b = x2;
      }
      lambda[i] = 0.5 * (a + b);
      current = objective(lambda);
      if (current > kDivergenceCap) return kInf;
    }
    if (current - before < 1e-13 * std::max(1.0, std::abs(current))) break;
  }
  return current > -1e-12 && current < 0.0 ? 0.0 : current;
}

LogLikelihoodRatio rn_derivative_finite_iid(const Eigen::VectorXd& theta,
                                            const Trajectory& traj) {
  if ((theta.array() <= 0.0).any())
    throw DomainError("likelihood ratio: theta must be strictly positive");
  check_simplex(theta, "likelihood ratio");
  if (!traj.is_discrete())
    throw DataError("likelihood ratio: need a discrete path");
  const double t = static_cast<double>(traj.length());
  const double d = static_cast<double>(theta.size());
  double direct = t * std::log(d);
  for (int state : traj.states) direct += std::log(theta[state - 1]);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(theta.size());
  for (int state : traj.states) counts[state - 1] += 1.0;
  const Eigen::VectorXd empirical = counts / t;
  const double expfam =
      (t * theta.array().log().matrix()).dot(empirical) + t * std::log(d);
  return {direct, expfam};
}

Eigen::VectorXd grad_limit_log_mgf_at_zero(Family family,
                                           const Eigen::VectorXd& theta,
                                           const Nuisance& nuisance) {
  const Eigen::Index n = family == Family::Normal ? theta.size() : 1;
  constexpr double h = 1e-6;
  Eigen::VectorXd grad(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd up = Eigen::VectorXd::Zero(n);
    up[i] = h;
    const double plus = limit_log_mgf(family, up, theta, nuisance);
    up[i] = -h;
    const double minus = limit_log_mgf(family, up, theta, nuisance);
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

Eigen::VectorXd grad_finite_iid_log_mgf_at_zero(const Eigen::VectorXd& theta) {
  const Eigen::Index n = theta.size();
  constexpr double h = 1e-6;
  Eigen::VectorXd grad(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd up = Eigen::VectorXd::Zero(n);
    up[i] = h;
    const double plus = finite_iid_log_mgf(up, theta);
    up[i] = -h;
    const double minus = finite_iid_log_mgf(up, theta);
    grad[i] = (plus - minus) / (2.0 * h);
  }
  return grad;
}

double RateSpec::evaluate(const Eigen::MatrixXd& s,
                          const Eigen::MatrixXd& theta) const {
  switch (kind) {
    case Kind::RelativeEntropy:
      return relative_entropy(s.col(0), theta.col(0));
    case Kind::ConditionalRelativeEntropy:
      return conditional_relative_entropy(s, theta);
    case Kind::GaussianQuadratic:
      return gaussian_quadratic_rate(s.col(0), theta.col(0), nuisance.sigma);
    case Kind::ArLeastSquares:
      return ar_rate(s(0, 0), theta(0, 0), ArRateKind::LeastSquares);
    case Kind::ArYuleWalker:
      return ar_rate(s(0, 0), theta(0, 0), ArRateKind::YuleWalker);
    case Kind::Cramer:
      return cramer_rate(family, s.col(0), theta.col(0), nuisance);
  }
  throw UsageError("rate spec: unknown kind");
}

RateSpec::Kind rate_kind_from_name(const std::string& name) {
  if (name == "relative-entropy") return RateSpec::Kind::RelativeEntropy;
  if (name == "conditional-relative-entropy")
    return RateSpec::Kind::ConditionalRelativeEntropy;
  if (name == "gaussian-quadratic") return RateSpec::Kind::GaussianQuadratic;
  if (name == "ar-ls") return RateSpec::Kind::ArLeastSquares;
  if (name == "ar-yw") return RateSpec::Kind::ArYuleWalker;
  if (name == "cramer") return RateSpec::Kind::Cramer;
  throw UsageError("unknown rate kind: " + name);
}

}  // namespace ldro::rates
