#include "ldro/dro.hpp"

#include <algorithm>
#include <cmath>

#include "ldro/rng.hpp"
#include "ldro/simplex_lp.hpp"

namespace ldro::dro {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using rates::kInf;

LossTable::LossTable(MatrixXd l, std::vector<std::string> d)
    : losses(std::move(l)), decisions(std::move(d)) {
  if (losses.rows() < 1 || losses.cols() < 2)
    throw UsageError("loss table: need at least one decision and two states");
  if (!losses.allFinite())
    throw UsageError("loss table: losses must be finite");
  if (decisions.empty()) {
    decisions.resize(losses.rows());
    for (Eigen::Index i = 0; i < losses.rows(); ++i)
      decisions[i] = std::to_string(i + 1);
  }
  if (static_cast<Eigen::Index>(decisions.size()) != losses.rows())
    throw UsageError("loss table: one label per decision required");
}

AmbiguitySpec AmbiguitySpec::penalized(double epsilon) {
  AmbiguitySpec spec;
  spec.kind = Kind::PenalizedEmpirical;
  spec.radius = epsilon;
  return spec;
}

AmbiguitySpec AmbiguitySpec::entropy_ball(double r) {
  AmbiguitySpec spec;
  spec.kind = Kind::EntropyBall;
  spec.radius = r;
  return spec;
}

AmbiguitySpec AmbiguitySpec::conditional_entropy_ball(double r) {
  AmbiguitySpec spec;
  spec.kind = Kind::ConditionalEntropyBall;
  spec.radius = r;
  return spec;
}

AmbiguitySpec AmbiguitySpec::ellipsoid_ball(double r, MatrixXd sigma) {
  AmbiguitySpec spec;
  spec.kind = Kind::EllipsoidBall;
  spec.radius = r;
  spec.sigma = std::move(sigma);
  return spec;
}

AmbiguitySpec AmbiguitySpec::ar_ball(double r, rates::ArRateKind kind) {
  AmbiguitySpec spec;
  spec.kind = Kind::ArBall;
  spec.radius = r;
  spec.ar_kind = kind;
  return spec;
}

AmbiguitySpec AmbiguitySpec::moment_set(double epsilon, int order) {
  AmbiguitySpec spec;
  spec.kind = Kind::MomentSet;
  spec.radius = epsilon;
  spec.moment_order = order;
  return spec;
}

AmbiguitySpec AmbiguitySpec::wasserstein_set(double epsilon) {
  AmbiguitySpec spec;
  spec.kind = Kind::WassersteinSet;
  spec.radius = epsilon;
  return spec;
}

const char* spec_kind_name(AmbiguitySpec::Kind kind) {
  switch (kind) {
    case AmbiguitySpec::Kind::Empirical: return "empirical";
    case AmbiguitySpec::Kind::PenalizedEmpirical: return "penalized";
    case AmbiguitySpec::Kind::EntropyBall: return "entropy";
    case AmbiguitySpec::Kind::ConditionalEntropyBall: return "conditional-entropy";
    case AmbiguitySpec::Kind::EllipsoidBall: return "ellipsoid";
    case AmbiguitySpec::Kind::ArBall: return "ar";
    case AmbiguitySpec::Kind::MomentSet: return "moment";
    case AmbiguitySpec::Kind::WassersteinSet: return "wasserstein";
  }
  return "?";
}

AmbiguitySpec::Kind spec_kind_from_name(const std::string& name) {
  if (name == "empirical") return AmbiguitySpec::Kind::Empirical;
  if (name == "penalized") return AmbiguitySpec::Kind::PenalizedEmpirical;
  if (name == "entropy") return AmbiguitySpec::Kind::EntropyBall;
  if (name == "conditional-entropy")
    return AmbiguitySpec::Kind::ConditionalEntropyBall;
  if (name == "ellipsoid") return AmbiguitySpec::Kind::EllipsoidBall;
  if (name == "ar") return AmbiguitySpec::Kind::ArBall;
  if (name == "moment") return AmbiguitySpec::Kind::MomentSet;
  if (name == "wasserstein") return AmbiguitySpec::Kind::WassersteinSet;
  throw UsageError("unknown ambiguity spec: " + name);
}

namespace {

constexpr double kSimplexTol = 1e-9;

void check_simplex_point(const VectorXd& s, const char* what) {
  if ((s.array() < -kSimplexTol).any() || std::abs(s.sum() - 1.0) > kSimplexTol)
    throw DomainError(std::string(what) + ": statistic is off the simplex");
}

}  // namespace

PredictorOutput entropy_dro_dual(const VectorXd& loss_row, const VectorXd& s,
                                 double r) {
  if (loss_row.size() != s.size())
    throw DomainError("entropy dual: dimension mismatch");
  check_simplex_point(s, "entropy dual");
  if (r < 0.0) throw DomainError("entropy dual: radius must be nonnegative");

  PredictorOutput out;
  if (r == 0.0) {
    // The dual infimum is attained only as alpha grows without bound; the
    // value collapses to the plain expectation.
    out.value = loss_row.dot(s);
    out.worst_case_model = s;
    return out;
  }

  const double top = loss_row.maxCoeff();
  std::vector<Eigen::Index> active;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s[i] > 0.0) active.push_back(i);

  const double discount = std::exp(-r);
  const auto objective = [&](double alpha) {
    double log_prod = 0.0;
    for (Eigen::Index i : active) {
      const double gap = alpha - loss_row[i];
      if (gap <= 0.0) return alpha;  // product vanishes at the boundary
      log_prod += s[i] * std::log(gap);
    }
    return alpha - discount * std::exp(log_prod);
  };

  // Bracket: double the width from top + 1 until the objective turns upward.
  double lo = top;
  double width = 1.0;
  double prev = objective(top + width);
  while (width < 1e18) {
    const double next = objective(top + 2.0 * width);
    if (next > prev) break;
    width *= 2.0;
    prev = next;
  }
  double a = lo, b = top + 2.0 * width;
  constexpr double invphi = 0.6180339887498949;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = objective(x1), f2 = objective(x2);
  while (b - a > 1e-10 * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (f1 > f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = objective(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = objective(x1);
    }
  }
  const double alpha_star = 0.5 * (a + b);
  // Include the boundary explicitly: the product kinks to zero there when
  // the statistic puts mass on an argmax state.
  out.value = std::min({objective(alpha_star), objective(lo), f1, f2});

  if (alpha_star > top + 1e-9) {
    VectorXd model = VectorXd::Zero(s.size());
    double total = 0.0;
    for (Eigen::Index i : active) total += s[i] / (alpha_star - loss_row[i]);
    for (Eigen::Index i : active)
      model[i] = s[i] / ((alpha_star - loss_row[i]) * total);
    out.worst_case_model = model;
  }
  return out;
}

namespace {

// Largest t in [0, 1] with D(s || s + t (target - s)) <= r; the divergence
// is convex along the segment and vanishes at t = 0.
VectorXd retract_to_entropy_ball(const VectorXd& s, const VectorXd& target,
                                 double r) {
  const auto divergence = [&](double t) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      if (s[i] <= 0.0) continue;
      const double mix = s[i] + t * (target[i] - s[i]);
      if (mix <= 0.0) return kInf;
      acc += s[i] * std::log(s[i] / mix);
    }
    return acc;
  };
  if (divergence(1.0) <= r) return target;
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (divergence(mid) <= r)
      lo = mid;
    else
      hi = mid;
  }
  return s + lo * (target - s);
}

}  // namespace

namespace {

// Ascent machinery for the primal ball maximization. The objective is
// linear, so along any straight feasible direction the best step is the
// largest feasible one; steps are limited by the bounds theta >= 0 and by
// the divergence ball, whose crossing is found by safeguarded Newton.
class EntropyBallAscent {
 public:
  EntropyBallAscent(const VectorXd& loss, const VectorXd& s, double r)
      : loss_(loss), s_(s), r_(r), d_(s.size()) {}

  double divergence(const VectorXd& theta) const {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < d_; ++i)
      if (s_[i] > 0.0) {
        if (theta[i] <= 0.0) return kInf;
        acc += s_[i] * std::log(s_[i] / theta[i]);
      }
    return acc;
  }

  // Largest t in [0, t_max] keeping divergence(theta + t dir) <= r, given a
  // feasible base point.
  double ball_step(const VectorXd& theta, const VectorXd& dir,
                   double t_max) const {
    const auto g = [&](double t) { return divergence(theta + t * dir) - r_; };
    if (g(t_max) <= 0.0) return t_max;
    double lo = 0.0, hi = t_max;
    // Newton from the midpoint, bisection as the safeguard.
    double t = 0.5 * t_max;
    for (int it = 0; it < 60; ++it) {
      const double val = g(t);
      if (val <= 0.0) {
        lo = t;
        if (val >= -1e-13 * std::max(1.0, r_)) break;
      } else {
        hi = t;
      }
      double deriv = 0.0;
      for (Eigen::Index i = 0; i < d_; ++i)
        if (s_[i] > 0.0) {
          const double mix = theta[i] + t * dir[i];
          if (mix <= 0.0) {
            deriv = 0.0;
            break;
          }
          deriv -= s_[i] * dir[i] / mix;
        }
      double next = deriv != 0.0 ? t - val / deriv : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (hi - lo < 1e-15 * std::max(1.0, t_max)) break;
      t = next;
    }
    return lo;
  }

  // Pull an infeasible point back to the ball along the chord to s; the
  // divergence is convex on the chord and zero at s.
  VectorXd retract(const VectorXd& target) const {
    double div = divergence(target);
    if (div <= r_) return target;
    double lo = 0.0, hi = 1.0, t = 0.5;
    for (int it = 0; it < 80; ++it) {
      const VectorXd mix = s_ + t * (target - s_);
      div = divergence(mix);
      if (div <= r_) {
        lo = t;
        if (div >= r_ - 1e-13 * std::max(1.0, r_)) break;
      } else {
        hi = t;
      }
      double deriv = 0.0;
      for (Eigen::Index i = 0; i < d_; ++i)
        if (s_[i] > 0.0) {
          const double m = s_[i] + t * (target[i] - s_[i]);
          if (m <= 0.0) {
            deriv = 0.0;
            break;
          }
          deriv -= s_[i] * (target[i] - s_[i]) / m;
        }
      double next = (deriv != 0.0 && std::isfinite(div))
                        ? t - (div - r_) / deriv
                        : 0.5 * (lo + hi);
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (hi - lo < 1e-15) break;
      t = next;
    }
    return s_ + lo * (target - s_);
  }

  // Pull an infeasible point back through the boundary along the varying
  // constraint normal, which keeps the tangential position; falls back to
  // the chord retraction when a coordinate would cross zero.
  VectorXd retract_normal(const VectorXd& target) const {
    double div = divergence(target);
    if (div <= r_) return target;
    VectorXd x = target;
    for (int it = 0; it < 30; ++it) {
      VectorXd g = VectorXd::Zero(d_);
      for (Eigen::Index i = 0; i < d_; ++i) {
        if (s_[i] <= 0.0) continue;
        if (x[i] <= 0.0) return retract(target);
        g[i] = -s_[i] / x[i];
      }
      g.array() -= g.mean();  // stay on the sum-one hyperplane
      const double gg = g.squaredNorm();
      if (gg <= 0.0) return retract(target);
      x -= ((div - r_) / gg) * g;
      if ((x.array() < 0.0).any()) return retract(target);
      div = divergence(x);
      if (div <= r_ && div >= r_ - 1e-12 * std::max(1.0, r_)) return x;
    }
    return div <= r_ ? x : retract(target);
  }

  // Projected-gradient steps: move along the loss gradient projected on the
  // free simplex directions (and on the constraint tangent when the ball
  // binds), retracting each trial point back to the feasible set. The step
  // length is chosen by golden section on the retracted objective.
  double flow(VectorXd& theta, int iterations) const {
    double current = loss_.dot(theta);
    for (int it = 0; it < iterations; ++it) {
      const VectorXd dir = direction(theta);
      if (dir.norm() < 1e-13) break;
      // Cap from the nonnegativity bounds.
      double cap = 1e300;
      for (Eigen::Index i = 0; i < d_; ++i)
        if (dir[i] < -1e-15) cap = std::min(cap, theta[i] / -dir[i]);
      if (cap <= 1e-16) break;
      cap = std::min(cap, 1e6);
      const auto value_at = [&](double t) {
        return loss_.dot(retract_normal(theta + t * dir));
      };
      double lo = 0.0, hi = cap;
      constexpr double invphi = 0.6180339887498949;
      double x1 = hi - invphi * hi, x2 = invphi * hi;
      double f1 = value_at(x1), f2 = value_at(x2);
      for (int g = 0; g < 48; ++g) {
        if (f1 > f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - invphi * (hi - lo);
          f1 = value_at(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + invphi * (hi - lo);
          f2 = value_at(x2);
        }
      }
      const double t_best = f1 > f2 ? x1 : x2;
      const double f_cap = value_at(cap);
      const VectorXd candidate = retract_normal(
          theta + (std::max(f1, f2) >= f_cap ? t_best : cap) * dir);
      const double value = loss_.dot(candidate);
      if (value <= current + 1e-14 * std::max(1.0, std::abs(current))) break;
      theta = candidate;
      current = value;
    }
    return current;
  }

  // Exponentiated-gradient variant: trial points theta * exp(t * loss),
  // renormalized and retracted. Multiplicative steps keep every coordinate
  // positive, so near-zero coordinates rescale instead of capping the step.
  double flow_multiplicative(VectorXd& theta, int iterations) const {
    double current = loss_.dot(theta);
    const double shift = loss_.maxCoeff();
    for (int it = 0; it < iterations; ++it) {
      const auto value_at = [&](double t) {
        VectorXd x(d_);
        for (Eigen::Index i = 0; i < d_; ++i)
          x[i] = theta[i] * std::exp(t * (loss_[i] - shift));
        const double total = x.sum();
        if (!(total > 0.0)) return std::make_pair(-kInf, VectorXd(theta));
        x /= total;
        x = retract_normal(x);
        return std::make_pair(loss_.dot(x), x);
      };
      double hi = 1.0;
      auto at_hi = value_at(hi);
      for (int round = 0; round < 60; ++round) {
        auto next = value_at(2.0 * hi);
        if (next.first <= at_hi.first) break;
        hi *= 2.0;
        at_hi = next;
      }
      double lo = 0.0, a = lo, b = hi;
      constexpr double invphi = 0.6180339887498949;
      double x1 = b - invphi * (b - a);
      double x2 = a + invphi * (b - a);
      auto r1 = value_at(x1), r2 = value_at(x2);
      for (int g = 0; g < 48; ++g) {
        if (r1.first > r2.first) {
          b = x2;
          x2 = x1;
          r2 = r1;
          x1 = b - invphi * (b - a);
          r1 = value_at(x1);
        } else {
          a = x1;
          x1 = x2;
          r1 = r2;
          x2 = a + invphi * (b - a);
          r2 = value_at(x2);
        }
      }
      const auto& pick = r1.first > r2.first ? r1 : r2;
      const auto& best_step = pick.first >= at_hi.first ? pick : at_hi;
      if (best_step.first <= current + 1e-15 * std::max(1.0, std::abs(current)))
        break;
      theta = best_step.second;
      current = best_step.first;
    }
    return current;
  }

  // Pairwise mass exchanges: for each improving pair, transfer as much mass
  // as the ball and the bounds allow. Stationary under all exchanges means
  // stationary on the polytope tangent cone.
  double exchange(VectorXd& theta, int sweeps) const {
    double current = loss_.dot(theta);
    VectorXd dir = VectorXd::Zero(d_);
    for (int sweep = 0; sweep < sweeps; ++sweep) {
      double gained = 0.0;
      for (Eigen::Index to = 0; to < d_; ++to) {
        for (Eigen::Index from = 0; from < d_; ++from) {
          if (loss_[to] <= loss_[from] + 1e-16 || theta[from] <= 0.0) continue;
          dir[to] = 1.0;
          dir[from] = -1.0;
          const double t = ball_step(theta, dir, theta[from]);
          if (t > 0.0) {
            theta[to] += t;
            theta[from] -= t;
            gained += t * (loss_[to] - loss_[from]);
          }
          dir[to] = 0.0;
          dir[from] = 0.0;
        }
      }
      current += gained;
      if (gained < 1e-15 * std::max(1.0, std::abs(current))) break;
    }
    return loss_.dot(theta);
  }

 private:
  VectorXd direction(const VectorXd& theta) const {
    const bool on_boundary = divergence(theta) >= r_ - 1e-11;
    // Start with every coordinate active; drop bound coordinates that the
    // projected direction would push negative, and recompute until stable.
    std::vector<bool> active(d_, true);
    VectorXd dir = VectorXd::Zero(d_);
    for (int round = 0; round < static_cast<int>(d_) + 1; ++round) {
      dir.setZero();
      double mean = 0.0;
      int count = 0;
      for (Eigen::Index i = 0; i < d_; ++i)
        if (active[i]) {
          mean += loss_[i];
          ++count;
        }
      if (count < 2) return VectorXd::Zero(d_);
      mean /= count;
      for (Eigen::Index i = 0; i < d_; ++i)
        if (active[i]) dir[i] = loss_[i] - mean;
      if (on_boundary) {
        VectorXd normal = VectorXd::Zero(d_);
        for (Eigen::Index i = 0; i < d_; ++i)
          if (active[i] && s_[i] > 0.0 && theta[i] > 0.0)
            normal[i] = -s_[i] / theta[i];
        double nmean = 0.0;
        for (Eigen::Index i = 0; i < d_; ++i)
          if (active[i]) nmean += normal[i];
        nmean /= count;
        for (Eigen::Index i = 0; i < d_; ++i)
          if (active[i]) normal[i] -= nmean;
        const double nn = normal.squaredNorm();
        if (nn > 0.0) {
          const double overlap = dir.dot(normal) / nn;
          if (overlap > 0.0) dir -= overlap * normal;
        }
      }
      bool changed = false;
      for (Eigen::Index i = 0; i < d_; ++i)
        if (active[i] && theta[i] <= 1e-14 && dir[i] < 0.0) {
          active[i] = false;
          changed = true;
        }
      if (!changed) break;
    }
    return dir;
  }

  const VectorXd& loss_;
  const VectorXd& s_;
  double r_;
  Eigen::Index d_;
};

}  // namespace

double entropy_primal_oracle(const VectorXd& loss_row, const VectorXd& s,
                             double r, std::uint64_t seed, long screen_samples,
                             int starts) {
  if (loss_row.size() != s.size())
    throw DomainError("entropy oracle: dimension mismatch");
  check_simplex_point(s, "entropy oracle");
  const Eigen::Index d = s.size();
  double best = loss_row.dot(s);
  if (r <= 0.0) return best;

  CounterRng rng(seed);
  const EntropyBallAscent ascent(loss_row, s, r);

  // Dirichlet(1,...,1) screen: cheap feasible candidates, useful mostly at
  // large radii.
  VectorXd point(d);
  for (long k = 0; k < screen_samples; ++k) {
    double total = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      point[i] = rng.next_exponential(1.0);
      total += point[i];
    }
    point /= total;
    const double value = loss_row.dot(point);
    if (value <= best) continue;
    if (ascent.divergence(point) <= r) best = value;
  }

  // The feasible set is convex, so every start heads for the same maximum;
  // the restarts guard the line searches, not the geometry.
  VectorXd best_point = s;
  for (int start = 0; start < starts; ++start) {
    VectorXd theta(d);
    double total = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
      theta[i] = rng.next_exponential(1.0);
      total += theta[i];
    }
    theta /= total;
    theta = retract_to_entropy_ball(s, theta, r);
    ascent.flow(theta, 150);
    const double value = ascent.exchange(theta, 50);
    if (value > best) {
      best = value;
      best_point = theta;
    }
  }
  // Polish the incumbent and a fresh center start, alternating the additive
  // and multiplicative flows until neither makes progress.
  for (VectorXd theta : {best_point, VectorXd(s)}) {
    double value = loss_row.dot(theta);
    for (int round = 0; round < 8; ++round) {
      ascent.flow_multiplicative(theta, 400);
      ascent.flow(theta, 400);
      const double improved = ascent.exchange(theta, 50);
      if (improved <= value + 1e-15 * std::max(1.0, std::abs(value))) {
        value = std::max(value, improved);
        break;
      }
      value = improved;
    }
    best = std::max(best, value);
  }
  return best;
}

PredictorOutput moment_set_worst_case(const VectorXd& loss_row,
                                      const VectorXd& s, double epsilon,
                                      int order) {
  if (loss_row.size() != s.size())
    throw DomainError("moment set: dimension mismatch");
  check_simplex_point(s, "moment set");
  if (epsilon < 0.0 || order < 1)
    throw DomainError("moment set: need epsilon >= 0 and order >= 1");
  const Eigen::Index d = s.size();

  LpProblem lp;
  lp.c = loss_row;
  lp.a_eq = MatrixXd::Ones(1, d);
  lp.b_eq = VectorXd::Ones(1);
  lp.a_ub = MatrixXd::Zero(2 * order, d);
  lp.b_ub = VectorXd::Zero(2 * order);
  for (int j = 1; j <= order; ++j) {
    // Scale each moment row to unit magnitude for conditioning.
    const double scale = std::pow(static_cast<double>(d), -j);
    VectorXd row(d);
    for (Eigen::Index i = 0; i < d; ++i)
      row[i] = std::pow(static_cast<double>(i + 1), j) * scale;
    const double target = row.dot(s);
    lp.a_ub.row(2 * (j - 1)) = row.transpose();
    lp.b_ub[2 * (j - 1)] = target + epsilon * scale;
    lp.a_ub.row(2 * j - 1) = -row.transpose();
    lp.b_ub[2 * j - 1] = -(target - epsilon * scale);
  }
  const LpSolution sol = solve_lp(lp);
  if (!sol.optimal())
    throw StabilityError("moment set: linear program failed");
  PredictorOutput out;
  out.value = sol.value;
  out.worst_case_model = sol.x;
  return out;
}

PredictorOutput wasserstein_set_worst_case(const VectorXd& loss_row,
                                           const VectorXd& s, double epsilon) {
  if (loss_row.size() != s.size())
    throw DomainError("wasserstein set: dimension mismatch");
  check_simplex_point(s, "wasserstein set");
  if (epsilon < 0.0)
    throw DomainError("wasserstein set: radius must be nonnegative");
  PredictorOutput out;
  const Eigen::Index d = s.size();
  if (epsilon == 0.0) {
    out.value = loss_row.dot(s);
    out.worst_case_model = s;
    return out;
  }

  // Transport plan gamma (row-major): rows marginalize to s, columns to the
  // adversarial distribution, total ground cost at most epsilon.
  LpProblem lp;
  lp.c = VectorXd::Zero(d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) lp.c[i * d + j] = loss_row[j];
  lp.a_eq = MatrixXd::Zero(d, d * d);
  lp.b_eq = s;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) lp.a_eq(i, i * d + j) = 1.0;
  lp.a_ub = MatrixXd::Zero(1, d * d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      lp.a_ub(0, i * d + j) = std::abs(static_cast<double>(i - j));
  lp.b_ub = VectorXd::Constant(1, epsilon);
  const LpSolution sol = solve_lp(lp);
  if (!sol.optimal())
    throw StabilityError("wasserstein set: linear program failed");
  out.value = sol.value;
  VectorXd model = VectorXd::Zero(d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) model[j] += sol.x[i * d + j];
  out.worst_case_model = model;
  return out;
}

PredictorOutput ellipsoid_linear_worst_case(const VectorXd& a, double b,
                                            const VectorXd& s,
                                            const MatrixXd& sigma, double r) {
  if (a.size() != s.size() || sigma.rows() != a.size() ||
      sigma.cols() != a.size())
    throw DomainError("ellipsoid worst case: dimension mismatch");
  if (r < 0.0) throw DomainError("ellipsoid worst case: radius must be >= 0");
  Eigen::LLT<MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw DomainError("ellipsoid worst case: covariance must be positive definite");
  PredictorOutput out;
  const double quad = a.dot(sigma * a);
  out.value = a.dot(s) + b + std::sqrt(2.0 * r * quad);
  if (quad > 0.0 && r > 0.0)
    out.worst_case_model = s + (std::sqrt(2.0 * r) / std::sqrt(quad)) * (sigma * a);
  else
    out.worst_case_model = s;
  return out;
}

PredictorOutput ar_ball_worst_case(const std::function<double(double)>& cost,
                                   double s, double r, rates::ArRateKind kind) {
  if (r < 0.0) throw DomainError("ar ball: radius must be nonnegative");

  const auto rate = [&](double theta) { return rates::ar_rate(s, theta, kind); };
  const auto maximize_on = [&](double lo, double hi) {
    // Grid scan plus golden refinement around the best cell.
    const int n = 1001;
    double best_arg = lo, best_val = -kInf;
    for (int k = 0; k < n; ++k) {
      const double theta = lo + (hi - lo) * k / (n - 1.0);
      const double v = cost(theta);
      if (v > best_val) {
        best_val = v;
        best_arg = theta;
      }
    }
    const double cell = (hi - lo) / (n - 1.0);
    double a = std::max(lo, best_arg - cell), b = std::min(hi, best_arg + cell);
    constexpr double invphi = 0.6180339887498949;
    while (b - a > 1e-12) {
      const double x1 = b - invphi * (b - a);
      const double x2 = a + invphi * (b - a);
      if (cost(x1) > cost(x2))
        b = x2;
      else
        a = x1;
    }
    const double refined = cost(0.5 * (a + b));
    return std::make_pair(refined > best_val ? 0.5 * (a + b) : best_arg,
                          std::max(refined, best_val));
  };

  PredictorOutput out;
  if (kind == rates::ArRateKind::YuleWalker && std::abs(s) >= 1.0) {
    if (std::abs(s) == 1.0) {
      out.value = cost(s);
      out.worst_case_model = VectorXd::Constant(1, s);
    } else {
      out.branch = PredictorOutput::Branch::BallEmpty;
      const auto [arg, val] = maximize_on(-1.0, 1.0);
      out.value = val;
      out.worst_case_model = VectorXd::Constant(1, arg);
    }
    return out;
  }

  if (r == 0.0 && std::abs(s) < 1.0) {
    out.value = cost(s);
    out.worst_case_model = VectorXd::Constant(1, s);
    return out;
  }

  // The rate is unimodal in theta with minimum at the statistic (radial
  // monotonicity), so the ball is an interval found by golden-section plus
  // one bisection per side.
  double a = -1.0, b = 1.0;
  constexpr double invphi = 0.6180339887498949;
  while (b - a > 1e-12) {
    const double x1 = b - invphi * (b - a);
    const double x2 = a + invphi * (b - a);
    if (rate(x1) < rate(x2))
      b = x2;
    else
      a = x1;
  }
  const double theta_min = 0.5 * (a + b);
  if (rate(theta_min) > r) {
    out.branch = PredictorOutput::Branch::BallEmpty;
    const auto [arg, val] = maximize_on(-1.0, 1.0);
    out.value = val;
    out.worst_case_model = VectorXd::Constant(1, arg);
    return out;
  }

  const auto crossing = [&](double inside, double outside) {
    if (rate(outside) <= r) return outside;
    double lo = inside, hi = outside;
    // Invariant: rate(lo) <= r < rate(hi).
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (rate(mid) <= r)
        lo = mid;
      else
        hi = mid;
    }
    return lo;
  };
  const double theta_lo = crossing(theta_min, -1.0);
  const double theta_hi = crossing(theta_min, 1.0);
  const auto [arg, val] = maximize_on(theta_lo, theta_hi);
  out.value = val;
  out.worst_case_model = VectorXd::Constant(1, arg);
  return out;
}

namespace {

// Balanced doublet polytope constraints: entries sum to one and each state's
// row mass equals its column mass (one balance row is redundant and dropped).
void fill_balanced_polytope(Eigen::Index m, LpProblem& lp) {
  const Eigen::Index n = m * m;
  lp.a_eq = MatrixXd::Zero(m, n);
  lp.b_eq = VectorXd::Zero(m);
  lp.a_eq.row(0).setOnes();
  lp.b_eq[0] = 1.0;
  for (Eigen::Index i = 0; i + 1 < m; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      lp.a_eq(i + 1, i * m + j) += 1.0;
      lp.a_eq(i + 1, j * m + i) -= 1.0;
    }
  }
}

MatrixXd unflatten(const VectorXd& v, Eigen::Index m) {
  MatrixXd out(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) out(i, j) = v[i * m + j];
  return out;
}

VectorXd flatten(const MatrixXd& mat) {
  VectorXd out(mat.rows() * mat.cols());
  for (Eigen::Index i = 0; i < mat.rows(); ++i)
    for (Eigen::Index j = 0; j < mat.cols(); ++j)
      out[i * mat.cols() + j] = mat(i, j);
  return out;
}

// Stationary doublet of the transition matrix induced by s; the natural
// zero-divergence anchor inside the ball.
std::optional<MatrixXd> stationary_doublet_of(const MatrixXd& s) {
  const Eigen::Index m = s.rows();
  const VectorXd rows = s.rowwise().sum();
  MatrixXd p = MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (rows[i] > 0.0)
      p.row(i) = s.row(i) / rows[i];
    else
      p(i, i) = 1.0;  // self-loop convention
  }
  // Solve pi P = pi, sum(pi) = 1 by replacing one equation.
  MatrixXd system = p.transpose() - MatrixXd::Identity(m, m);
  system.row(m - 1).setOnes();
  VectorXd rhs = VectorXd::Zero(m);
  rhs[m - 1] = 1.0;
  const Eigen::FullPivLU<MatrixXd> lu(system);
  if (!lu.isInvertible()) return std::nullopt;
  const VectorXd pi = lu.solve(rhs);
  if ((pi.array() < -1e-12).any()) return std::nullopt;
  MatrixXd doublet(m, m);
  for (Eigen::Index i = 0; i < m; ++i)
    doublet.row(i) = std::max(pi[i], 0.0) * p.row(i);
  doublet /= doublet.sum();
  return doublet;
}

}  // namespace

PredictorOutput markov_ball_worst_case(const MatrixXd& loss_doublet,
                                       const MatrixXd& s, double r,
                                       std::uint64_t seed, int starts,
                                       int max_iters) {
  const Eigen::Index m = s.rows();
  if (s.cols() != m || loss_doublet.rows() != m || loss_doublet.cols() != m)
    throw DomainError("markov ball: shape mismatch");
  if (r < 0.0) throw DomainError("markov ball: radius must be nonnegative");

  const VectorXd loss_flat = flatten(loss_doublet);
  const auto divergence = [&](const MatrixXd& theta) {
    return rates::conditional_relative_entropy(s, theta);
  };

  PredictorOutput out;

  // Anchor with zero conditional divergence, when the induced chain has a
  // stationary law on the visited states.
  std::optional<MatrixXd> anchor = stationary_doublet_of(s);
  if (anchor && !(divergence(*anchor) <= r)) anchor.reset();

  LpProblem base;
  fill_balanced_polytope(m, base);
  base.c = loss_flat;

  if (!anchor) {
    // Search for any feasible point before declaring the ball empty.
    CounterRng probe(derive_stream(seed, 0xfeedull, 0));
    for (int k = 0; k < 2000 && !anchor; ++k) {
      MatrixXd cand(m, m);
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
          cand(i, j) = probe.next_exponential(1.0);
      cand = 0.5 * (cand + cand.transpose()).eval();
      cand /= cand.sum();
      if (divergence(cand) <= r) anchor = cand;
    }
    if (!anchor) {
      out.branch = PredictorOutput::Branch::BallEmpty;
      const LpSolution sup = solve_lp(base);
      if (!sup.optimal())
        throw StabilityError("markov ball: polytope LP failed");
      out.value = sup.value;
      out.worst_case_model = sup.x;
      return out;
    }
  }

  const VectorXd s_rows = s.rowwise().sum();
  const auto constraint_gradient = [&](const MatrixXd& theta) {
    const VectorXd theta_rows = theta.rowwise().sum();
    MatrixXd g = MatrixXd::Zero(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (s_rows[i] <= 0.0) continue;
      for (Eigen::Index j = 0; j < m; ++j) {
        g(i, j) = s_rows[i] / theta_rows[i];
        if (s(i, j) > 0.0) g(i, j) -= s(i, j) / theta(i, j);
      }
    }
    return g;
  };

  // Largest step toward the target that keeps the true constraint.
  const auto advance = [&](const MatrixXd& from, const MatrixXd& target) {
    if (divergence(target) <= r) return target;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 50; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (divergence(from + mid * (target - from)) <= r)
        lo = mid;
      else
        hi = mid;
    }
    return MatrixXd(from + lo * (target - from));
  };

  const auto run_start = [&](MatrixXd theta) {
    double current = loss_flat.dot(flatten(theta));
    for (int it = 0; it < max_iters; ++it) {
      const MatrixXd grad = constraint_gradient(theta);
      LpProblem lp = base;
      lp.a_ub = MatrixXd(1, m * m);
      lp.a_ub.row(0) = flatten(grad).transpose();
      const double slack = r - divergence(theta);
      lp.b_ub = VectorXd::Constant(1, flatten(grad).dot(flatten(theta)) +
                                          std::max(slack, 0.0));
      const LpSolution sol = solve_lp(lp);
      if (!sol.optimal()) break;
      const MatrixXd vertex = unflatten(sol.x, m);
      const MatrixXd next = advance(theta, vertex);
      const double value = loss_flat.dot(flatten(next));
      if (value <= current + 1e-12) break;
      theta = next;
      current = value;
    }
    return std::make_pair(current, theta);
  };

  // Tangent basis of the balanced polytope: kernel of the sum-one and
  // balance equations.
  const Eigen::MatrixXd kernel = [&]() -> MatrixXd {
    MatrixXd constraints(m + 1, m * m);
    constraints.row(0).setOnes();
    constraints.bottomRows(m).setZero();
    for (Eigen::Index i = 0; i < m; ++i)
      for (Eigen::Index j = 0; j < m; ++j) {
        constraints(1 + i, i * m + j) += 1.0;
        constraints(1 + i, j * m + i) -= 1.0;
      }
    const Eigen::FullPivLU<MatrixXd> lu(constraints);
    return lu.kernel();
  }();

  // Hill climb along random tangent directions with exact maximal feasible
  // steps; the linearized Frank-Wolfe steps stall on the nonconvex boundary,
  // and this closes the last stretch without active-set bookkeeping.
  const auto polish = [&](MatrixXd& theta, double current, int rounds,
                          CounterRng& rng) {
    const Eigen::Index q = kernel.cols();
    int stale = 0;
    for (int round = 0; round < rounds && stale < 80; ++round) {
      VectorXd weights(q);
      for (Eigen::Index i = 0; i < q; ++i) weights[i] = rng.next_normal();
      VectorXd dir = kernel * weights;
      const double norm = dir.norm();
      if (norm <= 0.0) continue;
      dir /= norm;
      if (loss_flat.dot(dir) < 0.0) dir = -dir;
      if (loss_flat.dot(dir) <= 1e-15) continue;
      const VectorXd flat = flatten(theta);
      double t_max = 1e300;
      for (Eigen::Index i = 0; i < m * m; ++i)
        if (dir[i] < -1e-15) t_max = std::min(t_max, flat[i] / -dir[i]);
      if (t_max <= 1e-14) {
        ++stale;
        continue;
      }
      const auto feasible = [&](double t) {
        return divergence(unflatten(flat + t * dir, m)) <= r;
      };
      double step = 0.0;
      if (feasible(t_max)) {
        step = t_max;
      } else {
        double lo = 0.0, hi = t_max;
        for (int it = 0; it < 50; ++it) {
          const double mid = 0.5 * (lo + hi);
          if (feasible(mid))
            lo = mid;
          else
            hi = mid;
        }
        step = lo;
      }
      const double gain = step * loss_flat.dot(dir);
      if (step > 0.0 && gain > 1e-14 * std::max(1.0, std::abs(current))) {
        theta = unflatten(flat + step * dir, m);
        current += gain;
        stale = 0;
      } else {
        ++stale;
      }
    }
    return current;
  };

  double best = loss_flat.dot(flatten(*anchor));
  MatrixXd best_theta = *anchor;
  CounterRng rng(derive_stream(seed, 0xba11ull, 1));
  for (int start = 0; start < starts; ++start) {
    MatrixXd init;
    if (start == 0) {
      init = *anchor;
    } else {
      MatrixXd cand(m, m);
      for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j)
          cand(i, j) = rng.next_exponential(1.0);
      cand = 0.5 * (cand + cand.transpose()).eval();
      cand /= cand.sum();
      init = advance(*anchor, cand);
    }
    auto [value, theta] = run_start(init);
    value = polish(theta, value, 300, rng);
    if (value > best) {
      best = value;
      best_theta = theta;
    }
  }
  best = polish(best_theta, best, 2000, rng);
  out.value = best;
  out.worst_case_model = flatten(best_theta);
  return out;
}

std::vector<PredictorOutput> predictor(const LossTable& table,
                                       const StatisticValue& s,
                                       const AmbiguitySpec& spec) {
  std::vector<PredictorOutput> out;
  out.reserve(table.num_decisions());

  const auto require = [&](bool ok, const char* message) {
    if (!ok) throw UsageError(message);
  };

  switch (spec.kind) {
    case AmbiguitySpec::Kind::Empirical:
    case AmbiguitySpec::Kind::PenalizedEmpirical: {
      require(s.kind == StatisticKind::EmpiricalDist &&
                  s.value.rows() == table.num_states(),
              "predictor: spec needs an empirical distribution over the table's states");
      const double shift =
          spec.kind == AmbiguitySpec::Kind::PenalizedEmpirical ? spec.radius : 0.0;
      for (Eigen::Index x = 0; x < table.num_decisions(); ++x) {
        PredictorOutput p;
        p.value = table.losses.row(x).dot(s.vector()) + shift;
        p.worst_case_model = s.vector();
        out.push_back(std::move(p));
      }
      return out;
    }
    case AmbiguitySpec::Kind::EntropyBall:
      require(s.kind == StatisticKind::EmpiricalDist &&
                  s.value.rows() == table.num_states(),
              "predictor: entropy ball needs an empirical distribution");
      for (Eigen::Index x = 0; x < table.num_decisions(); ++x)
        out.push_back(entropy_dro_dual(table.losses.row(x).transpose(),
                                       s.vector(), spec.radius));
      return out;
    case AmbiguitySpec::Kind::MomentSet:
      require(s.kind == StatisticKind::EmpiricalDist &&
                  s.value.rows() == table.num_states(),
              "predictor: moment set needs an empirical distribution");
      for (Eigen::Index x = 0; x < table.num_decisions(); ++x)
        out.push_back(moment_set_worst_case(table.losses.row(x).transpose(),
                                            s.vector(), spec.radius,
                                            spec.moment_order));
      return out;
    case AmbiguitySpec::Kind::WassersteinSet:
      require(s.kind == StatisticKind::EmpiricalDist &&
                  s.value.rows() == table.num_states(),
              "predictor: wasserstein set needs an empirical distribution");
      for (Eigen::Index x = 0; x < table.num_decisions(); ++x)
        out.push_back(wasserstein_set_worst_case(table.losses.row(x).transpose(),
                                                 s.vector(), spec.radius));
      return out;
    case AmbiguitySpec::Kind::ConditionalEntropyBall: {
      require(s.kind == StatisticKind::DoubletDist,
              "predictor: conditional entropy ball needs a doublet statistic");
      const Eigen::Index m = s.value.rows();
      require(table.num_states() == m * m,
              "predictor: table states must enumerate doublets row-major");
      for (Eigen::Index x = 0; x < table.num_decisions(); ++x) {
        const MatrixXd loss = unflatten(table.losses.row(x).transpose(), m);
        out.push_back(markov_ball_worst_case(loss, s.value, spec.radius));
      }
      return out;
    }
    case AmbiguitySpec::Kind::EllipsoidBall:
      require(s.kind == StatisticKind::ScaledSampleMean &&
                  s.value.rows() == table.num_states(),
              "predictor: ellipsoid ball needs a scaled sample mean");
      for (Eigen::Index x = 0; x < table.num_decisions(); ++x)
        out.push_back(ellipsoid_linear_worst_case(
            table.losses.row(x).transpose(), 0.0, s.vector(), spec.sigma,
            spec.radius));
      return out;
    case AmbiguitySpec::Kind::ArBall:
      throw UsageError(
          "predictor: the ar ball needs a cost callable; use ar_ball_worst_case");
  }
  throw UsageError("predictor: unknown spec kind");
}

std::size_t prescriptor(const std::vector<PredictorOutput>& predictions) {
  if (predictions.empty())
    throw UsageError("prescriptor: no predictions given");
  std::size_t best = 0;
  for (std::size_t i = 1; i < predictions.size(); ++i)
    if (predictions[i].value < predictions[best].value) best = i;
  return best;
}

}  // namespace ldro::dro
