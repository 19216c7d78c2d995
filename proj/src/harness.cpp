#include "ldro/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <sstream>

#include "ldro/rng.hpp"

namespace ldro::harness {

using dro::AmbiguitySpec;
using dro::LossTable;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void ExperimentConfig::validate() const {
  if (trials < 1) throw UsageError("config: trials must be >= 1");
  if (t_grid.empty()) throw UsageError("config: horizon grid is empty");
  for (std::size_t i = 0; i + 1 < t_grid.size(); ++i)
    if (t_grid[i] >= t_grid[i + 1])
      throw UsageError("config: horizon grid must be strictly increasing");
  if (t_grid.front() < 1) throw UsageError("config: horizons must be >= 1");
  if (threads < 1) throw UsageError("config: threads must be >= 1");
}

namespace {

// True model cost of every decision, c(x, theta*) = sum_i l(x, i) theta*_i.
VectorXd model_costs(const ExperimentConfig& config) {
  const auto* iid = std::get_if<FiniteIidModel>(&config.process);
  if (!iid)
    throw UsageError("run_curve: only finite-state processes have a table objective");
  if (config.table.num_states() != iid->dimension())
    throw UsageError("run_curve: table states do not match the process");
  return config.table.losses * iid->probs;
}

struct TrialRecord {
  double in_sample = 0.0;
  double out_of_sample = 0.0;
  bool disappointed = false;
};

// Runs a closure over every trial index, either inline or across a small
// pool; results land in trial-indexed storage so ordering is canonical.
template <typename Fn>
void for_each_trial(long trials, int threads, Fn&& body) {
  if (threads <= 1) {
    for (long trial = 0; trial < trials; ++trial) body(trial);
    return;
  }
  std::vector<std::future<void>> workers;
  const long chunk = (trials + threads - 1) / threads;
  for (int w = 0; w < threads; ++w) {
    const long begin = w * chunk;
    const long end = std::min(trials, begin + chunk);
    if (begin >= end) break;
    workers.push_back(std::async(std::launch::async, [&body, begin, end] {
      for (long trial = begin; trial < end; ++trial) body(trial);
    }));
  }
  for (auto& worker : workers) worker.get();
}

}  // namespace

DisappointmentCurve run_curve(const ExperimentConfig& config,
                              const AmbiguitySpec& spec) {
  config.validate();
  const VectorXd true_costs = model_costs(config);

  DisappointmentCurve curve;
  curve.spec = spec;
  curve.points.reserve(config.t_grid.size());

  std::vector<TrialRecord> records(config.trials);
  std::vector<std::string> failures(config.trials);

  for (std::size_t t_index = 0; t_index < config.t_grid.size(); ++t_index) {
    const long horizon = config.t_grid[t_index];
    for_each_trial(config.trials, config.threads, [&](long trial) {
      try {
        const std::uint64_t stream =
            derive_stream(config.seed, t_index, static_cast<std::uint64_t>(trial));
        const Trajectory traj = simulate(config.process, horizon, stream);
        const StatisticValue stat =
            compute_statistic(traj, config.statistic, config.process);
        const auto predictions = dro::predictor(config.table, stat, spec);
        const std::size_t decision = dro::prescriptor(predictions);
        TrialRecord rec;
        rec.in_sample = predictions[decision].value;
        rec.out_of_sample = true_costs[static_cast<Eigen::Index>(decision)];
        rec.disappointed = rec.out_of_sample > rec.in_sample;
        records[trial] = rec;
      } catch (const std::exception& e) {
        failures[trial] = e.what();
      }
    });
    for (long trial = 0; trial < config.trials; ++trial)
      if (!failures[trial].empty())
        throw Error("run_curve: T=" + std::to_string(horizon) + " trial=" +
                    std::to_string(trial) + ": " + failures[trial]);

    CurvePoint point;
    point.horizon = horizon;
    point.trials = config.trials;
    long disappointments = 0;
    double in_sum = 0.0, in_sq = 0.0, out_sum = 0.0;
    for (const TrialRecord& rec : records) {
      disappointments += rec.disappointed ? 1 : 0;
      in_sum += rec.in_sample;
      in_sq += rec.in_sample * rec.in_sample;
      out_sum += rec.out_of_sample;
    }
    const double n = static_cast<double>(config.trials);
    point.p_hat = static_cast<double>(disappointments) / n;
    point.mean_in_sample = in_sum / n;
    point.mean_out_of_sample = out_sum / n;
    const double var =
        std::max(0.0, (in_sq - in_sum * in_sum / n) / std::max(1.0, n - 1.0));
    point.se_in_sample = std::sqrt(var / n);
    curve.points.push_back(point);
  }
  return curve;
}

DecayEstimate estimate_decay_rate(const DisappointmentCurve& curve) {
  std::vector<double> ts, logs;
  for (const CurvePoint& point : curve.points) {
    if (point.p_hat > 0.0) {
      ts.push_back(static_cast<double>(point.horizon));
      logs.push_back(std::log(point.p_hat));
    }
  }
  if (ts.size() < 3)
    throw InsufficientDataError(
        "decay estimate: need at least 3 horizons with positive frequency");
  const double n = static_cast<double>(ts.size());
  double t_mean = 0.0, l_mean = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    t_mean += ts[i];
    l_mean += logs[i];
  }
  t_mean /= n;
  l_mean /= n;
  double stt = 0.0, stl = 0.0, sll = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - t_mean) * (ts[i] - t_mean);
    stl += (ts[i] - t_mean) * (logs[i] - l_mean);
    sll += (logs[i] - l_mean) * (logs[i] - l_mean);
  }
  const double slope = stl / stt;
  DecayEstimate est;
  est.rate = std::max(0.0, -slope);
  est.intercept = l_mean - slope * t_mean;
  est.points_used = static_cast<int>(ts.size());
  double ss_res = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double fit = est.intercept + slope * ts[i];
    ss_res += (logs[i] - fit) * (logs[i] - fit);
  }
  est.r_squared = sll > 0.0 ? std::max(0.0, 1.0 - ss_res / sll)
                            : (ss_res <= 1e-30 ? 1.0 : 0.0);
  return est;
}

std::vector<FrontierPoint> frontier(const ExperimentConfig& config,
                                    const std::vector<AmbiguitySpec>& specs) {
  if (specs.empty()) throw UsageError("frontier: no specs given");
  std::vector<FrontierPoint> points;
  points.reserve(specs.size());
  for (const AmbiguitySpec& spec : specs) {
    const DisappointmentCurve curve = run_curve(config, spec);
    FrontierPoint point;
    point.spec = spec;
    point.decay = estimate_decay_rate(curve);
    point.asymptotic_in_sample = curve.points.back().mean_in_sample;
    point.se = curve.points.back().se_in_sample;
    points.push_back(std::move(point));
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const FrontierPoint& a, const FrontierPoint& b) {
                     return a.decay.rate < b.decay.rate;
                   });
  return points;
}

std::pair<FiniteIidModel, LossTable> newsvendor_scenario() {
  const int d = 11;
  VectorXd probs(d);
  double binom = 1.0;  // C(10, 0)
  for (int i = 0; i < d; ++i) {
    probs[i] = binom / 1024.0;
    binom = binom * (10 - i) / (i + 1);
  }
  MatrixXd losses(d, d);
  std::vector<std::string> labels(d);
  for (int x = 1; x <= d; ++x) {
    labels[x - 1] = std::to_string(x);
    for (int i = 1; i <= d; ++i)
      losses(x - 1, i - 1) = 5.0 * x - 7.0 * std::min(x, i);
  }
  return {FiniteIidModel(probs), LossTable(losses, labels)};
}

SanovResult sanov_check(const FiniteIidModel& model, const SanovEvent& event,
                        const std::vector<long>& t_grid, long trials,
                        std::uint64_t seed, int threads) {
  if (event.component < 0 || event.component >= model.dimension())
    throw UsageError("sanov check: component out of range");
  if (trials < 1 || t_grid.empty())
    throw UsageError("sanov check: need trials >= 1 and a horizon grid");

  SanovResult result;
  std::vector<char> hits(trials);
  for (std::size_t t_index = 0; t_index < t_grid.size(); ++t_index) {
    const long horizon = t_grid[t_index];
    for_each_trial(trials, threads, [&](long trial) {
      const std::uint64_t stream =
          derive_stream(seed, t_index, static_cast<std::uint64_t>(trial));
      const Trajectory traj = simulate(model, horizon, stream);
      long count = 0;
      for (int s : traj.states) count += (s == event.component + 1);
      const double freq = static_cast<double>(count) / horizon;
      hits[trial] = event.upper ? freq >= event.bound : freq <= event.bound;
    });
    long total = 0;
    for (char h : hits) total += h;
    CurvePoint point;
    point.horizon = horizon;
    point.trials = trials;
    point.p_hat = static_cast<double>(total) / static_cast<double>(trials);
    result.frequencies.push_back(point);
  }

  DisappointmentCurve curve;
  curve.points = result.frequencies;
  result.measured = estimate_decay_rate(curve);

  // The divergence minimum over the half space reduces to a one-dimensional
  // convex problem along the slice s[component] = t with the remaining mass
  // redistributed proportionally.
  const double theta_i = model.probs[event.component];
  const auto slice_rate = [&](double t) {
    double acc = 0.0;
    if (t > 0.0) acc += t * std::log(t / theta_i);
    if (t < 1.0) acc += (1.0 - t) * std::log((1.0 - t) / (1.0 - theta_i));
    return acc;
  };
  double lo = event.upper ? event.bound : 0.0;
  double hi = event.upper ? 1.0 : event.bound;
  constexpr double invphi = 0.6180339887498949;
  while (hi - lo > 1e-12) {
    const double x1 = hi - invphi * (hi - lo);
    const double x2 = lo + invphi * (hi - lo);
    if (slice_rate(x1) < slice_rate(x2))
      hi = x2;
    else
      lo = x1;
  }
  result.predicted = std::max(0.0, slice_rate(0.5 * (lo + hi)));
  return result;
}

std::string format_double(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buffer, ptr);
}

namespace {

void write_lines(const std::string& path, const std::string& header,
                 const std::vector<std::string>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << header << "\n";
  for (const std::string& row : rows) out << row << "\n";
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

void write_curve_csv(const std::vector<DisappointmentCurve>& curves,
                     std::uint64_t seed, const std::string& path) {
  struct Row {
    long horizon;
    std::size_t spec_index;
    double radius;
    std::string text;
  };
  std::vector<Row> rows;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& curve = curves[c];
    for (const CurvePoint& p : curve.points) {
      std::ostringstream line;
      line << p.horizon << ',' << p.trials << ',' << format_double(p.p_hat)
           << ',' << format_double(p.mean_in_sample) << ','
           << format_double(p.se_in_sample) << ','
           << format_double(p.mean_out_of_sample) << ','
           << dro::spec_kind_name(curve.spec.kind) << ','
           << format_double(curve.spec.radius) << ',' << seed;
      rows.push_back({p.horizon, c, curve.spec.radius, line.str()});
    }
  }
  std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
    if (a.horizon != b.horizon) return a.horizon < b.horizon;
    if (a.spec_index != b.spec_index) return a.spec_index < b.spec_index;
    return a.radius < b.radius;
  });
  std::vector<std::string> lines;
  lines.reserve(rows.size());
  for (Row& row : rows) lines.push_back(std::move(row.text));
  write_lines(path,
              "T,trials,p_hat,mean_in_sample,se_in_sample,mean_out_of_sample,"
              "spec,radius,seed",
              lines);
}

void write_frontier_csv(const std::vector<FrontierPoint>& points,
                        const std::string& path) {
  std::vector<std::string> lines;
  lines.reserve(points.size());
  for (const FrontierPoint& p : points) {
    std::ostringstream line;
    line << dro::spec_kind_name(p.spec.kind) << ','
         << format_double(p.spec.radius) << ',' << format_double(p.decay.rate)
         << ',' << format_double(p.decay.r_squared) << ','
         << p.decay.points_used << ',' << format_double(p.asymptotic_in_sample)
         << ',' << format_double(p.se);
    lines.push_back(line.str());
  }
  write_lines(path,
              "spec,radius,decay_rate,decay_r2,points_used,"
              "asymptotic_in_sample,se",
              lines);
}

}  // namespace ldro::harness
