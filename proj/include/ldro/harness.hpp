#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ldro/dro.hpp"
#include "ldro/processes.hpp"
#include "ldro/statistics.hpp"

namespace ldro::harness {

struct ExperimentConfig {
  ProcessModel process;
  StatisticKind statistic = StatisticKind::EmpiricalDist;
  dro::LossTable table;
  std::vector<dro::AmbiguitySpec> specs;
  std::vector<long> t_grid;
  long trials = 1000;
  std::uint64_t seed = 0;
  std::string out_path;
  int threads = 1;

  explicit ExperimentConfig(ProcessModel p) : process(std::move(p)) {}
  void validate() const;
};

struct CurvePoint {
  long horizon = 0;
  long trials = 0;
  double p_hat = 0.0;  // frequency of strict out-of-sample disappointment
  double mean_in_sample = 0.0;
  double se_in_sample = 0.0;
  double mean_out_of_sample = 0.0;
};

struct DisappointmentCurve {
  dro::AmbiguitySpec spec;
  std::vector<CurvePoint> points;
};

struct DecayEstimate {
  double rate = 0.0;  // minus the fitted slope of log p_hat against T
  double intercept = 0.0;
  double r_squared = 0.0;
  int points_used = 0;
};

struct FrontierPoint {
  dro::AmbiguitySpec spec;
  DecayEstimate decay;
  double asymptotic_in_sample = 0.0;  // mean in-sample cost at the largest T
  double se = 0.0;
};

// Fresh trajectory per (horizon, trial) from a derived seed, statistic,
// predictor across all decisions, prescriptor, then the strict-inequality
// disappointment indicator against the true model cost. Aggregation is
// trial-indexed, so thread count never changes the output.
DisappointmentCurve run_curve(const ExperimentConfig& config,
                              const dro::AmbiguitySpec& spec);

// Ordinary least squares of log p_hat on T over the points with p_hat > 0.
// Throws InsufficientDataError when fewer than 3 points remain.
DecayEstimate estimate_decay_rate(const DisappointmentCurve& curve);

// One curve and decay fit per spec; points come back sorted by decay rate.
std::vector<FrontierPoint> frontier(const ExperimentConfig& config,
                                    const std::vector<dro::AmbiguitySpec>& specs);

// Selling-season benchmark: 11 demand states from a shifted binomial,
// ordering cost 5, retail price 7.
std::pair<FiniteIidModel, dro::LossTable> newsvendor_scenario();

// Half-space event on one component of the empirical distribution.
struct SanovEvent {
  int component = 0;  // 0-based
  double bound = 0.0;
  bool upper = true;  // {s : s[component] >= bound} when true
};

struct SanovResult {
  DecayEstimate measured;
  double predicted = 0.0;  // divergence minimized over the event
  std::vector<CurvePoint> frequencies;
};

// Monte-Carlo decay of the event frequency against the divergence minimum
// over the event, found by golden-section along the event's slice.
SanovResult sanov_check(const FiniteIidModel& model, const SanovEvent& event,
                        const std::vector<long>& t_grid, long trials,
                        std::uint64_t seed, int threads = 1);

// Shortest decimal representation that round-trips binary64.
std::string format_double(double value);

void write_curve_csv(const std::vector<DisappointmentCurve>& curves,
                     std::uint64_t seed, const std::string& path);
void write_frontier_csv(const std::vector<FrontierPoint>& points,
                        const std::string& path);

}  // namespace ldro::harness
