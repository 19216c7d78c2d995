// Command-line runner for the disappointment-curve experiments and the
// rate-function utilities.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ldro/harness.hpp"
#include "ldro/rates.hpp"

using nlohmann::json;
using namespace ldro;

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

Eigen::MatrixXd to_matrix(const json& rows) {
  const auto r = rows.size();
  if (r == 0) throw UsageError("config: empty matrix");
  const auto c = rows[0].size();
  Eigen::MatrixXd m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rows[i][j].get<double>();
  return m;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file: " + path);
  json cfg;
  in >> cfg;
  return cfg;
}

// Builds the experiment from a resolved JSON config: either a named
// scenario or an explicit process/table pair.
harness::ExperimentConfig experiment_from_json(const json& cfg) {
  ProcessModel process = FiniteIidModel(Eigen::VectorXd::Constant(2, 0.5));
  dro::LossTable table;
  if (cfg.value("scenario", "") == "newsvendor") {
    auto [model, losses] = harness::newsvendor_scenario();
    process = std::move(model);
    table = std::move(losses);
  } else {
    const json& proc = cfg.at("process");
    const std::string type = proc.value("type", "finite-iid");
    if (type != "finite-iid")
      throw UsageError("config: curve experiments run on finite-iid processes");
    process =
        FiniteIidModel(to_vector(proc.at("probs").get<std::vector<double>>()));
    const json& tab = cfg.at("table");
    std::vector<std::string> labels;
    if (tab.contains("decisions"))
      labels = tab.at("decisions").get<std::vector<std::string>>();
    table = dro::LossTable(to_matrix(tab.at("losses")), labels);
  }
  harness::ExperimentConfig experiment(std::move(process));
  experiment.table = std::move(table);
  experiment.statistic =
      statistic_kind_from_name(cfg.value("statistic", "empirical-dist"));
  experiment.t_grid = cfg.at("tgrid").get<std::vector<long>>();
  experiment.trials = cfg.at("trials").get<long>();
  experiment.seed = cfg.at("seed").get<std::uint64_t>();
  experiment.out_path = cfg.at("out").get<std::string>();
  experiment.threads = cfg.value("threads", 1);
  return experiment;
}

dro::AmbiguitySpec spec_from_json(const json& j) {
  dro::AmbiguitySpec spec;
  spec.kind = dro::spec_kind_from_name(j.at("kind").get<std::string>());
  spec.radius = j.value("radius", 0.0);
  spec.moment_order = j.value("moments", 4);
  return spec;
}

// Merge order: built-in defaults, then the config file, then explicit flags.
template <typename T>
void resolve(json& cfg, const char* key, const CLI::Option* opt, const T& value) {
  if (opt->count() > 0 || !cfg.contains(key)) cfg[key] = value;
}

void print_resolved(const json& cfg) { std::cerr << cfg.dump() << std::endl; }

std::vector<double> conjugate_grid(Family family, double theta, double shape,
                                   int trials) {
  // 20 interior points of the mean domain.
  double lo = 0.0, hi = 1.0;
  switch (family) {
    case Family::Normal:
      lo = theta - 3.0;
      hi = theta + 3.0;
      break;
    case Family::Exponential:
      lo = 0.2 / theta;
      hi = 3.0 / theta;
      break;
    case Family::Gamma:
      lo = 0.2 * shape * theta;
      hi = 3.0 * shape * theta;
      break;
    case Family::Poisson:
      lo = 0.2 * theta;
      hi = 3.0 * theta;
      break;
    case Family::Bernoulli:
      lo = 0.04;
      hi = 0.96;
      break;
    case Family::Geometric:
      lo = 1.04;
      hi = 1.0 + 3.0 * (1.0 / theta - 1.0) + 0.5;
      break;
    case Family::Binomial:
      lo = 0.04 * trials;
      hi = 0.96 * trials;
      break;
  }
  std::vector<double> grid(20);
  for (int i = 0; i < 20; ++i) grid[i] = lo + (hi - lo) * i / 19.0;
  return grid;
}

int run_newsvendor(const json& cfg) {
  print_resolved(cfg);
  auto experiment = experiment_from_json(cfg);
  std::vector<harness::DisappointmentCurve> curves;
  for (const json& js : cfg.at("specs"))
    curves.push_back(harness::run_curve(experiment, spec_from_json(js)));
  harness::write_curve_csv(curves, experiment.seed, experiment.out_path);
  std::cout << "wrote " << experiment.out_path << std::endl;
  return 0;
}

int run_frontier(const json& cfg) {
  print_resolved(cfg);
  auto experiment = experiment_from_json(cfg);
  std::vector<dro::AmbiguitySpec> specs;
  for (const json& js : cfg.at("specs")) specs.push_back(spec_from_json(js));
  const auto points = harness::frontier(experiment, specs);
  harness::write_frontier_csv(points, experiment.out_path);
  std::cout << "wrote " << experiment.out_path << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"data-driven predictors and prescriptors over rate-function balls"};
  app.require_subcommand(1);
  int exit_code = 0;

  // --- newsvendor ----------------------------------------------------------
  auto* news = app.add_subcommand(
      "newsvendor", "disappointment curve on the selling-season benchmark");
  std::string n_predictor = "empirical";
  double n_radius = 0.0;
  int n_moments = 4;
  std::vector<long> n_tgrid;
  long n_trials = 1000;
  std::uint64_t n_seed = 0;
  std::string n_out = "newsvendor.csv";
  std::string n_config;
  int n_threads = 1;
  auto* n_pred_opt =
      news->add_option("--predictor", n_predictor, "cost estimator")
          ->check(CLI::IsMember({"empirical", "penalized", "entropy",
                                 "wasserstein", "moment"}));
  auto* n_radius_opt = news->add_option("--radius", n_radius, "ball radius");
  auto* n_moments_opt =
      news->add_option("--moments", n_moments, "moment order J");
  auto* n_tgrid_opt =
      news->add_option("--tgrid", n_tgrid, "horizon grid")->delimiter(',');
  auto* n_trials_opt =
      news->add_option("--trials", n_trials, "trials per horizon");
  auto* n_seed_opt = news->add_option("--seed", n_seed, "master seed");
  auto* n_out_opt = news->add_option("--out", n_out, "output csv path");
  auto* n_threads_opt =
      news->add_option("--threads", n_threads, "worker threads");
  news->add_option("--config", n_config, "json config file");

  news->callback([&] {
    json cfg = load_config(n_config);
    if (!cfg.contains("scenario") && !cfg.contains("process"))
      cfg["scenario"] = "newsvendor";
    resolve(cfg, "tgrid", n_tgrid_opt,
            n_tgrid.empty() ? std::vector<long>{10, 20, 30, 40, 50, 60, 70, 80,
                                                90, 100, 110, 120, 130, 140,
                                                150, 160, 170, 180, 190, 200}
                            : n_tgrid);
    resolve(cfg, "trials", n_trials_opt, n_trials);
    resolve(cfg, "seed", n_seed_opt, n_seed);
    resolve(cfg, "out", n_out_opt, n_out);
    resolve(cfg, "threads", n_threads_opt, n_threads);
    if (n_pred_opt->count() > 0 || n_radius_opt->count() > 0 ||
        n_moments_opt->count() > 0 || !cfg.contains("specs")) {
      json spec;
      spec["kind"] = n_predictor;
      spec["radius"] = n_radius;
      if (n_predictor == "moment") spec["moments"] = n_moments;
      cfg["specs"] = json::array({spec});
    }
    exit_code = run_newsvendor(cfg);
  });

  // --- frontier ------------------------------------------------------------
  auto* front = app.add_subcommand(
      "frontier", "decay-rate / in-sample cost trade-off across radii");
  std::vector<std::string> f_predictors = {"entropy", "wasserstein"};
  std::vector<double> f_radii;
  int f_moments = 4;
  std::vector<long> f_tgrid;
  long f_trials = 4000;
  std::uint64_t f_seed = 0;
  std::string f_out = "frontier.csv";
  std::string f_config;
  int f_threads = 1;
  auto* f_pred_opt =
      front->add_option("--predictors", f_predictors, "cost estimators")
          ->delimiter(',');
  auto* f_radii_opt =
      front->add_option("--radii", f_radii, "radius grid")->delimiter(',');
  auto* f_moments_opt =
      front->add_option("--moments", f_moments, "moment order J");
  auto* f_tgrid_opt =
      front->add_option("--tgrid", f_tgrid, "horizon grid")->delimiter(',');
  auto* f_trials_opt =
      front->add_option("--trials", f_trials, "trials per horizon");
  auto* f_seed_opt = front->add_option("--seed", f_seed, "master seed");
  auto* f_out_opt = front->add_option("--out", f_out, "output csv path");
  auto* f_threads_opt =
      front->add_option("--threads", f_threads, "worker threads");
  front->add_option("--config", f_config, "json config file");

  front->callback([&] {
    json cfg = load_config(f_config);
    if (!cfg.contains("scenario") && !cfg.contains("process"))
      cfg["scenario"] = "newsvendor";
    resolve(cfg, "tgrid", f_tgrid_opt,
            f_tgrid.empty()
                ? std::vector<long>{10, 20, 30, 40, 50, 60, 70, 80, 90, 100}
                : f_tgrid);
    resolve(cfg, "trials", f_trials_opt, f_trials);
    resolve(cfg, "seed", f_seed_opt, f_seed);
    resolve(cfg, "out", f_out_opt, f_out);
    resolve(cfg, "threads", f_threads_opt, f_threads);
    if (f_pred_opt->count() > 0 || f_radii_opt->count() > 0 ||
        !cfg.contains("specs")) {
      const std::vector<double> radii =
          f_radii.empty() ? std::vector<double>{0.01, 0.02, 0.05, 0.1} : f_radii;
      json specs = json::array();
      for (const std::string& name : f_predictors) {
        for (double r : radii) {
          json spec;
          spec["kind"] = name;
          spec["radius"] = r;
          if (name == "moment") spec["moments"] = f_moments;
          specs.push_back(spec);
        }
      }
      cfg["specs"] = specs;
    }
    exit_code = run_frontier(cfg);
  });

  // --- sanov-check ---------------------------------------------------------
  auto* sanov = app.add_subcommand(
      "sanov-check", "measured vs predicted decay of a tail event");
  std::vector<double> s_probs = {0.7, 0.3};
  int s_component = 1;
  double s_bound = 0.85;
  std::string s_direction = "ge";
  std::vector<long> s_tgrid = {20, 40, 60, 80, 100, 120};
  long s_trials = 100000;
  std::uint64_t s_seed = 0;
  std::string s_out = "sanov.csv";
  int s_threads = 1;
  sanov->add_option("--probs", s_probs, "model weights")->delimiter(',');
  sanov->add_option("--component", s_component, "1-based component index");
  sanov->add_option("--bound", s_bound, "event threshold");
  sanov->add_option("--direction", s_direction, "event direction")
      ->check(CLI::IsMember({"ge", "le"}));
  sanov->add_option("--tgrid", s_tgrid, "horizon grid")->delimiter(',');
  sanov->add_option("--trials", s_trials, "trials per horizon");
  sanov->add_option("--seed", s_seed, "master seed");
  sanov->add_option("--out", s_out, "output csv path");
  sanov->add_option("--threads", s_threads, "worker threads");

  sanov->callback([&] {
    json cfg;
    cfg["probs"] = s_probs;
    cfg["component"] = s_component;
    cfg["bound"] = s_bound;
    cfg["direction"] = s_direction;
    cfg["tgrid"] = s_tgrid;
    cfg["trials"] = s_trials;
    cfg["seed"] = s_seed;
    cfg["out"] = s_out;
    cfg["threads"] = s_threads;
    print_resolved(cfg);

    const FiniteIidModel model(to_vector(s_probs));
    harness::SanovEvent event;
    event.component = s_component - 1;
    event.bound = s_bound;
    event.upper = s_direction == "ge";
    const auto result =
        harness::sanov_check(model, event, s_tgrid, s_trials, s_seed, s_threads);
    std::ofstream out(s_out);
    if (!out) throw IoError("cannot open for writing: " + s_out);
    out << "T,trials,p_hat\n";
    for (const auto& p : result.frequencies)
      out << p.horizon << ',' << p.trials << ','
          << harness::format_double(p.p_hat) << '\n';
    std::cout << "measured_rate=" << harness::format_double(result.measured.rate)
              << " predicted_rate=" << harness::format_double(result.predicted)
              << " r2=" << harness::format_double(result.measured.r_squared)
              << " points=" << result.measured.points_used << std::endl;
  });

  // --- conjugate-check -----------------------------------------------------
  auto* conj = app.add_subcommand(
      "conjugate-check",
      "numerical Legendre transform against the closed-form rate");
  std::string c_family = "poisson";
  double c_theta = 1.0;
  double c_shape = 1.0;
  int c_trials_n = 10;
  double c_sigma = 1.0;
  std::vector<double> c_probs;
  conj->add_option("--family", c_family, "distribution family")
      ->check(CLI::IsMember({"normal", "exponential", "gamma", "poisson",
                             "bernoulli", "geometric", "binomial",
                             "finite-iid"}));
  conj->add_option("--theta", c_theta, "family parameter");
  conj->add_option("--shape", c_shape, "gamma shape");
  conj->add_option("--trials-n", c_trials_n, "binomial trial count");
  conj->add_option("--sigma", c_sigma, "normal variance");
  conj->add_option("--probs", c_probs, "finite-iid weights")->delimiter(',');

  conj->callback([&] {
    json cfg;
    cfg["family"] = c_family;
    cfg["theta"] = c_theta;
    cfg["shape"] = c_shape;
    cfg["trials-n"] = c_trials_n;
    cfg["sigma"] = c_sigma;
    if (!c_probs.empty()) cfg["probs"] = c_probs;
    print_resolved(cfg);

    std::cout << "s,closed_form,numerical,abs_error\n";
    double worst = 0.0;
    const auto emit = [&](double s, double closed, double numeric) {
      worst = std::max(worst, std::abs(closed - numeric));
      std::cout << harness::format_double(s) << ','
                << harness::format_double(closed) << ','
                << harness::format_double(numeric) << ','
                << harness::format_double(std::abs(closed - numeric)) << '\n';
    };
    if (c_family == "finite-iid") {
      const Eigen::VectorXd theta =
          c_probs.empty() ? to_vector({0.5, 0.5}) : to_vector(c_probs);
      const auto mgf = [&](const Eigen::VectorXd& l) {
        return rates::finite_iid_log_mgf(l, theta);
      };
      for (int k = 0; k < 20; ++k) {
        const double p = 0.05 + 0.9 * k / 19.0;
        Eigen::VectorXd s = Eigen::VectorXd::Constant(
            theta.size(), (1.0 - p) / static_cast<double>(theta.size() - 1));
        s[0] = p;
        emit(p, rates::relative_entropy(s, theta),
             rates::numerical_conjugate(mgf, s));
      }
    } else {
      const Family family = family_from_name(c_family);
      rates::Nuisance nu;
      nu.shape = c_shape;
      nu.trials = c_trials_n;
      nu.sigma = Eigen::MatrixXd::Constant(1, 1, c_sigma);
      const auto mgf = [&](double l) {
        return rates::limit_log_mgf(family, l, c_theta, nu);
      };
      for (double s : conjugate_grid(family, c_theta, c_shape, c_trials_n))
        emit(s, rates::cramer_rate(family, s, c_theta, nu),
             rates::numerical_conjugate(mgf, s));
    }
    std::cout << "max_abs_error=" << harness::format_double(worst) << std::endl;
    exit_code = worst <= 1e-6 ? 0 : 1;
  });

  // --- rate-eval -----------------------------------------------------------
  auto* rate = app.add_subcommand("rate-eval", "evaluate a rate function");
  std::string r_kind = "relative-entropy";
  std::vector<double> r_s, r_theta, r_sigma;
  std::string r_family = "normal";
  double r_shape = 1.0;
  int r_trials_n = 10;
  rate->add_option("--kind", r_kind, "rate function")
      ->check(CLI::IsMember({"relative-entropy", "conditional-relative-entropy",
                             "gaussian-quadratic", "ar-ls", "ar-yw", "cramer"}));
  rate->add_option("--s", r_s, "statistic realization")
      ->delimiter(',')
      ->required();
  rate->add_option("--theta", r_theta, "model point")
      ->delimiter(',')
      ->required();
  rate->add_option("--sigma", r_sigma, "covariance, row-major")->delimiter(',');
  rate->add_option("--family", r_family, "cramer family");
  rate->add_option("--shape", r_shape, "gamma shape");
  rate->add_option("--trials-n", r_trials_n, "binomial trial count");

  rate->callback([&] {
    json cfg;
    cfg["kind"] = r_kind;
    cfg["s"] = r_s;
    cfg["theta"] = r_theta;
    if (!r_sigma.empty()) cfg["sigma"] = r_sigma;
    if (r_kind == "cramer") cfg["family"] = r_family;
    print_resolved(cfg);

    rates::RateSpec spec;
    spec.kind = rates::rate_kind_from_name(r_kind);
    if (r_kind == "cramer") spec.family = family_from_name(r_family);
    spec.nuisance.shape = r_shape;
    spec.nuisance.trials = r_trials_n;
    const auto square = [](const std::vector<double>& flat) {
      const auto m =
          static_cast<long>(std::lround(std::sqrt(double(flat.size()))));
      if (m * m != static_cast<long>(flat.size()))
        throw UsageError("rate-eval: matrix argument must be square");
      Eigen::MatrixXd out(m, m);
      for (long i = 0; i < m; ++i)
        for (long j = 0; j < m; ++j) out(i, j) = flat[i * m + j];
      return out;
    };
    Eigen::MatrixXd s_val, theta_val;
    if (spec.kind == rates::RateSpec::Kind::ConditionalRelativeEntropy) {
      s_val = square(r_s);
      theta_val = square(r_theta);
    } else {
      s_val = to_vector(r_s);
      theta_val = to_vector(r_theta);
    }
    if (!r_sigma.empty())
      spec.nuisance.sigma = square(r_sigma);
    else if (spec.kind == rates::RateSpec::Kind::GaussianQuadratic ||
             (spec.kind == rates::RateSpec::Kind::Cramer &&
              spec.family == Family::Normal))
      spec.nuisance.sigma = Eigen::MatrixXd::Identity(s_val.rows(), s_val.rows());
    std::cout << harness::format_double(spec.evaluate(s_val, theta_val))
              << std::endl;
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return exit_code;
}
