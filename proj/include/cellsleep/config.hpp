#pragma once

#include <cstdint>
#include <string>

#include "cellsleep/baselines.hpp"
#include "cellsleep/io.hpp"
#include "cellsleep/serialize.hpp"
#include "cellsleep/threshold.hpp"

namespace cellsleep {

struct ExperimentConfig {
  std::string scenario_file;  // empty: <out>/scenarios.json
  int scenario_count = 8;
  CarrierProfiles profiles = default_profiles();
  double beta = 0.3;
  double p_gamma = 162.0;
  double tau = 1.0;
  double mean_lifetime = 8.0;
  double offline_qos_threshold = 80.0;  // Q_tau'
  double qos_target = 92.0;             // Q_Phi
  double gamma = 0.001;
  double theta0 = 85.0, theta1 = 1.0;
  double theta0_lo = 80.0, theta0_hi = 90.0;
  double theta1_lo = 0.0, theta1_hi = 3.0;
  double fixed_qos_threshold = 92.0;
  RuleParams rule;
  Mode mode = Mode::FourCell;
  int runs = 64;      // random-action runs per scenario for training data
  int eval_runs = 1;  // evaluation episodes per scenario
  std::uint64_t master_seed = 42;
  std::string out_dir = "out";
  int epochs = 50;
  int patience = 10;
  int batch_size = 64;
  int window = kDefaultWindow;
  double heldout_fraction = 0.1;

  void validate() const {
    auto fail = [](const std::string& m) { throw ValidationError("config: " + m); };
    if (scenario_count < 1) fail("scenario_count must be >= 1");
    try {
      validate_profiles(profiles);
      rule.validate();
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
    if (beta < 0.0 || p_gamma < 0.0) fail("beta and p_gamma must be >= 0");
    if (!(tau > 0.0)) fail("tau must be > 0");
    if (!(mean_lifetime >= 1.0)) fail("mean_lifetime must be >= 1");
    for (double q : {offline_qos_threshold, qos_target, fixed_qos_threshold})
      if (!(q >= 0.0 && q <= 100.0)) fail("QoS thresholds must be in [0,100]");
    if (gamma < 0.0) fail("gamma must be >= 0");
    if (!(theta0_lo <= theta0_hi && theta1_lo <= theta1_hi)) fail("theta bounds inverted");
    if (theta0 < theta0_lo || theta0 > theta0_hi || theta1 < theta1_lo || theta1 > theta1_hi)
      fail("initial theta outside bounds");
    if (runs < 1 || eval_runs < 1) fail("runs and eval_runs must be >= 1");
    if (epochs < 1 || batch_size < 1) fail("epochs and batch_size must be >= 1");
    if (window < 1) fail("window must be >= 1");
    if (!(heldout_fraction >= 0.0 && heldout_fraction < 1.0)) fail("heldout_fraction must be in [0,1)");
    if (out_dir.empty()) fail("out_dir must not be empty");
  }

  SimParams sim_params() const { return SimParams{profiles, beta, p_gamma, tau, mean_lifetime}; }
  ControllerConfig controller(Mode m) const { return ControllerConfig{m, offline_qos_threshold, beta, p_gamma}; }
  ThresholdModel threshold_model() const {
    ThresholdModel t;
    t.theta0 = theta0;
    t.theta1 = theta1;
    t.gamma = gamma;
    t.qos_target = qos_target;
    t.theta0_lo = theta0_lo;
    t.theta0_hi = theta0_hi;
    t.theta1_lo = theta1_lo;
    t.theta1_hi = theta1_hi;
    return t;
  }
  fs::path out() const { return fs::path(out_dir); }
  fs::path scenario_path() const { return scenario_file.empty() ? out() / "scenarios.json" : fs::path(scenario_file); }
};

inline Json to_json(const ExperimentConfig& c) {
  return Json{{"schema_version", kSchemaVersion},
              {"scenario_file", c.scenario_file},
              {"scenario_count", c.scenario_count},
              {"profiles", to_json(c.profiles)},
              {"beta", c.beta},
              {"p_gamma", c.p_gamma},
              {"tau", c.tau},
              {"mean_lifetime", c.mean_lifetime},
              {"offline_qos_threshold", c.offline_qos_threshold},
              {"qos_target", c.qos_target},
              {"gamma", c.gamma},
              {"theta_init", {c.theta0, c.theta1}},
              {"theta0_bounds", {c.theta0_lo, c.theta0_hi}},
              {"theta1_bounds", {c.theta1_lo, c.theta1_hi}},
              {"fixed_qos_threshold", c.fixed_qos_threshold},
              {"rule", {{"th_deac", c.rule.th_deac}, {"th_ac", c.rule.th_ac}, {"window", c.rule.window}}},
              {"mode", to_string(c.mode)},
              {"runs", c.runs},
              {"eval_runs", c.eval_runs},
              {"master_seed", c.master_seed},
              {"out_dir", c.out_dir},
              {"epochs", c.epochs},
              {"patience", c.patience},
              {"batch_size", c.batch_size},
              {"window", c.window},
              {"heldout_fraction", c.heldout_fraction}};
}

// Missing keys keep their defaults; unknown keys are rejected so typos surface.
inline ExperimentConfig config_from_json(const Json& j) {
  require_schema(j, "config");
  static const char* known[] = {"schema_version", "scenario_file", "scenario_count", "profiles", "beta", "p_gamma",
                                "tau", "mean_lifetime", "offline_qos_threshold", "qos_target", "gamma", "theta_init",
                                "theta0_bounds", "theta1_bounds", "fixed_qos_threshold", "rule", "mode", "runs",
                                "eval_runs", "master_seed", "out_dir", "epochs", "patience", "batch_size", "window",
                                "heldout_fraction"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ValidationError("config: unknown key '" + it.key() + "'");
  }
  ExperimentConfig c;
  try {
    auto get = [&](const char* k, auto& dst) {
      if (j.contains(k)) dst = j.at(k).get<std::remove_reference_t<decltype(dst)>>();
    };
    get("scenario_file", c.scenario_file);
    get("scenario_count", c.scenario_count);
    if (j.contains("profiles")) c.profiles = profiles_from_json(j.at("profiles"));
    get("beta", c.beta);
    get("p_gamma", c.p_gamma);
    get("tau", c.tau);
    get("mean_lifetime", c.mean_lifetime);
    get("offline_qos_threshold", c.offline_qos_threshold);
    get("qos_target", c.qos_target);
    get("gamma", c.gamma);
    if (j.contains("theta_init")) {
      c.theta0 = j.at("theta_init").at(0).get<double>();
      c.theta1 = j.at("theta_init").at(1).get<double>();
    }
    if (j.contains("theta0_bounds")) {
      c.theta0_lo = j.at("theta0_bounds").at(0).get<double>();
      c.theta0_hi = j.at("theta0_bounds").at(1).get<double>();
    }
    if (j.contains("theta1_bounds")) {
      c.theta1_lo = j.at("theta1_bounds").at(0).get<double>();
      c.theta1_hi = j.at("theta1_bounds").at(1).get<double>();
    }
    get("fixed_qos_threshold", c.fixed_qos_threshold);
    if (j.contains("rule")) {
      const auto& r = j.at("rule");
      if (r.contains("th_deac")) c.rule.th_deac = r.at("th_deac").get<double>();
      if (r.contains("th_ac")) c.rule.th_ac = r.at("th_ac").get<double>();
      if (r.contains("window")) c.rule.window = r.at("window").get<int>();
    }
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    get("runs", c.runs);
    get("eval_runs", c.eval_runs);
    get("master_seed", c.master_seed);
    get("out_dir", c.out_dir);
    get("epochs", c.epochs);
    get("patience", c.patience);
    get("batch_size", c.batch_size);
    get("window", c.window);
    get("heldout_fraction", c.heldout_fraction);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace cellsleep
