#pragma once

// Summary table (per-scenario and average power, QoS, handovers per
// algorithm, plus power saving against No ES) and hourly plot data.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "cellsleep/pipeline.hpp"

namespace cellsleep {

struct ScenarioResult {
  int scenario = 0;
  double power = 0.0;     // episode mean station power, W
  double qos = 0.0;       // episode mean, %
  double handover = 0.0;  // episode total
  std::array<double, 24> hourly_power{}, hourly_active{}, hourly_qos{};
};

struct AlgorithmResult {
  std::string policy;
  Mode mode = Mode::FourCell;
  std::string label;
  std::vector<ScenarioResult> scenarios;

  double mean_power() const { return mean_of(&ScenarioResult::power); }
  double mean_qos() const { return mean_of(&ScenarioResult::qos); }
  double mean_handover() const { return mean_of(&ScenarioResult::handover); }
  double mean_of(double ScenarioResult::*f) const {
    double s = 0.0;
    for (const auto& r : scenarios) s += r.*f;
    return scenarios.empty() ? 0.0 : s / static_cast<double>(scenarios.size());
  }
};

inline std::string algorithm_label(const std::string& policy, Mode m) {
  if (policy == "noes") return "No ES";
  const std::string suffix = m == Mode::TwoCell ? " 2-cell" : " 4-cell";
  if (policy == "rule") return "Rule-based" + suffix;
  if (policy == "random") return "Random" + suffix;
  if (policy == "adp") return "ADP" + suffix;
  return "ADP Fixed" + suffix;
}

// Averages the evaluation episodes of one scenario.
inline ScenarioResult summarize_episodes(int scenario, const std::vector<std::vector<TraceRecord>>& episodes) {
  ScenarioResult r;
  r.scenario = scenario;
  const double n = static_cast<double>(episodes.size());
  for (const auto& tr : episodes) {
    if (static_cast<int>(tr.size()) != kStepsPerDay) throw ArtifactError("evaluation trace must have 96 records");
    for (const auto& rec : tr) {
      r.power += rec.power / kStepsPerDay / n;
      r.qos += rec.qos / kStepsPerDay / n;
      r.handover += rec.handovers / n;
      const int h = rec.t / 4;
      r.hourly_power[h] += rec.power / 4.0 / n;
      r.hourly_qos[h] += rec.qos / 4.0 / n;
      r.hourly_active[h] += apply_action(rec.action).count_on() / 4.0 / n;
    }
  }
  return r;
}

inline std::vector<AlgorithmResult> load_results(const ExperimentConfig& c) {
  const auto specs = load_scenarios(c);
  std::vector<AlgorithmResult> out;
  const std::vector<std::pair<std::string, Mode>> order{
      {"noes", Mode::FourCell},      {"noes", Mode::TwoCell},      {"rule", Mode::TwoCell},
      {"rule", Mode::FourCell},      {"random", Mode::TwoCell},    {"random", Mode::FourCell},
      {"adp-fixed", Mode::TwoCell},  {"adp-fixed", Mode::FourCell}, {"adp", Mode::TwoCell},
      {"adp", Mode::FourCell}};
  bool have_noes = false;
  for (const auto& [policy, mode] : order) {
    if (!fs::exists(run_dir(c, policy, mode))) continue;
    if (policy == "noes" && have_noes) continue;  // all-on is identical in both modes
    AlgorithmResult a{policy, mode, algorithm_label(policy, mode), {}};
    for (const auto& s : specs) {
      std::vector<std::vector<TraceRecord>> eps;
      for (int k = 0; k < c.eval_runs; ++k) {
        const auto p = eval_file(c, policy, mode, s.id, k);
        if (!fs::exists(p)) throw ArtifactError("evaluation trace missing: " + p.string());
        eps.push_back(trace_from_rows(read_jsonl(p), mode));
      }
      a.scenarios.push_back(summarize_episodes(s.id, eps));
    }
    if (policy == "noes") have_noes = true;
    out.push_back(std::move(a));
  }
  if (out.empty()) throw ArtifactError("report: no result sets under " + (c.out() / "runs").string());
  return out;
}

inline std::string summary_csv(const std::vector<AlgorithmResult>& results) {
  std::string csv =
      "# Power: episode mean station power (W). QoS: episode mean uncongested-cell percentage. "
      "Handover: episode total. Power saving: 100*(1 - P/P_noes).\n";
  csv += "algorithm,metric";
  const auto& first = results.front().scenarios;
  for (const auto& s : first) csv += ",scenario_" + std::to_string(s.scenario);
  csv += ",avg\n";
  const AlgorithmResult* noes = nullptr;
  for (const auto& a : results)
    if (a.policy == "noes") noes = &a;

  auto row = [&](const std::string& label, const std::string& metric, const std::vector<double>& v) {
    csv += label + "," + metric;
    double sum = 0.0;
    for (double x : v) {
      csv += "," + format_double(x);
      sum += x;
    }
    csv += "," + format_double(sum / static_cast<double>(v.size())) + "\n";
  };
  for (const auto& a : results) {
    std::vector<double> p, q, h;
    for (const auto& s : a.scenarios) {
      p.push_back(s.power);
      q.push_back(s.qos);
      h.push_back(s.handover);
    }
    row(a.label, "Power", p);
    row(a.label, "QoS", q);
    row(a.label, "Handover", h);
    if (noes && noes != &a) {
      std::vector<double> saving;
      for (std::size_t k = 0; k < a.scenarios.size(); ++k)
        saving.push_back(100.0 * (1.0 - a.scenarios[k].power / noes->scenarios[k].power));
      // the average column is the saving of the average powers, not the mean of savings
      csv += a.label + ",Power saving (%)";
      for (double x : saving) csv += "," + format_double(x);
      csv += "," + format_double(100.0 * (1.0 - a.mean_power() / noes->mean_power())) + "\n";
    }
  }
  return csv;
}

inline std::string hourly_csv(const std::vector<AlgorithmResult>& results) {
  std::string csv = "algorithm,metric,hour,mean,stderr\n";
  const std::vector<std::pair<std::string, std::array<double, 24> ScenarioResult::*>> metrics{
      {"power", &ScenarioResult::hourly_power},
      {"active_cells", &ScenarioResult::hourly_active},
      {"qos", &ScenarioResult::hourly_qos}};
  for (const auto& a : results) {
    for (const auto& [name, field] : metrics) {
      for (int h = 0; h < 24; ++h) {
        const double n = static_cast<double>(a.scenarios.size());
        double mean = 0.0;
        for (const auto& s : a.scenarios) mean += (s.*field)[h] / n;
        double var = 0.0;
        for (const auto& s : a.scenarios) var += ((s.*field)[h] - mean) * ((s.*field)[h] - mean);
        const double se = n > 1 ? std::sqrt(var / (n - 1) / n) : 0.0;
        csv += a.label + "," + name + "," + std::to_string(h) + "," + format_double(mean) + "," + format_double(se) + "\n";
      }
    }
  }
  return csv;
}

inline std::vector<AlgorithmResult> cmd_report(const ExperimentConfig& c) {
  c.validate();
  const auto results = load_results(c);
  const auto summary = summary_csv(results);
  const auto hourly = hourly_csv(results);
  write_atomic(c.out() / "report" / "summary.csv", summary);
  write_atomic(c.out() / "report" / "hourly.csv", hourly);
  return results;
}

// generate -> collect -> train -> build -> run every policy -> report
inline std::vector<AlgorithmResult> run_pipeline(const ExperimentConfig& c) {
  cmd_generate_scenarios(c);
  cmd_collect_data(c);
  cmd_train(c);
  cmd_build_table(c, {Mode::TwoCell, Mode::FourCell});
  cmd_run(c, "noes", Mode::FourCell);
  for (Mode m : {Mode::TwoCell, Mode::FourCell})
    for (const char* p : {"rule", "random", "adp-fixed", "adp"}) cmd_run(c, p, m);
  return cmd_report(c);
}

}  // namespace cellsleep
