#pragma once

// Experiment commands. Each validates its inputs, computes, and only then
// writes its artifacts (atomically) under the configured output directory.
//
//   <out>/scenarios.json
//   <out>/corpus/scenario_<id>/run_<r>.jsonl
//   <out>/models/{power,qos,handover}.json, loss_history.csv, train_report.json
//   <out>/tables/<mode>/scenario_<id>.json
//   <out>/runs/<policy>_<mode>/scenario_<id>_eval_<k>.jsonl (+ .decisions.jsonl)
//   <out>/report/summary.csv, hourly.csv

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "cellsleep/baselines.hpp"
#include "cellsleep/config.hpp"
#include "cellsleep/controller.hpp"
#include "cellsleep/ctg.hpp"
#include "cellsleep/dataset.hpp"
#include "cellsleep/estimators.hpp"
#include "cellsleep/io.hpp"
#include "cellsleep/serialize.hpp"

namespace cellsleep {

inline constexpr std::uint64_t kTrainRunTag = 0x7A41'0001ULL;
inline constexpr std::uint64_t kTrainPolicyTag = 0x7A41'0002ULL;
inline constexpr std::uint64_t kEvalRunTag = 0xE7A1'0001ULL;
inline constexpr std::uint64_t kEvalPolicyTag = 0xE7A1'0002ULL;

inline std::uint64_t train_run_seed(const ExperimentConfig& c, int scenario, int run) {
  return derive_seed({c.master_seed, kTrainRunTag, static_cast<std::uint64_t>(scenario), static_cast<std::uint64_t>(run)});
}
inline std::uint64_t eval_run_seed(const ExperimentConfig& c, int scenario, int k) {
  return derive_seed({c.master_seed, kEvalRunTag, static_cast<std::uint64_t>(scenario), static_cast<std::uint64_t>(k)});
}

inline const std::vector<std::string>& policy_names() {
  static const std::vector<std::string> p{"noes", "rule", "random", "adp", "adp-fixed"};
  return p;
}

inline void log_line(const std::string& s) { std::cerr << s << '\n'; }

inline fs::path corpus_file(const ExperimentConfig& c, int scenario, int run) {
  return c.out() / "corpus" / ("scenario_" + std::to_string(scenario)) / ("run_" + std::to_string(run) + ".jsonl");
}
inline fs::path table_file(const ExperimentConfig& c, Mode m, int scenario) {
  return c.out() / "tables" / to_string(m) / ("scenario_" + std::to_string(scenario) + ".json");
}
inline fs::path run_dir(const ExperimentConfig& c, const std::string& policy, Mode m) {
  return c.out() / "runs" / (policy + "_" + to_string(m));
}
inline fs::path eval_file(const ExperimentConfig& c, const std::string& policy, Mode m, int scenario, int k) {
  return run_dir(c, policy, m) / ("scenario_" + std::to_string(scenario) + "_eval_" + std::to_string(k) + ".jsonl");
}

// ---- generate-scenarios

inline std::vector<ScenarioSpec> cmd_generate_scenarios(const ExperimentConfig& c) {
  c.validate();
  auto specs = default_scenarios(c.master_seed, c.scenario_count);
  write_json_file(c.scenario_path(), scenarios_to_json(specs));
  return specs;
}

inline std::vector<ScenarioSpec> load_scenarios(const ExperimentConfig& c) {
  const auto p = c.scenario_path();
  if (!fs::exists(p)) throw ArtifactError("scenario file not found: " + p.string());
  return scenarios_from_json(read_json(p));
}

// ---- collect-data

inline void cmd_collect_data(const ExperimentConfig& c) {
  c.validate();
  const auto specs = load_scenarios(c);
  const auto params = c.sim_params();
  for (const auto& s : specs) {
    for (int r = 0; r < c.runs; ++r) {
      RandomPolicy policy(derive_seed({c.master_seed, kTrainPolicyTag, static_cast<std::uint64_t>(s.id),
                                       static_cast<std::uint64_t>(r)}),
                          Mode::FourCell);
      const auto trace = run_episode(s, policy, train_run_seed(c, s.id, r), params);
      write_jsonl(corpus_file(c, s.id, r), trace_to_rows(trace));
    }
    log_line("collected scenario " + std::to_string(s.id) + ": " + std::to_string(c.runs) + " runs");
  }
}

// Traces per scenario, in scenario then run order.
inline std::map<int, std::vector<std::vector<TraceRecord>>> load_corpus(const ExperimentConfig& c,
                                                                        const std::vector<ScenarioSpec>& specs) {
  std::map<int, std::vector<std::vector<TraceRecord>>> out;
  for (const auto& s : specs) {
    for (int r = 0; r < c.runs; ++r) {
      const auto p = corpus_file(c, s.id, r);
      if (!fs::exists(p)) throw ArtifactError("corpus file missing: " + p.string());
      out[s.id].push_back(trace_from_rows(read_jsonl(p)));
    }
  }
  return out;
}

// ---- train

struct TrainSummary {
  HeldoutQuality quality;
  std::size_t mlp_samples = 0, seq_samples = 0;
  int skipped_traces = 0;
};

inline TrainSummary cmd_train(const ExperimentConfig& c) {
  c.validate();
  const auto specs = load_scenarios(c);
  const auto corpus = load_corpus(c, specs);
  std::vector<std::vector<TraceRecord>> traces;
  for (const auto& [id, runs] : corpus)
    for (const auto& t : runs) traces.push_back(t);
  std::size_t records = 0;
  for (const auto& t : traces) records += t.size();
  if (records == 0) throw ArtifactError("train: corpus is empty");

  DatasetOptions dopt;
  dopt.window = c.window;
  dopt.heldout_fraction = c.heldout_fraction;
  dopt.seed = derive_seed({c.master_seed, 0xDA7AULL});
  dopt.beta = c.beta;
  dopt.p_gamma = c.p_gamma;
  Dataset ds;
  try {
    ds = build_dataset(traces, c.profiles, dopt);
  } catch (const std::invalid_argument& e) {
    throw ArtifactError(std::string("train: ") + e.what());
  }
  if (ds.skipped_traces > 0) log_line("warning: skipped " + std::to_string(ds.skipped_traces) + " short traces");

  EstimatorTrainOptions topt;
  topt.mlp = TrainOptions{c.epochs, c.batch_size, c.patience, derive_seed({c.master_seed, 0x5A1ULL})};
  topt.lstm = TrainOptions{c.epochs, c.batch_size, c.patience, derive_seed({c.master_seed, 0x5A2ULL})};
  topt.init_seed = derive_seed({c.master_seed, 0x1A17ULL});
  const auto res = train_estimators(ds, c.profiles, topt);
  const auto& est = res.estimators;

  const auto dir = c.out() / "models";
  write_json_file(dir / "power.json", model_json(*est.power, "power", est.stats, est.window));
  write_json_file(dir / "qos.json", model_json(*est.qos, "qos", est.stats, est.window));
  write_json_file(dir / "handover.json", model_json(*est.handover, est.stats, est.window));

  std::string csv = "epoch,power_train,power_heldout,qos_train,qos_heldout,handover_train,handover_heldout\n";
  const std::size_t epochs = std::max({res.power_report.train_loss.size(), res.qos_report.train_loss.size(),
                                       res.handover_report.train_loss.size()});
  auto cell = [](const std::vector<double>& v, std::size_t e) {
    return e < v.size() && std::isfinite(v[e]) ? format_double(v[e]) : std::string();
  };
  for (std::size_t e = 0; e < epochs; ++e) {
    csv += std::to_string(e) + "," + cell(res.power_report.train_loss, e) + "," + cell(res.power_report.heldout_loss, e) +
           "," + cell(res.qos_report.train_loss, e) + "," + cell(res.qos_report.heldout_loss, e) + "," +
           cell(res.handover_report.train_loss, e) + "," + cell(res.handover_report.heldout_loss, e) + "\n";
  }
  write_atomic(dir / "loss_history.csv", csv);

  TrainSummary sum{res.quality, ds.mlp_samples(), ds.seq_samples(), ds.skipped_traces};
  auto rep = [](const TrainReport& r) {
    return Json{{"epochs_run", r.train_loss.size()}, {"best_epoch", r.best_epoch}, {"early_stopped", r.early_stopped}};
  };
  write_json_file(dir / "train_report.json",
                  Json{{"schema_version", kSchemaVersion},
                       {"mlp_samples", sum.mlp_samples},
                       {"lstm_samples", sum.seq_samples},
                       {"skipped_traces", sum.skipped_traces},
                       {"heldout_power_relative_mae", res.quality.power_relative_mae},
                       {"heldout_qos_mae", res.quality.qos_mae},
                       {"heldout_handover_mae", res.quality.handover_mae},
                       {"power", rep(res.power_report)},
                       {"qos", rep(res.qos_report)},
                       {"handover", rep(res.handover_report)}});
  log_line("trained estimators: power rel MAE " + format_double(res.quality.power_relative_mae) + ", QoS MAE " +
           format_double(res.quality.qos_mae));
  return sum;
}

inline Estimators load_estimators(const ExperimentConfig& c) {
  const auto dir = c.out() / "models";
  for (const char* f : {"power.json", "qos.json", "handover.json"})
    if (!fs::exists(dir / f)) throw ArtifactError(std::string("model file missing: ") + (dir / f).string());
  return estimators_from_json(read_json(dir / "power.json"), read_json(dir / "qos.json"),
                              read_json(dir / "handover.json"), c.profiles);
}

// ---- build-table

inline void cmd_build_table(const ExperimentConfig& c, const std::vector<Mode>& modes) {
  c.validate();
  const auto specs = load_scenarios(c);
  const auto est = load_estimators(c);
  const auto corpus = load_corpus(c, specs);
  std::vector<std::pair<fs::path, Json>> out;
  for (const auto& s : specs) {
    const auto mean = mean_traffic(corpus.at(s.id));
    for (Mode m : modes) {
      const auto table = build_ctg_table(std::span<const StationState>(mean), est, c.controller(m));
      out.emplace_back(table_file(c, m, s.id), to_json(table));
    }
  }
  for (const auto& [p, j] : out) write_json_file(p, j);
}

inline CostToGoTable load_table(const ExperimentConfig& c, Mode m, int scenario) {
  const auto p = table_file(c, m, scenario);
  if (!fs::exists(p)) throw ArtifactError("cost-to-go table missing: " + p.string());
  auto t = table_from_json(read_json(p));
  if (t.mode != m) throw ArtifactError("cost-to-go table has the wrong mode: " + p.string());
  if (t.horizon != kStepsPerDay) throw ArtifactError("cost-to-go table must span the whole day: " + p.string());
  return t;
}

// ---- run

inline Json to_json(const Decision& d) {
  Json rows = Json::array();
  for (const auto& s : d.scores)
    rows.push_back(Json{{"action", mask_string(s.action.mask)},
                        {"power", s.power},
                        {"qos", s.qos},
                        {"delta", s.delta},
                        {"ctg", s.ctg},
                        {"score", s.score},
                        {"feasible", s.feasible}});
  return Json{{"t", d.t},
              {"chosen", mask_string(d.chosen.mask)},
              {"fallback", d.fallback},
              {"qos_threshold", d.qos_threshold},
              {"mean_handover", d.mean_handover},
              {"actions", rows}};
}

inline void cmd_run(const ExperimentConfig& c, const std::string& policy, Mode mode) {
  c.validate();
  if (std::find(policy_names().begin(), policy_names().end(), policy) == policy_names().end())
    throw ValidationError("unknown policy '" + policy + "'");
  const auto specs = load_scenarios(c);
  const auto params = c.sim_params();
  const bool adp = policy == "adp" || policy == "adp-fixed";

  // evaluation must never replay a training episode
  std::set<std::uint64_t> train_seeds;
  for (const auto& s : specs)
    for (int r = 0; r < c.runs; ++r) train_seeds.insert(train_run_seed(c, s.id, r));

  std::optional<Estimators> est;
  std::map<int, CostToGoTable> tables;
  if (adp) {
    est = load_estimators(c);
    for (const auto& s : specs) tables.emplace(s.id, load_table(c, mode, s.id));
  }

  for (const auto& s : specs) {
    for (int k = 0; k < c.eval_runs; ++k) {
      const auto seed = eval_run_seed(c, s.id, k);
      if (train_seeds.count(seed)) throw ValidationError("evaluation seed collides with a training seed");
      std::vector<TraceRecord> trace;
      std::vector<Json> decisions;
      if (policy == "noes") {
        NoEsPolicy p(mode);
        trace = run_episode(s, p, seed, params);
      } else if (policy == "rule") {
        RuleBasedPolicy p(c.rule, mode, c.profiles);
        trace = run_episode(s, p, seed, params);
      } else if (policy == "random") {
        RandomPolicy p(derive_seed({c.master_seed, kEvalPolicyTag, static_cast<std::uint64_t>(s.id),
                                    static_cast<std::uint64_t>(k)}),
                       mode);
        trace = run_episode(s, p, seed, params);
      } else {
        AdpPolicy<Estimators> p(tables.at(s.id), *est, c.controller(mode), c.threshold_model(), policy == "adp",
                                c.fixed_qos_threshold);
        trace = run_episode(s, p, seed, params);
        for (const auto& d : p.decisions()) decisions.push_back(to_json(d));
      }
      const auto path = eval_file(c, policy, mode, s.id, k);
      write_jsonl(path, trace_to_rows(trace));
      if (adp) {
        auto dp = path;
        dp.replace_extension(".decisions.jsonl");
        write_jsonl(dp, decisions);
      }
    }
  }
  log_line("ran " + policy + " " + to_string(mode));
}

}  // namespace cellsleep
