#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cellsleep/report.hpp"

using namespace cellsleep;

namespace {

enum Exit { kOk = 0, kOther = 1, kIo = 2, kArtifact = 3, kValidation = 4 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell on/off switching experiments for a single base station"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> mode;
  std::optional<int> runs;
  std::optional<int> count;
  std::optional<int> eval_runs;
  std::optional<int> epochs;
  std::string policy = "adp";
  bool write_config = false;

  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--mode", mode, "2cell or 4cell");
  app.add_option("--policy", policy, "noes, rule, random, adp or adp-fixed");
  app.add_option("--runs", runs, "random-action runs per scenario");
  app.add_option("--eval-runs", eval_runs, "evaluation episodes per scenario");
  app.add_option("--epochs", epochs, "training epochs");

  auto* gen = app.add_subcommand("generate-scenarios", "write the scenario file");
  gen->add_option("--count", count, "number of scenarios");
  gen->add_flag("--write-config", write_config, "also write the effective config next to the scenarios");
  app.add_subcommand("collect-data", "random-action episodes for training");
  app.add_subcommand("train", "fit the power, QoS and handover estimators");
  app.add_subcommand("build-table", "offline cost-to-go tables (both modes unless --mode)");
  app.add_subcommand("run", "evaluate one policy on every scenario");
  app.add_subcommand("report", "summary and hourly CSV from all result sets");
  app.add_subcommand("pipeline", "every step above in order");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = config_from_json(read_json(config_path));
    if (seed) cfg.master_seed = *seed;
    if (out) cfg.out_dir = *out;
    if (mode) {
      try {
        cfg.mode = parse_mode(*mode);
      } catch (const std::invalid_argument& e) {
        throw ValidationError(e.what());
      }
    }
    if (runs) cfg.runs = *runs;
    if (count) cfg.scenario_count = *count;
    if (eval_runs) cfg.eval_runs = *eval_runs;
    if (epochs) cfg.epochs = *epochs;
    cfg.validate();

    const std::string cmd = app.get_subcommands().front()->get_name();
    if (cmd == "generate-scenarios") {
      const auto specs = cmd_generate_scenarios(cfg);
      if (write_config) write_json_file(cfg.out() / "config.json", to_json(cfg));
      std::cout << "wrote " << specs.size() << " scenarios to " << cfg.scenario_path().string() << "\n";
    } else if (cmd == "collect-data") {
      cmd_collect_data(cfg);
    } else if (cmd == "train") {
      const auto s = cmd_train(cfg);
      std::cout << "heldout power relative MAE " << s.quality.power_relative_mae << ", QoS MAE " << s.quality.qos_mae
                << ", handover MAE " << s.quality.handover_mae << "\n";
    } else if (cmd == "build-table") {
      if (mode)
        cmd_build_table(cfg, {cfg.mode});
      else
        cmd_build_table(cfg, {Mode::TwoCell, Mode::FourCell});
    } else if (cmd == "run") {
      cmd_run(cfg, policy, cfg.mode);
    } else if (cmd == "report") {
      for (const auto& a : cmd_report(cfg))
        std::cout << a.label << ": power " << a.mean_power() << " W, QoS " << a.mean_qos() << " %, handovers "
                  << a.mean_handover() << "\n";
    } else if (cmd == "pipeline") {
      for (const auto& a : run_pipeline(cfg))
        std::cout << a.label << ": power " << a.mean_power() << " W, QoS " << a.mean_qos() << " %, handovers "
                  << a.mean_handover() << "\n";
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ArtifactError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kArtifact;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOk;
}
