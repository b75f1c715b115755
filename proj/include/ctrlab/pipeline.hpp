#pragma once
// Stage orchestration behind the CLI. Stages communicate through files in the
// run directory so each one can be executed and inspected on its own; run_all
// chains them and emits the summary, bias surface and manifest.

#include <optional>
#include <string>

#include "ctrlab/config.hpp"

namespace ctrlab {

struct RunPaths {
  std::string dir;
  std::string data() const { return dir + "/data.letor"; }
  std::string ranker() const { return dir + "/ranker.ckpt"; }
  std::string clicks() const { return dir + "/clicks.csv"; }
  std::string model(ModelKind kind) const { return dir + "/model_" + to_string(kind) + ".ckpt"; }
  std::string curve(ScenarioId s, ModelKind kind) const {
    return dir + "/curve_" + to_string(s) + "_" + to_string(kind) + ".csv";
  }
  std::string summary() const { return dir + "/summary.csv"; }
  std::string bias_surface() const { return dir + "/bias_surface.csv"; }
  std::string manifest() const { return dir + "/manifest.cfg"; }
  std::string merged() const { return dir + "/merged_curves.csv"; }
};

// Dataset plus the deterministic split and normalization every stage shares.
struct PreparedData {
  Dataset data;
  Split split;
};

PreparedData prepare_data(const ExperimentConfig& config);

void cmd_gen_data(const ExperimentConfig& config);
void cmd_train_ranker(const ExperimentConfig& config);
void cmd_simulate(const ExperimentConfig& config);
void cmd_train(const ExperimentConfig& config, ModelKind kind);
double cmd_evaluate(const ExperimentConfig& config, ModelKind kind);
void cmd_run(const ExperimentConfig& config);
void cmd_report(const std::string& run_dir);

// The same pipeline without the file round-trips; used by the acceptance
// suite where many configurations are run in one process.
struct ExperimentOutcome {
  std::vector<std::pair<ModelKind, TrainResult>> results;
};
ExperimentOutcome run_in_memory(const ExperimentConfig& config);

}  // namespace ctrlab
