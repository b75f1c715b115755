#pragma once
// Flat key-value experiment configuration. Files hold one "key = value" per
// line with '#' comments; CLI flags override file values; keys starting with
// '_' are manifest metadata and are ignored on load.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ctrlab/click_sim.hpp"
#include "ctrlab/eval.hpp"
#include "ctrlab/letor.hpp"

namespace ctrlab {

using KeyValues = std::map<std::string, std::string>;

KeyValues parse_config_text(const std::string& text, const std::string& origin);
KeyValues load_config_file(const std::string& path);

struct ExperimentConfig {
  // dataset: either a LETOR file or synthetic generation
  std::string data_path;
  SynthConfig synth;
  double test_fraction = 0.2;

  // production ranker
  double ranker_fraction = 0.05;
  RankerTrainConfig ranker;

  // click simulation
  ScenarioId scenario = ScenarioId::s1;
  SimConfig sim;

  // model training
  std::vector<ModelKind> models = {ModelKind::iin, ModelKind::pal, ModelKind::mmoe,
                                   ModelKind::skyline};
  TrainSchedule schedule;

  std::string out_dir = "out";
  uint64_t seed = 1;
  int threads = 0;  // 0 keeps the OpenMP default
};

// Validates and materializes defaults; unknown keys are an error.
ExperimentConfig experiment_from_kv(const KeyValues& kv);

// Fully resolved echo of a config, suitable for re-running.
KeyValues kv_from_experiment(const ExperimentConfig& config);

std::string render_config(const KeyValues& kv);

}  // namespace ctrlab
