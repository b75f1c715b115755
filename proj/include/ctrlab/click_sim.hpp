#pragma once
// Click simulation under scenarios S1-S5: position-decayed observation
// probabilities, piecewise click rules, K-resampling below rank 5, and
// reproducible logs. The parallel path shards query groups across OpenMP
// workers; per-query random streams make output identical for any worker
// count. simulate_reference() is the serial oracle the tests compare against.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ctrlab/letor.hpp"
#include "ctrlab/ranker.hpp"

namespace ctrlab {

enum class ScenarioId { s1, s2, s3, s4, s5 };

ScenarioId scenario_from_string(const std::string& name);
std::string to_string(ScenarioId id);

struct ObservationModel {
  enum class Kind { position_only, position_and_feature };
  Kind kind = Kind::position_only;
  std::vector<double> theta;  // linear map over document features
};

// S1-S4 observe by position alone; S5 adds a document weight driven by the
// title-length feature, with theta drawn once from the master seed.
ObservationModel make_observation_model(ScenarioId id, const Dataset& data,
                                        uint64_t master_seed);

// Min-max onto [0.5, 1]; a zero range maps everything to the midpoint 0.75.
std::vector<double> normalize_omega(const std::vector<double>& raw);

// Per-doc observation weights for one query (all 1.0 for position-only).
std::vector<double> omega_weights(const ObservationModel& model, const QueryGroup& group);

// omega is the doc's normalized weight; 1.0 under position-only models.
double observe_prob(const ObservationModel& model, double omega, int pos);

double click_prob(ScenarioId id, int pos, bool relevant, bool observed);

struct ClickRecord {
  int64_t query_id = 0;
  int32_t doc_id = 0;
  int32_t pos = 0;
  int8_t click = 0;
  std::vector<double> features;
  std::vector<double> bias;  // position one-hot, plus the title value under S5
  int8_t o_latent = -1;      // -1 when debug logging is off
  int8_t r_latent = -1;
};

struct ClickLog {
  std::vector<ClickRecord> records;
  int feature_dim = 0;
  int bias_dim = 0;
  bool has_latents = false;
};

struct SimConfig {
  int k = 15;                  // extra sampled docs below rank 5 per iteration
  int64_t click_budget = 0;    // target record count; rounds derived from it
  int64_t iterations = 0;      // explicit rounds per query; wins when > 0
  uint64_t seed = 0;
  bool debug_latents = false;
  int pos_cap = 10;            // one-hot width of the position encoding
};

std::vector<double> position_one_hot(int pos, int cap);

// Records per query per iteration: min(5, M) + min(K, max(0, M - 5)).
int64_t records_per_round(const Dataset& data, const std::vector<int>& groups, int k);

ClickLog simulate(const Dataset& data, const Ranker& ranker, ScenarioId scenario,
                  const SimConfig& config, const std::vector<int>& groups);
ClickLog simulate_reference(const Dataset& data, const Ranker& ranker, ScenarioId scenario,
                            const SimConfig& config, const std::vector<int>& groups);

// Per-position click rate; positions with no records are absent.
std::map<int, double> empirical_position_ctr(const ClickLog& log);

void save_click_log(const ClickLog& log, const std::string& path);
ClickLog load_click_log(const std::string& path);

}  // namespace ctrlab
