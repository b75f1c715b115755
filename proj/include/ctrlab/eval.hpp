#pragma once
// Evaluation: pooled ROC AUC (Mann-Whitney with tie credit), the training
// harness with periodic test-set AUC, and the route-recommendation metrics
// ACR / FCR / YR / FSR.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "ctrlab/click_sim.hpp"
#include "ctrlab/models.hpp"

namespace ctrlab {

// Fraction of (positive, negative) pairs where the positive outscores the
// negative, ties credited 0.5. Throws on single-class input.
double auc(std::span<const double> scores, std::span<const int8_t> labels);

struct EvalPoint {
  int64_t step = 0;
  double auc = 0.0;
};

struct TestSet {
  std::vector<std::vector<double>> x;
  std::vector<int8_t> label;  // binarized relevance
};

TestSet build_test_set(const Dataset& data, const std::vector<int>& test_groups);

struct TrainSchedule {
  int64_t steps = 20000;
  int batch_size = 256;
  double lr = 1e-3;
  double alpha = 100.0;
  int64_t eval_every = 1000;
  int hidden_main = 64;
  int hidden_bias = 16;
  int pos_cap = 10;
};

struct TrainResult {
  std::vector<EvalPoint> curve;
  double final_auc = 0.0;
  std::unique_ptr<Trainer> model;
};

// Trains on the click log (skyline on true relevance looked up from the
// dataset), evaluating the inference scorer on the test set at step 0, every
// eval_every steps, and at the final step. Deterministic for a fixed seed.
TrainResult train_and_eval(ModelKind kind, const ClickLog& log, const Dataset& data,
                           const TestSet& test, const TrainSchedule& schedule,
                           uint64_t seed);

// Scores every test example with the model's inference scorer.
std::vector<double> score_test_set(const Trainer& model, const TestSet& test);

// --------------------------------------------------------------------------
// Route metrics

struct Route {
  std::vector<std::pair<int64_t, double>> segments;  // (segment id, length > 0)
  double total_length() const;
};

struct NavigationSession {
  std::vector<Route> recommended;  // first entry is the top recommendation
  Route actual;
  int selected_index = 0;  // 1-based index of the route the user selected
};

// Shared length between candidate and actual, over the actual route's length.
double acr(const Route& candidate, const Route& actual);

// Mean ACR of the first recommended route against the driven route.
double fcr_avg(std::span<const NavigationSession> sessions);

// Fraction of sessions where the driven route leaves the union of all
// recommended routes.
double yr_avg(std::span<const NavigationSession> sessions);

// Fraction of sessions whose selected route is the first recommendation.
double fsr_avg(std::span<const NavigationSession> sessions);

}  // namespace ctrlab
