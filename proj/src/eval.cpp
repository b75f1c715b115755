#include "ctrlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace ctrlab {

double auc(std::span<const double> scores, std::span<const int8_t> labels) {
  if (scores.size() != labels.size())
    throw std::invalid_argument("auc: scores/labels length mismatch");
  const size_t n = scores.size();

  size_t n_pos = 0;
  for (const auto l : labels) n_pos += l ? 1 : 0;
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw std::invalid_argument("auc: needs both classes present");

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });

  // Sum of average ranks (1-based) over positives; ties share their ranks.
  double rank_sum = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of i+1..j
    for (size_t k = i; k < j; ++k)
      if (labels[order[k]]) rank_sum += avg_rank;
    i = j;
  }
  const double u = rank_sum - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

TestSet build_test_set(const Dataset& data, const std::vector<int>& test_groups) {
  TestSet test;
  for (const int g : test_groups) {
    for (const auto& doc : data.groups[static_cast<size_t>(g)].docs) {
      test.x.push_back(doc.features);
      test.label.push_back(binarize_relevance(doc.grade) ? 1 : 0);
    }
  }
  return test;
}

std::vector<double> score_test_set(const Trainer& model, const TestSet& test) {
  std::vector<double> scores(test.x.size());
  const auto n = static_cast<int64_t>(test.x.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i)
    scores[static_cast<size_t>(i)] = model.score(test.x[static_cast<size_t>(i)]);
  return scores;
}

TrainResult train_and_eval(ModelKind kind, const ClickLog& log, const Dataset& data,
                           const TestSet& test, const TrainSchedule& schedule,
                           uint64_t seed) {
  if (log.records.empty()) throw ConfigError("train: empty click log");
  if (test.x.empty()) throw ConfigError("train: empty test set");
  if (schedule.steps < 0) throw ConfigError("train: steps must be >= 0");
  if (schedule.batch_size <= 0) throw ConfigError("train: batch_size must be positive");

  ModelDims dims;
  dims.feature_dim = log.feature_dim;
  dims.bias_dim = log.bias_dim;
  dims.pos_cap = schedule.pos_cap;
  dims.hidden_main = schedule.hidden_main;
  dims.hidden_bias = schedule.hidden_bias;
  if (dims.bias_dim < dims.pos_cap)
    throw ConfigError("train: click log bias width is below the position cap");

  TrainerHyper hyper;
  hyper.lr = schedule.lr;
  hyper.alpha = schedule.alpha;

  TrainResult result;
  result.model = make_trainer(kind, dims, hyper, seed);

  // Skyline trains against true relevance; the click models train on clicks.
  std::vector<int8_t> labels(log.records.size());
  if (kind == ModelKind::skyline) {
    std::unordered_map<int64_t, const QueryGroup*> group_of;
    for (const auto& g : data.groups) group_of[g.query_id] = &g;
    for (size_t i = 0; i < log.records.size(); ++i) {
      const auto& rec = log.records[i];
      const auto it = group_of.find(rec.query_id);
      if (it == group_of.end() ||
          rec.doc_id >= static_cast<int32_t>(it->second->docs.size()))
        throw ConfigError("train: click log does not match the dataset");
      labels[i] =
          binarize_relevance(it->second->docs[static_cast<size_t>(rec.doc_id)].grade) ? 1 : 0;
    }
  } else {
    for (size_t i = 0; i < log.records.size(); ++i) labels[i] = log.records[i].click;
  }

  auto evaluate = [&](int64_t step) {
    const auto scores = score_test_set(*result.model, test);
    result.curve.push_back({step, auc(scores, test.label)});
  };

  evaluate(0);

  auto rng = make_rng(seed, Stream::train_shuffle, static_cast<uint64_t>(kind));
  std::vector<int32_t> perm(log.records.size());
  std::iota(perm.begin(), perm.end(), 0);
  shuffle_indices(rng, perm);
  size_t cursor = 0;

  std::vector<std::span<const double>> xs(static_cast<size_t>(schedule.batch_size));
  std::vector<std::span<const double>> biases(static_cast<size_t>(schedule.batch_size));
  std::vector<int8_t> batch_labels(static_cast<size_t>(schedule.batch_size));

  for (int64_t step = 1; step <= schedule.steps; ++step) {
    for (int i = 0; i < schedule.batch_size; ++i) {
      if (cursor == perm.size()) {
        shuffle_indices(rng, perm);
        cursor = 0;
      }
      const auto& rec = log.records[static_cast<size_t>(perm[cursor])];
      xs[static_cast<size_t>(i)] = rec.features;
      biases[static_cast<size_t>(i)] = rec.bias;
      batch_labels[static_cast<size_t>(i)] = labels[static_cast<size_t>(perm[cursor])];
      ++cursor;
    }
    result.model->train_batch(xs, biases, batch_labels);
    if ((schedule.eval_every > 0 && step % schedule.eval_every == 0) ||
        step == schedule.steps)
      evaluate(step);
  }

  result.final_auc = result.curve.back().auc;
  return result;
}

// --------------------------------------------------------------------------
// Route metrics

double Route::total_length() const {
  double sum = 0.0;
  for (const auto& [id, len] : segments) sum += len;
  return sum;
}

double acr(const Route& candidate, const Route& actual) {
  const double denom = actual.total_length();
  if (denom <= 0.0) throw std::invalid_argument("acr: actual route has no length");
  std::unordered_set<int64_t> cand_ids;
  for (const auto& [id, len] : candidate.segments) cand_ids.insert(id);
  double shared = 0.0;
  for (const auto& [id, len] : actual.segments)
    if (cand_ids.contains(id)) shared += len;
  return shared / denom;
}

double fcr_avg(std::span<const NavigationSession> sessions) {
  if (sessions.empty()) throw std::invalid_argument("fcr_avg: no sessions");
  double sum = 0.0;
  for (const auto& s : sessions) {
    if (s.recommended.empty())
      throw std::invalid_argument("fcr_avg: session without recommendations");
    sum += acr(s.recommended.front(), s.actual);
  }
  return sum / static_cast<double>(sessions.size());
}

double yr_avg(std::span<const NavigationSession> sessions) {
  if (sessions.empty()) throw std::invalid_argument("yr_avg: no sessions");
  double deviated = 0.0;
  for (const auto& s : sessions) {
    std::unordered_set<int64_t> covered;
    for (const auto& route : s.recommended)
      for (const auto& [id, len] : route.segments) covered.insert(id);
    double off_network = 0.0;
    for (const auto& [id, len] : s.actual.segments)
      if (!covered.contains(id)) off_network += len;
    if (off_network > 0.0) deviated += 1.0;
  }
  return deviated / static_cast<double>(sessions.size());
}

double fsr_avg(std::span<const NavigationSession> sessions) {
  if (sessions.empty()) throw std::invalid_argument("fsr_avg: no sessions");
  double first = 0.0;
  for (const auto& s : sessions) {
    if (s.selected_index < 1)
      throw std::invalid_argument("fsr_avg: session without a selection record");
    if (s.selected_index == 1) first += 1.0;
  }
  return first / static_cast<double>(sessions.size());
}

}  // namespace ctrlab
