#include "ctrlab/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctrlab {

std::vector<int> select_ranker_groups(const std::vector<int>& pool, double fraction,
                                      uint64_t seed) {
  if (pool.empty()) throw ConfigError("ranker: no query groups to train on");
  if (fraction <= 0.0 || fraction > 1.0)
    throw ConfigError("ranker: fraction must be in (0,1]");
  const int k = static_cast<int>(std::ceil(fraction * static_cast<double>(pool.size())));
  auto rng = make_rng(seed, Stream::ranker_select);
  auto picks = sample_without_replacement(rng, static_cast<int>(pool.size()), k);
  std::vector<int> out;
  out.reserve(picks.size());
  for (const int p : picks) out.push_back(pool[static_cast<size_t>(p)]);
  std::sort(out.begin(), out.end());
  return out;
}

Ranker train_production_ranker(const Dataset& data, const std::vector<int>& pool,
                               double fraction, const RankerTrainConfig& config,
                               uint64_t seed) {
  const auto selected = select_ranker_groups(pool, fraction, seed);

  std::vector<std::pair<const QueryDocPair*, double>> examples;
  for (const int g : selected)
    for (const auto& doc : data.groups[static_cast<size_t>(g)].docs)
      examples.emplace_back(&doc, doc.grade / 4.0);
  if (examples.empty()) throw ConfigError("ranker: selected groups contain no documents");

  auto rng_init = make_rng(seed, Stream::ranker_init);
  Ranker ranker;
  ranker.net = nn::make_network({data.feature_dim, config.hidden, 1},
                                {nn::Activation::relu, nn::Activation::identity},
                                nn::Head::none, rng_init);

  auto grads = nn::make_gradients(ranker.net);
  auto opt = nn::make_optimizer(ranker.net, nn::OptimizerState::Algo::adam, config.lr);
  nn::Cache cache;

  auto rng_train = make_rng(seed, Stream::ranker_train);
  std::vector<int32_t> perm(examples.size());
  std::iota(perm.begin(), perm.end(), 0);
  shuffle_indices(rng_train, perm);
  size_t cursor = 0;

  for (int64_t s = 0; s < config.steps; ++s) {
    grads.zero();
    const int batch = config.batch_size;
    for (int i = 0; i < batch; ++i) {
      if (cursor == perm.size()) {
        shuffle_indices(rng_train, perm);
        cursor = 0;
      }
      const auto& [doc, target] = examples[static_cast<size_t>(perm[cursor++])];
      const auto out = nn::forward(ranker.net, doc->features, cache);
      const double up = 2.0 * (out[0] - target);
      nn::backward(ranker.net, cache, std::span(&up, 1), grads);
    }
    grads.scale(1.0 / batch);
    nn::step(ranker.net, grads, opt);
  }
  return ranker;
}

double ranker_score(const Ranker& ranker, std::span<const double> x) {
  thread_local nn::Cache cache;
  return nn::forward(ranker.net, x, cache)[0];
}

RankedList rank(const Ranker& ranker, const QueryGroup& group) {
  if (group.docs.empty()) throw ConfigError("rank: empty query group");
  RankedList list;
  list.query_id = group.query_id;
  const int m = static_cast<int>(group.docs.size());

  std::vector<double> scores(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i)
    scores[static_cast<size_t>(i)] = ranker_score(ranker, group.docs[static_cast<size_t>(i)].features);

  list.order.resize(static_cast<size_t>(m));
  std::iota(list.order.begin(), list.order.end(), 0);
  std::sort(list.order.begin(), list.order.end(), [&](int a, int b) {
    if (scores[static_cast<size_t>(a)] != scores[static_cast<size_t>(b)])
      return scores[static_cast<size_t>(a)] > scores[static_cast<size_t>(b)];
    return a < b;
  });

  list.positions.resize(static_cast<size_t>(m));
  for (int k = 0; k < m; ++k) list.positions[static_cast<size_t>(list.order[static_cast<size_t>(k)])] = k + 1;
  return list;
}

}  // namespace ctrlab
