#pragma once
// The deliberately non-optimal production ranker that induces position bias:
// a small regression network fit on a fraction of the labeled data.

#include <cstdint>
#include <vector>

#include "ctrlab/letor.hpp"
#include "ctrlab/nn.hpp"

namespace ctrlab {

struct Ranker {
  nn::Network net;
};

struct RankerTrainConfig {
  int hidden = 32;
  int64_t steps = 3000;
  int batch_size = 32;
  double lr = 1e-3;
};

struct RankedList {
  int64_t query_id = 0;
  std::vector<int> order;      // doc indices, best first
  std::vector<int> positions;  // positions[doc] = 1-based rank
};

// ceil(fraction * |pool|) group indices chosen by seeded sampling.
std::vector<int> select_ranker_groups(const std::vector<int>& pool, double fraction,
                                      uint64_t seed);

// Pointwise squared-error regression against grades scaled to [0,1].
Ranker train_production_ranker(const Dataset& data, const std::vector<int>& pool,
                               double fraction, const RankerTrainConfig& config,
                               uint64_t seed);

double ranker_score(const Ranker& ranker, std::span<const double> x);

// Descending score, ties broken by ascending doc_id.
RankedList rank(const Ranker& ranker, const QueryGroup& group);

}  // namespace ctrlab
