#pragma once
// LETOR/SVMLight-style learning-to-rank data: parsing, synthetic generation,
// train/test splitting and feature normalization.

#include <cstdint>
#include <string>
#include <vector>

#include "ctrlab/util.hpp"

namespace ctrlab {

struct QueryDocPair {
  int64_t query_id = 0;
  int32_t doc_id = 0;  // index within the query's list, assigned on load
  std::vector<double> features;
  int grade = 0;  // relevance grade in 0..4
};

struct QueryGroup {
  int64_t query_id = 0;
  std::vector<QueryDocPair> docs;
};

struct Dataset {
  std::vector<QueryGroup> groups;
  int feature_dim = 0;
  // Feature designated as the title-length bias feature; -1 if none.
  int title_feature_index = -1;

  size_t num_docs() const {
    size_t n = 0;
    for (const auto& g : groups) n += g.docs.size();
    return n;
  }
};

// Relevant iff grade > 2.
inline bool binarize_relevance(int grade) { return grade > 2; }

// "<grade> qid:<qid> <fid>:<value> ... [# comment]", feature ids 1-based,
// missing ids zero-filled up to feature_dim.
QueryDocPair parse_letor_line(const std::string& line, int feature_dim);
std::string format_letor_line(const QueryDocPair& pair);

// Groups assembled in order of first appearance of each qid; doc_id assigned
// by within-query order. Parse errors abort with the offending line number.
Dataset load_dataset(const std::string& path, int feature_dim, int title_feature_index);
void save_dataset(const Dataset& data, const std::string& path);

struct SynthConfig {
  int queries = 0;
  int docs_per_query = 0;
  int feature_dim = 0;
  double relevant_fraction = 0.2;
  int title_feature_index = 0;
  double noise = 0.25;  // std dev of noise added to the latent score
};

// Deterministic synthetic dataset: features ~ U[0,1), a hidden weight vector
// defines a latent score, grades assigned by quantile-thresholding the noised
// score so that about relevant_fraction of documents binarize to relevant.
// The title feature gets zero hidden weight so it stays independent of grade.
Dataset generate_synthetic(const SynthConfig& config, uint64_t seed);

struct Split {
  std::vector<int> train;  // group indices, ascending
  std::vector<int> test;
};

Split split_groups(int n_groups, double test_fraction, uint64_t seed);

// Per-feature min-max computed on the train groups, applied to every group.
// Zero-range features map to 0.
void normalize_features(Dataset& data, const std::vector<int>& train_groups);

}  // namespace ctrlab
