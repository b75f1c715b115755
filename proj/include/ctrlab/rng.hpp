#pragma once
// Seed derivation and portable random draws. Every random stream in the
// pipeline is derived from the master seed plus a stream tag, so results do
// not depend on evaluation order or worker count.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace ctrlab {

inline uint64_t splitmix64(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Tags separating independent random streams derived from one master seed.
enum class Stream : uint64_t {
  synth_features = 1,
  synth_weights,
  synth_noise,
  data_split,
  ranker_select,
  ranker_init,
  ranker_train,
  sim_theta,
  sim_query,
  model_init,
  train_shuffle,
  test_misc,
};

inline uint64_t mix_seed(uint64_t master, Stream tag, uint64_t a = 0, uint64_t b = 0) {
  uint64_t s = master;
  splitmix64(s);
  s ^= static_cast<uint64_t>(tag);
  splitmix64(s);
  s ^= a;
  splitmix64(s);
  s ^= b;
  return splitmix64(s);
}

inline std::mt19937_64 make_rng(uint64_t master, Stream tag, uint64_t a = 0, uint64_t b = 0) {
  return std::mt19937_64(mix_seed(master, tag, a, b));
}

// Uniform in [0, 1). Built from raw bits; identical on every platform,
// unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(std::mt19937_64& rng, double p) {
  return uniform01(rng) < p;
}

// Unbiased integer in [0, n). Rejection sampling, no modulo bias.
inline uint64_t uniform_below(std::mt19937_64& rng, uint64_t n) {
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

// Standard normal via Box-Muller (the cosine branch only).
inline double normal01(std::mt19937_64& rng) {
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// The first k entries of a seeded Fisher-Yates shuffle of 0..n-1.
inline std::vector<int> sample_without_replacement(std::mt19937_64& rng, int n, int k) {
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  if (k > n) k = n;
  for (int i = 0; i < k; ++i) {
    const int j = i + static_cast<int>(uniform_below(rng, static_cast<uint64_t>(n - i)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  return idx;
}

inline void shuffle_indices(std::mt19937_64& rng, std::vector<int32_t>& idx) {
  for (size_t i = idx.size(); i > 1; --i) {
    const size_t j = uniform_below(rng, i);
    std::swap(idx[i - 1], idx[j]);
  }
}

}  // namespace ctrlab
