#include "ctrlab/letor.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "ctrlab/rng.hpp"

namespace ctrlab {

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

QueryDocPair parse_letor_line(const std::string& line, int feature_dim) {
  std::string_view body(line);
  if (const size_t hash = body.find('#'); hash != std::string_view::npos)
    body = body.substr(0, hash);

  const auto tokens = split_ws(body);
  if (tokens.size() < 2)
    throw ParseError("expected '<grade> qid:<qid> ...', got '" + line + "'");

  QueryDocPair pair;
  try {
    pair.grade = static_cast<int>(parse_int(tokens[0]));
  } catch (const ParseError&) {
    throw ParseError("bad grade token '" + std::string(tokens[0]) + "'");
  }
  if (pair.grade < 0 || pair.grade > 4)
    throw ParseError("grade out of range [0,4]: '" + std::string(tokens[0]) + "'");

  if (!tokens[1].starts_with("qid:"))
    throw ParseError("expected qid token, got '" + std::string(tokens[1]) + "'");
  pair.query_id = parse_int(tokens[1].substr(4));

  pair.features.assign(static_cast<size_t>(feature_dim), 0.0);
  for (size_t t = 2; t < tokens.size(); ++t) {
    const std::string_view tok = tokens[t];
    const size_t colon = tok.find(':');
    if (colon == std::string_view::npos)
      throw ParseError("bad feature token '" + std::string(tok) + "'");
    int64_t fid = 0;
    double value = 0.0;
    try {
      fid = parse_int(tok.substr(0, colon));
      value = parse_double(tok.substr(colon + 1));
    } catch (const ParseError&) {
      throw ParseError("bad feature token '" + std::string(tok) + "'");
    }
    if (fid < 1 || fid > feature_dim)
      throw ParseError("feature id out of range [1," + std::to_string(feature_dim) +
                       "]: '" + std::string(tok) + "'");
    if (!std::isfinite(value))
      throw ParseError("non-finite feature value: '" + std::string(tok) + "'");
    pair.features[static_cast<size_t>(fid - 1)] = value;
  }
  return pair;
}

std::string format_letor_line(const QueryDocPair& pair) {
  std::string out = std::to_string(pair.grade) + " qid:" + std::to_string(pair.query_id);
  for (size_t i = 0; i < pair.features.size(); ++i) {
    out += ' ';
    out += std::to_string(i + 1);
    out += ':';
    out += format_double(pair.features[i]);
  }
  return out;
}

Dataset load_dataset(const std::string& path, int feature_dim, int title_feature_index) {
  if (feature_dim <= 0) throw ConfigError("feature_dim must be positive");
  if (title_feature_index >= feature_dim)
    throw ConfigError("title_feature_index out of range [0," +
                      std::to_string(feature_dim) + ")");

  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");

  Dataset data;
  data.feature_dim = feature_dim;
  data.title_feature_index = title_feature_index;

  std::unordered_map<int64_t, size_t> group_of;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    QueryDocPair pair;
    try {
      pair = parse_letor_line(line, feature_dim);
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
    auto [it, inserted] = group_of.try_emplace(pair.query_id, data.groups.size());
    if (inserted) {
      data.groups.push_back(QueryGroup{pair.query_id, {}});
    }
    auto& group = data.groups[it->second];
    pair.doc_id = static_cast<int32_t>(group.docs.size());
    group.docs.push_back(std::move(pair));
  }
  return data;
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StageError("save-dataset", "cannot write '" + path + "'");
  for (const auto& group : data.groups)
    for (const auto& doc : group.docs) out << format_letor_line(doc) << '\n';
}

Dataset generate_synthetic(const SynthConfig& config, uint64_t seed) {
  if (config.queries <= 0) throw ConfigError("queries must be positive");
  if (config.docs_per_query <= 0) throw ConfigError("docs_per_query must be positive");
  if (config.feature_dim <= 0) throw ConfigError("feature_dim must be positive");
  if (config.relevant_fraction <= 0.0 || config.relevant_fraction >= 1.0)
    throw ConfigError("relevant_fraction must be in (0,1)");
  if (config.title_feature_index < 0 || config.title_feature_index >= config.feature_dim)
    throw ConfigError("title_feature_index out of range [0,feature_dim)");
  if (config.noise < 0.0) throw ConfigError("noise must be non-negative");

  const int d = config.feature_dim;

  auto rng_w = make_rng(seed, Stream::synth_weights);
  std::vector<double> hidden_w(static_cast<size_t>(d));
  for (auto& w : hidden_w) w = uniform01(rng_w) * 2.0 - 1.0;
  hidden_w[static_cast<size_t>(config.title_feature_index)] = 0.0;

  Dataset data;
  data.feature_dim = d;
  data.title_feature_index = config.title_feature_index;
  data.groups.resize(static_cast<size_t>(config.queries));

  auto rng_x = make_rng(seed, Stream::synth_features);
  auto rng_n = make_rng(seed, Stream::synth_noise);
  std::vector<double> latent;
  latent.reserve(static_cast<size_t>(config.queries) * config.docs_per_query);
  for (int q = 0; q < config.queries; ++q) {
    auto& group = data.groups[static_cast<size_t>(q)];
    group.query_id = q + 1;
    group.docs.resize(static_cast<size_t>(config.docs_per_query));
    for (int m = 0; m < config.docs_per_query; ++m) {
      auto& doc = group.docs[static_cast<size_t>(m)];
      doc.query_id = group.query_id;
      doc.doc_id = m;
      doc.features.resize(static_cast<size_t>(d));
      double score = 0.0;
      for (int j = 0; j < d; ++j) {
        doc.features[static_cast<size_t>(j)] = uniform01(rng_x);
        score += hidden_w[static_cast<size_t>(j)] * doc.features[static_cast<size_t>(j)];
      }
      latent.push_back(score + config.noise * normal01(rng_n));
    }
  }

  // Quantile thresholds: the top relevant_fraction of latent scores split
  // evenly into grades 4 and 3, the rest evenly into grades 0..2.
  const size_t n = latent.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (latent[a] != latent[b]) return latent[a] < latent[b];
    return a < b;
  });

  const auto n_rel = static_cast<size_t>(std::llround(config.relevant_fraction * static_cast<double>(n)));
  const size_t c4 = n_rel / 2, c3 = n_rel - c4;
  const size_t n_irr = n - n_rel;
  const size_t c0 = n_irr / 3, c1 = n_irr / 3, c2 = n_irr - c0 - c1;

  std::vector<int> grade(n);
  size_t at = 0;
  const std::pair<size_t, int> bands[] = {{c0, 0}, {c1, 1}, {c2, 2}, {c3, 3}, {c4, 4}};
  for (const auto& [count, g] : bands)
    for (size_t i = 0; i < count; ++i) grade[order[at++]] = g;

  size_t flat = 0;
  for (auto& group : data.groups)
    for (auto& doc : group.docs) doc.grade = grade[flat++];
  return data;
}

Split split_groups(int n_groups, double test_fraction, uint64_t seed) {
  if (n_groups <= 0) throw ConfigError("dataset has no query groups");
  if (test_fraction < 0.0 || test_fraction >= 1.0)
    throw ConfigError("test_fraction must be in [0,1)");

  std::vector<int32_t> idx(static_cast<size_t>(n_groups));
  std::iota(idx.begin(), idx.end(), 0);
  auto rng = make_rng(seed, Stream::data_split);
  shuffle_indices(rng, idx);

  const auto n_test = static_cast<size_t>(std::llround(test_fraction * n_groups));
  Split split;
  split.test.assign(idx.begin(), idx.begin() + static_cast<ptrdiff_t>(n_test));
  split.train.assign(idx.begin() + static_cast<ptrdiff_t>(n_test), idx.end());
  std::sort(split.test.begin(), split.test.end());
  std::sort(split.train.begin(), split.train.end());
  return split;
}

void normalize_features(Dataset& data, const std::vector<int>& train_groups) {
  const auto d = static_cast<size_t>(data.feature_dim);
  std::vector<double> lo(d, std::numeric_limits<double>::infinity());
  std::vector<double> hi(d, -std::numeric_limits<double>::infinity());
  for (const int g : train_groups)
    for (const auto& doc : data.groups[static_cast<size_t>(g)].docs)
      for (size_t j = 0; j < d; ++j) {
        lo[j] = std::min(lo[j], doc.features[j]);
        hi[j] = std::max(hi[j], doc.features[j]);
      }
  for (auto& group : data.groups)
    for (auto& doc : group.docs)
      for (size_t j = 0; j < d; ++j) {
        const double range = hi[j] - lo[j];
        doc.features[j] = range > 0.0 ? (doc.features[j] - lo[j]) / range : 0.0;
      }
}

}  // namespace ctrlab
