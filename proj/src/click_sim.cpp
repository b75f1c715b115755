#include "ctrlab/click_sim.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace ctrlab {

ScenarioId scenario_from_string(const std::string& name) {
  if (name == "s1") return ScenarioId::s1;
  if (name == "s2") return ScenarioId::s2;
  if (name == "s3") return ScenarioId::s3;
  if (name == "s4") return ScenarioId::s4;
  if (name == "s5") return ScenarioId::s5;
  throw ConfigError("unknown scenario '" + name + "' (expected s1..s5)");
}

std::string to_string(ScenarioId id) {
  switch (id) {
    case ScenarioId::s1: return "s1";
    case ScenarioId::s2: return "s2";
    case ScenarioId::s3: return "s3";
    case ScenarioId::s4: return "s4";
    case ScenarioId::s5: return "s5";
  }
  return "s1";
}

ObservationModel make_observation_model(ScenarioId id, const Dataset& data,
                                        uint64_t master_seed) {
  ObservationModel model;
  if (id != ScenarioId::s5) return model;

  if (data.title_feature_index < 0)
    throw ConfigError("scenario s5 needs a dataset with title_feature_index");
  model.kind = ObservationModel::Kind::position_and_feature;
  model.theta.assign(static_cast<size_t>(data.feature_dim), 0.0);
  // Only the title-length feature carries observation bias; the magnitude is
  // irrelevant after per-query min-max normalization, the sign is fixed
  // positive so longer titles draw more attention.
  auto rng = make_rng(master_seed, Stream::sim_theta);
  model.theta[static_cast<size_t>(data.title_feature_index)] = 0.5 + 1.5 * uniform01(rng);
  return model;
}

std::vector<double> normalize_omega(const std::vector<double>& raw) {
  const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<double> out(raw.size());
  if (hi > lo) {
    for (size_t i = 0; i < raw.size(); ++i)
      out[i] = 0.5 + 0.5 * (raw[i] - lo) / (hi - lo);
  } else {
    std::fill(out.begin(), out.end(), 0.75);
  }
  return out;
}

std::vector<double> omega_weights(const ObservationModel& model, const QueryGroup& group) {
  if (model.kind == ObservationModel::Kind::position_only)
    return std::vector<double>(group.docs.size(), 1.0);
  std::vector<double> raw(group.docs.size());
  for (size_t i = 0; i < group.docs.size(); ++i) {
    double acc = 0.0;
    for (size_t j = 0; j < model.theta.size(); ++j)
      acc += model.theta[j] * group.docs[i].features[j];
    raw[i] = acc;
  }
  return normalize_omega(raw);
}

double observe_prob(const ObservationModel& model, double omega, int pos) {
  if (pos < 1) throw std::invalid_argument("observe_prob: pos must be >= 1");
  if (model.kind == ObservationModel::Kind::position_only)
    return pos <= 5 ? 1.0 / pos : 0.1;
  return pos <= 5 ? omega / pos : 0.1 * omega;
}

double click_prob(ScenarioId id, int pos, bool relevant, bool observed) {
  if (pos < 1) throw std::invalid_argument("click_prob: pos must be >= 1");
  if (relevant && observed) return 1.0;

  const double observed_irrelevant = 1.0 / (std::min(pos, 5) + 3);
  switch (id) {
    case ScenarioId::s1:
      return 0.0;
    case ScenarioId::s2:
      if (!relevant && observed) return observed_irrelevant;
      return 0.0;
    case ScenarioId::s3:
    case ScenarioId::s5:
      if (!relevant && observed) return observed_irrelevant;
      if (relevant && !observed) return 0.1;
      return 0.0;
    case ScenarioId::s4:
      if (!relevant && observed) return observed_irrelevant;
      if (relevant && !observed) return 0.1;
      return 0.01;
  }
  return 0.0;
}

std::vector<double> position_one_hot(int pos, int cap) {
  std::vector<double> v(static_cast<size_t>(cap), 0.0);
  const int slot = std::min(pos, cap) - 1;
  v[static_cast<size_t>(slot)] = 1.0;
  return v;
}

int64_t records_per_round(const Dataset& data, const std::vector<int>& groups, int k) {
  int64_t n = 0;
  for (const int g : groups) {
    const int m = static_cast<int>(data.groups[static_cast<size_t>(g)].docs.size());
    n += std::min(5, m) + std::min(k, std::max(0, m - 5));
  }
  return n;
}

namespace {

int resolve_rounds(const Dataset& data, const std::vector<int>& groups,
                   const SimConfig& config) {
  if (config.iterations > 0) return static_cast<int>(config.iterations);
  if (config.click_budget <= 0)
    throw ConfigError("simulate: need iterations or click_budget");
  const int64_t per_round = records_per_round(data, groups, config.k);
  if (per_round == 0) throw ConfigError("simulate: no documents to simulate");
  return static_cast<int>((config.click_budget + per_round - 1) / per_round);
}

// All iterations for one query. Draw order is fixed: the K-sample first,
// then o and y per selected doc in rank order.
void simulate_group(const Dataset& data, const QueryGroup& group,
                    const RankedList& ranked, const std::vector<double>& omega,
                    const ObservationModel& obs, ScenarioId scenario,
                    const SimConfig& config, int rounds, int extra_bias_dim,
                    std::vector<ClickRecord>& out) {
  const int m = static_cast<int>(group.docs.size());
  const int top = std::min(5, m);
  const int extras = std::min(config.k, std::max(0, m - 5));

  std::vector<int> selected_ranks(static_cast<size_t>(top + extras));
  for (int iter = 0; iter < rounds; ++iter) {
    auto rng = make_rng(config.seed, Stream::sim_query,
                        static_cast<uint64_t>(group.query_id),
                        static_cast<uint64_t>(iter));
    for (int r = 0; r < top; ++r) selected_ranks[static_cast<size_t>(r)] = r;
    if (extras > 0) {
      auto picks = sample_without_replacement(rng, m - 5, extras);
      std::sort(picks.begin(), picks.end());
      for (int e = 0; e < extras; ++e)
        selected_ranks[static_cast<size_t>(top + e)] = 5 + picks[static_cast<size_t>(e)];
    }

    for (const int rank_idx : selected_ranks) {
      const int doc_idx = ranked.order[static_cast<size_t>(rank_idx)];
      const auto& doc = group.docs[static_cast<size_t>(doc_idx)];
      const int pos = rank_idx + 1;
      const bool relevant = binarize_relevance(doc.grade);
      const bool observed =
          bernoulli(rng, observe_prob(obs, omega[static_cast<size_t>(doc_idx)], pos));
      const bool clicked = bernoulli(rng, click_prob(scenario, pos, relevant, observed));

      ClickRecord rec;
      rec.query_id = group.query_id;
      rec.doc_id = doc.doc_id;
      rec.pos = pos;
      rec.click = clicked ? 1 : 0;
      rec.features = doc.features;
      rec.bias = position_one_hot(pos, config.pos_cap);
      if (extra_bias_dim > 0)
        rec.bias.push_back(doc.features[static_cast<size_t>(data.title_feature_index)]);
      if (config.debug_latents) {
        rec.o_latent = observed ? 1 : 0;
        rec.r_latent = relevant ? 1 : 0;
      }
      out.push_back(std::move(rec));
    }
  }
}

ClickLog simulate_impl(const Dataset& data, const Ranker& ranker, ScenarioId scenario,
                       const SimConfig& config, const std::vector<int>& groups,
                       bool parallel) {
  if (groups.empty()) throw ConfigError("simulate: no query groups");
  if (config.k < 0) throw ConfigError("simulate: k must be >= 0");
  if (config.pos_cap < 1) throw ConfigError("simulate: pos_cap must be >= 1");

  const auto obs = make_observation_model(scenario, data, config.seed);
  const int rounds = resolve_rounds(data, groups, config);
  const int extra_bias_dim = scenario == ScenarioId::s5 ? 1 : 0;

  ClickLog log;
  log.feature_dim = data.feature_dim;
  log.bias_dim = config.pos_cap + extra_bias_dim;
  log.has_latents = config.debug_latents;

  const int n_groups = static_cast<int>(groups.size());
  std::vector<std::vector<ClickRecord>> per_group(static_cast<size_t>(n_groups));

#pragma omp parallel for schedule(dynamic) if (parallel)
  for (int gi = 0; gi < n_groups; ++gi) {
    const auto& group = data.groups[static_cast<size_t>(groups[static_cast<size_t>(gi)])];
    const RankedList ranked = rank(ranker, group);
    const auto omega = omega_weights(obs, group);
    simulate_group(data, group, ranked, omega, obs, scenario, config, rounds,
                   extra_bias_dim, per_group[static_cast<size_t>(gi)]);
  }

  size_t total = 0;
  for (const auto& v : per_group) total += v.size();
  log.records.reserve(total);
  for (auto& v : per_group)
    for (auto& rec : v) log.records.push_back(std::move(rec));
  return log;
}

}  // namespace

ClickLog simulate(const Dataset& data, const Ranker& ranker, ScenarioId scenario,
                  const SimConfig& config, const std::vector<int>& groups) {
  return simulate_impl(data, ranker, scenario, config, groups, true);
}

ClickLog simulate_reference(const Dataset& data, const Ranker& ranker, ScenarioId scenario,
                            const SimConfig& config, const std::vector<int>& groups) {
  return simulate_impl(data, ranker, scenario, config, groups, false);
}

std::map<int, double> empirical_position_ctr(const ClickLog& log) {
  std::map<int, std::pair<int64_t, int64_t>> counts;  // pos -> (clicks, total)
  for (const auto& rec : log.records) {
    auto& [clicks, total] = counts[rec.pos];
    clicks += rec.click;
    ++total;
  }
  std::map<int, double> rates;
  for (const auto& [pos, ct] : counts)
    rates[pos] = static_cast<double>(ct.first) / static_cast<double>(ct.second);
  return rates;
}

void save_click_log(const ClickLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StageError("simulate", "cannot write '" + path + "'");

  out << "query_id,doc_id,pos,click";
  for (int i = 0; i < log.bias_dim; ++i) out << ",bias_" << i;
  for (int i = 0; i < log.feature_dim; ++i) out << ",feat_" << i;
  if (log.has_latents) out << ",o_latent,r_latent";
  out << '\n';

  std::string line;
  for (const auto& rec : log.records) {
    line.clear();
    line += std::to_string(rec.query_id);
    line += ',';
    line += std::to_string(rec.doc_id);
    line += ',';
    line += std::to_string(rec.pos);
    line += ',';
    line += std::to_string(static_cast<int>(rec.click));
    for (const double v : rec.bias) {
      line += ',';
      line += format_double(v);
    }
    for (const double v : rec.features) {
      line += ',';
      line += format_double(v);
    }
    if (log.has_latents) {
      line += ',';
      line += std::to_string(static_cast<int>(rec.o_latent));
      line += ',';
      line += std::to_string(static_cast<int>(rec.r_latent));
    }
    line += '\n';
    out << line;
  }
}

ClickLog load_click_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");

  std::string header;
  if (!std::getline(in, header)) throw ParseError(path + ": empty click log");

  std::vector<std::string> cols;
  {
    std::stringstream ss(header);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
  }
  ClickLog log;
  for (const auto& c : cols) {
    if (c.starts_with("bias_")) ++log.bias_dim;
    if (c.starts_with("feat_")) ++log.feature_dim;
    if (c == "o_latent") log.has_latents = true;
  }
  const size_t expected =
      4 + static_cast<size_t>(log.bias_dim) + log.feature_dim + (log.has_latents ? 2 : 0);
  if (cols.size() != expected || cols[0] != "query_id")
    throw ParseError(path + ": unexpected click log header");

  std::string line;
  size_t line_no = 1;
  std::vector<std::string_view> fields;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    fields.clear();
    size_t start = 0;
    while (true) {
      const size_t comma = line.find(',', start);
      fields.push_back(std::string_view(line).substr(
          start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (fields.size() != expected)
      throw ParseError(path + ":" + std::to_string(line_no) + ": wrong field count");
    try {
      ClickRecord rec;
      size_t f = 0;
      rec.query_id = parse_int(fields[f++]);
      rec.doc_id = static_cast<int32_t>(parse_int(fields[f++]));
      rec.pos = static_cast<int32_t>(parse_int(fields[f++]));
      rec.click = static_cast<int8_t>(parse_int(fields[f++]));
      rec.bias.resize(static_cast<size_t>(log.bias_dim));
      for (auto& v : rec.bias) v = parse_double(fields[f++]);
      rec.features.resize(static_cast<size_t>(log.feature_dim));
      for (auto& v : rec.features) v = parse_double(fields[f++]);
      if (log.has_latents) {
        rec.o_latent = static_cast<int8_t>(parse_int(fields[f++]));
        rec.r_latent = static_cast<int8_t>(parse_int(fields[f++]));
      }
      log.records.push_back(std::move(rec));
    } catch (const ParseError& e) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return log;
}

}  // namespace ctrlab
