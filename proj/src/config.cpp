#include "ctrlab/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace ctrlab {

namespace {

std::string trim(const std::string& s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

class KvReader {
 public:
  explicit KvReader(const KeyValues& kv) : kv_(kv) {}

  bool has(const std::string& key) {
    seen_.insert(key);
    return kv_.contains(key);
  }

  std::string str(const std::string& key, const std::string& fallback) {
    seen_.insert(key);
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  std::string required(const std::string& key) {
    seen_.insert(key);
    const auto it = kv_.find(key);
    if (it == kv_.end()) throw ConfigError("missing config key '" + key + "'");
    return it->second;
  }

  int64_t integer(const std::string& key, int64_t fallback) {
    seen_.insert(key);
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      return parse_int(it->second);
    } catch (const ParseError&) {
      throw ConfigError("config key '" + key + "': bad integer '" + it->second + "'");
    }
  }

  double real(const std::string& key, double fallback) {
    seen_.insert(key);
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      return parse_double(it->second);
    } catch (const ParseError&) {
      throw ConfigError("config key '" + key + "': bad number '" + it->second + "'");
    }
  }

  bool boolean(const std::string& key, bool fallback) {
    seen_.insert(key);
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key '" + key + "': expected true/false");
  }

  void reject_unknown() const {
    for (const auto& [key, value] : kv_)
      if (!key.starts_with("_") && !seen_.contains(key))
        throw ConfigError("unknown config key '" + key + "'");
  }

 private:
  const KeyValues& kv_;
  std::set<std::string> seen_;
};

}  // namespace

KeyValues parse_config_text(const std::string& text, const std::string& origin) {
  KeyValues kv;
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const size_t hash = line.find('#'); hash != std::string::npos)
      line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const size_t eq = body.find('=');
    if (eq == std::string::npos)
      throw ConfigError(origin + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty())
      throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

KeyValues load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

ExperimentConfig experiment_from_kv(const KeyValues& kv) {
  KvReader r(kv);
  ExperimentConfig c;

  c.data_path = r.str("data_path", "");
  if (c.data_path.empty()) {
    c.synth.queries = static_cast<int>(r.integer("queries", 0));
    c.synth.docs_per_query = static_cast<int>(r.integer("docs_per_query", 0));
    if (!r.has("feature_dim")) throw ConfigError("missing config key 'feature_dim'");
    c.synth.feature_dim = static_cast<int>(r.integer("feature_dim", 0));
    c.synth.relevant_fraction = r.real("relevant_fraction", 0.2);
    c.synth.title_feature_index = static_cast<int>(r.integer("title_feature_index", 0));
    c.synth.noise = r.real("noise", 0.25);
    if (c.synth.queries <= 0) throw ConfigError("config key 'queries' must be positive");
    if (c.synth.docs_per_query <= 0)
      throw ConfigError("config key 'docs_per_query' must be positive");
  } else {
    if (!r.has("feature_dim")) throw ConfigError("missing config key 'feature_dim'");
    c.synth.feature_dim = static_cast<int>(r.integer("feature_dim", 0));
    c.synth.title_feature_index = static_cast<int>(r.integer("title_feature_index", -1));
  }
  if (c.synth.feature_dim <= 0)
    throw ConfigError("config key 'feature_dim' must be positive");

  c.test_fraction = r.real("test_fraction", 0.2);
  c.seed = static_cast<uint64_t>(r.integer("seed", 1));

  c.ranker_fraction = r.real("ranker_fraction", 0.05);
  c.ranker.hidden = static_cast<int>(r.integer("ranker_hidden", 32));
  c.ranker.steps = r.integer("ranker_steps", 3000);
  c.ranker.batch_size = static_cast<int>(r.integer("ranker_batch_size", 32));
  c.ranker.lr = r.real("ranker_lr", 1e-3);

  c.scenario = scenario_from_string(r.str("scenario", "s1"));
  c.sim.k = static_cast<int>(r.integer("k", 15));
  c.sim.click_budget = r.integer("click_budget", 0);
  c.sim.iterations = r.integer("iterations", 0);
  c.sim.debug_latents = r.boolean("debug_latents", false);
  c.sim.pos_cap = static_cast<int>(r.integer("pos_cap", 10));
  c.sim.seed = c.seed;
  if (c.sim.click_budget <= 0 && c.sim.iterations <= 0)
    c.sim.click_budget = 500000;

  c.models.clear();
  {
    const std::string list = r.str("model", "iin,pal,mmoe,skyline");
    std::stringstream ss(list);
    std::string name;
    while (std::getline(ss, name, ',')) {
      name = trim(name);
      if (!name.empty()) c.models.push_back(model_kind_from_string(name));
    }
    if (c.models.empty()) throw ConfigError("config key 'model' names no models");
  }

  c.schedule.steps = r.integer("steps", 20000);
  c.schedule.batch_size = static_cast<int>(r.integer("batch_size", 256));
  c.schedule.lr = r.real("lr", 1e-3);
  c.schedule.alpha = r.real("alpha", 100.0);
  c.schedule.eval_every = r.integer("eval_every", 1000);
  c.schedule.hidden_main = static_cast<int>(r.integer("hidden_main", 64));
  c.schedule.hidden_bias = static_cast<int>(r.integer("hidden_bias", 16));
  c.schedule.pos_cap = c.sim.pos_cap;

  c.out_dir = r.str("out", "out");
  c.threads = static_cast<int>(r.integer("threads", 0));

  if (c.schedule.steps < 0) throw ConfigError("config key 'steps' must be >= 0");
  if (c.scenario == ScenarioId::s5 && c.synth.title_feature_index < 0)
    throw ConfigError("scenario s5 needs config key 'title_feature_index'");

  r.reject_unknown();
  return c;
}

KeyValues kv_from_experiment(const ExperimentConfig& c) {
  KeyValues kv;
  if (!c.data_path.empty()) {
    kv["data_path"] = c.data_path;
    kv["feature_dim"] = std::to_string(c.synth.feature_dim);
    kv["title_feature_index"] = std::to_string(c.synth.title_feature_index);
  } else {
    kv["queries"] = std::to_string(c.synth.queries);
    kv["docs_per_query"] = std::to_string(c.synth.docs_per_query);
    kv["feature_dim"] = std::to_string(c.synth.feature_dim);
    kv["relevant_fraction"] = format_double(c.synth.relevant_fraction);
    kv["title_feature_index"] = std::to_string(c.synth.title_feature_index);
    kv["noise"] = format_double(c.synth.noise);
  }
  kv["test_fraction"] = format_double(c.test_fraction);
  kv["seed"] = std::to_string(c.seed);
  kv["ranker_fraction"] = format_double(c.ranker_fraction);
  kv["ranker_hidden"] = std::to_string(c.ranker.hidden);
  kv["ranker_steps"] = std::to_string(c.ranker.steps);
  kv["ranker_batch_size"] = std::to_string(c.ranker.batch_size);
  kv["ranker_lr"] = format_double(c.ranker.lr);
  kv["scenario"] = to_string(c.scenario);
  kv["k"] = std::to_string(c.sim.k);
  kv["click_budget"] = std::to_string(c.sim.click_budget);
  kv["iterations"] = std::to_string(c.sim.iterations);
  kv["debug_latents"] = c.sim.debug_latents ? "true" : "false";
  kv["pos_cap"] = std::to_string(c.sim.pos_cap);
  std::string models;
  for (const auto kind : c.models) {
    if (!models.empty()) models += ',';
    models += to_string(kind);
  }
  kv["model"] = models;
  kv["steps"] = std::to_string(c.schedule.steps);
  kv["batch_size"] = std::to_string(c.schedule.batch_size);
  kv["lr"] = format_double(c.schedule.lr);
  kv["alpha"] = format_double(c.schedule.alpha);
  kv["eval_every"] = std::to_string(c.schedule.eval_every);
  kv["hidden_main"] = std::to_string(c.schedule.hidden_main);
  kv["hidden_bias"] = std::to_string(c.schedule.hidden_bias);
  kv["out"] = c.out_dir;
  kv["threads"] = std::to_string(c.threads);
  return kv;
}

std::string render_config(const KeyValues& kv) {
  std::string out;
  for (const auto& [key, value] : kv) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

}  // namespace ctrlab
