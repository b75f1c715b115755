#include "ctrlab/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "json.hpp"

namespace ctrlab {

namespace fs = std::filesystem;

namespace {

void apply_threads(const ExperimentConfig& config) {
  if (config.threads > 0) omp_set_num_threads(config.threads);
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw StageError("setup", "cannot create output dir '" + dir + "'");
}

void write_file(const std::string& path, const std::string& contents,
                const std::string& stage) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StageError(stage, "cannot write '" + path + "'");
  out << contents;
}

Dataset load_or_generate(const ExperimentConfig& config) {
  if (!config.data_path.empty())
    return load_dataset(config.data_path, config.synth.feature_dim,
                        config.synth.title_feature_index);
  const RunPaths paths{config.out_dir};
  if (fs::exists(paths.data()))
    return load_dataset(paths.data(), config.synth.feature_dim,
                        config.synth.title_feature_index);
  return generate_synthetic(config.synth, config.seed);
}

Ranker load_ranker(const RunPaths& paths) {
  std::ifstream in(paths.ranker());
  if (!in) throw StageError("simulate", "missing ranker checkpoint '" + paths.ranker() +
                                            "' (run train-ranker first)");
  return Ranker{nn::load_network(in)};
}

std::string curve_csv(const std::vector<EvalPoint>& curve) {
  std::string out = "step,auc\n";
  for (const auto& p : curve) {
    out += std::to_string(p.step);
    out += ',';
    out += format_double(p.auc);
    out += '\n';
  }
  return out;
}

// Five evenly spaced quantiles of the title feature over the train split.
std::vector<std::vector<double>> title_quantiles(const Dataset& data,
                                                 const std::vector<int>& train_groups) {
  std::vector<double> values;
  for (const int g : train_groups)
    for (const auto& doc : data.groups[static_cast<size_t>(g)].docs)
      values.push_back(doc.features[static_cast<size_t>(data.title_feature_index)]);
  std::sort(values.begin(), values.end());
  std::vector<std::vector<double>> samples;
  for (const double q : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const auto idx = static_cast<size_t>(q * static_cast<double>(values.size() - 1));
    samples.push_back({values[idx]});
  }
  return samples;
}

std::string bias_surface_csv(const IINModel& model, const Dataset& data,
                             const std::vector<int>& train_groups, ScenarioId scenario,
                             int pos_cap) {
  std::vector<int> positions;
  for (int p = 1; p <= pos_cap; ++p) positions.push_back(p);
  std::vector<std::vector<double>> samples;
  if (scenario == ScenarioId::s5) samples = title_quantiles(data, train_groups);

  const auto table = bias_surface(model, positions, samples);
  std::string out = "pos,b,p_y1_given_r1,p_y1_given_r0\n";
  for (const auto& e : table) {
    out += std::to_string(e.pos);
    out += ',';
    if (!samples.empty()) out += format_double(samples[static_cast<size_t>(e.b_index)][0]);
    out += ',';
    out += format_double(e.p_click_rel);
    out += ',';
    out += format_double(e.p_click_irrel);
    out += '\n';
  }
  return out;
}

constexpr ModelKind kSummaryOrder[] = {ModelKind::mmoe, ModelKind::pal, ModelKind::iin,
                                       ModelKind::skyline};

std::string summary_csv(ScenarioId scenario,
                        const std::vector<std::pair<ModelKind, double>>& final_aucs) {
  std::string out = "method,s1,s2,s3,s4,s5\n";
  for (const auto kind : kSummaryOrder) {
    const auto it = std::find_if(final_aucs.begin(), final_aucs.end(),
                                 [&](const auto& e) { return e.first == kind; });
    if (it == final_aucs.end()) continue;
    out += to_string(kind);
    for (const auto s : {ScenarioId::s1, ScenarioId::s2, ScenarioId::s3, ScenarioId::s4,
                         ScenarioId::s5}) {
      out += ',';
      if (s == scenario) out += format_double(it->second);
    }
    out += '\n';
  }
  return out;
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& config) {
  PreparedData prep;
  prep.data = load_or_generate(config);
  if (prep.data.groups.empty()) throw StageError("data", "dataset has no query groups");
  if (config.scenario == ScenarioId::s5 && prep.data.title_feature_index < 0)
    throw ConfigError("scenario s5 needs a dataset with title_feature_index");
  prep.split = split_groups(static_cast<int>(prep.data.groups.size()),
                            config.test_fraction, config.seed);
  normalize_features(prep.data, prep.split.train);
  return prep;
}

void cmd_gen_data(const ExperimentConfig& config) {
  if (!config.data_path.empty())
    throw ConfigError("gen-data: config names a data_path; nothing to generate");
  ensure_out_dir(config.out_dir);
  const RunPaths paths{config.out_dir};
  const Dataset data = generate_synthetic(config.synth, config.seed);
  save_dataset(data, paths.data());
}

void cmd_train_ranker(const ExperimentConfig& config) {
  apply_threads(config);
  ensure_out_dir(config.out_dir);
  const RunPaths paths{config.out_dir};
  const auto prep = prepare_data(config);
  const Ranker ranker = train_production_ranker(prep.data, prep.split.train,
                                                config.ranker_fraction, config.ranker,
                                                config.seed);
  std::ofstream out(paths.ranker(), std::ios::binary);
  if (!out) throw StageError("train-ranker", "cannot write '" + paths.ranker() + "'");
  nn::save_network(ranker.net, out);
}

void cmd_simulate(const ExperimentConfig& config) {
  apply_threads(config);
  ensure_out_dir(config.out_dir);
  const RunPaths paths{config.out_dir};
  const auto prep = prepare_data(config);
  const Ranker ranker = load_ranker(paths);
  const ClickLog log =
      simulate(prep.data, ranker, config.scenario, config.sim, prep.split.train);
  save_click_log(log, paths.clicks());
}

void cmd_train(const ExperimentConfig& config, ModelKind kind) {
  apply_threads(config);
  const RunPaths paths{config.out_dir};
  const auto prep = prepare_data(config);
  if (!fs::exists(paths.clicks()))
    throw StageError("train", "missing click log '" + paths.clicks() +
                                  "' (run simulate first)");
  const ClickLog log = load_click_log(paths.clicks());
  const TestSet test = build_test_set(prep.data, prep.split.test);
  const TrainResult result =
      train_and_eval(kind, log, prep.data, test, config.schedule, config.seed);

  write_file(paths.curve(config.scenario, kind), curve_csv(result.curve), "train");
  std::ofstream out(paths.model(kind), std::ios::binary);
  if (!out) throw StageError("train", "cannot write '" + paths.model(kind) + "'");
  result.model->save(out);

  if (kind == ModelKind::iin)
    write_file(paths.bias_surface(),
               bias_surface_csv(*result.model->iin(), prep.data, prep.split.train,
                                config.scenario, config.sim.pos_cap),
               "train");
}

double cmd_evaluate(const ExperimentConfig& config, ModelKind kind) {
  apply_threads(config);
  const RunPaths paths{config.out_dir};
  const auto prep = prepare_data(config);
  const TestSet test = build_test_set(prep.data, prep.split.test);

  std::ifstream in(paths.model(kind));
  if (!in) throw StageError("evaluate", "missing model checkpoint '" + paths.model(kind) + "'");
  nlohmann::json j;
  in >> j;

  // Rebuild just enough of the model to run its inference scorer.
  const std::string name = j.at("model").get<std::string>();
  auto net_from = [&](const char* key) {
    std::stringstream ss(j.at(key).dump());
    return nn::load_network(ss);
  };
  std::vector<double> scores(test.x.size());
  nn::Network net = name == "iin"   ? net_from("relevance_net")
                    : name == "pal" ? net_from("rel_net")
                    : name == "mmoe" ? net_from("main_net")
                                     : net_from("net");
  const auto n = static_cast<int64_t>(test.x.size());
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < n; ++i) {
    thread_local nn::Cache cache;
    const auto out = nn::forward(net, test.x[static_cast<size_t>(i)], cache);
    double s = out[0];
    if (name == "mmoe") s = 1.0 / (1.0 + std::exp(-s));
    scores[static_cast<size_t>(i)] = s;
  }
  return auc(scores, test.label);
}

void cmd_run(const ExperimentConfig& config) {
  apply_threads(config);
  ensure_out_dir(config.out_dir);
  const RunPaths paths{config.out_dir};

  auto manifest = kv_from_experiment(config);
  manifest["_status"] = "incomplete";
  manifest["_version"] = "ctrlab 0.1.0";
  write_file(paths.manifest(), render_config(manifest), "run");

  if (config.data_path.empty()) cmd_gen_data(config);
  cmd_train_ranker(config);
  cmd_simulate(config);

  std::vector<std::pair<ModelKind, double>> final_aucs;
  for (const auto kind : config.models) {
    cmd_train(config, kind);
    final_aucs.emplace_back(kind, cmd_evaluate(config, kind));
  }

  write_file(paths.summary(), summary_csv(config.scenario, final_aucs), "run");

  manifest["_status"] = "complete";
  write_file(paths.manifest(), render_config(manifest), "run");
}

void cmd_report(const std::string& run_dir) {
  if (!fs::is_directory(run_dir))
    throw StageError("report", "'" + run_dir + "' is not a directory");

  struct CurveFile {
    std::string scenario, method, path;
  };
  std::vector<CurveFile> curves;
  for (const auto& entry : fs::recursive_directory_iterator(run_dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (!name.starts_with("curve_") || !name.ends_with(".csv")) continue;
    const std::string stem = name.substr(6, name.size() - 10);
    const size_t underscore = stem.find('_');
    if (underscore == std::string::npos) continue;
    curves.push_back({stem.substr(0, underscore), stem.substr(underscore + 1),
                      entry.path().string()});
  }
  if (curves.empty())
    throw StageError("report", "no curve_<scenario>_<method>.csv files under '" +
                                   run_dir + "'");
  std::sort(curves.begin(), curves.end(), [](const CurveFile& a, const CurveFile& b) {
    return std::tie(a.scenario, a.method, a.path) < std::tie(b.scenario, b.method, b.path);
  });

  std::string merged = "scenario,method,step,auc\n";
  // method -> scenario -> final auc
  std::map<std::string, std::map<std::string, double>> final_aucs;
  for (const auto& cf : curves) {
    std::ifstream in(cf.path);
    if (!in) throw StageError("report", "cannot open '" + cf.path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "step,auc")
      throw StageError("report", "corrupt curve file '" + cf.path + "'");
    bool any = false;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const size_t comma = line.find(',');
      if (comma == std::string::npos)
        throw StageError("report", "corrupt curve file '" + cf.path + "'");
      merged += cf.scenario;
      merged += ',';
      merged += cf.method;
      merged += ',';
      merged += line;
      merged += '\n';
      final_aucs[cf.method][cf.scenario] = parse_double(line.substr(comma + 1));
      any = true;
    }
    if (!any) throw StageError("report", "empty curve file '" + cf.path + "'");
  }

  const RunPaths paths{run_dir};
  write_file(paths.merged(), merged, "report");

  // Table layout: methods as rows, scenarios as columns.
  std::string table = "method";
  for (const auto s : {"s1", "s2", "s3", "s4", "s5"}) table += std::string(",") + s;
  table += '\n';
  for (const char* method : {"mmoe", "pal", "iin", "skyline"}) {
    const auto it = final_aucs.find(method);
    if (it == final_aucs.end()) continue;
    table += method;
    for (const auto s : {"s1", "s2", "s3", "s4", "s5"}) {
      table += ',';
      const auto sit = it->second.find(s);
      if (sit != it->second.end()) table += format_double(sit->second);
    }
    table += '\n';
  }
  std::fputs(table.c_str(), stdout);
}

ExperimentOutcome run_in_memory(const ExperimentConfig& config) {
  apply_threads(config);
  Dataset data = config.data_path.empty()
                     ? generate_synthetic(config.synth, config.seed)
                     : load_dataset(config.data_path, config.synth.feature_dim,
                                    config.synth.title_feature_index);
  const Split split =
      split_groups(static_cast<int>(data.groups.size()), config.test_fraction, config.seed);
  normalize_features(data, split.train);

  const Ranker ranker = train_production_ranker(data, split.train, config.ranker_fraction,
                                                config.ranker, config.seed);
  const ClickLog log = simulate(data, ranker, config.scenario, config.sim, split.train);
  const TestSet test = build_test_set(data, split.test);

  ExperimentOutcome outcome;
  for (const auto kind : config.models)
    outcome.results.emplace_back(
        kind, train_and_eval(kind, log, data, test, config.schedule, config.seed));
  return outcome;
}

}  // namespace ctrlab
