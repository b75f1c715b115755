// ctrlab command line: synthetic data generation, production-ranker training,
// click simulation, debias-model training and evaluation, full runs, reports.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "ctrlab/pipeline.hpp"

namespace {

struct Flags {
  std::string config_path;
  std::string seed;
  std::string scenario;
  std::string model;
  std::string out;
  std::string steps;
  std::string batch_size;
  std::string alpha;
  std::string threads;
};

void add_common_flags(CLI::App* cmd, Flags& flags) {
  cmd->add_option("--config", flags.config_path, "flat key-value config file");
  cmd->add_option("--seed", flags.seed, "master seed (u64)");
  cmd->add_option("--scenario", flags.scenario, "click scenario s1..s5");
  cmd->add_option("--model", flags.model, "model kind(s): iin|pal|mmoe|skyline, comma separated");
  cmd->add_option("--out", flags.out, "output directory");
  cmd->add_option("--steps", flags.steps, "training steps");
  cmd->add_option("--batch-size", flags.batch_size, "training batch size");
  cmd->add_option("--alpha", flags.alpha, "constraint weight for IIN");
  cmd->add_option("--threads", flags.threads, "worker count for simulation/evaluation");
}

// Flags win over config-file values.
ctrlab::ExperimentConfig resolve(const Flags& flags) {
  ctrlab::KeyValues kv;
  if (!flags.config_path.empty()) kv = ctrlab::load_config_file(flags.config_path);
  if (!flags.seed.empty()) kv["seed"] = flags.seed;
  if (!flags.scenario.empty()) kv["scenario"] = flags.scenario;
  if (!flags.model.empty()) kv["model"] = flags.model;
  if (!flags.out.empty()) kv["out"] = flags.out;
  if (!flags.steps.empty()) kv["steps"] = flags.steps;
  if (!flags.batch_size.empty()) kv["batch_size"] = flags.batch_size;
  if (!flags.alpha.empty()) kv["alpha"] = flags.alpha;
  if (!flags.threads.empty()) kv["threads"] = flags.threads;
  return ctrlab::experiment_from_kv(kv);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ctrlab: click-simulation laboratory for CTR debiasing"};
  app.require_subcommand(1);

  Flags flags;
  std::string report_dir;

  auto* gen = app.add_subcommand("gen-data", "write a synthetic LETOR dataset");
  auto* ranker = app.add_subcommand("train-ranker", "train the production ranker");
  auto* sim = app.add_subcommand("simulate", "simulate clicks into a CSV log");
  auto* train = app.add_subcommand("train", "train model(s) on a click log");
  auto* eval = app.add_subcommand("evaluate", "test-set AUC of trained model(s)");
  auto* run = app.add_subcommand("run", "full pipeline: data, ranker, clicks, training, summary");
  auto* report = app.add_subcommand("report", "merge curve CSVs and print the summary table");
  for (auto* cmd : {gen, ranker, sim, train, eval, run})
    add_common_flags(cmd, flags);
  report->add_option("dir", report_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      cmd_gen_data(resolve(flags));
    } else if (ranker->parsed()) {
      cmd_train_ranker(resolve(flags));
    } else if (sim->parsed()) {
      cmd_simulate(resolve(flags));
    } else if (train->parsed()) {
      const auto config = resolve(flags);
      for (const auto kind : config.models) cmd_train(config, kind);
    } else if (eval->parsed()) {
      const auto config = resolve(flags);
      for (const auto kind : config.models) {
        const double value = cmd_evaluate(config, kind);
        std::printf("model=%s scenario=%s auc=%s\n", to_string(kind).c_str(),
                    to_string(config.scenario).c_str(),
                    ctrlab::format_double(value).c_str());
      }
    } else if (run->parsed()) {
      cmd_run(resolve(flags));
    } else if (report->parsed()) {
      ctrlab::cmd_report(report_dir);
    }
  } catch (const ctrlab::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
