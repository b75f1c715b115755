#include "ctrlab/config.hpp"
#include "doctest.h"

using namespace ctrlab;

TEST_CASE("parse_config_text handles comments and spacing") {
  const auto kv = parse_config_text(
      "# experiment\n"
      "queries = 10\n"
      "  docs_per_query=30   # inline comment\n"
      "\n"
      "scenario = s2\n",
      "test");
  CHECK(kv.at("queries") == "10");
  CHECK(kv.at("docs_per_query") == "30");
  CHECK(kv.at("scenario") == "s2");
  CHECK_THROWS_AS(parse_config_text("queries 10\n", "test"), ConfigError);
}

TEST_CASE("experiment_from_kv fills defaults and validates") {
  KeyValues kv = {{"queries", "10"}, {"docs_per_query", "5"}, {"feature_dim", "4"}};
  const auto c = experiment_from_kv(kv);
  CHECK(c.synth.queries == 10);
  CHECK(c.schedule.batch_size == 256);
  CHECK(c.sim.k == 15);
  CHECK(c.models.size() == 4);
  CHECK(c.scenario == ScenarioId::s1);
}

TEST_CASE("missing feature_dim is named") {
  KeyValues kv = {{"queries", "10"}, {"docs_per_query", "5"}};
  CHECK_THROWS_WITH_AS(experiment_from_kv(kv), doctest::Contains("feature_dim"),
                       ConfigError);
}

TEST_CASE("unknown keys are rejected, manifest keys ignored") {
  KeyValues kv = {{"queries", "10"},
                  {"docs_per_query", "5"},
                  {"feature_dim", "4"},
                  {"_status", "complete"}};
  CHECK_NOTHROW(experiment_from_kv(kv));
  kv["quries"] = "10";
  CHECK_THROWS_WITH_AS(experiment_from_kv(kv), doctest::Contains("quries"), ConfigError);
}

TEST_CASE("scenario and model lists are validated") {
  KeyValues kv = {{"queries", "10"},
                  {"docs_per_query", "5"},
                  {"feature_dim", "4"},
                  {"scenario", "s9"}};
  CHECK_THROWS_AS(experiment_from_kv(kv), ConfigError);
  kv["scenario"] = "s3";
  kv["model"] = "iin,skyline";
  const auto c = experiment_from_kv(kv);
  CHECK(c.models == std::vector<ModelKind>{ModelKind::iin, ModelKind::skyline});
  kv["model"] = "iin,unknown";
  CHECK_THROWS_AS(experiment_from_kv(kv), ConfigError);
}

TEST_CASE("s5 on file data requires a title feature") {
  KeyValues kv = {{"data_path", "some.letor"}, {"feature_dim", "4"}, {"scenario", "s5"}};
  CHECK_THROWS_WITH_AS(experiment_from_kv(kv), doctest::Contains("title_feature_index"),
                       ConfigError);
  kv["title_feature_index"] = "1";
  CHECK_NOTHROW(experiment_from_kv(kv));
}

TEST_CASE("config echo round-trips") {
  KeyValues kv = {{"queries", "10"},    {"docs_per_query", "5"}, {"feature_dim", "4"},
                  {"scenario", "s4"},   {"alpha", "50"},         {"steps", "123"},
                  {"model", "iin,pal"}, {"seed", "99"}};
  const auto c = experiment_from_kv(kv);
  const auto echo = kv_from_experiment(c);
  const auto c2 = experiment_from_kv(echo);
  CHECK(kv_from_experiment(c2) == echo);
  CHECK(c2.schedule.alpha == 50.0);
  CHECK(c2.schedule.steps == 123);
  CHECK(c2.seed == 99);

  // the rendered form parses back to the same map
  const auto reparsed = parse_config_text(render_config(echo), "echo");
  CHECK(reparsed == echo);
}
