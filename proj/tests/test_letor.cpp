#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ctrlab/letor.hpp"
#include "ctrlab/rng.hpp"
#include "doctest.h"

using namespace ctrlab;

namespace {

std::string write_temp(const std::string& name, const std::string& contents) {
  const auto path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::binary);
  out << contents;
  return path;
}

std::string dataset_text(const Dataset& data) {
  std::string out;
  for (const auto& g : data.groups)
    for (const auto& d : g.docs) out += format_letor_line(d) + "\n";
  return out;
}

}  // namespace

TEST_CASE("parse_letor_line basic") {
  const auto p = parse_letor_line("2 qid:10 1:0.5 2:1.0", 3);
  CHECK(p.grade == 2);
  CHECK(p.query_id == 10);
  CHECK(p.features == std::vector<double>{0.5, 1.0, 0.0});
}

TEST_CASE("parse_letor_line zero fill and comments") {
  const auto p = parse_letor_line("0 qid:1 1:0.2 # docid = GX000-00-0000000", 2);
  CHECK(p.grade == 0);
  CHECK(p.features == std::vector<double>{0.2, 0.0});
}

TEST_CASE("parse_letor_line errors name the token") {
  CHECK_THROWS_WITH_AS(parse_letor_line("5 qid:1 1:0.2", 2),
                       doctest::Contains("grade out of range"), ParseError);
  CHECK_THROWS_AS(parse_letor_line("2 qid:1 3:0.2", 2), ParseError);
  CHECK_THROWS_AS(parse_letor_line("2 qid:1 0:0.2", 2), ParseError);
  CHECK_THROWS_AS(parse_letor_line("x qid:1 1:0.2", 2), ParseError);
  CHECK_THROWS_AS(parse_letor_line("2 1:0.2", 2), ParseError);
  CHECK_THROWS_AS(parse_letor_line("2 qid:1 1:abc", 2), ParseError);
  CHECK_THROWS_AS(parse_letor_line("", 2), ParseError);
}

TEST_CASE("binarize_relevance partitions grades at 2") {
  CHECK(binarize_relevance(3));
  CHECK(binarize_relevance(4));
  CHECK_FALSE(binarize_relevance(0));
  CHECK_FALSE(binarize_relevance(1));
  CHECK_FALSE(binarize_relevance(2));
}

TEST_CASE("letor line round-trips") {
  auto rng = make_rng(7, Stream::test_misc);
  for (int trial = 0; trial < 50; ++trial) {
    QueryDocPair p;
    p.query_id = static_cast<int64_t>(uniform_below(rng, 10000));
    p.grade = static_cast<int>(uniform_below(rng, 5));
    p.features.resize(1 + uniform_below(rng, 20));
    for (auto& f : p.features) f = uniform01(rng) * 100.0 - 50.0;
    const auto q = parse_letor_line(format_letor_line(p), static_cast<int>(p.features.size()));
    CHECK(q.query_id == p.query_id);
    CHECK(q.grade == p.grade);
    CHECK(q.features == p.features);
  }
}

TEST_CASE("load_dataset groups by first appearance") {
  const auto path = write_temp("ctrlab_letor_groups.txt",
                               "1 qid:1 1:0.1 2:0.2\n"
                               "0 qid:2 1:0.3\n"
                               "3 qid:1 1:0.4\n");
  const auto data = load_dataset(path, 2, 0);
  REQUIRE(data.groups.size() == 2);
  CHECK(data.groups[0].query_id == 1);
  CHECK(data.groups[1].query_id == 2);
  REQUIRE(data.groups[0].docs.size() == 2);
  CHECK(data.groups[0].docs[0].features[0] == 0.1);
  CHECK(data.groups[0].docs[1].features[0] == 0.4);
  CHECK(data.groups[0].docs[0].doc_id == 0);
  CHECK(data.groups[0].docs[1].doc_id == 1);
  std::remove(path.c_str());
}

TEST_CASE("load_dataset empty file is an empty dataset") {
  const auto path = write_temp("ctrlab_letor_empty.txt", "");
  const auto data = load_dataset(path, 4, 0);
  CHECK(data.groups.empty());
  CHECK(data.feature_dim == 4);
  std::remove(path.c_str());
}

TEST_CASE("load_dataset reports the line number") {
  const auto path = write_temp("ctrlab_letor_bad.txt",
                               "1 qid:1 1:0.1\n"
                               "9 qid:1 1:0.1\n");
  CHECK_THROWS_WITH_AS(load_dataset(path, 1, 0), doctest::Contains(":2:"), ParseError);
  std::remove(path.c_str());
}

TEST_CASE("generate_synthetic is reproducible") {
  SynthConfig cfg;
  cfg.queries = 2;
  cfg.docs_per_query = 3;
  cfg.feature_dim = 4;
  const auto a = generate_synthetic(cfg, 7);
  const auto b = generate_synthetic(cfg, 7);
  CHECK(dataset_text(a) == dataset_text(b));
  const auto c = generate_synthetic(cfg, 8);
  CHECK(dataset_text(a) != dataset_text(c));
}

TEST_CASE("generate_synthetic hits the relevant fraction") {
  SynthConfig cfg;
  cfg.queries = 100;
  cfg.docs_per_query = 20;
  cfg.feature_dim = 10;
  const auto data = generate_synthetic(cfg, 1);
  size_t relevant = 0;
  for (const auto& g : data.groups)
    for (const auto& d : g.docs) relevant += binarize_relevance(d.grade) ? 1 : 0;
  const double fraction = static_cast<double>(relevant) / static_cast<double>(data.num_docs());
  CHECK(fraction >= 0.15);
  CHECK(fraction <= 0.25);
}

TEST_CASE("generate_synthetic rejects degenerate configs") {
  SynthConfig cfg;
  cfg.queries = 0;
  cfg.docs_per_query = 3;
  cfg.feature_dim = 4;
  CHECK_THROWS_AS(generate_synthetic(cfg, 1), ConfigError);
  cfg.queries = 2;
  cfg.feature_dim = 0;
  CHECK_THROWS_AS(generate_synthetic(cfg, 1), ConfigError);
  cfg.feature_dim = 4;
  cfg.title_feature_index = 9;
  CHECK_THROWS_AS(generate_synthetic(cfg, 1), ConfigError);
}

TEST_CASE("title feature does not drive the grade") {
  SynthConfig cfg;
  cfg.queries = 80;
  cfg.docs_per_query = 25;
  cfg.feature_dim = 8;
  cfg.title_feature_index = 3;
  const auto data = generate_synthetic(cfg, 11);
  // Correlation between the title feature and binarized relevance stays weak.
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0, n = 0;
  for (const auto& g : data.groups)
    for (const auto& d : g.docs) {
      const double x = d.features[3];
      const double y = binarize_relevance(d.grade) ? 1.0 : 0.0;
      sx += x, sy += y, sxx += x * x, syy += y * y, sxy += x * y, n += 1;
    }
  const double corr = (n * sxy - sx * sy) /
                      std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  CHECK(std::abs(corr) < 0.1);
}

TEST_CASE("split_groups is deterministic and disjoint") {
  const auto a = split_groups(10, 0.2, 5);
  const auto b = split_groups(10, 0.2, 5);
  CHECK(a.train == b.train);
  CHECK(a.test == b.test);
  CHECK(a.test.size() == 2);
  CHECK(a.train.size() == 8);
  for (const int t : a.test)
    CHECK(std::find(a.train.begin(), a.train.end(), t) == a.train.end());
  CHECK(std::is_sorted(a.train.begin(), a.train.end()));
}

TEST_CASE("normalize_features uses train bounds") {
  Dataset data;
  data.feature_dim = 2;
  data.title_feature_index = 0;
  QueryGroup g0{1, {{1, 0, {2.0, 10.0}, 0}, {1, 1, {6.0, 10.0}, 0}}};
  QueryGroup g1{2, {{2, 0, {4.0, 20.0}, 0}}};
  data.groups = {g0, g1};
  normalize_features(data, {0});
  CHECK(data.groups[0].docs[0].features[0] == 0.0);
  CHECK(data.groups[0].docs[1].features[0] == 1.0);
  CHECK(data.groups[1].docs[0].features[0] == 0.5);
  // zero-range feature on the train split maps to 0 everywhere
  CHECK(data.groups[0].docs[0].features[1] == 0.0);
  CHECK(data.groups[1].docs[0].features[1] == 0.0);
}
