#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <string>

#include "aggtopics/errors.hpp"
#include "aggtopics/io.hpp"
#include "aggtopics/pipeline.hpp"
#include "synthetic.hpp"
#include "temp_dir.hpp"
#include "tree_compare.hpp"

using namespace aggtopics;
namespace fs = std::filesystem;

namespace {

nlohmann::json small_config(const fs::path& corpus, const fs::path& out) {
  return {{"corpus", corpus.string()},
          {"output_dir", out.string()},
          {"base_seed", 3},
          {"definitions",
           {{{"name", "unit"}, {"mode", "identity"}}, {{"name", "by_group"}, {"mode", "by_key"}, {"key", "group"}}}},
          {"k_list", {2, 3}},
          {"lda", {{"iterations", 25}}},
          {"preprocess", {{"min_doc_freq", 2}, {"remove_stopwords", false}, {"prune_before_aggregation", true}}},
          {"dictionary", {{"group_key", "group"}, {"names", nlohmann::json::array()}, {"min_occurrences", 3}}},
          {"validity", {{"entity_key", "entity"}, {"label_key", "group"}, {"ridge", 0.01}}},
          {"permutation", {{"definitions", {"by_group"}}, {"replicates", 2}}}};
}

fs::path write_corpus(const fs::path& dir) {
  testing::SyntheticOptions so;
  so.groups = 4;
  so.units_per_group = 24;
  so.entities_per_group = 6;
  so.background_terms = 40;
  so.themes = 4;
  so.marker_unit_share = 0.25;
  const auto path = dir / "units.jsonl";
  write_units_jsonl(path, testing::make_synthetic(so).units);
  return path;
}

}  // namespace

TEST_CASE("config validation") {
  test::TempDir tmp;
  auto j = small_config(tmp.path() / "u.jsonl", tmp.path() / "out");
  CHECK_NOTHROW(ExperimentConfig::from_json(j).validate());

  auto empty = j;
  empty["definitions"] = nlohmann::json::array();
  CHECK_THROWS_AS(ExperimentConfig::from_json(empty).validate(), InvalidConfig);
  auto no_k = j;
  no_k["k_list"] = nlohmann::json::array();
  CHECK_THROWS_AS(ExperimentConfig::from_json(no_k).validate(), InvalidConfig);
  auto bad_perm = j;
  bad_perm["permutation"]["definitions"] = {"unit"};
  CHECK_THROWS_AS(ExperimentConfig::from_json(bad_perm).validate(), InvalidConfig);
  auto dup = j;
  dup["definitions"][1]["name"] = "unit";
  CHECK_THROWS_AS(ExperimentConfig::from_json(dup).validate(), InvalidConfig);
  auto cluster = j;
  cluster["families"] = {"cluster"};
  CHECK_THROWS_AS(ExperimentConfig::from_json(cluster).validate(), InvalidConfig);
  CHECK_THROWS_AS(ExperimentConfig::from_json(nlohmann::json::object()), InvalidConfig);

  // Relative paths resolve against the config directory.
  auto rel = j;
  rel["corpus"] = "data/u.jsonl";
  CHECK(ExperimentConfig::from_json(rel, "/base").corpus_path == fs::path("/base/data/u.jsonl"));
}

TEST_CASE("pipeline grid, tables and reproducibility") {
  test::TempDir tmp;
  const auto corpus = write_corpus(tmp.path());
  const auto cfg_a = ExperimentConfig::from_json(small_config(corpus, tmp.path() / "a"));
  const auto report = run_pipeline(cfg_a);

  REQUIRE(report.cells.size() == 4);
  for (const auto& c : report.cells) {
    CHECK(c.ok);
    CHECK(fs::exists(tmp.path() / "a" / c.directory / "model" / "model.json"));
    CHECK(fs::exists(tmp.path() / "a" / c.directory / "labels.json"));
    CHECK(c.mass >= 0.0);
    CHECK(c.mass <= 1.0);
  }
  for (const auto& c : report.cells) {
    if (c.definition == "unit") {
      CHECK(c.validity.has_value());
      CHECK_FALSE(c.permutation.has_value());
    } else {
      // Grouped by the label key, so there is no per-entity design.
      CHECK(c.validity_error.has_value());
      REQUIRE(c.permutation.has_value());
      CHECK(c.permutation->replicate_counts.size() == 2);
      CHECK(static_cast<std::size_t>(c.permutation->actual_count) == c.n_related);
    }
  }

  const auto counts = io::read_file(tmp.path() / "a" / "tables" / "counts.csv");
  CHECK(counts.rfind("family,K,unit,by_group\n", 0) == 0);
  CHECK(std::count(counts.begin(), counts.end(), '\n') == 3);
  const auto perm = io::read_file(tmp.path() / "a" / "tables" / "permutation.csv");
  CHECK(std::count(perm.begin(), perm.end(), '\n') == 1 + 2 * 3);
  CHECK(fs::exists(tmp.path() / "a" / "tables" / "validity.csv"));
  CHECK(fs::exists(tmp.path() / "a" / "tables" / "frontier.csv"));
  CHECK(fs::exists(tmp.path() / "a" / "timing.json"));

  const auto back = ExperimentReport::from_json(io::read_json(tmp.path() / "a" / "report.json"));
  CHECK(counts_table_csv(back) == counts);
  CHECK(back.to_json() == report.to_json());

  auto j_b = small_config(corpus, tmp.path() / "b");
  j_b["jobs"] = 2;
  run_pipeline(ExperimentConfig::from_json(j_b));
  const auto diff = testing::tree_differences(tmp.path() / "a", tmp.path() / "b");
  CHECK_MESSAGE(diff.empty(), "first difference: " << (diff.empty() ? "" : diff.front()));
}

TEST_CASE("failed cells are recorded unless fail_fast") {
  test::TempDir tmp;
  const auto corpus = write_corpus(tmp.path());
  auto j = small_config(corpus, tmp.path() / "out");
  j.erase("permutation");
  j.erase("validity");
  j["definitions"] = {{{"name", "by_group"}, {"mode", "by_key"}, {"key", "group"}},
                       {{"name", "by_x"}, {"mode", "by_key"}, {"key", "nope"}}};
  const auto report = run_pipeline(ExperimentConfig::from_json(j));
  REQUIRE(report.cells.size() == 4);
  for (const auto& c : report.cells) CHECK(c.ok == (c.definition == "by_group"));
  j["definitions"] = {{{"name", "by_x"}, {"mode", "by_key"}, {"key", "nope"}}};
  j["k_list"] = {2};
  const auto missing = run_pipeline(ExperimentConfig::from_json(j));
  CHECK_FALSE(missing.cells[0].ok);
  CHECK_FALSE(missing.cells[0].error.empty());
  CHECK(io::read_file(tmp.path() / "out" / "tables" / "counts.csv").find("NA") != std::string::npos);
  j["fail_fast"] = true;
  CHECK_THROWS(run_pipeline(ExperimentConfig::from_json(j)));
}
