#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "aggtopics/aggregate.hpp"
#include "aggtopics/errors.hpp"

using namespace aggtopics;

namespace {

RawUnit unit(std::string id, std::string text, Metadata meta) { return {std::move(id), std::move(text), std::move(meta)}; }

DocumentDefinition by_key(std::string key) { return {"by_" + key, AggregationMode::by_key, std::move(key), 0}; }

std::map<std::string, int> label_counts(const std::vector<RawUnit>& units, const std::string& key) {
  std::map<std::string, int> out;
  for (const auto& u : units) ++out[u.meta.at(key).at(0)];
  return out;
}

std::size_t token_total(const std::vector<RawUnit>& units) {
  std::size_t n = 0;
  for (const auto& u : units) n += tokenize(u.text).size();
  return n;
}

}  // namespace

TEST_CASE("identity aggregation returns the input") {
  std::vector<RawUnit> units = {unit("b", "x", {}), unit("a", "y", {{"k", {"1"}}})};
  const auto r = aggregate_units(units, {"id", AggregationMode::identity, "", 0});
  CHECK(r.units == units);
  CHECK(r.missing_key == 0);
}

TEST_CASE("by_key groups units and joins texts ordered by id") {
  std::vector<RawUnit> units = {
      unit("t3", "third", {{"legislator_id", {"L1"}}, {"state", {"WI"}}}),
      unit("t1", "first", {{"legislator_id", {"L1"}}, {"state", {"WI"}}}),
      unit("t2", "second", {{"legislator_id", {"L1"}}, {"state", {"WI"}}, {"party", {"D"}}}),
  };
  const auto r = aggregate_units(units, by_key("legislator_id"));
  REQUIRE(r.units.size() == 1);
  CHECK(r.units[0].id == "L1");
  CHECK(r.units[0].text == "first\nsecond\nthird");
  CHECK(r.units[0].meta.at("legislator_id") == std::vector<std::string>{"L1"});
  CHECK(r.units[0].meta.at("state") == std::vector<std::string>{"WI"});
  CHECK(r.units[0].meta.count("party") == 0);  // not shared by all members
}

TEST_CASE("by_key duplicates multi-valued units into every group") {
  std::vector<RawUnit> units = {
      unit("p1", "born twice", {{"birthplace", {"Q1", "Q2"}}}),
      unit("p2", "only one", {{"birthplace", {"Q2"}}}),
  };
  const auto r = aggregate_units(units, by_key("birthplace"));
  REQUIRE(r.units.size() == 2);
  CHECK(r.units[0].id == "Q1");
  CHECK(r.units[0].text == "born twice");
  CHECK(r.units[1].id == "Q2");
  CHECK(r.units[1].text == "born twice\nonly one");
  CHECK(r.units[0].meta.at("birthplace") == std::vector<std::string>{"Q1"});
  // Tokens are multiplied by each unit's multiplicity.
  CHECK(token_total(r.units) == 2 * 2 + 2);
}

TEST_CASE("by_key counts and drops units missing the key") {
  std::vector<RawUnit> units = {unit("a", "x", {{"k", {"1"}}}), unit("b", "y", {}), unit("c", "z", {{"k", {"0"}}})};
  const auto r = aggregate_units(units, by_key("k"));
  CHECK(r.missing_key == 1);
  REQUIRE(r.units.size() == 2);
  CHECK(r.units[0].id == "0");  // lexicographic group order
  CHECK(r.units[1].id == "1");
  CHECK_THROWS_AS(aggregate_units(std::vector<RawUnit>{unit("a", "x", {})}, by_key("k")), EmptyResult);
}

TEST_CASE("by_key conserves tokens for single-valued keys") {
  std::vector<RawUnit> units;
  for (int i = 0; i < 30; ++i)
    units.push_back(unit("u" + std::to_string(i), "alpha beta " + std::to_string(i), {{"g", {std::to_string(i % 4)}}}));
  const auto r = aggregate_units(units, by_key("g"));
  CHECK(r.units.size() == 4);
  CHECK(token_total(r.units) == token_total(units));
}

TEST_CASE("permute_labels preserves the label multiset") {
  std::vector<RawUnit> units;
  const std::vector<std::string> labels = {"A", "A", "B", "C", "C", "C", "D"};
  for (std::size_t i = 0; i < labels.size(); ++i) units.push_back(unit("u" + std::to_string(i), "t", {{"k", {labels[i]}}}));
  const auto before = label_counts(units, "k");
  std::set<std::vector<std::string>> arrangements;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = permute_labels(units, "k", seed);
    CHECK(label_counts(p, "k") == before);
    std::vector<std::string> arr;
    for (const auto& u : p) arr.push_back(u.meta.at("k")[0]);
    arrangements.insert(arr);
    // Everything but the key is untouched.
    for (std::size_t i = 0; i < p.size(); ++i) {
      CHECK(p[i].id == units[i].id);
      CHECK(p[i].text == units[i].text);
    }
  }
  CHECK(arrangements.size() == 10);
  CHECK(permute_labels(units, "k", 3) == permute_labels(units, "k", 3));
}

TEST_CASE("permute_labels errors") {
  std::vector<RawUnit> multi = {unit("a", "x", {{"k", {"1", "2"}}})};
  CHECK_THROWS_AS(permute_labels(multi, "k", 0), MultiValuedKey);
  std::vector<RawUnit> missing = {unit("a", "x", {{"k", {"1"}}}), unit("b", "y", {})};
  CHECK_THROWS_AS(permute_labels(missing, "k", 0), MissingKey);
}

TEST_CASE("permuted_by_key keeps document count and group sizes") {
  std::vector<RawUnit> units;
  for (int i = 0; i < 40; ++i)
    units.push_back(unit("u" + std::to_string(i), "w" + std::to_string(i), {{"g", {std::to_string(i % 7 < 3 ? 0 : i % 5)}}}));
  const auto real = aggregate_units(units, by_key("g"));
  const auto perm = aggregate_units(units, {"perm", AggregationMode::permuted_by_key, "g", 9});
  REQUIRE(perm.units.size() == real.units.size());
  std::multiset<std::size_t> a, b;
  for (const auto& u : real.units) a.insert(tokenize(u.text).size());
  for (const auto& u : perm.units) b.insert(tokenize(u.text).size());
  CHECK(a == b);
}

TEST_CASE("aggregation mode names") {
  CHECK(parse_aggregation_mode("permuted") == AggregationMode::permuted_by_key);
  CHECK(parse_aggregation_mode("by_key") == AggregationMode::by_key);
  CHECK(to_string(AggregationMode::identity) == "identity");
  CHECK_THROWS_AS(parse_aggregation_mode("bogus"), InvalidConfig);
}

TEST_CASE("length_stats") {
  const std::vector<std::uint64_t> flat = {1, 1, 1};
  CHECK(length_stats(flat).skewness == 0.0);
  const std::vector<std::uint64_t> skewed = {1, 1, 4};
  const auto s = length_stats(skewed);
  CHECK(s.skewness == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.median == 1.0);
  CHECK(s.n_documents == 3);
  const std::vector<std::uint64_t> even = {4, 1, 3, 2};
  CHECK(length_stats(even).median == 2.5);
  // G1 = g1 * sqrt(n(n-1))/(n-2) = 0.7071 * sqrt(6) / 1
  CHECK(length_stats(skewed, SkewnessEstimator::sample_adjusted).skewness ==
        doctest::Approx(std::sqrt(6.0) / std::sqrt(2.0)));
}
