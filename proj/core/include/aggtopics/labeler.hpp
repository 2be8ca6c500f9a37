#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggtopics/corpus.hpp"
#include "aggtopics/metrics.hpp"

namespace aggtopics {

// Why a single token is in the dictionary.
enum class DictionaryRule { name, abbreviation, dominance };

std::string_view to_string(DictionaryRule rule);
DictionaryRule parse_dictionary_rule(std::string_view name);

// Group-related vocabulary: single tokens, plus unordered token pairs that
// together spell a two-word group name ("north" + "dakota").
struct GroupDictionary {
  std::map<std::string, DictionaryRule> singles;
  std::set<std::pair<std::string, std::string>> pairs;  // first < second
  std::string group_key;

  void add_single(std::string token, DictionaryRule rule);
  void add_pair(std::string a, std::string b);
  std::size_t size() const noexcept { return singles.size() + pairs.size(); }
};

struct GroupName {
  std::string name;          // e.g. "New Hampshire"
  std::string abbreviation;  // e.g. "NH"; may be empty
};

// The 50 U.S. states bundled with the library.
const std::vector<GroupName>& us_states();
// Tab-separated "name<TAB>abbreviation" lines; '#' starts a comment.
std::vector<GroupName> parse_group_names(std::string_view tsv);

enum class DominanceCount {
  occurrences,  // token occurrences per group
  documents,    // containing documents per group
};

struct DictionaryOptions {
  std::string group_key = "state";
  std::vector<GroupName> names;
  // Abbreviations that collide with common words once lowercased.
  std::set<std::string> abbreviation_exclusions = {"in", "or", "me", "oh", "ok", "hi", "de"};
  bool apply_exclusions = true;
  double dominance_threshold = 0.5;
  std::size_t min_occurrences = 5;
  DominanceCount dominance_count = DominanceCount::occurrences;
  bool use_dominance = true;
};

// Names tokenize to singles (one token) or pairs (two tokens); longer names
// are rejected with InvalidConfig. A corpus token joins by dominance when it
// has at least min_occurrences and one group holds strictly more than
// dominance_threshold of them. Throws MissingGroupKey when a document does
// not carry exactly one group value.
GroupDictionary build_dictionary(const Corpus& corpus, const DictionaryOptions& options);

// Names and abbreviations only; no corpus needed.
GroupDictionary name_dictionary(const DictionaryOptions& options);

struct TopicLabel {
  int topic = 0;
  bool group_related = false;
  std::vector<std::string> matched;
};

struct TopicLabelReport {
  std::vector<TopicLabel> topics;
  std::size_t n_related = 0;
  // Summed expected proportion of related topics; for cluster models this is
  // the share of documents in related clusters.
  double mass = 0.0;
};

// A topic is related iff a top word is a dictionary single, or both words of
// a dictionary pair are among its top words.
TopicLabelReport label_topics(const std::vector<TopicSummary>& summaries, const GroupDictionary& dictionary);

nlohmann::json dictionary_to_json(const GroupDictionary& dictionary);
GroupDictionary dictionary_from_json(const nlohmann::json& j);
nlohmann::json label_report_to_json(const TopicLabelReport& report);

}  // namespace aggtopics
