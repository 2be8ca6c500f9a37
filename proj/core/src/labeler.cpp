#include "aggtopics/labeler.hpp"

#include <algorithm>
#include <unordered_map>

#include "aggtopics/errors.hpp"
#include "bundled_data.hpp"

namespace aggtopics {

using nlohmann::json;

std::string_view to_string(DictionaryRule rule) {
  switch (rule) {
    case DictionaryRule::name: return "name";
    case DictionaryRule::abbreviation: return "abbreviation";
    case DictionaryRule::dominance: return "dominance";
  }
  return "unknown";
}

DictionaryRule parse_dictionary_rule(std::string_view name) {
  if (name == "name") return DictionaryRule::name;
  if (name == "abbreviation") return DictionaryRule::abbreviation;
  if (name == "dominance") return DictionaryRule::dominance;
  throw ParseError("unknown dictionary rule '" + std::string(name) + "'");
}

void GroupDictionary::add_single(std::string token, DictionaryRule rule) {
  // Keep the strongest provenance: name < abbreviation < dominance.
  auto [it, inserted] = singles.emplace(std::move(token), rule);
  if (!inserted && rule < it->second) it->second = rule;
}

void GroupDictionary::add_pair(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  pairs.emplace(std::move(a), std::move(b));
}

std::vector<GroupName> parse_group_names(std::string_view tsv) {
  std::vector<GroupName> out;
  std::size_t pos = 0;
  while (pos < tsv.size()) {
    auto end = tsv.find('\n', pos);
    if (end == std::string_view::npos) end = tsv.size();
    auto line = tsv.substr(pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    GroupName g;
    g.name = std::string(line.substr(0, tab));
    if (tab != std::string_view::npos) g.abbreviation = std::string(line.substr(tab + 1));
    out.push_back(std::move(g));
  }
  return out;
}

const std::vector<GroupName>& us_states() {
  static const auto states = parse_group_names(detail::kUsStatesFile);
  return states;
}

GroupDictionary name_dictionary(const DictionaryOptions& options) {
  GroupDictionary dict;
  dict.group_key = options.group_key;
  for (const auto& g : options.names) {
    const auto tokens = tokenize(g.name);
    if (tokens.size() == 1) {
      dict.add_single(tokens[0], DictionaryRule::name);
    } else if (tokens.size() == 2) {
      dict.add_pair(tokens[0], tokens[1]);
    } else if (!tokens.empty()) {
      throw InvalidConfig("group name '" + g.name + "' has more than two tokens");
    }
    if (!g.abbreviation.empty()) {
      for (auto& t : tokenize(g.abbreviation)) {
        if (options.apply_exclusions && options.abbreviation_exclusions.contains(t)) continue;
        dict.add_single(std::move(t), DictionaryRule::abbreviation);
      }
    }
  }
  return dict;
}

GroupDictionary build_dictionary(const Corpus& corpus, const DictionaryOptions& options) {
  if (!(options.dominance_threshold >= 0.0 && options.dominance_threshold < 1.0))
    throw InvalidConfig("dominance threshold must lie in [0, 1)");
  GroupDictionary dict = name_dictionary(options);
  if (!options.use_dominance) return dict;

  // term -> group -> count
  std::vector<std::map<std::string, std::uint64_t>> per_group(corpus.num_terms());
  std::vector<std::uint64_t> totals(corpus.num_terms(), 0);
  for (const auto& doc : corpus.documents()) {
    auto it = doc.meta.find(options.group_key);
    if (it == doc.meta.end() || it->second.size() != 1) throw MissingGroupKey(options.group_key, doc.id);
    const auto& group = it->second.front();
    for (const auto& tc : doc.counts) {
      const std::uint64_t n = options.dominance_count == DominanceCount::occurrences ? tc.count : 1;
      per_group[tc.term][group] += n;
      totals[tc.term] += n;
    }
  }
  const auto& terms = corpus.vocabulary().terms();
  for (std::size_t v = 0; v < terms.size(); ++v) {
    if (totals[v] == 0 || totals[v] < options.min_occurrences) continue;
    std::uint64_t best = 0;
    for (const auto& [group, n] : per_group[v]) best = std::max(best, n);
    if (static_cast<double>(best) > options.dominance_threshold * static_cast<double>(totals[v]))
      dict.add_single(terms[v], DictionaryRule::dominance);
  }
  return dict;
}

TopicLabelReport label_topics(const std::vector<TopicSummary>& summaries, const GroupDictionary& dictionary) {
  TopicLabelReport report;
  double mass = 0.0;
  for (const auto& s : summaries) {
    TopicLabel label;
    label.topic = s.topic;
    for (const auto& w : s.top_words) {
      if (dictionary.singles.contains(w)) label.matched.push_back(w);
    }
    for (const auto& [a, b] : dictionary.pairs) {
      const bool has_a = std::find(s.top_words.begin(), s.top_words.end(), a) != s.top_words.end();
      const bool has_b = std::find(s.top_words.begin(), s.top_words.end(), b) != s.top_words.end();
      if (has_a && has_b) label.matched.push_back(a + " " + b);
    }
    label.group_related = !label.matched.empty();
    if (label.group_related) {
      ++report.n_related;
      mass += s.expected_proportion;
    }
    report.topics.push_back(std::move(label));
  }
  if (report.n_related == summaries.size() && !summaries.empty()) {
    report.mass = 1.0;
  } else if (report.n_related == 0) {
    report.mass = 0.0;
  } else {
    report.mass = std::clamp(mass, 0.0, 1.0);
  }
  return report;
}

json dictionary_to_json(const GroupDictionary& dictionary) {
  json singles = json::array();
  for (const auto& [token, rule] : dictionary.singles) singles.push_back({{"token", token}, {"rule", to_string(rule)}});
  json pairs = json::array();
  for (const auto& [a, b] : dictionary.pairs) pairs.push_back({a, b});
  return {{"group_key", dictionary.group_key}, {"singles", singles}, {"pairs", pairs}};
}

GroupDictionary dictionary_from_json(const json& j) {
  GroupDictionary dict;
  try {
    dict.group_key = j.value("group_key", std::string());
    for (const auto& s : j.at("singles")) {
      auto token = s.at("token").get<std::string>();
      if (std::any_of(token.begin(), token.end(), [](unsigned char c) { return c >= 'A' && c <= 'Z'; }))
        throw ParseError("dictionary entry '" + token + "' is not lowercase");
      dict.add_single(std::move(token), parse_dictionary_rule(s.value("rule", std::string("name"))));
    }
    for (const auto& p : j.value("pairs", json::array())) {
      dict.add_pair(p.at(0).get<std::string>(), p.at(1).get<std::string>());
    }
  } catch (const json::exception& e) {
    throw ParseError("dictionary: " + std::string(e.what()));
  }
  return dict;
}

json label_report_to_json(const TopicLabelReport& report) {
  json topics = json::array();
  for (const auto& t : report.topics)
    topics.push_back({{"topic", t.topic}, {"group_related", t.group_related}, {"matched", t.matched}});
  return {{"n_related", report.n_related}, {"mass", report.mass}, {"topics", topics}};
}

}  // namespace aggtopics
