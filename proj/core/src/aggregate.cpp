#include "aggtopics/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "aggtopics/errors.hpp"
#include "aggtopics/random.hpp"

namespace aggtopics {

std::string_view to_string(AggregationMode mode) {
  switch (mode) {
    case AggregationMode::identity: return "identity";
    case AggregationMode::by_key: return "by_key";
    case AggregationMode::permuted_by_key: return "permuted_by_key";
  }
  return "unknown";
}

AggregationMode parse_aggregation_mode(std::string_view name) {
  if (name == "identity") return AggregationMode::identity;
  if (name == "by_key") return AggregationMode::by_key;
  if (name == "permuted_by_key" || name == "permuted") return AggregationMode::permuted_by_key;
  throw InvalidConfig("unknown aggregation mode '" + std::string(name) + "'");
}

namespace {

// Values of `key` present in every member, in the first member's order.
std::vector<std::string> shared_values(const std::vector<const RawUnit*>& members, const std::string& key) {
  auto first = members.front()->meta.find(key);
  if (first == members.front()->meta.end()) return {};
  std::vector<std::string> out;
  for (const auto& value : first->second) {
    bool everywhere = std::all_of(members.begin() + 1, members.end(), [&](const RawUnit* m) {
      auto it = m->meta.find(key);
      return it != m->meta.end() && std::find(it->second.begin(), it->second.end(), value) != it->second.end();
    });
    if (everywhere && std::find(out.begin(), out.end(), value) == out.end()) out.push_back(value);
  }
  return out;
}

AggregationResult group_by_key(std::span<const RawUnit> units, const std::string& key) {
  AggregationResult result;
  std::map<std::string, std::vector<const RawUnit*>> groups;
  for (const auto& unit : units) {
    auto it = unit.meta.find(key);
    if (it == unit.meta.end() || it->second.empty()) {
      ++result.missing_key;
      continue;
    }
    // A duplicated value on one unit still contributes the text once.
    std::vector<std::string> values = it->second;
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (const auto& v : values) groups[v].push_back(&unit);
  }
  if (groups.empty()) throw EmptyResult("no unit carries key '" + key + "'");

  result.units.reserve(groups.size());
  for (auto& [value, members] : groups) {
    std::stable_sort(members.begin(), members.end(),
                     [](const RawUnit* a, const RawUnit* b) { return a->id < b->id; });
    RawUnit doc;
    doc.id = value;
    for (std::size_t i = 0; i < members.size(); ++i) {
      if (i > 0) doc.text += '\n';
      doc.text += members[i]->text;
    }
    for (const auto& [meta_key, _] : members.front()->meta) {
      if (meta_key == key) continue;
      auto values = shared_values(members, meta_key);
      if (!values.empty()) doc.meta.emplace(meta_key, std::move(values));
    }
    doc.meta[key] = {value};
    result.units.push_back(std::move(doc));
  }
  return result;
}

}  // namespace

AggregationResult aggregate_units(std::span<const RawUnit> units, const DocumentDefinition& definition) {
  switch (definition.mode) {
    case AggregationMode::identity:
      return {{units.begin(), units.end()}, 0};
    case AggregationMode::by_key:
      return group_by_key(units, definition.key);
    case AggregationMode::permuted_by_key: {
      auto permuted = permute_labels(units, definition.key, definition.seed);
      return group_by_key(permuted, definition.key);
    }
  }
  throw InvalidConfig("unknown aggregation mode");
}

std::vector<RawUnit> permute_labels(std::span<const RawUnit> units, const std::string& key,
                                    std::uint64_t seed) {
  std::vector<std::string> labels;
  labels.reserve(units.size());
  for (const auto& unit : units) {
    auto it = unit.meta.find(key);
    if (it == unit.meta.end()) throw MissingKey(key, 1);
    if (it->second.size() != 1) throw MultiValuedKey(unit.id);
    labels.push_back(it->second.front());
  }
  Rng rng(seed);
  for (std::size_t i = labels.size(); i > 1; --i) {
    std::swap(labels[i - 1], labels[rng.below(i)]);
  }
  std::vector<RawUnit> out(units.begin(), units.end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i].meta[key] = {std::move(labels[i])};
  return out;
}

LengthStats length_stats(std::span<const std::uint64_t> token_counts, SkewnessEstimator estimator) {
  LengthStats s;
  s.n_documents = token_counts.size();
  s.token_counts.assign(token_counts.begin(), token_counts.end());
  if (token_counts.empty()) return s;

  const double n = static_cast<double>(token_counts.size());
  s.mean = std::accumulate(token_counts.begin(), token_counts.end(), 0.0) / n;

  auto sorted = s.token_counts;
  std::sort(sorted.begin(), sorted.end());
  const auto mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? static_cast<double>(sorted[mid])
                               : 0.5 * (static_cast<double>(sorted[mid - 1]) + static_cast<double>(sorted[mid]));

  double m2 = 0.0;
  double m3 = 0.0;
  for (auto c : token_counts) {
    const double d = static_cast<double>(c) - s.mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) return s;
  s.skewness = m3 / std::pow(m2, 1.5);
  if (estimator == SkewnessEstimator::sample_adjusted) {
    if (token_counts.size() < 3) throw InvalidConfig("adjusted skewness needs at least 3 documents");
    s.skewness *= std::sqrt(n * (n - 1.0)) / (n - 2.0);
  }
  return s;
}

LengthStats length_stats(const Corpus& corpus, SkewnessEstimator estimator) {
  std::vector<std::uint64_t> counts;
  counts.reserve(corpus.num_documents());
  for (const auto& d : corpus.documents()) counts.push_back(d.total());
  return length_stats(counts, estimator);
}

}  // namespace aggtopics
