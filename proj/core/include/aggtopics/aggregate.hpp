#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "aggtopics/corpus.hpp"

namespace aggtopics {

enum class AggregationMode { identity, by_key, permuted_by_key };

std::string_view to_string(AggregationMode mode);
// Accepts "identity", "by_key", "permuted_by_key" and the CLI alias "permuted".
AggregationMode parse_aggregation_mode(std::string_view name);

// Maps base units to model documents.
struct DocumentDefinition {
  std::string name;
  AggregationMode mode = AggregationMode::identity;
  std::string key;          // unused for identity
  std::uint64_t seed = 0;   // permuted_by_key only
};

struct AggregationResult {
  std::vector<RawUnit> units;
  // Units dropped because they lack the grouping key.
  std::size_t missing_key = 0;
};

// identity returns the input unchanged. by_key emits one unit per distinct
// key value (lexicographic), whose text joins member texts ordered by
// unit id with '\n'. A unit with m key values is copied into m groups.
// Non-grouping metadata keeps only values shared by every member.
// permuted_by_key applies permute_labels first.
//
// Throws EmptyResult when no unit carries the key.
AggregationResult aggregate_units(std::span<const RawUnit> units, const DocumentDefinition& definition);

// Shuffles the multiset of `key` values across units (seeded Fisher-Yates),
// preserving group sizes. Throws MultiValuedKey unless every unit carries
// exactly one value.
std::vector<RawUnit> permute_labels(std::span<const RawUnit> units, const std::string& key,
                                    std::uint64_t seed);

enum class SkewnessEstimator {
  population,       // g1 = m3 / m2^{3/2}
  sample_adjusted,  // G1 = g1 * sqrt(n(n-1)) / (n-2)
};

struct LengthStats {
  std::size_t n_documents = 0;
  std::vector<std::uint64_t> token_counts;
  double mean = 0.0;
  double median = 0.0;
  double skewness = 0.0;  // 0 for constant sequences
};

LengthStats length_stats(std::span<const std::uint64_t> token_counts,
                         SkewnessEstimator estimator = SkewnessEstimator::population);
LengthStats length_stats(const Corpus& corpus,
                         SkewnessEstimator estimator = SkewnessEstimator::population);

}  // namespace aggtopics
