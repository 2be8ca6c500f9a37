#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggtopics/aggregate.hpp"
#include "aggtopics/corpus.hpp"
#include "aggtopics/labeler.hpp"
#include "aggtopics/lda.hpp"
#include "aggtopics/metrics.hpp"
#include "aggtopics/stages.hpp"

namespace aggtopics {

enum class CiMethod {
  normal,     // mean +- 1.96 sd / sqrt(R)
  student_t,  // mean +- t_{0.975, R-1} sd / sqrt(R)
};

CiMethod parse_ci_method(std::string_view name);

struct PermutationResult {
  std::vector<std::int64_t> replicate_counts;
  std::vector<std::uint64_t> seeds;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1)
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::int64_t actual_count = 0;
  bool outside_ci = false;
};

// Statistics over replicate counts. Requires at least two replicates.
PermutationResult summarize_permutation(std::span<const std::int64_t> replicate_counts,
                                        std::span<const std::uint64_t> seeds, std::int64_t actual_count,
                                        CiMethod method = CiMethod::normal);

struct PermutationOptions {
  int replicates = 10;
  std::uint64_t base_seed = 0;
  CiMethod ci = CiMethod::normal;
  int jobs = 1;
};

// Seed of replicate r: base_seed xor r.
std::uint64_t replicate_seed(std::uint64_t base_seed, int replicate);

// Counts group-related topics for one document definition.
using DefinitionCounter = std::function<std::int64_t(const DocumentDefinition&)>;

// Runs `counter` on the real by-key aggregation and on `replicates`
// permuted_by_key definitions. Replicates may run concurrently; results are
// collected in replicate order, so the outcome is independent of `jobs`.
PermutationResult run_permutation_test(const std::string& key, const DefinitionCounter& counter,
                                       const PermutationOptions& options);

struct PermutationPipeline {
  PreprocessOptions preprocess;
  LdaConfig lda;
  SummaryOptions summary;
};

// Full refit per replicate: permute, aggregate, build corpus, fit LDA,
// summarize, label, count.
PermutationResult run_permutation_test(std::span<const RawUnit> units, const std::string& key,
                                       const PermutationPipeline& pipeline, const GroupDictionary& dictionary,
                                       const PermutationOptions& options);

nlohmann::json permutation_to_json(const PermutationResult& result);
// One row per replicate, then a summary row.
std::string permutation_to_csv(const PermutationResult& result);

}  // namespace aggtopics
