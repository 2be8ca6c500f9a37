#pragma once

#include <set>
#include <span>
#include <string>
#include <vector>

#include "aggtopics/aggregate.hpp"
#include "aggtopics/corpus.hpp"
#include "aggtopics/labeler.hpp"
#include "aggtopics/lda.hpp"
#include "aggtopics/metrics.hpp"
#include "aggtopics/topic_model.hpp"

namespace aggtopics {

struct PreprocessOptions {
  int min_doc_freq = 3;
  bool remove_stopwords = true;
  // Compute document frequencies on the base units instead of on the
  // aggregated documents.
  bool prune_before_aggregation = false;
};

struct DefinitionCorpus {
  std::vector<RawUnit> units;  // aggregated units
  Corpus corpus;
  std::size_t missing_key = 0;
};

// Terms surviving document-frequency pruning over the base units.
std::set<std::string, std::less<>> unit_level_vocabulary(std::span<const RawUnit> units,
                                                          const PreprocessOptions& options);

// Aggregate, then tokenize and prune. `unit_vocabulary` is required when
// options.prune_before_aggregation is set.
DefinitionCorpus build_definition_corpus(std::span<const RawUnit> units, const DocumentDefinition& definition,
                                         const PreprocessOptions& options,
                                         const std::set<std::string, std::less<>>* unit_vocabulary = nullptr);

struct LdaCellResult {
  TopicModel model;
  std::vector<TopicSummary> summaries;
  TopicLabelReport labels;
};

// Fit, summarize, label.
LdaCellResult fit_and_label_lda(const Corpus& corpus, const LdaConfig& config, const SummaryOptions& summary,
                                const GroupDictionary& dictionary);

}  // namespace aggtopics
