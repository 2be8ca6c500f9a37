#include "aggtopics/stages.hpp"

#include "aggtopics/errors.hpp"

namespace aggtopics {

std::set<std::string, std::less<>> unit_level_vocabulary(std::span<const RawUnit> units,
                                                          const PreprocessOptions& options) {
  CorpusOptions co;
  co.min_doc_freq = options.min_doc_freq;
  co.remove_stopwords = options.remove_stopwords;
  const auto corpus = build_corpus(units, co);
  return {corpus.vocabulary().terms().begin(), corpus.vocabulary().terms().end()};
}

DefinitionCorpus build_definition_corpus(std::span<const RawUnit> units, const DocumentDefinition& definition,
                                         const PreprocessOptions& options,
                                         const std::set<std::string, std::less<>>* unit_vocabulary) {
  auto aggregated = aggregate_units(units, definition);
  CorpusOptions co;
  co.remove_stopwords = options.remove_stopwords;
  co.definition_name = definition.name;
  if (options.prune_before_aggregation) {
    if (!unit_vocabulary) throw InvalidConfig("unit-level vocabulary required when pruning before aggregation");
    co.min_doc_freq = 1;
    co.allowed_terms = *unit_vocabulary;
  } else {
    co.min_doc_freq = options.min_doc_freq;
  }
  DefinitionCorpus out;
  out.corpus = build_corpus(aggregated.units, co);
  out.units = std::move(aggregated.units);
  out.missing_key = aggregated.missing_key;
  return out;
}

LdaCellResult fit_and_label_lda(const Corpus& corpus, const LdaConfig& config, const SummaryOptions& summary,
                                const GroupDictionary& dictionary) {
  LdaCellResult r;
  r.model = fit_lda(corpus, config);
  r.summaries = summarize(r.model, corpus, summary);
  r.labels = label_topics(r.summaries, dictionary);
  return r;
}

}  // namespace aggtopics
