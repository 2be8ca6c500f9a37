#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggtopics/corpus.hpp"
#include "aggtopics/matrix.hpp"
#include "aggtopics/topic_model.hpp"

namespace aggtopics {

// FREX score matrix (K x V). For each topic k:
//   e_kv      = phi_kv / sum_j phi_jv
//   ECDF_k(x) = #{u : x_ku <= x_kv} / V
//   FREX_kv   = 1 / (w / ECDF_k(e)(v) + (1 - w) / ECDF_k(phi)(v))
Matrix frex(const Matrix& phi, double weight);

// Within-row empirical CDF using <= (ties share rank mass).
std::vector<double> row_ecdf(std::span<const double> row);

// Indices of the n largest entries of `scores`, ties broken by the
// lexicographic order of `terms`.
std::vector<std::size_t> top_indices(std::span<const double> scores, const std::vector<std::string>& terms,
                                     std::size_t n);

// Document and co-document frequencies over a corpus.
class CooccurrenceIndex {
 public:
  explicit CooccurrenceIndex(const Corpus& corpus);
  std::size_t doc_freq(TermId v) const { return postings_.at(v).size(); }
  std::size_t co_doc_freq(TermId a, TermId b) const;

 private:
  std::vector<std::vector<std::uint32_t>> postings_;
};

// Per topic, over its top-M words by phi (ties lexicographic):
//   C_k = sum_{i=2..M} sum_{j<i} log((D(v_i, v_j) + 1) / D(v_j))
// Throws DegenerateWord if a top word never occurs in the corpus.
std::vector<double> semantic_coherence(const Matrix& phi, const Corpus& corpus, std::size_t top_m = 10);
std::vector<double> semantic_coherence(const Matrix& phi, const Corpus& corpus, const CooccurrenceIndex& index,
                                       std::size_t top_m);

// Mean FREX (weight w_ex) over each topic's top-M words by that FREX.
std::vector<double> topic_exclusivity(const Matrix& phi, const std::vector<std::string>& terms,
                                      std::size_t top_m = 10, double weight = 0.7);

struct TopicSummary {
  int topic = 0;
  std::vector<std::string> top_words;
  double expected_proportion = 0.0;
  double coherence = 0.0;
  double exclusivity = 0.0;
};

struct SummaryOptions {
  double frex_weight = 0.5;
  std::size_t top_n = 10;
  std::size_t coherence_m = 10;
  std::size_t exclusivity_m = 10;
  double exclusivity_weight = 0.7;
};

// Top words by FREX for LDA models; for cluster models pass the c-TF-IDF
// representations through `representations`.
std::vector<TopicSummary> summarize(const TopicModel& model, const Corpus& corpus,
                                    const SummaryOptions& options = {},
                                    const std::optional<std::vector<std::vector<std::string>>>& representations = {});

nlohmann::json summaries_to_json(const std::vector<TopicSummary>& summaries);
std::vector<TopicSummary> summaries_from_json(const nlohmann::json& j);

}  // namespace aggtopics
