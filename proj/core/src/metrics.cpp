#include "aggtopics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aggtopics/errors.hpp"

namespace aggtopics {

using nlohmann::json;

std::vector<double> row_ecdf(std::span<const double> row) {
  std::vector<double> sorted(row.begin(), row.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(row.size());
  std::vector<double> out(row.size());
  for (std::size_t v = 0; v < row.size(); ++v) {
    const auto le = std::upper_bound(sorted.begin(), sorted.end(), row[v]) - sorted.begin();
    out[v] = static_cast<double>(le) / n;
  }
  return out;
}

Matrix frex(const Matrix& phi, double weight) {
  if (weight < 0.0 || weight > 1.0) throw InvalidConfig("FREX weight must lie in [0, 1]");
  const auto k_count = phi.rows();
  const auto v_count = phi.cols();
  std::vector<double> column_sum(v_count, 0.0);
  for (std::size_t k = 0; k < k_count; ++k)
    for (std::size_t v = 0; v < v_count; ++v) column_sum[v] += phi(k, v);

  Matrix out(k_count, v_count);
  std::vector<double> excl(v_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    for (std::size_t v = 0; v < v_count; ++v) excl[v] = column_sum[v] > 0.0 ? phi(k, v) / column_sum[v] : 0.0;
    const auto ecdf_e = row_ecdf(excl);
    const auto ecdf_f = row_ecdf(phi.row(k));
    for (std::size_t v = 0; v < v_count; ++v) out(k, v) = 1.0 / (weight / ecdf_e[v] + (1.0 - weight) / ecdf_f[v]);
  }
  return out;
}

std::vector<std::size_t> top_indices(std::span<const double> scores, const std::vector<std::string>& terms,
                                     std::size_t n) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  n = std::min(n, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return terms[a] < terms[b];
                    });
  idx.resize(n);
  return idx;
}

CooccurrenceIndex::CooccurrenceIndex(const Corpus& corpus) : postings_(corpus.num_terms()) {
  for (std::size_t d = 0; d < corpus.num_documents(); ++d)
    for (const auto& tc : corpus.documents()[d].counts) postings_[tc.term].push_back(static_cast<std::uint32_t>(d));
}

std::size_t CooccurrenceIndex::co_doc_freq(TermId a, TermId b) const {
  const auto& pa = postings_.at(a);
  const auto& pb = postings_.at(b);
  std::size_t i = 0, j = 0, n = 0;
  while (i < pa.size() && j < pb.size()) {
    if (pa[i] < pb[j]) {
      ++i;
    } else if (pb[j] < pa[i]) {
      ++j;
    } else {
      ++n, ++i, ++j;
    }
  }
  return n;
}

std::vector<double> semantic_coherence(const Matrix& phi, const Corpus& corpus, std::size_t top_m) {
  return semantic_coherence(phi, corpus, CooccurrenceIndex(corpus), top_m);
}

std::vector<double> semantic_coherence(const Matrix& phi, const Corpus& corpus, const CooccurrenceIndex& index,
                                       std::size_t top_m) {
  if (phi.cols() != corpus.num_terms()) throw InvalidConfig("phi width does not match corpus vocabulary");
  const auto& terms = corpus.vocabulary().terms();
  std::vector<double> out(phi.rows(), 0.0);
  for (std::size_t k = 0; k < phi.rows(); ++k) {
    const auto top = top_indices(phi.row(k), terms, top_m);
    double c = 0.0;
    for (std::size_t i = 1; i < top.size(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        const auto vi = static_cast<TermId>(top[i]);
        const auto vj = static_cast<TermId>(top[j]);
        const auto dj = index.doc_freq(vj);
        if (dj == 0) throw DegenerateWord(terms[vj]);
        c += std::log((static_cast<double>(index.co_doc_freq(vi, vj)) + 1.0) / static_cast<double>(dj));
      }
    }
    out[k] = c;
  }
  return out;
}

std::vector<double> topic_exclusivity(const Matrix& phi, const std::vector<std::string>& terms, std::size_t top_m,
                                      double weight) {
  const Matrix scores = frex(phi, weight);
  std::vector<double> out(phi.rows(), 0.0);
  for (std::size_t k = 0; k < phi.rows(); ++k) {
    const auto top = top_indices(scores.row(k), terms, top_m);
    double sum = 0.0;
    for (auto v : top) sum += scores(k, v);
    out[k] = top.empty() ? 0.0 : sum / static_cast<double>(top.size());
  }
  return out;
}

std::vector<TopicSummary> summarize(const TopicModel& model, const Corpus& corpus, const SummaryOptions& options,
                                    const std::optional<std::vector<std::vector<std::string>>>& representations) {
  const auto& terms = corpus.vocabulary().terms();
  if (model.phi.cols() != terms.size()) throw InvalidConfig("model vocabulary does not match corpus");
  if (representations && representations->size() != model.phi.rows())
    throw InvalidConfig("one representation per topic required");

  const auto proportions = mean_theta(model);
  const auto coherence = semantic_coherence(model.phi, corpus, options.coherence_m);
  const auto exclusivity = topic_exclusivity(model.phi, terms, options.exclusivity_m, options.exclusivity_weight);

  std::optional<Matrix> frex_scores;
  if (!representations) frex_scores = frex(model.phi, options.frex_weight);

  std::vector<TopicSummary> out(model.phi.rows());
  for (std::size_t k = 0; k < out.size(); ++k) {
    auto& s = out[k];
    s.topic = static_cast<int>(k);
    if (representations) {
      s.top_words = (*representations)[k];
      if (s.top_words.size() > options.top_n) s.top_words.resize(options.top_n);
    } else {
      for (auto v : top_indices(frex_scores->row(k), terms, options.top_n)) s.top_words.push_back(terms[v]);
    }
    s.expected_proportion = proportions[k];
    s.coherence = coherence[k];
    s.exclusivity = exclusivity[k];
  }
  return out;
}

json summaries_to_json(const std::vector<TopicSummary>& summaries) {
  json arr = json::array();
  for (const auto& s : summaries) {
    arr.push_back({{"topic", s.topic},
                   {"top_words", s.top_words},
                   {"expected_proportion", s.expected_proportion},
                   {"coherence", s.coherence},
                   {"exclusivity", s.exclusivity}});
  }
  return arr;
}

std::vector<TopicSummary> summaries_from_json(const json& j) {
  std::vector<TopicSummary> out;
  try {
    for (const auto& item : j) {
      TopicSummary s;
      s.topic = item.at("topic").get<int>();
      s.top_words = item.at("top_words").get<std::vector<std::string>>();
      s.expected_proportion = item.value("expected_proportion", 0.0);
      s.coherence = item.value("coherence", 0.0);
      s.exclusivity = item.value("exclusivity", 0.0);
      out.push_back(std::move(s));
    }
  } catch (const json::exception& e) {
    throw ParseError("summaries: " + std::string(e.what()));
  }
  return out;
}

}  // namespace aggtopics
