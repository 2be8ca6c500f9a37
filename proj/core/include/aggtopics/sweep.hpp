#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aggtopics/cluster.hpp"
#include "aggtopics/corpus.hpp"
#include "aggtopics/lda.hpp"
#include "aggtopics/metrics.hpp"
#include "aggtopics/topic_model.hpp"

namespace aggtopics {

struct SweepOptions {
  ModelFamily family = ModelFamily::gibbs_lda;
  std::vector<int> k_list;
  std::vector<std::uint64_t> seeds = {0};
  // K and seed are overwritten per fit; alpha is reset to 50/K unless
  // keep_alpha is set.
  LdaConfig lda = LdaConfig::defaults(2);
  bool keep_alpha = false;
  ClusterOptions cluster;
  const EmbeddingMatrix* embeddings = nullptr;  // required for cluster
  SummaryOptions summary;
  int jobs = 1;
};

// Averages over seeds.
struct SweepRow {
  int k = 0;
  double mean_coherence = 0.0;
  double mean_exclusivity = 0.0;
  double fit_seconds = 0.0;
};

// One row per K, in k_list order. Fits run concurrently up to `jobs`.
std::vector<SweepRow> sweep(const Corpus& corpus, const SweepOptions& options);

// Header: K,mean_coherence,mean_exclusivity[,fit_seconds]
std::string frontier_to_csv(const std::vector<SweepRow>& rows, bool include_timing = true);

}  // namespace aggtopics
