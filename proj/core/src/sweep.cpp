#include "aggtopics/sweep.hpp"

#include <chrono>

#include "aggtopics/errors.hpp"
#include "aggtopics/io.hpp"
#include "aggtopics/parallel.hpp"

namespace aggtopics {

namespace {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace

std::vector<SweepRow> sweep(const Corpus& corpus, const SweepOptions& options) {
  if (options.k_list.empty()) throw InvalidConfig("sweep needs at least one K");
  if (options.seeds.empty()) throw InvalidConfig("sweep needs at least one seed");
  if (options.family == ModelFamily::cluster && !options.embeddings)
    throw InvalidConfig("cluster sweep needs embeddings");

  const auto n_seeds = options.seeds.size();
  const auto n_fits = options.k_list.size() * n_seeds;
  std::vector<double> coherence(n_fits), exclusivity(n_fits), seconds(n_fits);
  const CooccurrenceIndex index(corpus);

  parallel_for_index(n_fits, options.jobs, [&](std::size_t i) {
    const int k = options.k_list[i / n_seeds];
    const auto seed = options.seeds[i % n_seeds];
    TopicModel model;
    if (options.family == ModelFamily::gibbs_lda) {
      LdaConfig cfg = options.lda;
      cfg.num_topics = k;
      cfg.seed = seed;
      if (!options.keep_alpha) cfg.alpha = 50.0 / k;
      model = fit_lda(corpus, cfg);
    } else {
      const auto start = std::chrono::steady_clock::now();
      ClusterOptions co = options.cluster;
      co.kmeans.k = static_cast<std::size_t>(k);
      co.kmeans.seed = seed;
      model = to_topic_model(fit_cluster(corpus, *options.embeddings, co), corpus);
      model.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    coherence[i] = mean(semantic_coherence(model.phi, corpus, index, options.summary.coherence_m));
    exclusivity[i] = mean(topic_exclusivity(model.phi, corpus.vocabulary().terms(), options.summary.exclusivity_m,
                                            options.summary.exclusivity_weight));
    seconds[i] = model.fit_seconds;
  });

  std::vector<SweepRow> rows;
  for (std::size_t ki = 0; ki < options.k_list.size(); ++ki) {
    SweepRow row;
    row.k = options.k_list[ki];
    for (std::size_t s = 0; s < n_seeds; ++s) {
      row.mean_coherence += coherence[ki * n_seeds + s];
      row.mean_exclusivity += exclusivity[ki * n_seeds + s];
      row.fit_seconds += seconds[ki * n_seeds + s];
    }
    row.mean_coherence /= static_cast<double>(n_seeds);
    row.mean_exclusivity /= static_cast<double>(n_seeds);
    row.fit_seconds /= static_cast<double>(n_seeds);
    rows.push_back(row);
  }
  return rows;
}

std::string frontier_to_csv(const std::vector<SweepRow>& rows, bool include_timing) {
  std::string out = include_timing ? "K,mean_coherence,mean_exclusivity,fit_seconds\n"
                                   : "K,mean_coherence,mean_exclusivity\n";
  for (const auto& r : rows) {
    out += std::to_string(r.k) + "," + io::format_double(r.mean_coherence) + "," +
           io::format_double(r.mean_exclusivity);
    if (include_timing) out += "," + io::format_double(r.fit_seconds);
    out += "\n";
  }
  return out;
}

}  // namespace aggtopics
