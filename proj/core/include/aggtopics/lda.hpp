#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggtopics/corpus.hpp"
#include "aggtopics/random.hpp"
#include "aggtopics/topic_model.hpp"

namespace aggtopics {

struct LdaConfig {
  int num_topics = 2;
  double alpha = 25.0;   // symmetric document-topic prior
  double eta = 0.01;     // symmetric topic-word prior
  int iterations = 2000;
  int burn_in = 0;
  std::uint64_t seed = 0;
  // When > 0, estimates average this many states taken every `thin`
  // sweeps, ending at the final sweep. All samples must fall after burn_in.
  int average_samples = 0;
  int thin = 1;

  // alpha = 50 / K, eta = 0.01, 2000 sweeps, no burn-in.
  static LdaConfig defaults(int num_topics);

  // Throws InvalidConfig.
  void validate() const;
  nlohmann::json to_json() const;
  static LdaConfig from_json(const nlohmann::json& j, int num_topics);
};

// Collapsed Gibbs sampler over a fixed corpus. fit_lda drives it; tests use
// it directly to inspect the count tables between sweeps.
class GibbsSampler {
 public:
  GibbsSampler(const Corpus& corpus, const LdaConfig& config);

  // Uniform random initial assignments from the config seed.
  void initialize();
  // Explicit initial assignments, one per token in document-major order.
  void initialize(std::span<const int> assignments);

  // One full pass over every token.
  void sweep();

  // Unnormalized conditional p(z = k | rest) for `token`, with that token
  // removed from the counts: (n_dk + a)(n_kv + e)/(n_k + V e).
  std::vector<double> conditional(std::size_t token);

  std::size_t num_tokens() const noexcept { return words_.size(); }
  int num_topics() const noexcept { return k_; }
  std::span<const int> assignments() const noexcept { return z_; }
  std::span<const std::uint32_t> token_words() const noexcept { return words_; }
  std::span<const std::uint32_t> token_docs() const noexcept { return docs_; }

  // n_dk (D x K), n_kv (K x V), n_k, n_d.
  std::span<const std::int64_t> doc_topic() const noexcept { return n_dk_; }
  std::span<const std::int64_t> topic_word() const noexcept { return n_kv_; }
  std::span<const std::int64_t> topic_totals() const noexcept { return n_k_; }
  std::span<const std::int64_t> doc_totals() const noexcept { return n_d_; }

  // Point estimates from the current counts.
  Matrix estimate_theta() const;
  Matrix estimate_phi() const;

 private:
  std::size_t d_, v_;
  int k_;
  double alpha_, eta_;
  Rng rng_;
  std::vector<std::uint32_t> words_;
  std::vector<std::uint32_t> docs_;
  std::vector<int> z_;
  std::vector<std::int64_t> n_dk_, n_kv_, n_k_, n_d_;
  std::vector<double> scratch_;

  void add(std::size_t token, int topic, int delta);
};

using SweepObserver = std::function<void(int sweep, const GibbsSampler&)>;

// Fits LDA by collapsed Gibbs sampling. Deterministic given (corpus, config).
TopicModel fit_lda(const Corpus& corpus, const LdaConfig& config, const SweepObserver& observer = {});

}  // namespace aggtopics
