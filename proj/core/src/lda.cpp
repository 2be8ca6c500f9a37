#include "aggtopics/lda.hpp"

#include <chrono>

#include "aggtopics/errors.hpp"

namespace aggtopics {

using nlohmann::json;

LdaConfig LdaConfig::defaults(int num_topics) {
  LdaConfig c;
  c.num_topics = num_topics;
  c.alpha = num_topics > 0 ? 50.0 / num_topics : 1.0;
  return c;
}

void LdaConfig::validate() const {
  if (num_topics < 1) throw InvalidConfig("K must be >= 1");
  if (!(alpha > 0.0)) throw InvalidConfig("alpha must be > 0");
  if (!(eta > 0.0)) throw InvalidConfig("eta must be > 0");
  if (burn_in < 0) throw InvalidConfig("burn_in must be >= 0");
  if (iterations <= burn_in) throw InvalidConfig("iterations must exceed burn_in");
  if (average_samples < 0 || thin < 1) throw InvalidConfig("average_samples >= 0 and thin >= 1 required");
  if (average_samples > 0 && iterations - 1 - (average_samples - 1) * thin < burn_in)
    throw InvalidConfig("averaged samples reach into burn-in");
}

json LdaConfig::to_json() const {
  return {{"K", num_topics},          {"alpha", alpha}, {"eta", eta},
          {"iterations", iterations}, {"burn_in", burn_in}, {"seed", seed},
          {"average_samples", average_samples}, {"thin", thin}};
}

LdaConfig LdaConfig::from_json(const json& j, int num_topics) {
  LdaConfig c = defaults(num_topics);
  if (j.contains("alpha") && !j["alpha"].is_null()) c.alpha = j["alpha"].get<double>();
  c.eta = j.value("eta", c.eta);
  c.iterations = j.value("iterations", c.iterations);
  c.burn_in = j.value("burn_in", c.burn_in);
  c.seed = j.value("seed", c.seed);
  c.average_samples = j.value("average_samples", c.average_samples);
  c.thin = j.value("thin", c.thin);
  return c;
}

GibbsSampler::GibbsSampler(const Corpus& corpus, const LdaConfig& config)
    : d_(corpus.num_documents()),
      v_(corpus.num_terms()),
      k_(config.num_topics),
      alpha_(config.alpha),
      eta_(config.eta),
      rng_(config.seed) {
  config.validate();
  if (d_ == 0) throw InvalidConfig("corpus is empty");
  for (std::size_t d = 0; d < d_; ++d) {
    for (const auto& tc : corpus.documents()[d].counts) {
      for (std::uint32_t i = 0; i < tc.count; ++i) {
        words_.push_back(tc.term);
        docs_.push_back(static_cast<std::uint32_t>(d));
      }
    }
  }
  z_.assign(words_.size(), 0);
  n_dk_.assign(d_ * k_, 0);
  n_kv_.assign(static_cast<std::size_t>(k_) * v_, 0);
  n_k_.assign(k_, 0);
  n_d_.assign(d_, 0);
  scratch_.assign(k_, 0.0);
}

void GibbsSampler::add(std::size_t token, int topic, int delta) {
  const auto d = docs_[token];
  const auto w = words_[token];
  n_dk_[d * k_ + topic] += delta;
  n_kv_[static_cast<std::size_t>(topic) * v_ + w] += delta;
  n_k_[topic] += delta;
}

void GibbsSampler::initialize() {
  std::vector<int> init(words_.size());
  for (auto& z : init) z = static_cast<int>(rng_.below(static_cast<std::uint64_t>(k_)));
  initialize(init);
}

void GibbsSampler::initialize(std::span<const int> assignments) {
  if (assignments.size() != words_.size()) throw InvalidConfig("one initial assignment per token required");
  std::fill(n_dk_.begin(), n_dk_.end(), 0);
  std::fill(n_kv_.begin(), n_kv_.end(), 0);
  std::fill(n_k_.begin(), n_k_.end(), 0);
  std::fill(n_d_.begin(), n_d_.end(), 0);
  for (std::size_t t = 0; t < words_.size(); ++t) {
    if (assignments[t] < 0 || assignments[t] >= k_) throw InvalidConfig("initial assignment out of range");
    z_[t] = assignments[t];
    add(t, z_[t], +1);
    ++n_d_[docs_[t]];
  }
}

std::vector<double> GibbsSampler::conditional(std::size_t token) {
  const int old = z_[token];
  add(token, old, -1);
  const auto d = docs_[token];
  const auto w = words_[token];
  const double v_eta = static_cast<double>(v_) * eta_;
  std::vector<double> p(k_);
  for (int k = 0; k < k_; ++k) {
    p[k] = (static_cast<double>(n_dk_[d * k_ + k]) + alpha_) *
           (static_cast<double>(n_kv_[static_cast<std::size_t>(k) * v_ + w]) + eta_) /
           (static_cast<double>(n_k_[k]) + v_eta);
  }
  add(token, old, +1);
  return p;
}

void GibbsSampler::sweep() {
  const double v_eta = static_cast<double>(v_) * eta_;
  for (std::size_t t = 0; t < words_.size(); ++t) {
    add(t, z_[t], -1);
    const auto d = docs_[t];
    const auto w = words_[t];
    const std::int64_t* ndk = &n_dk_[d * k_];
    double total = 0.0;
    for (int k = 0; k < k_; ++k) {
      total += (static_cast<double>(ndk[k]) + alpha_) *
               (static_cast<double>(n_kv_[static_cast<std::size_t>(k) * v_ + w]) + eta_) /
               (static_cast<double>(n_k_[k]) + v_eta);
      scratch_[k] = total;
    }
    const double u = rng_.uniform() * total;
    int topic = k_ - 1;
    for (int k = 0; k < k_; ++k) {
      if (u < scratch_[k]) {
        topic = k;
        break;
      }
    }
    z_[t] = topic;
    add(t, topic, +1);
  }
}

Matrix GibbsSampler::estimate_theta() const {
  Matrix theta(d_, k_);
  const double k_alpha = k_ * alpha_;
  for (std::size_t d = 0; d < d_; ++d) {
    const double denom = static_cast<double>(n_d_[d]) + k_alpha;
    for (int k = 0; k < k_; ++k) theta(d, k) = (static_cast<double>(n_dk_[d * k_ + k]) + alpha_) / denom;
  }
  return theta;
}

Matrix GibbsSampler::estimate_phi() const {
  Matrix phi(k_, v_);
  const double v_eta = static_cast<double>(v_) * eta_;
  for (int k = 0; k < k_; ++k) {
    const double denom = static_cast<double>(n_k_[k]) + v_eta;
    for (std::size_t v = 0; v < v_; ++v)
      phi(k, v) = (static_cast<double>(n_kv_[static_cast<std::size_t>(k) * v_ + v]) + eta_) / denom;
  }
  return phi;
}

namespace {

void accumulate(Matrix& into, const Matrix& add) {
  for (std::size_t i = 0; i < into.data().size(); ++i) into.data()[i] += add.data()[i];
}

void scale(Matrix& m, double factor) {
  for (auto& x : m.data()) x *= factor;
}

}  // namespace

TopicModel fit_lda(const Corpus& corpus, const LdaConfig& config, const SweepObserver& observer) {
  const auto start = std::chrono::steady_clock::now();
  GibbsSampler sampler(corpus, config);
  sampler.initialize();

  // Sweeps whose state enters the estimate (last sweep always included).
  auto is_sample = [&](int sweep) {
    if (config.average_samples == 0) return sweep == config.iterations - 1;
    const int back = config.iterations - 1 - sweep;
    return back % config.thin == 0 && back / config.thin < config.average_samples;
  };

  TopicModel model;
  model.num_topics = config.num_topics;
  model.family = ModelFamily::gibbs_lda;
  model.phi = Matrix(config.num_topics, corpus.num_terms());
  model.theta = Matrix(corpus.num_documents(), config.num_topics);
  int samples = 0;
  for (int it = 0; it < config.iterations; ++it) {
    sampler.sweep();
    if (observer) observer(it, sampler);
    if (is_sample(it)) {
      accumulate(model.phi, sampler.estimate_phi());
      accumulate(model.theta, sampler.estimate_theta());
      ++samples;
    }
  }
  if (samples > 1) {
    scale(model.phi, 1.0 / samples);
    scale(model.theta, 1.0 / samples);
  }

  model.config = config.to_json();
  model.terms = corpus.vocabulary().terms();
  model.doc_ids.reserve(corpus.num_documents());
  for (const auto& d : corpus.documents()) model.doc_ids.push_back(d.id);
  model.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return model;
}

}  // namespace aggtopics
