#include <benchmark/benchmark.h>

#include <cmath>
#include <string>
#include <vector>

#include "aggtopics/cluster.hpp"
#include "aggtopics/corpus.hpp"
#include "aggtopics/lda.hpp"
#include "aggtopics/metrics.hpp"
#include "aggtopics/random.hpp"
#include "aggtopics/validity.hpp"

using namespace aggtopics;

namespace {

Corpus random_corpus(std::size_t docs, std::size_t vocab, std::size_t length) {
  Rng rng(1);
  std::vector<RawUnit> units;
  for (std::size_t d = 0; d < docs; ++d) {
    std::string text;
    for (std::size_t i = 0; i < length; ++i) text += "t" + std::to_string(rng.below(vocab)) + " ";
    units.push_back({"d" + std::to_string(d), text, {}});
  }
  return build_corpus(units, CorpusOptions{1, false, {}, {}});
}

Matrix random_stochastic(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (auto& x : m.row(r)) s += (x = -std::log(1.0 - rng.uniform()));
    for (auto& x : m.row(r)) x /= s;
  }
  return m;
}

void BM_GibbsSweep(benchmark::State& state) {
  const auto corpus = random_corpus(1000, 500, 15);
  auto cfg = LdaConfig::defaults(static_cast<int>(state.range(0)));
  GibbsSampler sampler(corpus, cfg);
  sampler.initialize();
  for (auto _ : state) sampler.sweep();
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(sampler.num_tokens()));
}
BENCHMARK(BM_GibbsSweep)->Arg(20)->Arg(60)->Arg(120);

void BM_Frex(benchmark::State& state) {
  const auto phi = random_stochastic(static_cast<std::size_t>(state.range(0)), 5000, 2);
  for (auto _ : state) benchmark::DoNotOptimize(frex(phi, 0.5));
}
BENCHMARK(BM_Frex)->Arg(20)->Arg(120);

void BM_KMeans(benchmark::State& state) {
  Rng rng(3);
  Matrix pts(5000, 16);
  for (auto& x : pts.data()) x = rng.uniform();
  for (auto _ : state) benchmark::DoNotOptimize(kmeans(pts, {static_cast<std::size_t>(state.range(0)), 0, 50, 1e-6}));
}
BENCHMARK(BM_KMeans)->Arg(10)->Arg(50);

void BM_LogitFit(benchmark::State& state) {
  const std::size_t n = 1000, k = 20, s = 10;
  Rng rng(4);
  std::vector<std::string> ids, labels;
  for (std::size_t i = 0; i < n; ++i) {
    ids.push_back("e" + std::to_string(i));
    labels.push_back("s" + std::to_string(rng.below(s)));
  }
  const ValidityDesign design(ids, random_stochastic(n, k, 5), labels);
  LogitOptions o;
  o.ridge = 1e-2;
  for (auto _ : state) benchmark::DoNotOptimize(fit_multinomial_logit(design, o));
}
BENCHMARK(BM_LogitFit)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
