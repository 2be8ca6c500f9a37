#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aggtopics/errors.hpp"
#include "aggtopics/lda.hpp"
#include "aggtopics/metrics.hpp"
#include "aggtopics/random.hpp"
#include "aggtopics/sweep.hpp"
#include "oracles.hpp"

using namespace aggtopics;

namespace {

Matrix to_matrix(const oracle::Table& t) {
  Matrix m(t.size(), t[0].size());
  for (std::size_t r = 0; r < t.size(); ++r)
    for (std::size_t c = 0; c < t[r].size(); ++c) m(r, c) = t[r][c];
  return m;
}

oracle::Table random_phi(Rng& rng, std::size_t k, std::size_t v) {
  oracle::Table t(k, std::vector<double>(v));
  for (auto& row : t) {
    double s = 0.0;
    for (auto& x : row) s += (x = rng.uniform() + 1e-6);
    for (auto& x : row) x /= s;
  }
  return t;
}

Corpus corpus_of(const std::vector<std::string>& texts) {
  std::vector<RawUnit> units;
  for (std::size_t i = 0; i < texts.size(); ++i) units.push_back({"d" + std::to_string(i), texts[i], {}});
  CorpusOptions o;
  o.min_doc_freq = 1;
  o.remove_stopwords = false;
  return build_corpus(units, o);
}

std::vector<std::string> letters(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(std::string(1, static_cast<char>('a' + i)));
  return out;
}

}  // namespace

TEST_CASE("FREX closed-form values") {
  // Topic 0: word 0 is most frequent (ECDF_f = 1) but less exclusive (ECDF_e = 1/2).
  const Matrix phi = to_matrix({{0.6, 0.4}, {0.9, 0.1}});
  const auto f = frex(phi, 0.5);
  CHECK(f(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  // Topic 1: word 0 tops both rankings.
  CHECK(f(1, 0) == 1.0);
  CHECK_THROWS_AS(frex(phi, 1.5), InvalidConfig);
}

TEST_CASE("FREX matches the brute-force oracle") {
  Rng rng(2024);
  for (int rep = 0; rep < 5; ++rep) {
    const auto t = random_phi(rng, 4, 30);
    for (double w : {0.0, 0.3, 0.5, 1.0}) {
      const auto got = frex(to_matrix(t), w);
      const auto want = oracle::frex(t, w);
      for (std::size_t k = 0; k < 4; ++k)
        for (std::size_t v = 0; v < 30; ++v) REQUIRE(std::abs(got(k, v) - want[k][v]) <= 1e-12);
    }
  }
}

TEST_CASE("row ECDF depends only on ranks") {
  Rng rng(5);
  std::vector<double> row(25);
  for (auto& x : row) x = rng.uniform();
  row[3] = row[7];  // a tie shares rank mass
  std::vector<double> transformed;
  for (double x : row) transformed.push_back(std::exp(3.0 * x) + 2.0);
  CHECK(row_ecdf(row) == row_ecdf(transformed));
  const auto e = row_ecdf(row);
  CHECK(e[3] == e[7]);
  CHECK(*std::max_element(e.begin(), e.end()) == 1.0);
  CHECK(*std::min_element(e.begin(), e.end()) > 0.0);
}

TEST_CASE("top_indices breaks ties lexicographically") {
  const std::vector<double> s = {0.5, 0.9, 0.5, 0.5, 0.1};
  const std::vector<std::string> terms = {"pear", "fig", "apple", "kiwi", "date"};
  CHECK(top_indices(s, terms, 3) == std::vector<std::size_t>{1, 2, 3});
  CHECK(top_indices(s, terms, 10).size() == 5);
}

TEST_CASE("coherence, two-word cases") {
  // D(v1) = 10, D(v1, v2) = 9.
  std::vector<std::string> texts(10, "one");
  for (int i = 0; i < 9; ++i) texts[i] += " two";
  texts.push_back("two");
  auto c = corpus_of(texts);
  Matrix phi(1, 2);
  phi(0, c.vocabulary().find("one").value()) = 0.7;
  phi(0, c.vocabulary().find("two").value()) = 0.3;
  CHECK(semantic_coherence(phi, c, 2)[0] == doctest::Approx(0.0));

  // D(v1) = 1 and no co-occurrence.
  c = corpus_of({"solo", "other", "other"});
  phi = Matrix(1, 2);
  phi(0, c.vocabulary().find("solo").value()) = 0.9;
  phi(0, c.vocabulary().find("other").value()) = 0.1;
  CHECK(semantic_coherence(phi, c, 2)[0] == 0.0);
}

TEST_CASE("coherence on a four-document toy corpus") {
  // D(a)=3, D(b)=2, D(a,b)=2, D(a,c)=1, D(b,c)=1.
  const auto c = corpus_of({"a b c", "a b", "a", "c d"});
  const Matrix phi = to_matrix({{0.4, 0.3, 0.2, 0.1}});
  const double want = std::log(3.0 / 3.0) + std::log(2.0 / 3.0) + std::log(2.0 / 2.0);
  CHECK(semantic_coherence(phi, c, 3)[0] == doctest::Approx(want).epsilon(1e-15));
  CHECK(semantic_coherence(phi, c, 3)[0] ==
        doctest::Approx(oracle::coherence({{0.4, 0.3, 0.2, 0.1}}, letters(4),
                                          {{"a", "b", "c"}, {"a", "b"}, {"a"}, {"c", "d"}}, 3)[0]));
}

TEST_CASE("coherence is non-positive when co-occurrence stays below document frequency") {
  const auto c = corpus_of({"a b", "a c", "b c", "a", "b", "c"});
  Rng rng(3);
  for (int rep = 0; rep < 10; ++rep) {
    const auto t = random_phi(rng, 2, 3);
    for (double x : semantic_coherence(to_matrix(t), c, 3)) CHECK(x <= 0.0);
  }
}

TEST_CASE("coherence rejects words absent from the corpus") {
  const Corpus c(Vocabulary({"a", "b", "z"}), {Document{"d0", {{0, 1}, {1, 2}}, {}}}, "toy");
  const Matrix phi = to_matrix({{0.2, 0.3, 0.5}});
  CHECK_THROWS_AS(semantic_coherence(phi, c, 3), DegenerateWord);
  CHECK_NOTHROW(semantic_coherence(to_matrix({{0.5, 0.3, 0.2}}), c, 2));
}

TEST_CASE("exclusivity with one topic has a closed form") {
  const std::size_t v = 12, m = 10;
  Rng rng(8);
  auto t = random_phi(rng, 1, v);
  const auto ex = topic_exclusivity(to_matrix(t), letters(v), m, 0.7);
  // All exclusivities are 1; the i-th ranked word has frequency ECDF (V-i)/V.
  double want = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    want += 1.0 / (0.7 + 0.3 * static_cast<double>(v) / static_cast<double>(v - i));
  CHECK(ex[0] == doctest::Approx(want / m).epsilon(1e-14));
}

TEST_CASE("disjoint topics maximize exclusivity among same-shaped 2x6 models") {
  const std::vector<double> shape = {0.5, 0.3, 0.2, 0.0, 0.0, 0.0};
  const auto terms = letters(6);
  auto mean_ex = [&](const oracle::Table& t) {
    const auto ex = topic_exclusivity(to_matrix(t), terms, 3, 0.7);
    return (ex[0] + ex[1]) / 2.0;
  };
  const oracle::Table disjoint = {shape, {0.0, 0.0, 0.0, 0.5, 0.3, 0.2}};
  const double best = mean_ex(disjoint);
  // Brute force: every placement of the second row's values.
  std::vector<int> pos(6);
  std::iota(pos.begin(), pos.end(), 0);
  double max_other = 0.0;
  do {
    oracle::Table t = {shape, std::vector<double>(6)};
    for (int i = 0; i < 6; ++i) t[1][pos[i]] = shape[i];
    bool valid = true;
    for (int v = 0; v < 6; ++v) valid = valid && (t[0][v] + t[1][v] > 0.0);
    if (!valid) continue;
    max_other = std::max(max_other, mean_ex(t));
    // The oracle agrees with the library on every placement.
    const auto want = oracle::frex(t, 0.7);
    const auto got = frex(to_matrix(t), 0.7);
    for (int k = 0; k < 2; ++k)
      for (int v = 0; v < 6; ++v) REQUIRE(std::abs(got(k, v) - want[k][v]) <= 1e-12);
  } while (std::next_permutation(pos.begin(), pos.end()));
  CHECK(best >= max_other);
  CHECK(best == doctest::Approx(max_other));
}

TEST_CASE("exclusivity is equivariant under topic relabeling") {
  Rng rng(13);
  const auto t = random_phi(rng, 3, 15);
  const auto base = topic_exclusivity(to_matrix(t), letters(15));
  const oracle::Table swapped = {t[2], t[0], t[1]};
  const auto perm = topic_exclusivity(to_matrix(swapped), letters(15));
  CHECK(perm[0] == base[2]);
  CHECK(perm[1] == base[0]);
  CHECK(perm[2] == base[1]);
}

TEST_CASE("summaries") {
  const auto corpus = corpus_of({"apple banana cherry", "apple banana", "dog eel fox", "dog fox", "apple dog"});
  auto cfg = LdaConfig::defaults(2);
  cfg.iterations = 50;
  const auto model = fit_lda(corpus, cfg);
  const auto s = summarize(model, corpus);
  REQUIRE(s.size() == 2);
  const auto mt = mean_theta(model);
  for (const auto& t : s) {
    CHECK(t.top_words.size() == std::min<std::size_t>(10, corpus.num_terms()));
    std::set<std::string> uniq(t.top_words.begin(), t.top_words.end());
    CHECK(uniq.size() == t.top_words.size());
    CHECK(t.expected_proportion == mt[t.topic]);
  }
  const auto back = summaries_from_json(summaries_to_json(s));
  REQUIRE(back.size() == 2);
  CHECK(back[1].top_words == s[1].top_words);
  CHECK(back[1].coherence == s[1].coherence);

  const std::vector<std::vector<std::string>> reps = {{"apple", "banana"}, {"dog"}};
  const auto cs = summarize(model, corpus, {}, reps);
  CHECK(cs[0].top_words == reps[0]);
  CHECK(cs[1].top_words == reps[1]);
}

TEST_CASE("sweep over K") {
  std::vector<std::string> texts;
  Rng rng(4);
  for (int d = 0; d < 60; ++d) {
    std::string t;
    for (int i = 0; i < 10; ++i) t += "w" + std::to_string(rng.below(6) + 6 * (d % 3)) + " ";
    texts.push_back(t);
  }
  const auto corpus = corpus_of(texts);
  SweepOptions o;
  o.k_list = {2};
  o.lda.iterations = 20;
  CHECK(sweep(corpus, o).size() == 1);

  o.k_list = {2, 5, 10};
  o.seeds = {1, 2};
  o.jobs = 2;
  const auto rows = sweep(corpus, o);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.mean_coherence));
    CHECK(std::isfinite(r.mean_exclusivity));
    CHECK(r.fit_seconds > 0.0);
  }
  CHECK(rows[1].k == 5);
  const auto csv = frontier_to_csv(rows, false);
  CHECK(csv.starts_with("K,mean_coherence,mean_exclusivity\n2,"));
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  // Concurrency does not change the metrics.
  o.jobs = 1;
  const auto serial = sweep(corpus, o);
  for (std::size_t i = 0; i < 3; ++i) CHECK(serial[i].mean_coherence == rows[i].mean_coherence);
}
