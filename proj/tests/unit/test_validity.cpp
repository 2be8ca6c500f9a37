#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "aggtopics/corpus.hpp"
#include "aggtopics/errors.hpp"
#include "aggtopics/random.hpp"
#include "aggtopics/validity.hpp"

using namespace aggtopics;

namespace {

// Noisy 3-class design: class c has most mass on feature c.
ValidityDesign noisy_design(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, 3);
  std::vector<std::string> labels, ids;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = rng.below(3);
    double total = 0.0;
    for (std::size_t k = 0; k < 3; ++k) {
      x(i, k) = rng.uniform() + (k == c ? 0.8 : 0.0);
      total += x(i, k);
    }
    for (std::size_t k = 0; k < 3; ++k) x(i, k) /= total;
    labels.push_back("c" + std::to_string(c));
    ids.push_back("e" + std::to_string(i));
  }
  return {ids, x, labels};
}

// Each class owns one feature exactly.
ValidityDesign separable_design(std::size_t per_class) {
  Matrix x(3 * per_class, 3);
  std::vector<std::string> labels, ids;
  for (std::size_t i = 0; i < 3 * per_class; ++i) {
    x(i, i % 3) = 1.0;
    labels.push_back(std::string(1, static_cast<char>('a' + i % 3)));
    ids.push_back("e" + std::to_string(i));
  }
  return {ids, x, labels};
}

}  // namespace

TEST_CASE("design bookkeeping") {
  const auto d = separable_design(2);
  CHECK(d.classes() == std::vector<std::string>{"a", "b", "c"});
  CHECK(d.y() == std::vector<int>{0, 1, 2, 0, 1, 2});
  const std::vector<std::size_t> rows = {1, 4};
  const auto s = d.subset(rows);
  CHECK(s.classes() == std::vector<std::string>{"b"});
  CHECK(s.entity_ids() == std::vector<std::string>{"e1", "e4"});
}

TEST_CASE("analytic gradient matches central differences") {
  const auto d = noisy_design(40, 3);
  const LogitObjective f(d, 0.1);
  Rng rng(4);
  std::vector<double> p(f.num_params()), g(f.num_params());
  for (auto& v : p) v = 2.0 * rng.uniform() - 1.0;
  f.value_and_gradient(p, g);
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double h = 1e-6;
    auto up = p, down = p;
    up[i] += h;
    down[i] -= h;
    const double numeric = (f.value(up) - f.value(down)) / (2.0 * h);
    CHECK(g[i] == doctest::Approx(numeric).epsilon(1e-6));
  }
}

TEST_CASE("zero coefficients give the uniform likelihood") {
  const auto d = noisy_design(25, 5);
  const LogitObjective f(d, 1e-8);
  const std::vector<double> zero(f.num_params(), 0.0);
  CHECK(f.log_likelihood(zero) == doctest::Approx(25.0 * std::log(1.0 / 3.0)).epsilon(1e-14));
}

TEST_CASE("AIC arithmetic") {
  CHECK(logit_aic(-100.0, 51, 120) == 12200.0);
  CHECK(logit_aic(-10.0, 2, 3) == 26.0);
}

TEST_CASE("fit improves on zero and the trace never decreases") {
  const auto d = noisy_design(120, 6);
  const auto fit = fit_multinomial_logit(d);
  CHECK(fit.converged);
  CHECK(fit.log_likelihood > 120.0 * std::log(1.0 / 3.0));
  CHECK(fit.aic == doctest::Approx(logit_aic(fit.log_likelihood, 3, 3)));
  for (double v : fit.coefficients.row(0)) CHECK(v == 0.0);
  REQUIRE(fit.objective_trace.size() >= 2);
  for (std::size_t i = 1; i < fit.objective_trace.size(); ++i)
    CHECK(fit.objective_trace[i] >= fit.objective_trace[i - 1]);
}

TEST_CASE("reference-class gauge does not change predictions") {
  const auto d = noisy_design(90, 8);
  const auto fit = fit_multinomial_logit(d);
  // Adding the same vector to every row of B leaves softmax unchanged.
  Matrix shifted = fit.coefficients;
  for (std::size_t s = 0; s < shifted.rows(); ++s)
    for (std::size_t k = 0; k < shifted.cols(); ++k) shifted(s, k) += 0.37 * static_cast<double>(k + 1);
  for (std::size_t i = 0; i < d.rows(); ++i)
    CHECK(predict_class(fit.coefficients, d.x().row(i)) == predict_class(shifted, d.x().row(i)));
}

TEST_CASE("separable classes are predicted exactly") {
  const auto d = separable_design(20);
  SplitOptions o;
  o.logit.ridge = 1e-2;
  o.seed = 11;
  const auto r = split_accuracy(d, o);
  CHECK(r.accuracy == 1.0);
  CHECK(r.n_train == 45);
  CHECK(r.n_test == 15);
  CHECK(r.converged);
}

TEST_CASE("split is seeded and sized as requested") {
  const auto d = noisy_design(60, 9);
  SplitOptions o;
  o.seed = 5;
  const auto a = split_accuracy(d, o), b = split_accuracy(d, o);
  CHECK(a.accuracy == b.accuracy);
  o.train_count = 50;
  const auto c = split_accuracy(d, o);
  CHECK(c.n_train == 50);
  CHECK(c.n_test == 10);
  CHECK(SplitOptions::holdout_heavy().train_count == 1000u);

  o.train_count = 60;
  CHECK_THROWS_AS(split_accuracy(d, o), DegenerateSplit);
  o.train_count = 0;
  CHECK_THROWS_AS(split_accuracy(d, o), DegenerateSplit);

  Matrix x(4, 2, 0.5);
  const ValidityDesign one({"a", "b", "c", "d"}, x, {"s", "s", "s", "s"});
  SplitOptions p;
  CHECK_THROWS_AS(split_accuracy(one, p), DegenerateSplit);
}

TEST_CASE("design from a fitted model") {
  std::vector<RawUnit> units = {{"u1", "x y", {{"state", {"TX"}}, {"user", {"p"}}}},
                                {"u2", "x z", {{"state", {"TX"}}, {"user", {"p"}}}},
                                {"u3", "y z", {{"state", {"OR"}}, {"user", {"q"}}}}};
  const auto corpus = build_corpus(units, CorpusOptions{1, false, {}, {}});
  TopicModel m;
  m.num_topics = 2;
  m.theta = Matrix(3, 2);
  m.theta(0, 0) = 1.0;
  m.theta(1, 0) = 0.5;
  m.theta(1, 1) = 0.5;
  m.theta(2, 1) = 1.0;
  m.doc_ids = {"u1", "u2", "u3"};
  const auto mean = design_from_model(m, corpus, "user", "state", DesignMode::unit_mean);
  REQUIRE(mean.entity_ids() == std::vector<std::string>{"p", "q"});
  CHECK(mean.x()(0, 0) == 0.75);
  CHECK(mean.x()(0, 1) == 0.25);
  CHECK(mean.labels() == std::vector<std::string>{"TX", "OR"});
  CHECK(parse_design_mode("unit_mean") == DesignMode::unit_mean);
  CHECK_THROWS_AS(design_from_model(m, corpus, "missing", "state", DesignMode::unit_mean), MissingEntityKey);
}
