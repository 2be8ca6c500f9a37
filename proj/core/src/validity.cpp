#include "aggtopics/validity.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "aggtopics/random.hpp"

namespace aggtopics {

using nlohmann::json;

ValidityDesign::ValidityDesign(std::vector<std::string> entity_ids, Matrix x, std::vector<std::string> labels)
    : entity_ids_(std::move(entity_ids)), x_(std::move(x)), labels_(std::move(labels)) {
  if (entity_ids_.size() != x_.rows() || labels_.size() != x_.rows())
    throw InvalidConfig("design ids, rows and labels must align");
  for (std::size_t i = 0; i < x_.rows(); ++i) {
    double sum = 0.0;
    for (double v : x_.row(i)) sum += v;
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidConfig("design row '" + entity_ids_[i] + "' does not sum to 1");
  }
  std::set<std::string> distinct(labels_.begin(), labels_.end());
  classes_.assign(distinct.begin(), distinct.end());
  y_.reserve(labels_.size());
  for (const auto& l : labels_)
    y_.push_back(static_cast<int>(std::lower_bound(classes_.begin(), classes_.end(), l) - classes_.begin()));
}

ValidityDesign ValidityDesign::subset(std::span<const std::size_t> rows) const {
  std::vector<std::string> ids, labels;
  Matrix x(rows.size(), x_.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    ids.push_back(entity_ids_.at(rows[r]));
    labels.push_back(labels_.at(rows[r]));
    std::copy(x_.row(rows[r]).begin(), x_.row(rows[r]).end(), x.row(r).begin());
  }
  return ValidityDesign(std::move(ids), std::move(x), std::move(labels));
}

DesignMode parse_design_mode(std::string_view name) {
  if (name == "aggregated") return DesignMode::aggregated;
  if (name == "unit_mean" || name == "unit-mean" || name == "unit") return DesignMode::unit_mean;
  throw InvalidConfig("unknown design mode '" + std::string(name) + "'");
}

namespace {

const std::string& single_value(const Document& doc, const std::string& key, bool entity) {
  auto it = doc.meta.find(key);
  if (it == doc.meta.end() || it->second.size() != 1) {
    if (entity) throw MissingEntityKey(key, doc.id);
    throw MissingGroupKey(key, doc.id);
  }
  return it->second.front();
}

}  // namespace

ValidityDesign design_from_model(const TopicModel& model, const Corpus& corpus, const std::string& entity_key,
                                 const std::string& label_key, DesignMode mode) {
  if (model.theta.rows() != corpus.num_documents()) throw InvalidConfig("model and corpus disagree on documents");
  const auto k = model.theta.cols();

  struct Acc {
    std::vector<double> sum;
    std::size_t n = 0;
    std::string label;
  };
  std::map<std::string, Acc> entities;
  for (std::size_t d = 0; d < corpus.num_documents(); ++d) {
    const auto& doc = corpus.documents()[d];
    if (!model.doc_ids.empty() && model.doc_ids[d] != doc.id)
      throw InvalidConfig("model document order differs from corpus at '" + doc.id + "'");
    const auto& entity = single_value(doc, entity_key, true);
    const auto& label = single_value(doc, label_key, false);
    auto& acc = entities[entity];
    if (acc.n == 0) {
      acc.sum.assign(k, 0.0);
      acc.label = label;
    } else {
      if (mode == DesignMode::aggregated)
        throw InvalidConfig("entity '" + entity + "' spans several documents in aggregated mode");
      if (acc.label != label) throw InvalidConfig("entity '" + entity + "' has conflicting labels");
    }
    auto row = model.theta.row(d);
    for (std::size_t j = 0; j < k; ++j) acc.sum[j] += row[j];
    ++acc.n;
  }

  std::vector<std::string> ids, labels;
  Matrix x(entities.size(), k);
  std::size_t r = 0;
  for (auto& [entity, acc] : entities) {
    for (std::size_t j = 0; j < k; ++j) x(r, j) = acc.sum[j] / static_cast<double>(acc.n);
    ids.push_back(entity);
    labels.push_back(acc.label);
    ++r;
  }
  return ValidityDesign(std::move(ids), std::move(x), std::move(labels));
}

// ---------------------------------------------------------------------------
// Objective

LogitObjective::LogitObjective(const ValidityDesign& design, double ridge)
    : design_(design), ridge_(ridge), s_(design.num_classes()), k_(design.num_features()) {
  if (s_ < 2) throw InvalidConfig("at least two classes required");
  if (ridge < 0.0) throw InvalidConfig("ridge must be >= 0");
}

double LogitObjective::log_likelihood(std::span<const double> params) const {
  std::vector<double> scratch(params.size());
  const double penalized = value_and_gradient(params, scratch);
  double sq = 0.0;
  for (double p : params) sq += p * p;
  return penalized + 0.5 * ridge_ * sq;
}

double LogitObjective::value(std::span<const double> params) const {
  std::vector<double> scratch(params.size());
  return value_and_gradient(params, scratch);
}

double LogitObjective::value_and_gradient(std::span<const double> params, std::span<double> gradient) const {
  std::fill(gradient.begin(), gradient.end(), 0.0);
  const auto& x = design_.x();
  const auto& y = design_.y();
  std::vector<double> scores(s_);
  double ll = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto xi = x.row(i);
    scores[0] = 0.0;
    for (std::size_t c = 1; c < s_; ++c) {
      const double* b = params.data() + (c - 1) * k_;
      double s = 0.0;
      for (std::size_t j = 0; j < k_; ++j) s += b[j] * xi[j];
      scores[c] = s;
    }
    const double mx = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double s : scores) z += std::exp(s - mx);
    const double lse = mx + std::log(z);
    ll += scores[y[i]] - lse;
    for (std::size_t c = 1; c < s_; ++c) {
      const double resid = (static_cast<std::size_t>(y[i]) == c ? 1.0 : 0.0) - std::exp(scores[c] - lse);
      double* g = gradient.data() + (c - 1) * k_;
      for (std::size_t j = 0; j < k_; ++j) g[j] += resid * xi[j];
    }
  }
  double sq = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    sq += params[p] * params[p];
    gradient[p] -= ridge_ * params[p];
  }
  return ll - 0.5 * ridge_ * sq;
}

double logit_aic(double log_likelihood, std::size_t num_classes, std::size_t num_features) {
  return 2.0 * static_cast<double>((num_classes - 1) * num_features) - 2.0 * log_likelihood;
}

// ---------------------------------------------------------------------------
// Optimizer

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

struct Correction {
  std::vector<double> s, y;
  double rho;
};

// Two-loop recursion: returns -H g.
std::vector<double> lbfgs_direction(const std::deque<Correction>& history, std::span<const double> g) {
  std::vector<double> q(g.begin(), g.end());
  std::vector<double> alpha(history.size());
  for (std::size_t i = history.size(); i-- > 0;) {
    alpha[i] = history[i].rho * dot(history[i].s, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] -= alpha[i] * history[i].y[j];
  }
  if (!history.empty()) {
    const auto& last = history.back();
    const double gamma = dot(last.s, last.y) / dot(last.y, last.y);
    for (auto& v : q) v *= gamma;
  } else {
    const double gn = norm(g);
    if (gn > 1.0)
      for (auto& v : q) v /= gn;
  }
  for (std::size_t i = 0; i < history.size(); ++i) {
    const double beta = history[i].rho * dot(history[i].y, q);
    for (std::size_t j = 0; j < q.size(); ++j) q[j] += history[i].s[j] * (alpha[i] - beta);
  }
  for (auto& v : q) v = -v;
  return q;
}

}  // namespace

LogitFit fit_multinomial_logit(const ValidityDesign& design, const LogitOptions& options) {
  LogitObjective objective(design, options.ridge);
  const auto n = objective.num_params();

  // Minimize f = -objective.
  std::vector<double> x(n, 0.0), g(n), x_new(n), g_new(n);
  double f = -objective.value_and_gradient(x, g);
  for (auto& v : g) v = -v;

  std::deque<Correction> history;
  LogitFit fit;
  fit.ridge = options.ridge;
  fit.classes = design.classes();
  fit.objective_trace.push_back(-f);
  int iter = 0;
  for (; iter < options.max_iterations; ++iter) {
    if (norm(g) < options.gradient_tolerance) break;
    auto d = lbfgs_direction(history, g);
    double slope = dot(g, d);
    if (slope >= 0.0) {
      history.clear();
      d = lbfgs_direction(history, g);
      slope = dot(g, d);
    }

    bool accepted = false;
    double f_new = 0.0;
    for (double t = 1.0; t > 1e-20; t *= 0.5) {
      for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] + t * d[i];
      f_new = -objective.value_and_gradient(x_new, g_new);
      for (auto& v : g_new) v = -v;
      // Armijo, or a non-increasing step that shrinks the gradient when the
      // decrease is below floating-point resolution of f.
      if (f_new <= f + 1e-4 * t * slope || (f_new <= f && norm(g_new) < norm(g))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (history.empty()) break;
      history.clear();
      continue;
    }

    Correction c;
    c.s.resize(n);
    c.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      c.s[i] = x_new[i] - x[i];
      c.y[i] = g_new[i] - g[i];
    }
    const double sy = dot(c.s, c.y);
    if (sy > 1e-16 * norm(c.s) * norm(c.y)) {
      c.rho = 1.0 / sy;
      history.push_back(std::move(c));
      if (history.size() > static_cast<std::size_t>(options.history)) history.pop_front();
    }
    x.swap(x_new);
    g.swap(g_new);
    f = f_new;
    fit.objective_trace.push_back(-f);
  }

  fit.iterations = iter;
  fit.gradient_norm = norm(g);
  fit.converged = fit.gradient_norm < options.gradient_tolerance;
  fit.coefficients = Matrix(design.num_classes(), design.num_features());
  for (std::size_t c = 1; c < design.num_classes(); ++c)
    for (std::size_t j = 0; j < design.num_features(); ++j)
      fit.coefficients(c, j) = x[(c - 1) * design.num_features() + j];
  fit.log_likelihood = objective.log_likelihood(x);
  fit.aic = logit_aic(fit.log_likelihood, design.num_classes(), design.num_features());
  if (!fit.converged) throw NonConvergence(std::move(fit));
  return fit;
}

std::size_t predict_class(const Matrix& coefficients, std::span<const double> x) {
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < coefficients.rows(); ++c) {
    const double s = dot(coefficients.row(c), x);
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return best;
}

SplitOptions SplitOptions::holdout_heavy() {
  SplitOptions o;
  o.train_count = 1000;
  return o;
}

SplitResult split_accuracy(const ValidityDesign& design, const SplitOptions& options) {
  const auto n = design.rows();
  std::size_t n_train = options.train_count
                            ? *options.train_count
                            : static_cast<std::size_t>(std::llround(options.train_fraction * static_cast<double>(n)));
  if (n_train == 0 || n_train >= n) throw DegenerateSplit("split leaves an empty train or test set");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(options.seed);
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  std::vector<std::size_t> train(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  std::vector<std::size_t> test(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());

  const auto train_design = design.subset(train);
  if (train_design.num_classes() < 2) throw DegenerateSplit("training split has fewer than two classes");

  SplitResult result;
  result.n_train = train.size();
  result.n_test = test.size();
  LogitFit fit;
  try {
    fit = fit_multinomial_logit(train_design, options.logit);
  } catch (const NonConvergence& e) {
    fit = e.fit();
  }
  result.converged = fit.converged;

  std::size_t correct = 0;
  for (auto row : test) {
    const auto& label = design.labels()[row];
    if (!std::binary_search(fit.classes.begin(), fit.classes.end(), label)) {
      ++result.n_unseen_class;
      continue;
    }
    if (fit.classes[predict_class(fit.coefficients, design.x().row(row))] == label) ++correct;
  }
  result.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  return result;
}

json validity_report_json(const LogitFit& fit, const SplitResult& split) {
  return {{"aic", fit.aic},
          {"log_likelihood", fit.log_likelihood},
          {"accuracy", split.accuracy},
          {"n_train", split.n_train},
          {"n_test", split.n_test},
          {"n_unseen_class", split.n_unseen_class},
          {"ridge", fit.ridge},
          {"aic_penalized", fit.ridge > 0.0},
          {"converged", fit.converged && split.converged},
          {"gradient_norm", fit.gradient_norm},
          {"iterations", fit.iterations}};
}

}  // namespace aggtopics
