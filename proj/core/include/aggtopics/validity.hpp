#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggtopics/corpus.hpp"
#include "aggtopics/errors.hpp"
#include "aggtopics/matrix.hpp"
#include "aggtopics/topic_model.hpp"

namespace aggtopics {

// Rows of X are per-entity topic proportions; labels are group names.
// Classes are the sorted distinct labels; class 0 is the reference class.
class ValidityDesign {
 public:
  ValidityDesign(std::vector<std::string> entity_ids, Matrix x, std::vector<std::string> labels);

  const std::vector<std::string>& entity_ids() const noexcept { return entity_ids_; }
  const Matrix& x() const noexcept { return x_; }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& classes() const noexcept { return classes_; }
  const std::vector<int>& y() const noexcept { return y_; }
  std::size_t rows() const noexcept { return x_.rows(); }
  std::size_t num_features() const noexcept { return x_.cols(); }
  std::size_t num_classes() const noexcept { return classes_.size(); }

  ValidityDesign subset(std::span<const std::size_t> rows) const;

 private:
  std::vector<std::string> entity_ids_;
  Matrix x_;
  std::vector<std::string> labels_;
  std::vector<std::string> classes_;
  std::vector<int> y_;
};

enum class DesignMode {
  aggregated,  // each model document is one entity
  unit_mean,   // entity row = mean of its documents' theta rows
};

DesignMode parse_design_mode(std::string_view name);

// Entity and label come from document metadata in `corpus`, which must be
// the corpus the model was fitted on.
ValidityDesign design_from_model(const TopicModel& model, const Corpus& corpus, const std::string& entity_key,
                                 const std::string& label_key, DesignMode mode);

// Penalized multinomial log-likelihood without intercept; the reference
// class row of B is pinned to zero. Parameters are the free rows 1..S-1 of
// B (S x K), flattened row-major.
class LogitObjective {
 public:
  LogitObjective(const ValidityDesign& design, double ridge);

  std::size_t num_params() const noexcept { return (s_ - 1) * k_; }
  // sum_i log softmax(B x_i)[y_i] - ridge/2 ||B||^2
  double value(std::span<const double> params) const;
  // Returns the value and writes the gradient.
  double value_and_gradient(std::span<const double> params, std::span<double> gradient) const;
  double log_likelihood(std::span<const double> params) const;

 private:
  const ValidityDesign& design_;
  double ridge_;
  std::size_t s_, k_;
};

struct LogitOptions {
  double ridge = 1e-8;
  double gradient_tolerance = 1e-6;
  int max_iterations = 10000;
  int history = 10;
};

struct LogitFit {
  Matrix coefficients;  // S x K, row 0 zero
  std::vector<std::string> classes;
  double log_likelihood = 0.0;
  double aic = 0.0;
  double ridge = 0.0;
  bool converged = false;
  double gradient_norm = 0.0;
  int iterations = 0;
  // Penalized objective at the start and after every accepted step.
  std::vector<double> objective_trace;
};

class NonConvergence : public Error {
 public:
  explicit NonConvergence(LogitFit fit)
      : Error("logit fit did not converge; gradient norm " + std::to_string(fit.gradient_norm)),
        fit_(std::move(fit)) {}
  const LogitFit& fit() const noexcept { return fit_; }

 private:
  LogitFit fit_;
};

// aic = 2 (S-1) K - 2 log_likelihood.
double logit_aic(double log_likelihood, std::size_t num_classes, std::size_t num_features);

// Maximizes the penalized likelihood from B = 0 with L-BFGS and a
// backtracking line search. Throws NonConvergence (carrying the last
// iterate) if the gradient norm stays above tolerance.
LogitFit fit_multinomial_logit(const ValidityDesign& design, const LogitOptions& options = {});

// Argmax of B x; ties go to the lowest class index.
std::size_t predict_class(const Matrix& coefficients, std::span<const double> x);

struct SplitOptions {
  double train_fraction = 0.75;
  std::optional<std::size_t> train_count;  // overrides train_fraction
  std::uint64_t seed = 0;
  LogitOptions logit;

  // 1000 training rows, the remainder for testing.
  static SplitOptions holdout_heavy();
};

struct SplitResult {
  double accuracy = 0.0;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  // Test rows whose class never appears in training (scored incorrect).
  std::size_t n_unseen_class = 0;
  bool converged = false;
};

// Seeded uniform split, fit on train, argmax accuracy on test.
// Throws DegenerateSplit when either side is empty or train has < 2 classes.
SplitResult split_accuracy(const ValidityDesign& design, const SplitOptions& options);

nlohmann::json validity_report_json(const LogitFit& fit, const SplitResult& split);

}  // namespace aggtopics
