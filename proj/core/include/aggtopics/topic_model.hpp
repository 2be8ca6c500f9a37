#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggtopics/matrix.hpp"

namespace aggtopics {

enum class ModelFamily { gibbs_lda, cluster };

std::string_view to_string(ModelFamily family);
ModelFamily parse_model_family(std::string_view name);

// K topics over V terms for D documents. Rows of phi (K x V) and theta
// (D x K) are probability distributions.
struct TopicModel {
  int num_topics = 0;
  Matrix phi;
  Matrix theta;
  ModelFamily family = ModelFamily::gibbs_lda;
  double fit_seconds = 0.0;
  std::vector<std::string> doc_ids;
  std::vector<std::string> terms;
  // Fitting configuration, echoed into the archive header.
  nlohmann::json config = nlohmann::json::object();
};

// Unweighted mean of theta rows.
std::vector<double> mean_theta(const TopicModel& model);

enum class MatrixFormat { csv, binary };
MatrixFormat parse_matrix_format(std::string_view name);

// Archive layout:
//   model.json      header {format_version, family, K, V, D, config, matrix_format}
//   phi.csv|bin     K x V, row-major; binary is little-endian float64
//   theta.csv|bin   D x K
//   vocabulary.txt, documents.txt
//   timing.json     {fit_seconds}; wall-clock, kept apart so the rest of
//                   the archive is reproducible byte for byte
void write_model(const std::filesystem::path& dir, const TopicModel& model,
                 MatrixFormat format = MatrixFormat::csv);
TopicModel read_model(const std::filesystem::path& dir);

std::string matrix_to_csv(const Matrix& m);
Matrix matrix_from_csv(std::string_view text);
std::string matrix_to_bytes(const Matrix& m);
Matrix matrix_from_bytes(std::string_view bytes, std::size_t rows, std::size_t cols);

}  // namespace aggtopics
