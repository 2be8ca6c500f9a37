#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "aggtopics/aggregate.hpp"
#include "aggtopics/cluster.hpp"
#include "aggtopics/labeler.hpp"
#include "aggtopics/metrics.hpp"
#include "aggtopics/permute.hpp"
#include "aggtopics/stages.hpp"
#include "aggtopics/topic_model.hpp"
#include "aggtopics/validity.hpp"

namespace aggtopics {

struct DictionarySource {
  // Either a serialized dictionary...
  std::optional<std::filesystem::path> path;
  // ...or one built from the identity corpus with these options.
  DictionaryOptions build;
};

struct ValiditySettings {
  std::string entity_key;
  std::string label_key;
  double ridge = 1e-8;
  double train_fraction = 0.75;
  std::optional<std::size_t> train_count;
};

struct PermutationSettings {
  std::vector<std::string> definitions;  // by_key definitions to test
  int replicates = 10;
  CiMethod ci = CiMethod::normal;
};

struct ClusterSettings {
  std::filesystem::path embeddings;
  std::size_t pca_components = 0;
  int max_iters = 300;
  double tol = 1e-6;
  std::size_t top_n = 10;
  PreprocessOptions preprocess{1, false, false};
};

struct ExperimentConfig {
  std::filesystem::path corpus_path;
  std::filesystem::path output_dir;
  std::uint64_t base_seed = 0;
  std::vector<DocumentDefinition> definitions;
  std::vector<ModelFamily> families = {ModelFamily::gibbs_lda};
  std::vector<int> k_list;
  nlohmann::json lda = nlohmann::json::object();  // LdaConfig overrides
  PreprocessOptions preprocess;
  SummaryOptions summary;
  std::optional<ClusterSettings> cluster;
  DictionarySource dictionary;
  std::optional<ValiditySettings> validity;
  std::optional<PermutationSettings> permutation;
  MatrixFormat matrix_format = MatrixFormat::csv;
  int jobs = 1;
  bool fail_fast = false;

  // Throws InvalidConfig.
  void validate() const;
  // Relative paths resolve against `base_dir`.
  static ExperimentConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
  nlohmann::json to_json() const;
};

struct CellRecord {
  std::string definition;
  ModelFamily family = ModelFamily::gibbs_lda;
  int k = 0;
  std::string directory;  // relative to the output directory
  bool ok = false;
  std::string error;
  std::size_t n_related = 0;
  double mass = 0.0;
  double mean_coherence = 0.0;
  double mean_exclusivity = 0.0;
  LengthStats lengths;
  std::optional<nlohmann::json> validity;
  std::optional<std::string> validity_error;
  std::optional<PermutationResult> permutation;
  std::optional<std::string> permutation_error;
  double fit_seconds = 0.0;  // wall clock; written to timing files only
};

struct ExperimentReport {
  std::vector<std::string> definitions;
  std::vector<ModelFamily> families;
  std::vector<int> k_list;
  std::vector<CellRecord> cells;
  nlohmann::json config;
  nlohmann::json dictionary_summary;

  nlohmann::json to_json() const;  // excludes timing
  static ExperimentReport from_json(const nlohmann::json& j);
};

using CellLogger = std::function<void(std::string_view cell, std::string_view message)>;

// Runs every (definition, family, K) cell and persists model archives,
// per-cell summaries, report.json, tables.csv and tables/*.csv.
// Everything except timing.json and tables/timing.csv is reproducible byte
// for byte from the config.
ExperimentReport run_pipeline(const ExperimentConfig& config, const CellLogger& log = {});

// tables/counts.csv, validity.csv, frontier.csv, permutation.csv, timing.csv
// and the long-format tables.csv.
void emit_tables(const ExperimentReport& report, const std::filesystem::path& output_dir);

std::string counts_table_csv(const ExperimentReport& report);
std::string validity_table_csv(const ExperimentReport& report);
std::string frontier_table_csv(const ExperimentReport& report);
std::string permutation_table_csv(const ExperimentReport& report);
std::string timing_table_csv(const ExperimentReport& report);
std::string cells_table_csv(const ExperimentReport& report);

}  // namespace aggtopics
