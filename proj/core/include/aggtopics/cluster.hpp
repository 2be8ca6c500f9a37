#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "aggtopics/corpus.hpp"
#include "aggtopics/matrix.hpp"
#include "aggtopics/topic_model.hpp"

namespace aggtopics {

// Precomputed unit embeddings, one row per id.
struct EmbeddingMatrix {
  std::vector<std::string> ids;
  Matrix vectors;

  std::size_t dim() const noexcept { return vectors.cols(); }
  // Throws InvalidConfig on duplicate ids, misaligned rows or non-finite values.
  void validate() const;
};

// CSV with header `id,dim0,...,dim{d-1}`.
EmbeddingMatrix read_embeddings_csv(const std::filesystem::path& path);
// Raw little-endian float64 N x d matrix plus JSON sidecar {"ids": [...], "d": d}.
EmbeddingMatrix read_embeddings_raw(const std::filesystem::path& matrix, const std::filesystem::path& sidecar);
// Picks the reader by extension: ".csv" or raw with "<path>.json" sidecar.
EmbeddingMatrix read_embeddings(const std::filesystem::path& path);

// Unit id -> group ids (a unit may belong to several groups).
using Grouping = std::map<std::string, std::vector<std::string>>;

// Grouping from a metadata key: every value of `key` on a unit is a group.
Grouping grouping_from_units(std::span<const RawUnit> units, const std::string& key);

// One row per group (lexicographic): the mean of its members' rows.
// Throws MissingEmbedding if a grouped unit has no row.
EmbeddingMatrix pool_embeddings(const EmbeddingMatrix& emb, const Grouping& grouping);

// Projects rows onto the top `components` principal axes. Axis signs are
// fixed so each axis's largest-magnitude loading is positive.
EmbeddingMatrix pca_reduce(const EmbeddingMatrix& emb, std::size_t components);

struct KMeansOptions {
  std::size_t k = 2;
  std::uint64_t seed = 0;
  int max_iters = 300;
  double tol = 1e-6;
};

struct KMeansResult {
  std::vector<int> assignments;
  Matrix centroids;
  double inertia = 0.0;
  // Inertia after each Lloyd iteration (non-increasing).
  std::vector<double> inertia_history;
  int iterations = 0;
};

// k-means++ seeding followed by Lloyd iterations until the largest centroid
// shift drops below tol or max_iters is reached. Empty clusters take the
// point farthest from its centroid. Distance ties go to the lowest cluster id.
// Throws KTooLarge when k exceeds the number of rows.
KMeansResult kmeans(const Matrix& points, const KMeansOptions& options);

struct ScoredTerm {
  std::string term;
  double score = 0.0;
};

struct CtfidfResult {
  Matrix scores;  // K x V
  std::vector<std::vector<ScoredTerm>> representations;
};

// Class-based TF-IDF. Per cluster c and term v:
//   score = tf_{v,c} * log(1 + A / f_v)
// with tf normalized by the cluster's token total, f_v the term's count over
// all clusters and A the mean token count per cluster. Representations are
// the top `top_n` terms present in the cluster, stop words excluded, ties
// broken lexicographically.
CtfidfResult ctfidf(const Corpus& corpus, std::span<const int> assignments, std::size_t k, std::size_t top_n = 10);

// One-hot rows: document d has 1 at assignments[d].
Matrix theta_one_hot(std::span<const int> assignments, std::size_t k);

struct EntityTheta {
  std::vector<std::string> entity_ids;  // lexicographic
  Matrix theta;
};

// Share of each entity's units falling in each cluster.
EntityTheta theta_by_entity(std::span<const int> assignments, std::span<const std::string> unit_entities,
                            std::size_t k);

struct ClusterOptions {
  KMeansOptions kmeans;
  std::size_t pca_components = 0;  // 0 = no reduction
  std::size_t top_n = 10;
  double smoothing = 0.01;  // added to cluster term counts to form phi
};

struct ClusterModel {
  std::size_t k = 0;
  std::vector<int> assignments;
  Matrix centroids;
  double inertia = 0.0;
  std::vector<std::vector<ScoredTerm>> representations;
  Matrix theta;
  // Smoothed per-cluster term distributions, used by the coherence and
  // exclusivity metrics.
  Matrix phi;
};

// Clusters corpus documents by their embedding rows (matched on document
// id) and builds c-TF-IDF representations.
ClusterModel fit_cluster(const Corpus& corpus, const EmbeddingMatrix& embeddings, const ClusterOptions& options);

TopicModel to_topic_model(const ClusterModel& cluster, const Corpus& corpus);
std::vector<std::vector<std::string>> representation_words(const ClusterModel& cluster);

}  // namespace aggtopics
