#include "aggtopics/cluster.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <unordered_map>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "aggtopics/errors.hpp"
#include "aggtopics/io.hpp"
#include "aggtopics/random.hpp"

namespace aggtopics {

using nlohmann::json;

void EmbeddingMatrix::validate() const {
  if (ids.size() != vectors.rows()) throw InvalidConfig("embedding ids do not align with rows");
  std::set<std::string_view> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second) throw InvalidConfig("duplicate embedding id '" + id + "'");
  for (double x : vectors.data())
    if (!std::isfinite(x)) throw InvalidConfig("non-finite embedding entry");
}

// ---------------------------------------------------------------------------
// Readers

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t p = 0;
  while (true) {
    auto comma = line.find(',', p);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(p));
      break;
    }
    out.push_back(line.substr(p, comma - p));
    p = comma + 1;
  }
  return out;
}

double parse_double(std::string_view field) {
  while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.remove_suffix(1);
  while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw ParseError("bad embedding value '" + std::string(field) + "'");
  return value;
}

}  // namespace

EmbeddingMatrix read_embeddings_csv(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    pos = end + 1;
  }
  if (lines.empty()) throw ParseError("embedding CSV is empty");
  const auto header = split_csv_line(lines.front());
  if (header.size() < 2 || header.front() != "id") throw ParseError("embedding CSV header must be id,dim0,...");
  const std::size_t d = header.size() - 1;

  EmbeddingMatrix emb;
  emb.vectors = Matrix(lines.size() - 1, d);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_csv_line(lines[r]);
    if (fields.size() != d + 1) throw ParseError("embedding CSV row " + std::to_string(r) + " has wrong width");
    emb.ids.emplace_back(fields[0]);
    for (std::size_t c = 0; c < d; ++c) emb.vectors(r - 1, c) = parse_double(fields[c + 1]);
  }
  emb.validate();
  return emb;
}

EmbeddingMatrix read_embeddings_raw(const std::filesystem::path& matrix, const std::filesystem::path& sidecar) {
  const json meta = io::read_json(sidecar);
  EmbeddingMatrix emb;
  try {
    emb.ids = meta.at("ids").get<std::vector<std::string>>();
    const auto d = meta.at("d").get<std::size_t>();
    emb.vectors = matrix_from_bytes(io::read_file(matrix), emb.ids.size(), d);
  } catch (const json::exception& e) {
    throw ParseError("embedding sidecar: " + std::string(e.what()));
  }
  emb.validate();
  return emb;
}

EmbeddingMatrix read_embeddings(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return read_embeddings_csv(path);
  auto sidecar = path;
  sidecar += ".json";
  return read_embeddings_raw(path, sidecar);
}

// ---------------------------------------------------------------------------
// Pooling and reduction

Grouping grouping_from_units(std::span<const RawUnit> units, const std::string& key) {
  Grouping g;
  for (const auto& u : units) {
    auto it = u.meta.find(key);
    if (it == u.meta.end()) continue;
    g[u.id] = it->second;
  }
  return g;
}

EmbeddingMatrix pool_embeddings(const EmbeddingMatrix& emb, const Grouping& grouping) {
  std::unordered_map<std::string_view, std::size_t> row_of;
  for (std::size_t i = 0; i < emb.ids.size(); ++i) row_of.emplace(emb.ids[i], i);

  std::map<std::string, std::vector<std::size_t>> members;
  for (const auto& [unit, groups] : grouping) {
    auto it = row_of.find(unit);
    if (it == row_of.end()) throw MissingEmbedding(unit);
    std::set<std::string> distinct(groups.begin(), groups.end());
    for (const auto& g : distinct) members[g].push_back(it->second);
  }

  EmbeddingMatrix out;
  out.vectors = Matrix(members.size(), emb.dim());
  std::size_t r = 0;
  for (auto& [group, rows] : members) {
    // Sum in row order so the result does not depend on map iteration.
    std::sort(rows.begin(), rows.end());
    auto dst = out.vectors.row(r);
    for (auto src : rows) {
      auto v = emb.vectors.row(src);
      for (std::size_t c = 0; c < dst.size(); ++c) dst[c] += v[c];
    }
    for (auto& x : dst) x /= static_cast<double>(rows.size());
    out.ids.push_back(group);
    ++r;
  }
  return out;
}

EmbeddingMatrix pca_reduce(const EmbeddingMatrix& emb, std::size_t components) {
  const auto n = emb.vectors.rows();
  const auto d = emb.dim();
  if (components == 0 || components > d) throw InvalidConfig("PCA components must lie in [1, d]");
  if (n < 2) throw InvalidConfig("PCA needs at least two rows");

  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajor> x(emb.vectors.data().data(), static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("PCA eigendecomposition failed");

  // Eigenvalues come back ascending.
  Eigen::MatrixXd axes(d, components);
  for (std::size_t c = 0; c < components; ++c) {
    Eigen::VectorXd axis = solver.eigenvectors().col(static_cast<Eigen::Index>(d - 1 - c));
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0) axis = -axis;
    axes.col(static_cast<Eigen::Index>(c)) = axis;
  }
  const Eigen::MatrixXd projected = centered * axes;

  EmbeddingMatrix out;
  out.ids = emb.ids;
  out.vectors = Matrix(n, components);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < components; ++c)
      out.vectors(i, c) = projected(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
  return out;
}

// ---------------------------------------------------------------------------
// k-means

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

Matrix plus_plus_init(const Matrix& points, std::size_t k, Rng& rng) {
  const auto n = points.rows();
  Matrix centers(k, points.cols());
  std::size_t first = rng.below(n);
  std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), centers.row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double x : d2) total += x;
    std::size_t pick = n - 1;
    if (total > 0.0) {
      const double u = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (u < acc) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);
    }
    std::copy(points.row(pick).begin(), points.row(pick).end(), centers.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), centers.row(c)));
  }
  return centers;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, const KMeansOptions& options) {
  const auto n = points.rows();
  const auto k = options.k;
  if (k == 0) throw InvalidConfig("k must be >= 1");
  if (k > n) throw KTooLarge(k, n);
  if (options.max_iters < 1) throw InvalidConfig("max_iters must be >= 1");

  Rng rng(options.seed);
  KMeansResult result;
  result.centroids = plus_plus_init(points, k, rng);
  result.assignments.assign(n, 0);
  auto& z = result.assignments;
  auto& centers = result.centroids;
  std::vector<double> dist(n);
  std::vector<std::size_t> sizes(k);

  for (int iter = 0; iter < options.max_iters; ++iter) {
    std::fill(sizes.begin(), sizes.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      int arg = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double d2 = squared_distance(points.row(i), centers.row(c));
        if (d2 < best) {
          best = d2;
          arg = static_cast<int>(c);
        }
      }
      z[i] = arg;
      dist[i] = best;
      ++sizes[arg];
    }

    for (std::size_t c = 0; c < k; ++c) {
      if (sizes[c] > 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[z[i]] > 1 && (far == n || dist[i] > dist[far])) far = i;
      }
      if (far == n) break;
      --sizes[z[far]];
      z[far] = static_cast<int>(c);
      sizes[c] = 1;
      dist[far] = 0.0;
      std::copy(points.row(far).begin(), points.row(far).end(), centers.row(c).begin());
    }

    Matrix updated(k, points.cols());
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = updated.row(z[i]);
      auto src = points.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      auto row = updated.row(c);
      if (sizes[c] == 0) {
        std::copy(centers.row(c).begin(), centers.row(c).end(), row.begin());
        continue;
      }
      for (auto& x : row) x /= static_cast<double>(sizes[c]);
      shift = std::max(shift, std::sqrt(squared_distance(row, centers.row(c))));
    }
    centers = std::move(updated);

    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) inertia += squared_distance(points.row(i), centers.row(z[i]));
    result.inertia_history.push_back(inertia);
    result.inertia = inertia;
    result.iterations = iter + 1;
    if (shift < options.tol) break;
  }
  return result;
}

// ---------------------------------------------------------------------------
// c-TF-IDF and proportions

CtfidfResult ctfidf(const Corpus& corpus, std::span<const int> assignments, std::size_t k, std::size_t top_n) {
  if (assignments.size() != corpus.num_documents()) throw InvalidConfig("one assignment per document required");
  const auto v_count = corpus.num_terms();
  Matrix counts(k, v_count);
  std::vector<double> cluster_total(k, 0.0);
  std::vector<double> term_total(v_count, 0.0);
  for (std::size_t d = 0; d < assignments.size(); ++d) {
    const auto c = assignments[d];
    if (c < 0 || static_cast<std::size_t>(c) >= k) throw InvalidConfig("assignment out of range");
    for (const auto& tc : corpus.documents()[d].counts) {
      counts(c, tc.term) += tc.count;
      cluster_total[c] += tc.count;
      term_total[tc.term] += tc.count;
    }
  }
  double all = 0.0;
  for (double t : cluster_total) all += t;
  const double avg = all / static_cast<double>(k);

  CtfidfResult result;
  result.scores = Matrix(k, v_count);
  result.representations.resize(k);
  const auto& terms = corpus.vocabulary().terms();
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::size_t> candidates;
    for (std::size_t v = 0; v < v_count; ++v) {
      if (cluster_total[c] == 0.0 || counts(c, v) == 0.0) continue;
      result.scores(c, v) = counts(c, v) / cluster_total[c] * std::log(1.0 + avg / term_total[v]);
      if (!is_stopword(terms[v])) candidates.push_back(v);
    }
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
      if (result.scores(c, a) != result.scores(c, b)) return result.scores(c, a) > result.scores(c, b);
      return terms[a] < terms[b];
    });
    if (candidates.size() > top_n) candidates.resize(top_n);
    for (auto v : candidates) result.representations[c].push_back({terms[v], result.scores(c, v)});
  }
  return result;
}

Matrix theta_one_hot(std::span<const int> assignments, std::size_t k) {
  Matrix theta(assignments.size(), k);
  for (std::size_t d = 0; d < assignments.size(); ++d) {
    if (assignments[d] < 0 || static_cast<std::size_t>(assignments[d]) >= k)
      throw InvalidConfig("assignment out of range");
    theta(d, assignments[d]) = 1.0;
  }
  return theta;
}

EntityTheta theta_by_entity(std::span<const int> assignments, std::span<const std::string> unit_entities,
                            std::size_t k) {
  if (assignments.size() != unit_entities.size()) throw InvalidConfig("one entity per unit required");
  std::map<std::string, std::vector<std::size_t>> counts;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    auto& row = counts[unit_entities[i]];
    if (row.empty()) row.assign(k, 0);
    if (assignments[i] < 0 || static_cast<std::size_t>(assignments[i]) >= k)
      throw InvalidConfig("assignment out of range");
    ++row[assignments[i]];
  }
  EntityTheta out;
  out.theta = Matrix(counts.size(), k);
  std::size_t r = 0;
  for (const auto& [entity, row] : counts) {
    std::size_t total = 0;
    for (auto c : row) total += c;
    for (std::size_t c = 0; c < k; ++c) out.theta(r, c) = static_cast<double>(row[c]) / static_cast<double>(total);
    out.entity_ids.push_back(entity);
    ++r;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Full cluster model

ClusterModel fit_cluster(const Corpus& corpus, const EmbeddingMatrix& embeddings, const ClusterOptions& options) {
  embeddings.validate();
  std::unordered_map<std::string_view, std::size_t> row_of;
  for (std::size_t i = 0; i < embeddings.ids.size(); ++i) row_of.emplace(embeddings.ids[i], i);

  EmbeddingMatrix aligned;
  aligned.vectors = Matrix(corpus.num_documents(), embeddings.dim());
  for (std::size_t d = 0; d < corpus.num_documents(); ++d) {
    const auto& id = corpus.documents()[d].id;
    auto it = row_of.find(id);
    if (it == row_of.end()) throw MissingEmbedding(id);
    auto src = embeddings.vectors.row(it->second);
    std::copy(src.begin(), src.end(), aligned.vectors.row(d).begin());
    aligned.ids.push_back(id);
  }
  if (options.pca_components > 0) aligned = pca_reduce(aligned, options.pca_components);

  const auto km = kmeans(aligned.vectors, options.kmeans);
  const auto k = options.kmeans.k;
  auto tfidf = ctfidf(corpus, km.assignments, k, options.top_n);

  ClusterModel model;
  model.k = k;
  model.assignments = km.assignments;
  model.centroids = km.centroids;
  model.inertia = km.inertia;
  model.representations = std::move(tfidf.representations);
  model.theta = theta_one_hot(km.assignments, k);

  const auto v_count = corpus.num_terms();
  model.phi = Matrix(k, v_count, options.smoothing);
  for (std::size_t d = 0; d < corpus.num_documents(); ++d)
    for (const auto& tc : corpus.documents()[d].counts) model.phi(km.assignments[d], tc.term) += tc.count;
  for (std::size_t c = 0; c < k; ++c) {
    auto row = model.phi.row(c);
    double total = 0.0;
    for (double x : row) total += x;
    for (auto& x : row) x /= total;
  }
  return model;
}

TopicModel to_topic_model(const ClusterModel& cluster, const Corpus& corpus) {
  TopicModel model;
  model.num_topics = static_cast<int>(cluster.k);
  model.family = ModelFamily::cluster;
  model.phi = cluster.phi;
  model.theta = cluster.theta;
  model.terms = corpus.vocabulary().terms();
  for (const auto& d : corpus.documents()) model.doc_ids.push_back(d.id);
  json reps = json::array();
  for (const auto& rep : cluster.representations) {
    json r = json::array();
    for (const auto& st : rep) r.push_back({st.term, st.score});
    reps.push_back(std::move(r));
  }
  model.config["representations"] = std::move(reps);
  model.config["assignments"] = cluster.assignments;
  model.config["inertia"] = cluster.inertia;
  return model;
}

std::vector<std::vector<std::string>> representation_words(const ClusterModel& cluster) {
  std::vector<std::vector<std::string>> out;
  for (const auto& rep : cluster.representations) {
    std::vector<std::string> words;
    for (const auto& st : rep) words.push_back(st.term);
    out.push_back(std::move(words));
  }
  return out;
}

}  // namespace aggtopics
