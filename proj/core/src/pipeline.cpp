#include "aggtopics/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <mutex>

#include "aggtopics/errors.hpp"
#include "aggtopics/io.hpp"
#include "aggtopics/lda.hpp"
#include "aggtopics/parallel.hpp"
#include "aggtopics/random.hpp"

namespace aggtopics {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty() || p.is_absolute() || base.empty()) return p;
  return base / p;
}

std::string dominance_name(DominanceCount c) { return c == DominanceCount::documents ? "documents" : "occurrences"; }

std::string cell_name(const std::string& def, ModelFamily family, int k) {
  return def + "__" + std::string(to_string(family)) + "__K" + std::to_string(k);
}

double mean_of(const std::vector<TopicSummary>& s, double TopicSummary::*field) {
  if (s.empty()) return 0.0;
  double total = 0.0;
  for (const auto& t : s) total += t.*field;
  return total / static_cast<double>(s.size());
}

json length_stats_json(const LengthStats& l, bool with_counts) {
  json j = {{"n_documents", l.n_documents}, {"mean", l.mean}, {"median", l.median}, {"skewness", l.skewness}};
  if (with_counts) j["token_counts"] = l.token_counts;
  return j;
}

std::vector<GroupName> names_from_json(const json& j, const fs::path& base) {
  if (!j.contains("names") || j["names"] == "us_states") return us_states();
  if (j["names"].is_string()) return parse_group_names(io::read_file(resolve(base, j["names"].get<std::string>())));
  std::vector<GroupName> out;
  for (const auto& n : j["names"]) out.push_back({n.at("name").get<std::string>(), n.value("abbreviation", "")});
  return out;
}

// Everything a cell needs that is shared across the grid.
struct Shared {
  const ExperimentConfig& config;
  const std::vector<RawUnit>& units;
  const std::set<std::string, std::less<>>& unit_vocab;
  const std::set<std::string, std::less<>>& cluster_unit_vocab;
  const EmbeddingMatrix* embeddings;
  const GroupDictionary& dictionary;
};

struct FitOutcome {
  TopicModel model;
  std::vector<TopicSummary> summaries;
  TopicLabelReport labels;
  double seconds = 0.0;
};

const PreprocessOptions& preprocess_for(const Shared& sh, ModelFamily family) {
  return family == ModelFamily::cluster ? sh.config.cluster->preprocess : sh.config.preprocess;
}

DefinitionCorpus corpus_for(const Shared& sh, const DocumentDefinition& def, ModelFamily family) {
  const auto& vocab = family == ModelFamily::cluster ? sh.cluster_unit_vocab : sh.unit_vocab;
  return build_definition_corpus(sh.units, def, preprocess_for(sh, family), &vocab);
}

// Embeddings aligned with the documents of `def`: raw rows for identity,
// member means for key-based definitions.
EmbeddingMatrix embeddings_for(const Shared& sh, const DocumentDefinition& def) {
  if (def.mode == AggregationMode::identity) return *sh.embeddings;
  if (def.mode == AggregationMode::by_key) return pool_embeddings(*sh.embeddings, grouping_from_units(sh.units, def.key));
  const auto permuted = permute_labels(sh.units, def.key, def.seed);
  return pool_embeddings(*sh.embeddings, grouping_from_units(permuted, def.key));
}

FitOutcome fit_cell(const Shared& sh, const DocumentDefinition& def, const Corpus& corpus, ModelFamily family, int k,
                    std::uint64_t seed) {
  FitOutcome out;
  const auto& cfg = sh.config;
  if (family == ModelFamily::gibbs_lda) {
    auto lda = LdaConfig::from_json(cfg.lda, k);
    lda.seed = seed;
    out.model = fit_lda(corpus, lda);
    out.seconds = out.model.fit_seconds;
    out.summaries = summarize(out.model, corpus, cfg.summary);
  } else {
    const auto start = std::chrono::steady_clock::now();
    ClusterOptions co;
    co.kmeans.k = static_cast<std::size_t>(k);
    co.kmeans.seed = seed;
    co.kmeans.max_iters = cfg.cluster->max_iters;
    co.kmeans.tol = cfg.cluster->tol;
    co.pca_components = cfg.cluster->pca_components;
    co.top_n = cfg.cluster->top_n;
    const auto cm = fit_cluster(corpus, embeddings_for(sh, def), co);
    out.model = to_topic_model(cm, corpus);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.model.fit_seconds = out.seconds;
    out.summaries = summarize(out.model, corpus, cfg.summary, representation_words(cm));
  }
  out.labels = label_topics(out.summaries, sh.dictionary);
  return out;
}

std::optional<DesignMode> design_mode_for(const DocumentDefinition& def, const ValiditySettings& v) {
  if (def.mode == AggregationMode::identity) return DesignMode::unit_mean;
  if (def.mode == AggregationMode::by_key && def.key == v.entity_key) return DesignMode::aggregated;
  return std::nullopt;
}

CellRecord run_cell(const Shared& sh, const DocumentDefinition& def, ModelFamily family, int k,
                    const std::function<void(std::string_view)>& log) {
  const auto& cfg = sh.config;
  const auto name = cell_name(def.name, family, k);
  const std::string stage_suffix = def.name + "/" + std::string(to_string(family)) + "/K" + std::to_string(k);
  CellRecord rec;
  rec.definition = def.name;
  rec.family = family;
  rec.k = k;
  rec.directory = "cells/" + name;
  const auto dir = cfg.output_dir / rec.directory;

  log("building corpus");
  const auto dc = corpus_for(sh, def, family);
  rec.lengths = length_stats(dc.corpus);
  io::write_json(dir / "length_stats.json", length_stats_json(rec.lengths, true));

  log("fitting");
  const auto fit = fit_cell(sh, def, dc.corpus, family, k, stage_seed(cfg.base_seed, "fit/" + stage_suffix));
  rec.fit_seconds = fit.seconds;
  write_model(dir / "model", fit.model, cfg.matrix_format);
  io::write_json(dir / "summaries.json", summaries_to_json(fit.summaries));
  io::write_json(dir / "labels.json", label_report_to_json(fit.labels));
  rec.n_related = fit.labels.n_related;
  rec.mass = fit.labels.mass;
  rec.mean_coherence = mean_of(fit.summaries, &TopicSummary::coherence);
  rec.mean_exclusivity = mean_of(fit.summaries, &TopicSummary::exclusivity);
  log("labeled " + std::to_string(rec.n_related) + " of " + std::to_string(k) + " topics as group-related");

  if (cfg.validity) {
    const auto& v = *cfg.validity;
    try {
      const auto mode = design_mode_for(def, v);
      if (!mode) throw InvalidConfig("validity needs an identity definition or aggregation by '" + v.entity_key + "'");
      const auto design = design_from_model(fit.model, dc.corpus, v.entity_key, v.label_key, *mode);
      LogitOptions lo;
      lo.ridge = v.ridge;
      LogitFit full;
      try {
        full = fit_multinomial_logit(design, lo);
      } catch (const NonConvergence& e) {
        full = e.fit();
      }
      SplitOptions so;
      so.train_fraction = v.train_fraction;
      so.train_count = v.train_count;
      // One split seed for the whole grid: entity rows are sorted the same way
      // in every design, so all cells share the same partition.
      so.seed = stage_seed(cfg.base_seed, "split");
      so.logit = lo;
      const auto split = split_accuracy(design, so);
      auto report = validity_report_json(full, split);
      report["design_mode"] = *mode == DesignMode::aggregated ? "aggregated" : "unit_mean";
      report["n_entities"] = design.rows();
      io::write_json(dir / "validity.json", report);
      rec.validity = std::move(report);
      log("validity done");
    } catch (const Error& e) {
      rec.validity_error = e.what();
      log(std::string("validity skipped: ") + e.what());
    }
  }

  if (cfg.permutation && def.mode == AggregationMode::by_key) {
    const auto& p = cfg.permutation->definitions;
    if (std::find(p.begin(), p.end(), def.name) != p.end()) {
      log("permutation test");
      try {
        PermutationOptions po;
        po.replicates = cfg.permutation->replicates;
        po.base_seed = stage_seed(cfg.base_seed, "permute/" + stage_suffix);
        po.ci = cfg.permutation->ci;
        po.jobs = 1;  // the grid already runs cells in parallel
        const auto fit_seed = stage_seed(cfg.base_seed, "fit/" + stage_suffix);
        auto counter = [&](const DocumentDefinition& d) -> std::int64_t {
          if (d.mode == AggregationMode::by_key) return static_cast<std::int64_t>(fit.labels.n_related);
          const auto rc = corpus_for(sh, d, family);
          return static_cast<std::int64_t>(fit_cell(sh, d, rc.corpus, family, k, fit_seed).labels.n_related);
        };
        auto result = run_permutation_test(def.key, counter, po);
        io::write_json(dir / "permutation.json", permutation_to_json(result));
        io::write_file(dir / "permutation.csv", permutation_to_csv(result));
        rec.permutation = std::move(result);
      } catch (const Error& e) {
        rec.permutation_error = e.what();
        log(std::string("permutation failed: ") + e.what());
      }
    }
  }
  rec.ok = true;
  return rec;
}

json cell_to_json(const CellRecord& c) {
  json j = {{"definition", c.definition},
            {"family", to_string(c.family)},
            {"K", c.k},
            {"directory", c.directory},
            {"ok", c.ok}};
  if (!c.ok) {
    j["error"] = c.error;
    return j;
  }
  j["n_related"] = c.n_related;
  j["mass"] = c.mass;
  j["mean_coherence"] = c.mean_coherence;
  j["mean_exclusivity"] = c.mean_exclusivity;
  j["length_stats"] = length_stats_json(c.lengths, false);
  if (c.validity) j["validity"] = *c.validity;
  if (c.validity_error) j["validity_error"] = *c.validity_error;
  if (c.permutation) j["permutation"] = permutation_to_json(*c.permutation);
  if (c.permutation_error) j["permutation_error"] = *c.permutation_error;
  return j;
}

CellRecord cell_from_json(const json& j) {
  CellRecord c;
  c.definition = j.at("definition").get<std::string>();
  c.family = parse_model_family(j.at("family").get<std::string>());
  c.k = j.at("K").get<int>();
  c.directory = j.at("directory").get<std::string>();
  c.ok = j.at("ok").get<bool>();
  if (!c.ok) {
    c.error = j.value("error", "");
    return c;
  }
  c.n_related = j.at("n_related").get<std::size_t>();
  c.mass = j.at("mass").get<double>();
  c.mean_coherence = j.at("mean_coherence").get<double>();
  c.mean_exclusivity = j.at("mean_exclusivity").get<double>();
  const auto& l = j.at("length_stats");
  c.lengths.n_documents = l.at("n_documents").get<std::size_t>();
  c.lengths.mean = l.at("mean").get<double>();
  c.lengths.median = l.at("median").get<double>();
  c.lengths.skewness = l.at("skewness").get<double>();
  if (j.contains("validity")) c.validity = j["validity"];
  if (j.contains("validity_error")) c.validity_error = j["validity_error"].get<std::string>();
  if (j.contains("permutation")) {
    const auto& p = j["permutation"];
    PermutationResult r;
    r.replicate_counts = p.at("replicate_counts").get<std::vector<std::int64_t>>();
    r.seeds = p.at("seeds").get<std::vector<std::uint64_t>>();
    r.mean = p.at("mean").get<double>();
    r.sd = p.at("sd").get<double>();
    r.ci_low = p.at("ci_low").get<double>();
    r.ci_high = p.at("ci_high").get<double>();
    r.actual_count = p.at("actual_count").get<std::int64_t>();
    r.outside_ci = p.at("outside_ci").get<bool>();
    c.permutation = std::move(r);
  }
  if (j.contains("permutation_error")) c.permutation_error = j["permutation_error"].get<std::string>();
  return c;
}

std::string cell_prefix(const CellRecord& c) {
  return io::csv_field(c.definition) + "," + std::string(to_string(c.family)) + "," + std::to_string(c.k);
}

}  // namespace

void ExperimentConfig::validate() const {
  if (corpus_path.empty()) throw InvalidConfig("config needs a corpus path");
  if (output_dir.empty()) throw InvalidConfig("config needs an output directory");
  if (definitions.empty()) throw InvalidConfig("config needs at least one document definition");
  if (k_list.empty()) throw InvalidConfig("config needs at least one K");
  if (families.empty()) throw InvalidConfig("config needs at least one model family");
  std::set<std::string> names;
  for (const auto& d : definitions) {
    if (d.name.empty()) throw InvalidConfig("document definition without a name");
    if (d.name.find_first_of("/\\,\"\n") != std::string::npos)
      throw InvalidConfig("definition name '" + d.name + "' contains a reserved character");
    if (!names.insert(d.name).second) throw InvalidConfig("duplicate definition name '" + d.name + "'");
    if (d.mode != AggregationMode::identity && d.key.empty())
      throw InvalidConfig("definition '" + d.name + "' needs a grouping key");
  }
  for (int k : k_list)
    if (k < 1) throw InvalidConfig("K must be positive");
  for (auto f : families) {
    if (f == ModelFamily::cluster && !cluster) throw InvalidConfig("cluster family needs a cluster section");
    if (f == ModelFamily::gibbs_lda)
      for (int k : k_list) LdaConfig::from_json(lda, k).validate();
  }
  if (preprocess.min_doc_freq < 1) throw InvalidConfig("min_doc_freq must be at least 1");
  if (validity) {
    if (validity->entity_key.empty() || validity->label_key.empty())
      throw InvalidConfig("validity needs entity_key and label_key");
    if (validity->ridge < 0.0) throw InvalidConfig("ridge must be non-negative");
    if (!(validity->train_fraction > 0.0 && validity->train_fraction < 1.0))
      throw InvalidConfig("train_fraction must lie in (0, 1)");
  }
  if (permutation) {
    if (permutation->replicates < 2) throw InvalidConfig("permutation needs at least two replicates");
    for (const auto& name : permutation->definitions) {
      auto it = std::find_if(definitions.begin(), definitions.end(), [&](const auto& d) { return d.name == name; });
      if (it == definitions.end()) throw InvalidConfig("permutation definition '" + name + "' is not configured");
      if (it->mode != AggregationMode::by_key)
        throw InvalidConfig("permutation definition '" + name + "' must aggregate by key");
    }
  }
  if (jobs < 1) throw InvalidConfig("jobs must be at least 1");
}

ExperimentConfig ExperimentConfig::from_json(const json& j, const fs::path& base_dir) {
  try {
    ExperimentConfig c;
    c.corpus_path = resolve(base_dir, j.at("corpus").get<std::string>());
    c.output_dir = resolve(base_dir, j.value("output_dir", "out"));
    c.base_seed = j.value("base_seed", std::uint64_t{0});
    for (const auto& d : j.at("definitions")) {
      DocumentDefinition def;
      def.name = d.at("name").get<std::string>();
      def.mode = parse_aggregation_mode(d.value("mode", "identity"));
      def.key = d.value("key", "");
      def.seed = d.value("seed", std::uint64_t{0});
      c.definitions.push_back(std::move(def));
    }
    if (j.contains("families")) {
      c.families.clear();
      for (const auto& f : j["families"]) c.families.push_back(parse_model_family(f.get<std::string>()));
    }
    c.k_list = j.at("k_list").get<std::vector<int>>();
    if (j.contains("lda")) c.lda = j["lda"];
    if (j.contains("preprocess")) {
      const auto& p = j["preprocess"];
      c.preprocess.min_doc_freq = p.value("min_doc_freq", c.preprocess.min_doc_freq);
      c.preprocess.remove_stopwords = p.value("remove_stopwords", c.preprocess.remove_stopwords);
      c.preprocess.prune_before_aggregation = p.value("prune_before_aggregation", false);
    }
    if (j.contains("summary")) {
      const auto& s = j["summary"];
      c.summary.frex_weight = s.value("frex_weight", c.summary.frex_weight);
      c.summary.top_n = s.value("top_n", c.summary.top_n);
      c.summary.coherence_m = s.value("coherence_m", c.summary.coherence_m);
      c.summary.exclusivity_m = s.value("exclusivity_m", c.summary.exclusivity_m);
      c.summary.exclusivity_weight = s.value("exclusivity_weight", c.summary.exclusivity_weight);
    }
    if (j.contains("cluster")) {
      const auto& s = j["cluster"];
      ClusterSettings cs;
      cs.embeddings = resolve(base_dir, s.at("embeddings").get<std::string>());
      cs.pca_components = s.value("pca_components", cs.pca_components);
      cs.max_iters = s.value("max_iters", cs.max_iters);
      cs.tol = s.value("tol", cs.tol);
      cs.top_n = s.value("top_n", cs.top_n);
      cs.preprocess.min_doc_freq = s.value("min_doc_freq", cs.preprocess.min_doc_freq);
      cs.preprocess.remove_stopwords = s.value("remove_stopwords", cs.preprocess.remove_stopwords);
      cs.preprocess.prune_before_aggregation = s.value("prune_before_aggregation", false);
      c.cluster = std::move(cs);
    }
    if (j.contains("dictionary")) {
      const auto& d = j["dictionary"];
      if (d.contains("path")) c.dictionary.path = resolve(base_dir, d["path"].get<std::string>());
      auto& b = c.dictionary.build;
      b.group_key = d.value("group_key", b.group_key);
      b.names = names_from_json(d, base_dir);
      if (d.contains("abbreviation_exclusions"))
        b.abbreviation_exclusions = d["abbreviation_exclusions"].get<std::set<std::string>>();
      b.apply_exclusions = d.value("apply_exclusions", b.apply_exclusions);
      b.dominance_threshold = d.value("dominance_threshold", b.dominance_threshold);
      b.min_occurrences = d.value("min_occurrences", b.min_occurrences);
      b.use_dominance = d.value("use_dominance", b.use_dominance);
      if (d.value("dominance_count", "occurrences") == "documents") b.dominance_count = DominanceCount::documents;
    } else {
      c.dictionary.build.names = us_states();
    }
    if (j.contains("validity")) {
      const auto& v = j["validity"];
      ValiditySettings vs;
      vs.entity_key = v.at("entity_key").get<std::string>();
      vs.label_key = v.at("label_key").get<std::string>();
      vs.ridge = v.value("ridge", vs.ridge);
      if (v.value("preset", "") == "holdout_heavy") vs.train_count = SplitOptions::holdout_heavy().train_count;
      vs.train_fraction = v.value("train_fraction", vs.train_fraction);
      if (v.contains("train_count")) vs.train_count = v["train_count"].get<std::size_t>();
      c.validity = std::move(vs);
    }
    if (j.contains("permutation")) {
      const auto& p = j["permutation"];
      PermutationSettings ps;
      ps.definitions = p.at("definitions").get<std::vector<std::string>>();
      ps.replicates = p.value("replicates", ps.replicates);
      ps.ci = parse_ci_method(p.value("ci", "normal"));
      c.permutation = std::move(ps);
    }
    c.matrix_format = parse_matrix_format(j.value("matrix_format", "csv"));
    c.jobs = j.value("jobs", 1);
    c.fail_fast = j.value("fail_fast", false);
    return c;
  } catch (const json::exception& e) {
    throw InvalidConfig(std::string("bad experiment config: ") + e.what());
  }
}

json ExperimentConfig::to_json() const {
  json defs = json::array();
  for (const auto& d : definitions) {
    json dj = {{"name", d.name}, {"mode", to_string(d.mode)}};
    if (d.mode != AggregationMode::identity) dj["key"] = d.key;
    if (d.mode == AggregationMode::permuted_by_key) dj["seed"] = d.seed;
    defs.push_back(std::move(dj));
  }
  json fams = json::array();
  for (auto f : families) fams.push_back(to_string(f));
  json j = {{"corpus", corpus_path.generic_string()},
            {"output_dir", output_dir.generic_string()},
            {"base_seed", base_seed},
            {"definitions", defs},
            {"families", fams},
            {"k_list", k_list},
            {"lda", lda},
            {"preprocess",
             {{"min_doc_freq", preprocess.min_doc_freq},
              {"remove_stopwords", preprocess.remove_stopwords},
              {"prune_before_aggregation", preprocess.prune_before_aggregation}}},
            {"summary",
             {{"frex_weight", summary.frex_weight},
              {"top_n", summary.top_n},
              {"coherence_m", summary.coherence_m},
              {"exclusivity_m", summary.exclusivity_m},
              {"exclusivity_weight", summary.exclusivity_weight}}},
            {"matrix_format", matrix_format == MatrixFormat::binary ? "binary" : "csv"},
            {"jobs", jobs},
            {"fail_fast", fail_fast}};
  if (cluster) {
    j["cluster"] = {{"embeddings", cluster->embeddings.generic_string()},
                    {"pca_components", cluster->pca_components},
                    {"max_iters", cluster->max_iters},
                    {"tol", cluster->tol},
                    {"top_n", cluster->top_n},
                    {"min_doc_freq", cluster->preprocess.min_doc_freq},
                    {"remove_stopwords", cluster->preprocess.remove_stopwords},
                    {"prune_before_aggregation", cluster->preprocess.prune_before_aggregation}};
  }
  json dict;
  if (dictionary.path) {
    dict["path"] = dictionary.path->generic_string();
  } else {
    const auto& b = dictionary.build;
    json names = json::array();
    for (const auto& n : b.names) names.push_back({{"name", n.name}, {"abbreviation", n.abbreviation}});
    dict = {{"group_key", b.group_key},
            {"names", names},
            {"abbreviation_exclusions", b.abbreviation_exclusions},
            {"apply_exclusions", b.apply_exclusions},
            {"dominance_threshold", b.dominance_threshold},
            {"min_occurrences", b.min_occurrences},
            {"use_dominance", b.use_dominance},
            {"dominance_count", dominance_name(b.dominance_count)}};
  }
  j["dictionary"] = std::move(dict);
  if (validity) {
    j["validity"] = {{"entity_key", validity->entity_key},
                     {"label_key", validity->label_key},
                     {"ridge", validity->ridge},
                     {"train_fraction", validity->train_fraction}};
    if (validity->train_count) j["validity"]["train_count"] = *validity->train_count;
  }
  if (permutation) {
    j["permutation"] = {{"definitions", permutation->definitions},
                        {"replicates", permutation->replicates},
                        {"ci", permutation->ci == CiMethod::student_t ? "student_t" : "normal"}};
  }
  return j;
}

json ExperimentReport::to_json() const {
  json fams = json::array();
  for (auto f : families) fams.push_back(to_string(f));
  json cj = json::array();
  for (const auto& c : cells) cj.push_back(cell_to_json(c));
  return {{"format_version", 1},   {"definitions", definitions}, {"families", fams},
          {"k_list", k_list},      {"cells", cj},                {"dictionary", dictionary_summary},
          {"config", config}};
}

ExperimentReport ExperimentReport::from_json(const json& j) {
  try {
    ExperimentReport r;
    r.definitions = j.at("definitions").get<std::vector<std::string>>();
    for (const auto& f : j.at("families")) r.families.push_back(parse_model_family(f.get<std::string>()));
    r.k_list = j.at("k_list").get<std::vector<int>>();
    for (const auto& c : j.at("cells")) r.cells.push_back(cell_from_json(c));
    r.config = j.value("config", json::object());
    r.dictionary_summary = j.value("dictionary", json::object());
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad report: ") + e.what());
  }
}

ExperimentReport run_pipeline(const ExperimentConfig& config, const CellLogger& log) {
  config.validate();
  std::mutex log_mutex;
  auto emit = [&](std::string_view cell, std::string_view msg) {
    if (!log) return;
    std::lock_guard lock(log_mutex);
    log(cell, msg);
  };

  const auto units = read_units_jsonl(config.corpus_path);
  fs::create_directories(config.output_dir);

  const bool any_lda = std::ranges::find(config.families, ModelFamily::gibbs_lda) != config.families.end();
  const bool any_cluster = std::ranges::find(config.families, ModelFamily::cluster) != config.families.end();
  std::set<std::string, std::less<>> unit_vocab, cluster_unit_vocab;
  if (any_lda && config.preprocess.prune_before_aggregation)
    unit_vocab = unit_level_vocabulary(units, config.preprocess);
  if (any_cluster && config.cluster->preprocess.prune_before_aggregation)
    cluster_unit_vocab = unit_level_vocabulary(units, config.cluster->preprocess);

  std::optional<EmbeddingMatrix> embeddings;
  if (any_cluster) embeddings = read_embeddings(config.cluster->embeddings);

  GroupDictionary dictionary;
  if (config.dictionary.path) {
    dictionary = dictionary_from_json(io::read_json(*config.dictionary.path));
  } else {
    emit("dictionary", "building from identity corpus");
    CorpusOptions co;
    co.min_doc_freq = config.preprocess.min_doc_freq;
    co.remove_stopwords = config.preprocess.remove_stopwords;
    co.definition_name = "identity";
    dictionary = build_dictionary(build_corpus(units, co), config.dictionary.build);
  }
  io::write_json(config.output_dir / "dictionary.json", dictionary_to_json(dictionary));

  ExperimentReport report;
  for (const auto& d : config.definitions) report.definitions.push_back(d.name);
  report.families = config.families;
  report.k_list = config.k_list;
  report.config = config.to_json();
  // Paths and the job count would make reports depend on where and how
  // they ran.
  report.config.erase("corpus");
  report.config.erase("output_dir");
  report.config.erase("jobs");
  if (report.config.contains("cluster")) report.config["cluster"].erase("embeddings");
  if (report.config["dictionary"].contains("path")) report.config["dictionary"].erase("path");
  std::size_t n_pairs = dictionary.pairs.size();
  std::map<std::string, std::size_t> by_rule;
  for (const auto& [token, rule] : dictionary.singles) ++by_rule[std::string(to_string(rule))];
  report.dictionary_summary = {{"size", dictionary.size()}, {"pairs", n_pairs}, {"singles_by_rule", by_rule}};

  struct Job {
    const DocumentDefinition* def;
    ModelFamily family;
    int k;
  };
  std::vector<Job> jobs;
  for (const auto& d : config.definitions)
    for (auto f : config.families)
      for (int k : config.k_list) jobs.push_back({&d, f, k});

  const Shared shared{config, units, unit_vocab, cluster_unit_vocab, embeddings ? &*embeddings : nullptr, dictionary};
  report.cells.resize(jobs.size());
  parallel_for_index(jobs.size(), config.jobs, [&](std::size_t i) {
    const auto& job = jobs[i];
    const auto name = cell_name(job.def->name, job.family, job.k);
    auto cell_log = [&](std::string_view msg) { emit(name, msg); };
    try {
      report.cells[i] = run_cell(shared, *job.def, job.family, job.k, cell_log);
    } catch (const Error& e) {
      if (config.fail_fast) throw;
      auto& rec = report.cells[i];
      rec.definition = job.def->name;
      rec.family = job.family;
      rec.k = job.k;
      rec.directory = "cells/" + name;
      rec.ok = false;
      rec.error = e.what();
      emit(name, std::string("failed: ") + e.what());
    }
  });

  io::write_json(config.output_dir / "report.json", report.to_json());
  json timing = json::array();
  for (const auto& c : report.cells)
    timing.push_back({{"definition", c.definition}, {"family", to_string(c.family)}, {"K", c.k},
                      {"fit_seconds", c.fit_seconds}});
  io::write_json(config.output_dir / "timing.json", json{{"cells", timing}});
  emit_tables(report, config.output_dir);
  return report;
}

std::string counts_table_csv(const ExperimentReport& report) {
  std::string out = "family,K";
  for (const auto& d : report.definitions) out += "," + io::csv_field(d);
  out += "\n";
  for (auto f : report.families) {
    for (int k : report.k_list) {
      out += std::string(to_string(f)) + "," + std::to_string(k);
      for (const auto& d : report.definitions) {
        auto it = std::ranges::find_if(report.cells,
                                       [&](const CellRecord& c) { return c.definition == d && c.family == f && c.k == k; });
        out += ",";
        if (it != report.cells.end() && it->ok)
          out += std::to_string(it->n_related) + " (" + io::format_fixed(it->mass, 3) + ")";
        else
          out += "NA";
      }
      out += "\n";
    }
  }
  return out;
}

std::string validity_table_csv(const ExperimentReport& report) {
  std::string out = "definition,family,K,design_mode,aic,log_likelihood,accuracy,n_train,n_test,ridge,converged\n";
  for (const auto& c : report.cells) {
    if (!c.validity) continue;
    const auto& v = *c.validity;
    out += cell_prefix(c) + "," + v.value("design_mode", "") + "," + io::format_double(v.at("aic").get<double>()) +
           "," + io::format_double(v.at("log_likelihood").get<double>()) + "," +
           io::format_double(v.at("accuracy").get<double>()) + "," + std::to_string(v.at("n_train").get<std::size_t>()) +
           "," + std::to_string(v.at("n_test").get<std::size_t>()) + "," +
           io::format_double(v.at("ridge").get<double>()) + "," + (v.at("converged").get<bool>() ? "true" : "false") +
           "\n";
  }
  return out;
}

std::string frontier_table_csv(const ExperimentReport& report) {
  std::string out = "definition,family,K,mean_coherence,mean_exclusivity\n";
  for (const auto& c : report.cells) {
    if (!c.ok) continue;
    out += cell_prefix(c) + "," + io::format_double(c.mean_coherence) + "," + io::format_double(c.mean_exclusivity) +
           "\n";
  }
  return out;
}

std::string permutation_table_csv(const ExperimentReport& report) {
  std::string out = "definition,family,K,row,seed,count,mean,sd,ci_low,ci_high,actual_count,outside_ci\n";
  for (const auto& c : report.cells) {
    if (!c.permutation) continue;
    // Reuse the per-cell layout, dropping its header line.
    const auto body = permutation_to_csv(*c.permutation);
    std::size_t pos = body.find('\n') + 1;
    while (pos < body.size()) {
      const auto end = body.find('\n', pos);
      out += cell_prefix(c) + "," + body.substr(pos, end - pos) + "\n";
      pos = end + 1;
    }
  }
  return out;
}

std::string timing_table_csv(const ExperimentReport& report) {
  std::string out = "definition,family,K,fit_seconds\n";
  for (const auto& c : report.cells) out += cell_prefix(c) + "," + io::format_double(c.fit_seconds) + "\n";
  return out;
}

std::string cells_table_csv(const ExperimentReport& report) {
  std::string out = "definition,family,K,ok,n_related,mass,mean_coherence,mean_exclusivity,n_documents,mean_length,"
                    "median_length,skewness,aic,accuracy,permutation_ci_low,permutation_ci_high,outside_ci\n";
  for (const auto& c : report.cells) {
    out += cell_prefix(c) + "," + (c.ok ? "true" : "false");
    if (!c.ok) {
      out += ",,,,,,,,,,,,,\n";
      continue;
    }
    out += "," + std::to_string(c.n_related) + "," + io::format_double(c.mass) + "," +
           io::format_double(c.mean_coherence) + "," + io::format_double(c.mean_exclusivity) + "," +
           std::to_string(c.lengths.n_documents) + "," + io::format_double(c.lengths.mean) + "," +
           io::format_double(c.lengths.median) + "," + io::format_double(c.lengths.skewness) + ",";
    if (c.validity)
      out += io::format_double(c.validity->at("aic").get<double>()) + "," +
             io::format_double(c.validity->at("accuracy").get<double>());
    else
      out += ",";
    out += ",";
    if (c.permutation)
      out += io::format_double(c.permutation->ci_low) + "," + io::format_double(c.permutation->ci_high) + "," +
             (c.permutation->outside_ci ? "true" : "false");
    else
      out += ",,";
    out += "\n";
  }
  return out;
}

void emit_tables(const ExperimentReport& report, const fs::path& output_dir) {
  const auto tables = output_dir / "tables";
  io::write_file(tables / "counts.csv", counts_table_csv(report));
  io::write_file(tables / "validity.csv", validity_table_csv(report));
  io::write_file(tables / "frontier.csv", frontier_table_csv(report));
  io::write_file(tables / "permutation.csv", permutation_table_csv(report));
  io::write_file(tables / "timing.csv", timing_table_csv(report));
  io::write_file(output_dir / "tables.csv", cells_table_csv(report));
}

}  // namespace aggtopics
