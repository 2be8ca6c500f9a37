// aggtopics: command-line front end for the aggregation experiments.

#include <chrono>
#include <cstdlib>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aggtopics/aggregate.hpp"
#include "aggtopics/cluster.hpp"
#include "aggtopics/corpus.hpp"
#include "aggtopics/errors.hpp"
#include "aggtopics/io.hpp"
#include "aggtopics/labeler.hpp"
#include "aggtopics/lda.hpp"
#include "aggtopics/metrics.hpp"
#include "aggtopics/permute.hpp"
#include "aggtopics/pipeline.hpp"
#include "aggtopics/stages.hpp"
#include "aggtopics/sweep.hpp"
#include "aggtopics/topic_model.hpp"
#include "aggtopics/validity.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace aggtopics;

namespace {

std::uint64_t env_seed() {
  const char* v = std::getenv("AGGTOPICS_SEED");
  if (!v || !*v) return 0;
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw InvalidConfig(std::string("AGGTOPICS_SEED is not an unsigned integer: ") + v);
  }
}

std::vector<GroupName> load_names(const std::string& spec) {
  if (spec.empty() || spec == "us_states") return us_states();
  return parse_group_names(io::read_file(spec));
}

void print_length_stats(const LengthStats& s) {
  std::cout << "documents " << s.n_documents << ", mean length " << io::format_fixed(s.mean, 2) << ", median "
            << io::format_fixed(s.median, 1) << ", skewness " << io::format_fixed(s.skewness, 3) << "\n";
}

// Cluster archives carry their c-TF-IDF representations in the config.
std::optional<std::vector<std::vector<std::string>>> stored_representations(const TopicModel& model) {
  if (model.family != ModelFamily::cluster || !model.config.contains("representations")) return std::nullopt;
  std::vector<std::vector<std::string>> out;
  for (const auto& rep : model.config["representations"]) {
    std::vector<std::string> words;
    for (const auto& pair : rep) words.push_back(pair.at(0).get<std::string>());
    out.push_back(std::move(words));
  }
  return out;
}

struct SummaryFlags {
  double frex_weight = 0.5;
  std::size_t top_n = 10;
  std::size_t coherence_m = 10;
  std::size_t exclusivity_m = 10;
  double exclusivity_weight = 0.7;

  void add(CLI::App* app) {
    app->add_option("--frex-weight", frex_weight, "FREX weight on exclusivity for ranking")->capture_default_str();
    app->add_option("--top-n", top_n, "top words per topic")->capture_default_str();
    app->add_option("--coherence-m", coherence_m, "words used for coherence")->capture_default_str();
    app->add_option("--exclusivity-m", exclusivity_m, "words used for exclusivity")->capture_default_str();
    app->add_option("--exclusivity-weight", exclusivity_weight, "FREX weight for exclusivity")->capture_default_str();
  }
  SummaryOptions options() const { return {frex_weight, top_n, coherence_m, exclusivity_m, exclusivity_weight}; }
};

struct LdaFlags {
  std::optional<double> alpha;
  double eta = 0.01;
  int iterations = 2000;
  int burn_in = 0;
  int average_samples = 0;
  int thin = 1;

  void add(CLI::App* app) {
    app->add_option("--alpha", alpha, "document-topic prior (default 50/K)");
    app->add_option("--eta", eta, "topic-word prior")->capture_default_str();
    app->add_option("--iterations", iterations, "Gibbs sweeps")->capture_default_str();
    app->add_option("--burn-in", burn_in, "sweeps discarded before averaging")->capture_default_str();
    app->add_option("--average-samples", average_samples, "thinned states averaged into estimates")
        ->capture_default_str();
    app->add_option("--thin", thin, "sweeps between averaged states")->capture_default_str();
  }
  LdaConfig config(int k, std::uint64_t seed) const {
    auto c = LdaConfig::defaults(k);
    if (alpha) c.alpha = *alpha;
    c.eta = eta;
    c.iterations = iterations;
    c.burn_in = burn_in;
    c.average_samples = average_samples;
    c.thin = thin;
    c.seed = seed;
    c.validate();
    return c;
  }
};

struct PreprocessFlags {
  int min_df = 3;
  bool keep_stopwords = false;
  bool prune_before = false;

  void add(CLI::App* app) {
    app->add_option("--min-df", min_df, "minimum document frequency")->capture_default_str();
    app->add_flag("--keep-stopwords", keep_stopwords, "do not remove stop words");
    app->add_flag("--prune-before-aggregation", prune_before, "compute document frequencies on base units");
  }
  PreprocessOptions options() const { return {min_df, !keep_stopwords, prune_before}; }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topic models under different document definitions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "aggtopics 0.1.0");

  std::uint64_t seed = 0;
  bool seed_given = false;
  auto add_seed = [&](CLI::App* sub) {
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&](const std::uint64_t& s) {
          seed = s;
          seed_given = true;
        },
        "base seed (default: $AGGTOPICS_SEED or 0)");
  };
  auto base_seed = [&] { return seed_given ? seed : env_seed(); };

  // ingest
  auto* ingest = app.add_subcommand("ingest", "tokenize units into a corpus archive");
  std::string ingest_in, ingest_out, ingest_name = "identity";
  PreprocessFlags ingest_pp;
  ingest->add_option("-i,--input", ingest_in, "units JSON-Lines file")->required();
  ingest->add_option("-o,--output", ingest_out, "corpus archive directory")->required();
  ingest->add_option("--name", ingest_name, "definition name")->capture_default_str();
  ingest_pp.add(ingest);

  // aggregate
  auto* aggregate = app.add_subcommand("aggregate", "map base units to model documents");
  std::string agg_in, agg_out, agg_mode = "by_key", agg_key, agg_corpus;
  PreprocessFlags agg_pp;
  aggregate->add_option("-i,--input", agg_in, "units JSON-Lines file")->required();
  aggregate->add_option("-o,--output", agg_out, "aggregated units JSON-Lines file")->required();
  aggregate->add_option("--mode", agg_mode, "identity, by_key or permuted")->capture_default_str();
  aggregate->add_option("--key", agg_key, "metadata key to group by");
  aggregate->add_option("--corpus", agg_corpus, "also write the corpus archive here");
  agg_pp.add(aggregate);
  add_seed(aggregate);

  // fit-lda
  auto* fit_lda_cmd = app.add_subcommand("fit-lda", "fit LDA by collapsed Gibbs sampling");
  std::string lda_corpus, lda_out, lda_format = "csv";
  int lda_k = 0;
  LdaFlags lda_flags;
  fit_lda_cmd->add_option("-c,--corpus", lda_corpus, "corpus archive")->required();
  fit_lda_cmd->add_option("-o,--output", lda_out, "model archive directory")->required();
  fit_lda_cmd->add_option("-K,--topics", lda_k, "number of topics")->required()->check(CLI::PositiveNumber);
  fit_lda_cmd->add_option("--format", lda_format, "matrix format: csv or binary")->capture_default_str();
  lda_flags.add(fit_lda_cmd);
  add_seed(fit_lda_cmd);

  // fit-cluster
  auto* fit_cluster_cmd = app.add_subcommand("fit-cluster", "k-means over embeddings with c-TF-IDF topics");
  std::string cl_corpus, cl_emb, cl_out, cl_format = "csv", cl_units, cl_pool_by;
  int cl_k = 0;
  std::size_t cl_pca = 0, cl_top = 10;
  int cl_iters = 300;
  fit_cluster_cmd->add_option("-c,--corpus", cl_corpus, "corpus archive")->required();
  fit_cluster_cmd->add_option("-e,--embeddings", cl_emb, "embeddings (.csv or raw with .json sidecar)")->required();
  fit_cluster_cmd->add_option("-o,--output", cl_out, "model archive directory")->required();
  fit_cluster_cmd->add_option("-K,--k,--clusters", cl_k, "number of clusters")->required()->check(CLI::PositiveNumber);
  auto* pool_opt = fit_cluster_cmd->add_option("--pool-by", cl_pool_by, "mean-pool unit embeddings by this key");
  fit_cluster_cmd->add_option("-u,--units", cl_units, "units JSON-Lines file (needed with --pool-by)")
      ->needs(pool_opt);
  pool_opt->needs(fit_cluster_cmd->get_option("--units"));
  fit_cluster_cmd->add_option("--pca", cl_pca, "principal components (0 keeps all)")->capture_default_str();
  fit_cluster_cmd->add_option("--top-n", cl_top, "c-TF-IDF words per cluster")->capture_default_str();
  fit_cluster_cmd->add_option("--max-iters", cl_iters, "Lloyd iterations")->capture_default_str();
  fit_cluster_cmd->add_option("--format", cl_format, "matrix format: csv or binary")->capture_default_str();
  add_seed(fit_cluster_cmd);

  // summarize
  auto* summarize_cmd = app.add_subcommand("summarize", "top words, coherence and exclusivity per topic");
  std::string sum_model, sum_corpus, sum_out;
  SummaryFlags sum_flags;
  summarize_cmd->add_option("-m,--model", sum_model, "model archive")->required();
  summarize_cmd->add_option("-c,--corpus", sum_corpus, "corpus archive the model was fitted on")->required();
  summarize_cmd->add_option("-o,--output", sum_out, "summaries JSON");
  sum_flags.add(summarize_cmd);

  // label
  auto* label_cmd = app.add_subcommand("label", "flag group-related topics");
  std::string lab_sum, lab_dict, lab_out, lab_corpus, lab_key = "state", lab_names = "us_states";
  bool lab_build = false;
  label_cmd->add_option("-s,--summaries", lab_sum, "summaries JSON")->required();
  auto* lab_dict_opt = label_cmd->add_option("-d,--dict,--dictionary", lab_dict, "dictionary JSON");
  auto* lab_build_opt =
      label_cmd->add_flag("--build-dict", lab_build, "build a name and abbreviation dictionary on the fly");
  label_cmd->add_option("-c,--corpus", lab_corpus, "identity corpus archive; adds the dominance rule to --build-dict");
  label_cmd->add_option("--group-key", lab_key, "metadata key naming the group")->capture_default_str();
  label_cmd->add_option("--names", lab_names, "'us_states' or a name<TAB>abbreviation file")->capture_default_str();
  lab_dict_opt->excludes(lab_build_opt);
  label_cmd->add_option("-o,--output", lab_out, "label report JSON");

  // build-dict
  auto* dict_cmd = app.add_subcommand("build-dict", "build the group-related token dictionary");
  std::string dict_corpus, dict_out, dict_key = "state", dict_names = "us_states", dict_count = "occurrences";
  double dict_threshold = 0.5;
  std::size_t dict_min = 5;
  bool dict_no_dominance = false, dict_no_exclusions = false;
  dict_cmd->add_option("-c,--corpus", dict_corpus, "identity corpus archive (needed for the dominance rule)");
  dict_cmd->add_option("-o,--output", dict_out, "dictionary JSON")->required();
  dict_cmd->add_option("--group-key", dict_key, "metadata key naming the group")->capture_default_str();
  dict_cmd->add_option("--names", dict_names, "'us_states' or a name<TAB>abbreviation file")->capture_default_str();
  dict_cmd->add_option("--threshold", dict_threshold, "dominance share (strict)")->capture_default_str();
  dict_cmd->add_option("--min-occurrences", dict_min, "dominance minimum count")->capture_default_str();
  dict_cmd->add_option("--count", dict_count, "occurrences or documents")->capture_default_str();
  dict_cmd->add_flag("--no-dominance", dict_no_dominance, "names and abbreviations only");
  dict_cmd->add_flag("--no-exclusions", dict_no_exclusions, "keep ambiguous abbreviations");

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "predictive validity via multinomial logit");
  std::string val_model, val_corpus, val_entity, val_label, val_mode = "unit_mean", val_out;
  double val_ridge = 1e-8, val_fraction = 0.75;
  std::optional<std::size_t> val_count;
  bool val_holdout_heavy = false;
  validate_cmd->add_option("-m,--model", val_model, "model archive")->required();
  validate_cmd->add_option("-c,--corpus", val_corpus, "corpus archive the model was fitted on")->required();
  validate_cmd->add_option("--entity-key", val_entity, "metadata key identifying entities")->required();
  validate_cmd->add_option("--label-key", val_label, "metadata key holding the label")->required();
  validate_cmd->add_option("--mode", val_mode, "aggregated or unit_mean")->capture_default_str();
  validate_cmd->add_option("--ridge", val_ridge, "L2 penalty")->capture_default_str();
  validate_cmd->add_option("--train-fraction", val_fraction, "share of rows used for training")->capture_default_str();
  validate_cmd->add_option("--train-count", val_count, "exact number of training rows");
  validate_cmd->add_flag("--holdout-heavy", val_holdout_heavy, "train on 1000 rows, test on the rest");
  validate_cmd->add_option("-o,--output", val_out, "validity report JSON");
  add_seed(validate_cmd);

  // permute
  auto* permute_cmd = app.add_subcommand("permute", "permutation test of the group-related topic count");
  std::string perm_units, perm_key, perm_dict, perm_out, perm_ci = "normal";
  int perm_k = 0, perm_r = 10, perm_jobs = 1;
  LdaFlags perm_lda;
  PreprocessFlags perm_pp;
  SummaryFlags perm_sum;
  permute_cmd->add_option("-u,--units", perm_units, "units JSON-Lines file")->required();
  permute_cmd->add_option("--key", perm_key, "grouping key")->required();
  permute_cmd->add_option("-d,--dictionary", perm_dict, "dictionary JSON")->required();
  permute_cmd->add_option("-K,--topics", perm_k, "number of topics")->required()->check(CLI::PositiveNumber);
  permute_cmd->add_option("-R,--replicates", perm_r, "permutation replicates")->capture_default_str();
  permute_cmd->add_option("--ci", perm_ci, "normal or t")->capture_default_str();
  permute_cmd->add_option("-j,--jobs", perm_jobs, "concurrent replicates")->capture_default_str();
  permute_cmd->add_option("-o,--output", perm_out, "output directory")->required();
  perm_lda.add(permute_cmd);
  perm_pp.add(permute_cmd);
  perm_sum.add(permute_cmd);
  add_seed(permute_cmd);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "coherence/exclusivity frontier over K");
  std::string sw_corpus, sw_out, sw_family = "gibbs_lda", sw_emb;
  std::vector<int> sw_ks;
  std::vector<std::uint64_t> sw_seeds;
  int sw_jobs = 1;
  bool sw_no_timing = false;
  LdaFlags sw_lda;
  SummaryFlags sw_sum;
  sweep_cmd->add_option("-c,--corpus", sw_corpus, "corpus archive")->required();
  sweep_cmd->add_option("-K,--topics", sw_ks, "values of K")->required()->delimiter(',');
  sweep_cmd->add_option("--seeds", sw_seeds, "model seeds averaged per K (default: the base seed)")->delimiter(',');
  sweep_cmd->add_option("--family", sw_family, "gibbs_lda or cluster")->capture_default_str();
  sweep_cmd->add_option("-e,--embeddings", sw_emb, "embeddings for the cluster family");
  sweep_cmd->add_option("-j,--jobs", sw_jobs, "concurrent fits")->capture_default_str();
  sweep_cmd->add_option("-o,--output", sw_out, "frontier CSV");
  sweep_cmd->add_flag("--no-timing", sw_no_timing, "omit the fit_seconds column");
  sw_lda.add(sweep_cmd);
  sw_sum.add(sweep_cmd);
  add_seed(sweep_cmd);

  // pipeline
  auto* pipeline_cmd = app.add_subcommand("pipeline", "run the full experiment grid from a JSON config");
  std::string pl_config, pl_out;
  std::optional<int> pl_jobs;
  bool pl_fail_fast = false, pl_quiet = false;
  pipeline_cmd->add_option("config", pl_config, "experiment config JSON")->required();
  pipeline_cmd->add_option("-o,--output-dir", pl_out, "override the output directory");
  pipeline_cmd->add_option("-j,--jobs", pl_jobs, "concurrent grid cells");
  pipeline_cmd->add_flag("--fail-fast", pl_fail_fast, "stop at the first failing cell");
  pipeline_cmd->add_flag("-q,--quiet", pl_quiet, "suppress per-cell progress");
  add_seed(pipeline_cmd);

  // report
  auto* report_cmd = app.add_subcommand("report", "re-emit tables from a pipeline output directory");
  std::string rep_dir;
  report_cmd->add_option("dir", rep_dir, "pipeline output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto units = read_units_jsonl(ingest_in);
      CorpusOptions co;
      co.min_doc_freq = ingest_pp.min_df;
      co.remove_stopwords = !ingest_pp.keep_stopwords;
      co.definition_name = ingest_name;
      const auto corpus = build_corpus(units, co);
      write_corpus(ingest_out, corpus);
      std::cout << "units " << units.size() << ", vocabulary " << corpus.num_terms() << ", tokens "
                << corpus.total_tokens() << "\n";
      print_length_stats(length_stats(corpus));
    } else if (*aggregate) {
      const auto units = read_units_jsonl(agg_in);
      DocumentDefinition def;
      def.mode = parse_aggregation_mode(agg_mode);
      def.key = agg_key;
      def.seed = base_seed();
      def.name = def.mode == AggregationMode::identity ? "identity" : std::string(to_string(def.mode)) + "_" + agg_key;
      if (def.mode != AggregationMode::identity && agg_key.empty()) throw InvalidConfig("--key is required");
      const auto pp = agg_pp.options();
      std::set<std::string, std::less<>> vocab;
      if (pp.prune_before_aggregation) vocab = unit_level_vocabulary(units, pp);
      const auto dc = build_definition_corpus(units, def, pp, &vocab);
      write_units_jsonl(agg_out, dc.units);
      if (!agg_corpus.empty()) write_corpus(agg_corpus, dc.corpus);
      std::cout << "documents " << dc.units.size() << ", units without key " << dc.missing_key << "\n";
      print_length_stats(length_stats(dc.corpus));
    } else if (*fit_lda_cmd) {
      const auto corpus = read_corpus(lda_corpus);
      const auto model = fit_lda(corpus, lda_flags.config(lda_k, base_seed()));
      write_model(lda_out, model, parse_matrix_format(lda_format));
      std::cout << "fitted K=" << lda_k << " on " << corpus.num_documents() << " documents in "
                << io::format_fixed(model.fit_seconds, 3) << " s\n";
    } else if (*fit_cluster_cmd) {
      const auto corpus = read_corpus(cl_corpus);
      auto emb = read_embeddings(cl_emb);
      if (!cl_pool_by.empty()) emb = pool_embeddings(emb, grouping_from_units(read_units_jsonl(cl_units), cl_pool_by));
      ClusterOptions co;
      co.kmeans.k = static_cast<std::size_t>(cl_k);
      co.kmeans.seed = base_seed();
      co.kmeans.max_iters = cl_iters;
      co.pca_components = cl_pca;
      co.top_n = cl_top;
      const auto start = std::chrono::steady_clock::now();
      const auto cm = fit_cluster(corpus, emb, co);
      auto model = to_topic_model(cm, corpus);
      model.fit_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      write_model(cl_out, model, parse_matrix_format(cl_format));
      std::cout << "clustered " << corpus.num_documents() << " documents into " << cl_k << " clusters, inertia "
                << io::format_double(cm.inertia) << "\n";
    } else if (*summarize_cmd) {
      const auto model = read_model(sum_model);
      const auto corpus = read_corpus(sum_corpus);
      const auto summaries = summarize(model, corpus, sum_flags.options(), stored_representations(model));
      const auto j = summaries_to_json(summaries);
      if (sum_out.empty())
        std::cout << j.dump(2) << "\n";
      else
        io::write_json(sum_out, j);
    } else if (*label_cmd) {
      const auto summaries = summaries_from_json(io::read_json(lab_sum));
      GroupDictionary dict;
      if (lab_build) {
        DictionaryOptions opts;
        opts.group_key = lab_key;
        opts.names = load_names(lab_names);
        dict = lab_corpus.empty() ? name_dictionary(opts) : build_dictionary(read_corpus(lab_corpus), opts);
      } else if (!lab_dict.empty()) {
        dict = dictionary_from_json(io::read_json(lab_dict));
      } else {
        throw InvalidConfig("label needs --dict or --build-dict");
      }
      const auto report = label_topics(summaries, dict);
      if (!lab_out.empty()) io::write_json(lab_out, label_report_to_json(report));
      std::cout << report.n_related << " of " << summaries.size() << " topics group-related (mass "
                << io::format_fixed(report.mass, 3) << ")\n";
    } else if (*dict_cmd) {
      DictionaryOptions opts;
      opts.group_key = dict_key;
      opts.names = load_names(dict_names);
      opts.dominance_threshold = dict_threshold;
      opts.min_occurrences = dict_min;
      opts.use_dominance = !dict_no_dominance;
      opts.apply_exclusions = !dict_no_exclusions;
      if (dict_count == "documents")
        opts.dominance_count = DominanceCount::documents;
      else if (dict_count != "occurrences")
        throw InvalidConfig("--count must be occurrences or documents");
      GroupDictionary dict;
      if (opts.use_dominance) {
        if (dict_corpus.empty()) throw InvalidConfig("--corpus is required for the dominance rule");
        dict = build_dictionary(read_corpus(dict_corpus), opts);
      } else {
        dict = name_dictionary(opts);
      }
      io::write_json(dict_out, dictionary_to_json(dict));
      std::cout << "dictionary: " << dict.singles.size() << " tokens, " << dict.pairs.size() << " pairs\n";
    } else if (*validate_cmd) {
      const auto model = read_model(val_model);
      const auto corpus = read_corpus(val_corpus);
      const auto design = design_from_model(model, corpus, val_entity, val_label, parse_design_mode(val_mode));
      LogitOptions lo;
      lo.ridge = val_ridge;
      LogitFit fit;
      try {
        fit = fit_multinomial_logit(design, lo);
      } catch (const NonConvergence& e) {
        std::cerr << "warning: " << e.what() << "\n";
        fit = e.fit();
      }
      SplitOptions so = val_holdout_heavy ? SplitOptions::holdout_heavy() : SplitOptions{};
      if (!val_holdout_heavy) {
        so.train_fraction = val_fraction;
        so.train_count = val_count;
      }
      so.seed = base_seed();
      so.logit = lo;
      const auto split = split_accuracy(design, so);
      const auto j = validity_report_json(fit, split);
      if (!val_out.empty()) io::write_json(val_out, j);
      std::cout << j.dump(2) << "\n";
    } else if (*permute_cmd) {
      const auto units = read_units_jsonl(perm_units);
      const auto dict = dictionary_from_json(io::read_json(perm_dict));
      PermutationPipeline pipe{perm_pp.options(), perm_lda.config(perm_k, stage_seed(base_seed(), "fit")),
                               perm_sum.options()};
      PermutationOptions po;
      po.replicates = perm_r;
      po.base_seed = stage_seed(base_seed(), "permute");
      po.ci = parse_ci_method(perm_ci);
      po.jobs = perm_jobs;
      const auto result = run_permutation_test(units, perm_key, pipe, dict, po);
      io::write_json(fs::path(perm_out) / "permutation.json", permutation_to_json(result));
      io::write_file(fs::path(perm_out) / "permutation.csv", permutation_to_csv(result));
      std::cout << "actual " << result.actual_count << ", CI [" << io::format_fixed(result.ci_low, 3) << ", "
                << io::format_fixed(result.ci_high, 3) << "], outside: " << (result.outside_ci ? "yes" : "no")
                << "\n";
    } else if (*sweep_cmd) {
      const auto corpus = read_corpus(sw_corpus);
      SweepOptions so;
      so.family = parse_model_family(sw_family);
      so.k_list = sw_ks;
      so.seeds = sw_seeds.empty() ? std::vector<std::uint64_t>{base_seed()} : sw_seeds;
      so.lda = sw_lda.config(sw_ks.front(), 0);
      so.keep_alpha = sw_lda.alpha.has_value();
      so.summary = sw_sum.options();
      so.jobs = sw_jobs;
      std::optional<EmbeddingMatrix> emb;
      if (so.family == ModelFamily::cluster) {
        if (sw_emb.empty()) throw InvalidConfig("--embeddings is required for the cluster family");
        emb = read_embeddings(sw_emb);
        so.embeddings = &*emb;
      }
      const auto csv = frontier_to_csv(sweep(corpus, so), !sw_no_timing);
      if (sw_out.empty())
        std::cout << csv;
      else
        io::write_file(sw_out, csv);
    } else if (*pipeline_cmd) {
      const fs::path config_path(pl_config);
      auto config = ExperimentConfig::from_json(io::read_json(config_path), config_path.parent_path());
      if (!pl_out.empty()) config.output_dir = pl_out;
      if (pl_jobs) config.jobs = *pl_jobs;
      if (pl_fail_fast) config.fail_fast = true;
      if (seed_given) {
        config.base_seed = seed;
      } else if (!io::read_json(config_path).contains("base_seed")) {
        config.base_seed = env_seed();
      }
      CellLogger log;
      if (!pl_quiet) log = [](std::string_view cell, std::string_view msg) {
        std::cerr << "[" << cell << "] " << msg << std::endl;
      };
      const auto report = run_pipeline(config, log);
      std::size_t failed = 0;
      for (const auto& c : report.cells) failed += c.ok ? 0 : 1;
      std::cout << counts_table_csv(report);
      std::cout << report.cells.size() << " cells, " << failed << " failed; output in "
                << config.output_dir.generic_string() << "\n";
      return failed == 0 ? 0 : 3;
    } else if (*report_cmd) {
      const fs::path dir(rep_dir);
      auto report = ExperimentReport::from_json(io::read_json(dir / "report.json"));
      if (fs::exists(dir / "timing.json")) {
        const auto timing = io::read_json(dir / "timing.json");
        const auto& cells = timing.at("cells");
        for (std::size_t i = 0; i < report.cells.size() && i < cells.size(); ++i)
          report.cells[i].fit_seconds = cells[i].at("fit_seconds").get<double>();
      }
      emit_tables(report, dir);
      std::cout << counts_table_csv(report);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
