#include "aggtopics/permute.hpp"

#include <cmath>
#include <numeric>

#include <boost/math/distributions/students_t.hpp>

#include "aggtopics/errors.hpp"
#include "aggtopics/io.hpp"
#include "aggtopics/parallel.hpp"

namespace aggtopics {

using nlohmann::json;

CiMethod parse_ci_method(std::string_view name) {
  if (name == "normal") return CiMethod::normal;
  if (name == "t" || name == "student_t") return CiMethod::student_t;
  throw InvalidConfig("unknown CI method '" + std::string(name) + "'");
}

PermutationResult summarize_permutation(std::span<const std::int64_t> replicate_counts,
                                        std::span<const std::uint64_t> seeds, std::int64_t actual_count,
                                        CiMethod method) {
  const auto r = replicate_counts.size();
  if (r < 2) throw InvalidConfig("at least two replicates required");
  PermutationResult out;
  out.replicate_counts.assign(replicate_counts.begin(), replicate_counts.end());
  out.seeds.assign(seeds.begin(), seeds.end());
  out.actual_count = actual_count;

  const double n = static_cast<double>(r);
  double sum = 0.0;
  for (auto c : replicate_counts) sum += static_cast<double>(c);
  out.mean = sum / n;
  double ss = 0.0;
  for (auto c : replicate_counts) {
    const double d = static_cast<double>(c) - out.mean;
    ss += d * d;
  }
  out.sd = std::sqrt(ss / (n - 1.0));

  double multiplier = 1.96;
  if (method == CiMethod::student_t) {
    boost::math::students_t dist(n - 1.0);
    multiplier = boost::math::quantile(dist, 0.975);
  }
  const double half = multiplier * out.sd / std::sqrt(n);
  out.ci_low = out.mean - half;
  out.ci_high = out.mean + half;
  const double actual = static_cast<double>(actual_count);
  out.outside_ci = actual < out.ci_low || actual > out.ci_high;
  return out;
}

std::uint64_t replicate_seed(std::uint64_t base_seed, int replicate) {
  return base_seed ^ static_cast<std::uint64_t>(replicate);
}

PermutationResult run_permutation_test(const std::string& key, const DefinitionCounter& counter,
                                       const PermutationOptions& options) {
  if (options.replicates < 2) throw InvalidConfig("at least two replicates required");
  const auto r = static_cast<std::size_t>(options.replicates);

  // Slot 0 is the real aggregation; slots 1..R the permuted replicates.
  std::vector<std::int64_t> counts(r + 1);
  std::vector<std::uint64_t> seeds(r);
  for (std::size_t i = 0; i < r; ++i) seeds[i] = replicate_seed(options.base_seed, static_cast<int>(i));

  parallel_for_index(r + 1, options.jobs, [&](std::size_t slot) {
    DocumentDefinition def;
    def.key = key;
    if (slot == 0) {
      def.name = "by_" + key;
      def.mode = AggregationMode::by_key;
    } else {
      def.name = "permuted_" + key + "_" + std::to_string(slot - 1);
      def.mode = AggregationMode::permuted_by_key;
      def.seed = seeds[slot - 1];
    }
    counts[slot] = counter(def);
  });

  return summarize_permutation(std::span(counts).subspan(1), seeds, counts[0], options.ci);
}

PermutationResult run_permutation_test(std::span<const RawUnit> units, const std::string& key,
                                       const PermutationPipeline& pipeline, const GroupDictionary& dictionary,
                                       const PermutationOptions& options) {
  std::set<std::string, std::less<>> unit_vocab;
  if (pipeline.preprocess.prune_before_aggregation) unit_vocab = unit_level_vocabulary(units, pipeline.preprocess);

  auto counter = [&](const DocumentDefinition& def) -> std::int64_t {
    const auto dc = build_definition_corpus(units, def, pipeline.preprocess, &unit_vocab);
    const auto cell = fit_and_label_lda(dc.corpus, pipeline.lda, pipeline.summary, dictionary);
    return static_cast<std::int64_t>(cell.labels.n_related);
  };
  return run_permutation_test(key, counter, options);
}

json permutation_to_json(const PermutationResult& result) {
  return {{"replicate_counts", result.replicate_counts},
          {"seeds", result.seeds},
          {"mean", result.mean},
          {"sd", result.sd},
          {"ci_low", result.ci_low},
          {"ci_high", result.ci_high},
          {"actual_count", result.actual_count},
          {"outside_ci", result.outside_ci}};
}

std::string permutation_to_csv(const PermutationResult& result) {
  std::string out = "row,seed,count,mean,sd,ci_low,ci_high,actual_count,outside_ci\n";
  for (std::size_t i = 0; i < result.replicate_counts.size(); ++i) {
    out += std::to_string(i) + "," + std::to_string(result.seeds.at(i)) + "," +
           std::to_string(result.replicate_counts[i]) + ",,,,,,\n";
  }
  out += "summary,,," + io::format_double(result.mean) + "," + io::format_double(result.sd) + "," +
         io::format_double(result.ci_low) + "," + io::format_double(result.ci_high) + "," +
         std::to_string(result.actual_count) + "," + (result.outside_ci ? "true" : "false") + "\n";
  return out;
}

}  // namespace aggtopics
