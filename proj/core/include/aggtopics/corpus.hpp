#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace aggtopics {

using Metadata = std::map<std::string, std::vector<std::string>>;
using TermId = std::uint32_t;

// One ingested text unit (a tweet, a page) with its metadata.
struct RawUnit {
  std::string id;
  std::string text;
  Metadata meta;

  friend bool operator==(const RawUnit&, const RawUnit&) = default;
};

// Lexicographically ordered term list with dense ids in [0, V).
class Vocabulary {
 public:
  Vocabulary() = default;
  // Terms are sorted and deduplicated.
  explicit Vocabulary(std::vector<std::string> terms);

  std::size_t size() const noexcept { return terms_.size(); }
  const std::string& term(TermId id) const { return terms_.at(id); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  std::optional<TermId> find(std::string_view token) const;

 private:
  std::vector<std::string> terms_;
  std::unordered_map<std::string, TermId> index_;
};

struct TermCount {
  TermId term;
  std::uint32_t count;
  friend bool operator==(const TermCount&, const TermCount&) = default;
};

// Sparse bag of words, sorted by term id.
struct Document {
  std::string id;
  std::vector<TermCount> counts;
  Metadata meta;

  std::uint64_t total() const noexcept;
  friend bool operator==(const Document&, const Document&) = default;
};

// Immutable document-term representation of one document definition.
class Corpus {
 public:
  Corpus() = default;
  // Validates term ids, strictly increasing counts, and non-empty documents.
  Corpus(Vocabulary vocabulary, std::vector<Document> documents, std::string definition_name);

  const Vocabulary& vocabulary() const noexcept { return vocabulary_; }
  const std::vector<Document>& documents() const noexcept { return documents_; }
  const std::string& definition_name() const noexcept { return definition_name_; }
  std::size_t num_documents() const noexcept { return documents_.size(); }
  std::size_t num_terms() const noexcept { return vocabulary_.size(); }
  std::uint64_t total_tokens() const noexcept;

 private:
  Vocabulary vocabulary_;
  std::vector<Document> documents_;
  std::string definition_name_;
};

// NFC-normalizes and lowercases `text`, strips URLs, and splits into maximal
// alphanumeric runs optionally prefixed by a single '#' or '@'.
std::vector<std::string> tokenize(std::string_view text);

// Bundled English stop-word list.
const std::set<std::string, std::less<>>& english_stopwords();
std::string_view stopword_list_version();

// Drops stop words; '#'/'@'-prefixed tokens are always kept.
std::vector<std::string> remove_stopwords(std::vector<std::string> tokens);
bool is_stopword(std::string_view token);

struct CorpusOptions {
  int min_doc_freq = 3;
  bool remove_stopwords = true;
  std::string definition_name;
  // When set, only these tokens may enter the vocabulary (document
  // frequency pruning computed on a different definition, e.g. before
  // aggregation).
  std::optional<std::set<std::string, std::less<>>> allowed_terms;
};

Corpus build_corpus(std::span<const RawUnit> units, const CorpusOptions& options);
Corpus build_corpus(std::span<const RawUnit> units, int min_doc_freq);

// JSON-Lines: {"id": str, "text": str, "meta": {key: [str, ...]}} per line.
std::vector<RawUnit> read_units_jsonl(const std::filesystem::path& path);
std::vector<RawUnit> parse_units_jsonl(std::string_view content);
void write_units_jsonl(const std::filesystem::path& path, std::span<const RawUnit> units);

// Corpus archive directory: corpus.json, vocabulary.txt, docs.jsonl.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus);
Corpus read_corpus(const std::filesystem::path& dir);

}  // namespace aggtopics
