#include "aggtopics/corpus.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <nlohmann/json.hpp>

#include "aggtopics/errors.hpp"
#include "aggtopics/io.hpp"
#include "bundled_data.hpp"

namespace aggtopics {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Vocabulary / Document / Corpus

Vocabulary::Vocabulary(std::vector<std::string> terms) : terms_(std::move(terms)) {
  std::sort(terms_.begin(), terms_.end());
  terms_.erase(std::unique(terms_.begin(), terms_.end()), terms_.end());
  index_.reserve(terms_.size());
  for (TermId i = 0; i < terms_.size(); ++i) index_.emplace(terms_[i], i);
}

std::optional<TermId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Document::total() const noexcept {
  std::uint64_t n = 0;
  for (const auto& tc : counts) n += tc.count;
  return n;
}

Corpus::Corpus(Vocabulary vocabulary, std::vector<Document> documents, std::string definition_name)
    : vocabulary_(std::move(vocabulary)),
      documents_(std::move(documents)),
      definition_name_(std::move(definition_name)) {
  const auto v = vocabulary_.size();
  for (const auto& doc : documents_) {
    if (doc.total() == 0) throw InvalidConfig("document '" + doc.id + "' is empty");
    for (std::size_t i = 0; i < doc.counts.size(); ++i) {
      if (doc.counts[i].term >= v) throw InvalidConfig("term id out of range in '" + doc.id + "'");
      if (i > 0 && doc.counts[i].term <= doc.counts[i - 1].term)
        throw InvalidConfig("term ids not strictly increasing in '" + doc.id + "'");
    }
  }
}

std::uint64_t Corpus::total_tokens() const noexcept {
  std::uint64_t n = 0;
  for (const auto& d : documents_) n += d.total();
  return n;
}

// ---------------------------------------------------------------------------
// Tokenizer

namespace {

bool starts_with_at(const icu::UnicodeString& s, int32_t pos, const char16_t* prefix) {
  return s.compare(pos, std::char_traits<char16_t>::length(prefix), prefix) == 0;
}

// Blanks out every URL (http://, https://, www.) up to the next whitespace.
void strip_urls(icu::UnicodeString& s) {
  int32_t i = 0;
  while (i < s.length()) {
    const bool boundary = i == 0 || !u_isalnum(s.char32At(s.moveIndex32(i, -1)));
    if (boundary && (starts_with_at(s, i, u"http://") || starts_with_at(s, i, u"https://") ||
                     starts_with_at(s, i, u"www."))) {
      int32_t j = i;
      while (j < s.length() && !u_isUWhiteSpace(s.char32At(j))) j = s.moveIndex32(j, 1);
      s.replace(i, j - i, u' ');
    }
    i = s.moveIndex32(i, 1);
  }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  if (text.empty()) return tokens;

  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");

  icu::UnicodeString raw = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  icu::UnicodeString s = nfc->normalize(raw, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  s.toLower(icu::Locale::getRoot());
  strip_urls(s);

  int32_t i = 0;
  const int32_t n = s.length();
  while (i < n) {
    UChar32 c = s.char32At(i);
    int32_t start = -1;
    if (u_isalnum(c)) {
      start = i;
    } else if (c == u'#' || c == u'@') {
      int32_t next = s.moveIndex32(i, 1);
      if (next < n && u_isalnum(s.char32At(next))) start = i;
    }
    if (start < 0) {
      i = s.moveIndex32(i, 1);
      continue;
    }
    int32_t j = s.moveIndex32(start, 1);
    while (j < n && u_isalnum(s.char32At(j))) j = s.moveIndex32(j, 1);
    std::string token;
    s.tempSubStringBetween(start, j).toUTF8String(token);
    tokens.push_back(std::move(token));
    i = j;
  }
  return tokens;
}

// ---------------------------------------------------------------------------
// Stop words

const std::set<std::string, std::less<>>& english_stopwords() {
  static const auto words = [] {
    std::set<std::string, std::less<>> out;
    std::istringstream in{std::string(detail::kStopwordsFile)};
    for (std::string line; std::getline(in, line);) {
      if (line.empty() || line.front() == '#') continue;
      out.insert(line);
    }
    return out;
  }();
  return words;
}

std::string_view stopword_list_version() { return "en-1"; }

bool is_stopword(std::string_view token) {
  if (!token.empty() && (token.front() == '#' || token.front() == '@')) return false;
  return english_stopwords().contains(token);
}

std::vector<std::string> remove_stopwords(std::vector<std::string> tokens) {
  std::erase_if(tokens, [](const std::string& t) { return is_stopword(t); });
  return tokens;
}

// ---------------------------------------------------------------------------
// Corpus construction

Corpus build_corpus(std::span<const RawUnit> units, const CorpusOptions& options) {
  if (options.min_doc_freq < 1) throw InvalidConfig("min_doc_freq must be >= 1");

  std::vector<std::vector<std::string>> unit_tokens;
  unit_tokens.reserve(units.size());
  std::unordered_map<std::string, int> doc_freq;
  for (const auto& unit : units) {
    auto tokens = tokenize(unit.text);
    if (options.remove_stopwords) tokens = remove_stopwords(std::move(tokens));
    if (options.allowed_terms) {
      std::erase_if(tokens, [&](const std::string& t) { return !options.allowed_terms->contains(t); });
    }
    std::unordered_set<std::string_view> seen(tokens.begin(), tokens.end());
    for (auto t : seen) ++doc_freq[std::string(t)];
    unit_tokens.push_back(std::move(tokens));
  }

  std::vector<std::string> kept;
  for (const auto& [term, df] : doc_freq) {
    if (df >= options.min_doc_freq) kept.push_back(term);
  }
  Vocabulary vocab(std::move(kept));

  std::vector<Document> documents;
  for (std::size_t u = 0; u < units.size(); ++u) {
    std::map<TermId, std::uint32_t> counts;
    for (const auto& t : unit_tokens[u]) {
      if (auto id = vocab.find(t)) ++counts[*id];
    }
    if (counts.empty()) continue;
    Document doc{units[u].id, {}, units[u].meta};
    doc.counts.reserve(counts.size());
    for (auto [term, c] : counts) doc.counts.push_back({term, c});
    documents.push_back(std::move(doc));
  }
  if (documents.empty()) throw AllDocumentsEmpty();
  return Corpus(std::move(vocab), std::move(documents), options.definition_name);
}

Corpus build_corpus(std::span<const RawUnit> units, int min_doc_freq) {
  CorpusOptions options;
  options.min_doc_freq = min_doc_freq;
  return build_corpus(units, options);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

Metadata parse_meta(const json& j, const std::string& unit_id) {
  Metadata meta;
  if (j.is_null()) return meta;
  if (!j.is_object()) throw ParseError("unit '" + unit_id + "': meta must be an object");
  for (const auto& [key, value] : j.items()) {
    std::vector<std::string> values;
    if (value.is_string()) {
      values.push_back(value.get<std::string>());
    } else if (value.is_array()) {
      for (const auto& v : value) {
        if (!v.is_string()) throw ParseError("unit '" + unit_id + "': meta values must be strings");
        values.push_back(v.get<std::string>());
      }
    } else {
      throw ParseError("unit '" + unit_id + "': meta '" + key + "' must be a string list");
    }
    for (const auto& v : values) {
      if (v.empty()) throw ParseError("unit '" + unit_id + "': empty meta value under '" + key + "'");
    }
    meta.emplace(key, std::move(values));
  }
  return meta;
}

json meta_to_json(const Metadata& meta) {
  json j = json::object();
  for (const auto& [k, v] : meta) j[k] = v;
  return j;
}

}  // namespace

std::vector<RawUnit> parse_units_jsonl(std::string_view content) {
  std::vector<RawUnit> units;
  std::unordered_set<std::string> ids;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    auto line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == content.size()) break;
      continue;
    }
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("text") ||
        !j["text"].is_string()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected {\"id\": str, \"text\": str}");
    }
    RawUnit unit;
    unit.id = j["id"].get<std::string>();
    unit.text = j["text"].get<std::string>();
    unit.meta = parse_meta(j.value("meta", json()), unit.id);
    if (!ids.insert(unit.id).second) throw ParseError("duplicate unit id '" + unit.id + "'");
    units.push_back(std::move(unit));
    if (end == content.size()) break;
  }
  return units;
}

std::vector<RawUnit> read_units_jsonl(const std::filesystem::path& path) {
  return parse_units_jsonl(io::read_file(path));
}

void write_units_jsonl(const std::filesystem::path& path, std::span<const RawUnit> units) {
  std::string out;
  for (const auto& u : units) {
    json j = {{"id", u.id}, {"text", u.text}, {"meta", meta_to_json(u.meta)}};
    out += j.dump();
    out += '\n';
  }
  io::write_file(path, out);
}

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus) {
  std::filesystem::create_directories(dir);
  io::write_json(dir / "corpus.json", {{"format_version", 1},
                                       {"definition_name", corpus.definition_name()},
                                       {"num_documents", corpus.num_documents()},
                                       {"num_terms", corpus.num_terms()},
                                       {"stopwords", stopword_list_version()}});
  std::string vocab;
  for (const auto& t : corpus.vocabulary().terms()) {
    vocab += t;
    vocab += '\n';
  }
  io::write_file(dir / "vocabulary.txt", vocab);

  std::string docs;
  for (const auto& d : corpus.documents()) {
    json counts = json::array();
    for (const auto& tc : d.counts) counts.push_back({tc.term, tc.count});
    json j = {{"id", d.id}, {"counts", std::move(counts)}, {"meta", meta_to_json(d.meta)}};
    docs += j.dump();
    docs += '\n';
  }
  io::write_file(dir / "docs.jsonl", docs);
}

Corpus read_corpus(const std::filesystem::path& dir) {
  const json header = io::read_json(dir / "corpus.json");
  std::vector<std::string> terms;
  {
    std::istringstream in(io::read_file(dir / "vocabulary.txt"));
    for (std::string line; std::getline(in, line);) {
      if (!line.empty()) terms.push_back(line);
    }
  }
  if (!std::is_sorted(terms.begin(), terms.end()))
    throw ParseError("vocabulary.txt is not in lexicographic order");
  Vocabulary vocab(std::move(terms));

  std::vector<Document> documents;
  std::istringstream in(io::read_file(dir / "docs.jsonl"));
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      Document doc;
      doc.id = j.at("id").get<std::string>();
      for (const auto& pair : j.at("counts")) {
        doc.counts.push_back({pair.at(0).get<TermId>(), pair.at(1).get<std::uint32_t>()});
      }
      doc.meta = parse_meta(j.value("meta", json()), doc.id);
      documents.push_back(std::move(doc));
    } catch (const json::exception& e) {
      throw ParseError("docs.jsonl: " + std::string(e.what()));
    }
  }
  return Corpus(std::move(vocab), std::move(documents),
                header.value("definition_name", std::string()));
}

}  // namespace aggtopics
