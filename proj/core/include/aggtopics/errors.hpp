#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace aggtopics {

// Base class for every error raised by the library. Subclasses name the
// failing condition so callers (and the CLI) can report it per stage.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class AllDocumentsEmpty : public Error {
 public:
  AllDocumentsEmpty() : Error("every document is empty after preprocessing") {}
};

class MissingKey : public Error {
 public:
  MissingKey(const std::string& key, std::size_t count)
      : Error("metadata key '" + key + "' missing on " + std::to_string(count) + " unit(s)"),
        key_(key),
        count_(count) {}
  const std::string& key() const noexcept { return key_; }
  std::size_t count() const noexcept { return count_; }

 private:
  std::string key_;
  std::size_t count_;
};

class EmptyResult : public Error {
 public:
  using Error::Error;
};

class MultiValuedKey : public Error {
 public:
  explicit MultiValuedKey(const std::string& unit_id)
      : Error("key is not single-valued on unit '" + unit_id + "'") {}
};

class KTooLarge : public Error {
 public:
  KTooLarge(std::size_t k, std::size_t n)
      : Error("k=" + std::to_string(k) + " exceeds number of points " + std::to_string(n)) {}
};

class MissingEmbedding : public Error {
 public:
  explicit MissingEmbedding(const std::string& unit_id)
      : Error("no embedding row for unit '" + unit_id + "'") {}
};

class DegenerateWord : public Error {
 public:
  explicit DegenerateWord(const std::string& term)
      : Error("term '" + term + "' has zero document frequency") {}
};

class MissingGroupKey : public Error {
 public:
  MissingGroupKey(const std::string& key, const std::string& doc_id)
      : Error("document '" + doc_id + "' lacks a single value for group key '" + key + "'") {}
};

class MissingEntityKey : public Error {
 public:
  MissingEntityKey(const std::string& key, const std::string& doc_id)
      : Error("document '" + doc_id + "' lacks entity key '" + key + "'") {}
};

class DegenerateSplit : public Error {
 public:
  using Error::Error;
};

}  // namespace aggtopics
