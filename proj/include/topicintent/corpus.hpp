#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace topicintent {

using WordId = std::uint32_t;

struct RawDocument {
  std::string doc_id;
  std::string title;
};

/// Normalized title. Tokens are lowercase, alphabetic, at least
/// `min_token_length` long, stemmed and free of stopwords. An empty token list
/// marks a title that had nothing left after cleaning.
struct TokenizedDocument {
  std::string doc_id;
  std::vector<std::string> tokens;

  bool operator==(const TokenizedDocument&) const = default;
};

struct PreprocessConfig {
  std::size_t min_token_length = 2;
  bool stem = true;
};

TokenizedDocument preprocess(const RawDocument& doc, const PreprocessConfig& config = {});

class Dictionary {
 public:
  Dictionary() = default;

  /// Tokens with corpus frequency >= min_count, numbered in lexicographic
  /// order. Throws if nothing survives.
  static Dictionary build(std::span<const TokenizedDocument> docs, std::size_t min_count);

  /// Rebuilds from a stored token list (index = position). Frequencies may be
  /// empty when unknown.
  static Dictionary from_tokens(std::vector<std::string> tokens,
                                std::vector<std::size_t> frequencies, std::size_t min_count);

  std::size_t size() const { return tokens_.size(); }
  std::optional<WordId> find(std::string_view token) const;
  const std::string& token(WordId id) const { return tokens_.at(id); }
  std::size_t frequency(WordId id) const { return frequencies_.at(id); }
  std::size_t min_count() const { return min_count_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::size_t>& frequencies() const { return frequencies_; }

  bool operator==(const Dictionary& other) const {
    return tokens_ == other.tokens_ && frequencies_ == other.frequencies_ &&
           min_count_ == other.min_count_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::size_t> frequencies_;
  std::unordered_map<std::string, WordId> index_;
  std::size_t min_count_ = 1;
};

struct TermCount {
  WordId word;
  std::uint32_t count;

  bool operator==(const TermCount&) const = default;
};

/// Sparse term counts sorted by word id.
using BowVector = std::vector<TermCount>;

BowVector to_bow(const TokenizedDocument& doc, const Dictionary& dict);

struct BowCorpus {
  Dictionary dictionary;
  std::vector<std::string> doc_ids;
  std::vector<BowVector> docs;

  std::size_t num_docs() const { return docs.size(); }
  std::size_t vocab_size() const { return dictionary.size(); }
};

BowCorpus make_bow_corpus(std::span<const TokenizedDocument> docs, Dictionary dict);

// CSV with header `doc_id,title` (RFC-4180 quoting). Validates unique ids and
// non-blank titles.
std::vector<RawDocument> read_titles_csv(std::istream& in);

void write_tokenized_jsonl(std::ostream& out, std::span<const TokenizedDocument> docs);
std::vector<TokenizedDocument> read_tokenized_jsonl(std::istream& in);

nlohmann::ordered_json dictionary_to_json(const Dictionary& dict);
Dictionary dictionary_from_json(const nlohmann::json& j);

}  // namespace topicintent
