#include "topicintent/corpus.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "topicintent/error.hpp"
#include "topicintent/text.hpp"

namespace topicintent {
namespace {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if ((c & 0xE0) == 0xC0 && c >= 0xC2) {
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      extra = 2;
    } else if ((c & 0xF8) == 0xF0 && c <= 0xF4) {
      extra = 3;
    } else {
      return false;
    }
    if (i + extra >= s.size()) return false;
    for (std::size_t k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return false;
    }
    i += extra + 1;
  }
  return true;
}

bool keep(std::string_view token, const PreprocessConfig& config) {
  return token.size() >= config.min_token_length && !is_stopword(token);
}

// Porter output is not always a fixed point of Porter itself ("agreed" ->
// "agre" -> "agr"); iterating keeps preprocess idempotent.
std::string stem_to_fixpoint(std::string word) {
  for (;;) {
    std::string next = porter_stem(word);
    if (next == word) return word;
    word = std::move(next);
  }
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Reads one RFC-4180 record. Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  char ch = 0;
  while (in.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_started = false;
    } else if (ch == '\r') {
      if (in.peek() == '\n') continue;
      field.push_back(ch);
    } else if (ch == '\n') {
      ++line;
      fields.push_back(std::move(field));
      return true;
    } else {
      field.push_back(ch);
      field_started = true;
    }
  }
  if (quoted) fail(ErrorKind::kInvalidInput, "unterminated quoted field near line " + std::to_string(line));
  fields.push_back(std::move(field));
  return true;
}

}  // namespace

TokenizedDocument preprocess(const RawDocument& doc, const PreprocessConfig& config) {
  if (!valid_utf8(doc.title)) {
    fail(ErrorKind::kInvalidInput, "title of document '" + doc.doc_id + "' is not valid UTF-8");
  }
  TokenizedDocument out{doc.doc_id, {}};
  std::string current;
  auto flush = [&] {
    if (current.empty()) return;
    if (keep(current, config)) {
      std::string token = config.stem ? stem_to_fixpoint(current) : current;
      if (keep(token, config)) out.tokens.push_back(std::move(token));
    }
    current.clear();
  };
  // Anything outside ASCII letters (digits, punctuation, hyphens, non-ASCII
  // bytes) separates tokens.
  for (char ch : doc.title) {
    if (ch >= 'A' && ch <= 'Z') {
      current.push_back(static_cast<char>(ch - 'A' + 'a'));
    } else if (ch >= 'a' && ch <= 'z') {
      current.push_back(ch);
    } else {
      flush();
    }
  }
  flush();
  return out;
}

Dictionary Dictionary::build(std::span<const TokenizedDocument> docs, std::size_t min_count) {
  std::map<std::string, std::size_t, std::less<>> counts;
  for (const auto& doc : docs) {
    for (const auto& token : doc.tokens) ++counts[token];
  }
  const std::size_t threshold = std::max<std::size_t>(min_count, 1);
  std::vector<std::string> tokens;
  std::vector<std::size_t> freqs;
  for (const auto& [token, count] : counts) {
    if (count >= threshold) {
      tokens.push_back(token);
      freqs.push_back(count);
    }
  }
  if (tokens.empty()) {
    fail(ErrorKind::kInvalidInput,
         "dictionary is empty (min_count=" + std::to_string(min_count) + ")");
  }
  return from_tokens(std::move(tokens), std::move(freqs), min_count);
}

Dictionary Dictionary::from_tokens(std::vector<std::string> tokens,
                                   std::vector<std::size_t> frequencies, std::size_t min_count) {
  if (!frequencies.empty() && frequencies.size() != tokens.size()) {
    fail(ErrorKind::kSchemaMismatch, "dictionary frequency list length differs from token list");
  }
  Dictionary d;
  d.min_count_ = min_count;
  d.tokens_ = std::move(tokens);
  d.frequencies_ = frequencies.empty() ? std::vector<std::size_t>(d.tokens_.size(), 0)
                                       : std::move(frequencies);
  d.index_.reserve(d.tokens_.size());
  for (std::size_t i = 0; i < d.tokens_.size(); ++i) {
    if (!d.index_.emplace(d.tokens_[i], static_cast<WordId>(i)).second) {
      fail(ErrorKind::kSchemaMismatch, "duplicate dictionary token '" + d.tokens_[i] + "'");
    }
  }
  return d;
}

std::optional<WordId> Dictionary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

BowVector to_bow(const TokenizedDocument& doc, const Dictionary& dict) {
  std::map<WordId, std::uint32_t> counts;
  for (const auto& token : doc.tokens) {
    if (auto id = dict.find(token)) ++counts[*id];
  }
  BowVector bow;
  bow.reserve(counts.size());
  for (const auto& [word, count] : counts) bow.push_back({word, count});
  return bow;
}

BowCorpus make_bow_corpus(std::span<const TokenizedDocument> docs, Dictionary dict) {
  BowCorpus corpus;
  corpus.doc_ids.reserve(docs.size());
  corpus.docs.reserve(docs.size());
  for (const auto& doc : docs) {
    corpus.doc_ids.push_back(doc.doc_id);
    corpus.docs.push_back(to_bow(doc, dict));
  }
  corpus.dictionary = std::move(dict);
  return corpus;
}

std::vector<RawDocument> read_titles_csv(std::istream& in) {
  std::vector<std::string> fields;
  std::size_t line = 1;
  if (!read_csv_record(in, fields, line)) fail(ErrorKind::kInvalidInput, "empty CSV input");
  if (!fields.empty() && fields[0].starts_with("\xEF\xBB\xBF")) fields[0].erase(0, 3);
  std::optional<std::size_t> id_col;
  std::optional<std::size_t> title_col;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    const auto name = trim(fields[i]);
    if (name == "doc_id") id_col = i;
    if (name == "title") title_col = i;
  }
  if (!id_col || !title_col) {
    fail(ErrorKind::kSchemaMismatch, "CSV header must contain 'doc_id' and 'title' columns");
  }
  const std::size_t needed = std::max(*id_col, *title_col) + 1;

  std::vector<RawDocument> docs;
  std::set<std::string, std::less<>> seen;
  std::size_t record_line = line;
  while (read_csv_record(in, fields, line)) {
    if (fields.size() == 1 && trim(fields[0]).empty()) {
      record_line = line;
      continue;
    }
    if (fields.size() < needed) {
      fail(ErrorKind::kInvalidInput,
           "line " + std::to_string(record_line) + ": expected at least " +
               std::to_string(needed) + " fields");
    }
    RawDocument doc{std::string(trim(fields[*id_col])), fields[*title_col]};
    if (doc.doc_id.empty()) {
      fail(ErrorKind::kInvalidInput, "line " + std::to_string(record_line) + ": empty doc_id");
    }
    if (trim(doc.title).empty()) {
      fail(ErrorKind::kInvalidInput,
           "line " + std::to_string(record_line) + ": blank title for '" + doc.doc_id + "'");
    }
    if (!seen.insert(doc.doc_id).second) {
      fail(ErrorKind::kInvalidInput,
           "line " + std::to_string(record_line) + ": duplicate doc_id '" + doc.doc_id + "'");
    }
    docs.push_back(std::move(doc));
    record_line = line;
  }
  return docs;
}

void write_tokenized_jsonl(std::ostream& out, std::span<const TokenizedDocument> docs) {
  for (const auto& doc : docs) {
    nlohmann::ordered_json j;
    j["doc_id"] = doc.doc_id;
    j["tokens"] = doc.tokens;
    out << j.dump() << '\n';
  }
}

std::vector<TokenizedDocument> read_tokenized_jsonl(std::istream& in) {
  std::vector<TokenizedDocument> docs;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (trim(text).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(text);
      docs.push_back({j.at("doc_id").get<std::string>(),
                      j.at("tokens").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::kSchemaMismatch,
           "tokenized corpus line " + std::to_string(line) + ": " + e.what());
    }
  }
  return docs;
}

nlohmann::ordered_json dictionary_to_json(const Dictionary& dict) {
  nlohmann::ordered_json j;
  j["min_count"] = dict.min_count();
  j["tokens"] = dict.tokens();
  j["frequencies"] = dict.frequencies();
  return j;
}

Dictionary dictionary_from_json(const nlohmann::json& j) {
  try {
    std::vector<std::size_t> freqs;
    if (j.contains("frequencies")) freqs = j.at("frequencies").get<std::vector<std::size_t>>();
    return Dictionary::from_tokens(j.at("tokens").get<std::vector<std::string>>(),
                                   std::move(freqs), j.at("min_count").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kSchemaMismatch, std::string("dictionary: ") + e.what());
  }
}

}  // namespace topicintent
