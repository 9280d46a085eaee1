#include <map>
#include <sstream>

#include "doctest.h"
#include "topicintent/corpus.hpp"
#include "topicintent/error.hpp"
#include "topicintent/random.hpp"

using namespace topicintent;

namespace {

std::vector<std::string> tokens_of(const std::string& title) {
  return preprocess({"d", title}).tokens;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string s;
  for (const auto& t : tokens) s += (s.empty() ? "" : " ") + t;
  return s;
}

}  // namespace

TEST_CASE("preprocess examples") {
  CHECK(tokens_of("Deep Learning for NLP!") == std::vector<std::string>{"deep", "learn", "nlp"});
  CHECK(tokens_of("The of and").empty());
  CHECK(tokens_of("2021 2022").empty());
  CHECK(tokens_of("state-of-the-art x") == std::vector<std::string>{"state", "art"});
  CHECK(tokens_of("Caf\xc3\xa9 networks") == std::vector<std::string>{"caf", "network"});
  CHECK(preprocess({"keep", "of the"}).doc_id == "keep");
}

TEST_CASE("preprocess rejects invalid utf-8") {
  try {
    preprocess({"bad", "abc \xff def"});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInvalidInput);
  }
  CHECK_THROWS_AS(preprocess({"trunc", "ab\xc3"}), Error);
}

TEST_CASE("preprocess output invariants and idempotence on random titles") {
  static const char* kWords[] = {"Agreed",    "networks", "the",     "Learning", "of",
                                 "relational", "2020",    "ponies",  "hopeful",  "x",
                                 "Generalization", "caresses", "deep-learning", "NLP", "and",
                                 "feed",      "conditional", "sky", "is", "modeling"};
  Rng rng(11);
  for (int trial = 0; trial < 300; ++trial) {
    std::string title;
    const auto n = 1 + rng.below(12);
    for (std::uint64_t i = 0; i < n; ++i) {
      title += kWords[rng.below(std::size(kWords))];
      title += rng.below(3) == 0 ? ", " : " ";
    }
    const auto once = preprocess({"d", title});
    for (const auto& t : once.tokens) {
      CHECK(t.size() >= 2);
      CHECK(t.find_first_not_of("abcdefghijklmnopqrstuvwxyz") == std::string::npos);
    }
    const auto twice = preprocess({"d", join(once.tokens)});
    CHECK(twice == once);
  }
}

TEST_CASE("dictionary examples") {
  std::vector<TokenizedDocument> docs{{"1", {"a", "b"}}, {"2", {"b", "c"}}};
  auto d = Dictionary::build(docs, 1);
  CHECK(d.size() == 3);
  CHECK(*d.find("a") == 0);
  CHECK(*d.find("b") == 1);
  CHECK(*d.find("c") == 2);
  CHECK(d.frequency(1) == 2);
  CHECK_FALSE(d.find("z"));

  auto d2 = Dictionary::build(docs, 2);
  CHECK(d2.size() == 1);
  CHECK(d2.token(0) == "b");

  CHECK_THROWS_AS(Dictionary::build(std::vector<TokenizedDocument>{}, 1), Error);
  CHECK_THROWS_AS(Dictionary::build(std::vector<TokenizedDocument>{{"1", {}}}, 1), Error);
  CHECK(Dictionary::build(docs, 1) == d);
}

TEST_CASE("to_bow examples") {
  std::vector<TokenizedDocument> docs{{"1", {"a", "b", "c"}}};
  auto d = Dictionary::build(docs, 1);
  CHECK(to_bow({"x", {"b", "b", "c"}}, d) == BowVector{{1, 2}, {2, 1}});
  CHECK(to_bow({"x", {}}, d).empty());
  CHECK(to_bow({"x", {"z"}}, d).empty());
}

TEST_CASE("bow counts equal in-vocabulary token counts on random corpora") {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<TokenizedDocument> docs;
    for (int m = 0; m < 20; ++m) {
      TokenizedDocument doc{std::to_string(m), {}};
      const auto n = rng.below(10);
      for (std::uint64_t i = 0; i < n; ++i) doc.tokens.push_back(std::string(1, 'a' + rng.below(8)) + "w");
      docs.push_back(doc);
    }
    docs[0].tokens.push_back("aw");
    const std::size_t min_count = 1 + rng.below(3);
    auto dict = Dictionary::build(docs, min_count);
    for (std::size_t i = 0; i < dict.size(); ++i) {
      CHECK(dict.frequency(static_cast<WordId>(i)) >= min_count);
      CHECK(*dict.find(dict.token(static_cast<WordId>(i))) == i);
    }
    for (const auto& doc : docs) {
      std::size_t in_vocab = 0;
      for (const auto& t : doc.tokens) in_vocab += dict.find(t).has_value();
      std::size_t total = 0;
      for (const auto& tc : to_bow(doc, dict)) {
        CHECK(tc.count > 0);
        CHECK(tc.word < dict.size());
        total += tc.count;
      }
      CHECK(total == in_vocab);
    }
  }
}

TEST_CASE("titles csv parsing") {
  std::istringstream in(
      "\xEF\xBB\xBF" "doc_id,title,year\r\n"
      "p1,\"Deep, \"\"quoted\"\" learning\",2020\r\n"
      "p2,Plain title,2021\n"
      "\n"
      "p3,\"Multi\nline\",2019\n");
  auto docs = read_titles_csv(in);
  REQUIRE(docs.size() == 3);
  CHECK(docs[0].doc_id == "p1");
  CHECK(docs[0].title == "Deep, \"quoted\" learning");
  CHECK(docs[1].title == "Plain title");
  CHECK(docs[2].title == "Multi\nline");
}

TEST_CASE("titles csv errors") {
  auto kind_of = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_titles_csv(in);
    } catch (const Error& e) {
      return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::kInvalidArgument;
  };
  CHECK(kind_of("id,name\n1,x\n") == ErrorKind::kSchemaMismatch);
  CHECK(kind_of("doc_id,title\n1,x\n1,y\n") == ErrorKind::kInvalidInput);
  CHECK(kind_of("doc_id,title\n1,   \n") == ErrorKind::kInvalidInput);
  CHECK(kind_of("doc_id,title\n1,\"open\n") == ErrorKind::kInvalidInput);
  CHECK(kind_of("") == ErrorKind::kInvalidInput);
}

TEST_CASE("tokenized jsonl and dictionary json round trip") {
  std::vector<TokenizedDocument> docs{{"a", {"deep", "learn"}}, {"b,\"c", {}}};
  std::stringstream ss;
  write_tokenized_jsonl(ss, docs);
  CHECK(ss.str().substr(0, 38) == "{\"doc_id\":\"a\",\"tokens\":[\"deep\",\"learn\"");
  CHECK(read_tokenized_jsonl(ss) == docs);

  auto dict = Dictionary::build(docs, 1);
  const auto j = dictionary_to_json(dict);
  CHECK(j.dump() == R"({"min_count":1,"tokens":["deep","learn"],"frequencies":[1,1]})");
  CHECK(dictionary_from_json(nlohmann::json::parse(j.dump())) == dict);
  CHECK_THROWS_AS(dictionary_from_json(nlohmann::json::parse(R"({"tokens":["a","a"],"min_count":1})")),
                  Error);
}
