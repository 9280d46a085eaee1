#include <algorithm>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "topicintent/error.hpp"
#include "topicintent/fusion.hpp"
#include "topicintent/random.hpp"

using namespace topicintent;

namespace {

WordTopicMap table(std::size_t k, std::map<std::string, std::vector<TopicScore>, std::less<>> e) {
  WordTopicMap m;
  m.num_topics = k;
  m.entries = std::move(e);
  return m;
}

Dictionary dict_of(std::vector<std::string> tokens) {
  std::vector<std::size_t> freq(tokens.size(), 1);
  return Dictionary::from_tokens(std::move(tokens), std::move(freq), 1);
}

// Brute-force vote: every token's best topic, then pick by (votes, mass, -index).
std::optional<TopicId> oracle_vote(const std::vector<std::string>& tokens, const WordTopicMap& m) {
  std::vector<std::size_t> votes(m.num_topics, 0);
  std::vector<double> mass(m.num_topics, 0.0);
  bool any = false;
  for (const auto& t : tokens) {
    auto it = m.entries.find(t);
    if (it == m.entries.end()) continue;
    TopicScore best = it->second.front();
    for (const auto& s : it->second) {
      if (s.probability > best.probability || (s.probability == best.probability && s.topic < best.topic)) {
        best = s;
      }
    }
    ++votes[best.topic];
    mass[best.topic] += best.probability;
    any = true;
  }
  if (!any) return std::nullopt;
  std::vector<TopicId> order(m.num_topics);
  std::iota(order.begin(), order.end(), 0);
  return *std::min_element(order.begin(), order.end(), [&](TopicId a, TopicId b) {
    if (votes[a] != votes[b]) return votes[a] > votes[b];
    if (mass[a] != mass[b]) return mass[a] > mass[b];
    return a < b;
  });
}

}  // namespace

TEST_CASE("dominant topic tie goes to the larger probability mass") {
  auto m = table(2, {{"a", {{0, 0.9}, {1, 0.1}}},
                     {"b", {{0, 0.2}, {1, 0.8}}},
                     {"c", {{0, 0.6}, {1, 0.4}}},
                     {"d", {{0, 0.3}, {1, 0.7}}}});
  std::vector<std::string> doc{"a", "b"};
  auto r = dominant_topic(doc, m);
  CHECK(r.votes == std::vector<std::size_t>{1, 1});
  REQUIRE(r.topic);
  CHECK(*r.topic == 0);  // 0.9 beats 0.8

  std::vector<std::string> doc2{"c", "d"};
  CHECK(*dominant_topic(doc2, m).topic == 1);  // 0.7 beats 0.6

  std::vector<std::string> doc3{"a", "b", "d"};
  CHECK(*dominant_topic(doc3, m).topic == 1);  // votes first

  // Full tie goes to the lower index.
  auto even = table(3, {{"x", {{1, 0.5}}}, {"y", {{2, 0.5}}}});
  std::vector<std::string> doc4{"y", "x"};
  CHECK(*dominant_topic(doc4, even).topic == 1);
}

TEST_CASE("titles without known words stay unassigned") {
  auto m = table(2, {{"a", {{0, 1.0}}}});
  std::vector<std::string> none{"q", "r"};
  auto r = dominant_topic(none, m);
  CHECK_FALSE(r.topic);
  CHECK(r.matched_tokens == 0);
  std::vector<std::string> empty;
  CHECK_FALSE(dominant_topic(empty, m).topic);

  std::vector<TokenizedDocument> docs{{"d1", {"a"}}, {"d,2", {"zz"}}};
  const auto assigned = assign_corpus(docs, m);
  std::ostringstream out;
  write_assignments_csv(out, assigned);
  CHECK(out.str() == "doc_id,topic\nd1,0\n\"d,2\",unassigned\n");
}

TEST_CASE("vote matches brute force and is invariant to scale and order") {
  Rng rng(13);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t k = 1 + rng.below(4);
    WordTopicMap m;
    m.num_topics = k;
    for (int w = 0; w < 6; ++w) {
      std::vector<TopicScore> row;
      for (TopicId j = 0; j < k; ++j) {
        if (rng.below(3) != 0) row.push_back({j, static_cast<double>(rng.below(5)) / 4.0});
      }
      if (!row.empty()) m.entries["w" + std::to_string(w)] = row;
    }
    std::vector<std::string> doc;
    const auto len = rng.below(8);
    for (std::uint64_t i = 0; i < len; ++i) doc.push_back("w" + std::to_string(rng.below(8)));

    const auto got = dominant_topic(doc, m).topic;
    CHECK(got == oracle_vote(doc, m));

    auto scaled = m;
    for (auto& [_, row] : scaled.entries) {
      for (auto& s : row) s.probability *= 3.5;
    }
    CHECK(dominant_topic(doc, scaled).topic == got);

    auto shuffled = doc;
    rng.shuffle(std::span<std::string>(shuffled));
    CHECK(dominant_topic(shuffled, m).topic == got);
  }
}

TEST_CASE("seed words are the top tau words") {
  Eigen::MatrixXd tau(2, 4);
  tau << 0.4, 0.3, 0.2, 0.1,
         0.1, 0.1, 0.1, 0.7;
  const auto seeds = seed_words(tau, 2);
  CHECK(seeds[0] == std::vector<WordId>{0, 1});
  CHECK(seeds[1] == std::vector<WordId>{3, 0});
}

TEST_CASE("expansion on hand-set vectors") {
  // seed "net" at (1, 0); "network" nearly parallel, "graph" at 45°, "pizza" orthogonal.
  EmbeddingModel emb;
  emb.dictionary = dict_of({"graph", "net", "network", "pizza"});
  emb.input.resize(4, 2);
  emb.input << 1.0, 1.0,
               1.0, 0.0,
               1.0, 0.05,
               0.0, 1.0;
  emb.output = Eigen::MatrixXd::Zero(2, 4);

  FusionConfig cfg;
  cfg.neighbors_per_seed = 3;
  cfg.similarity_threshold = 0.5;
  auto ex = expand_and_filter("net", 1, emb, cfg);
  CHECK(ex.seed_found);
  CHECK(ex.topic == 1);
  REQUIRE(ex.words.size() == 2);
  CHECK(ex.words[0].word == "network");
  CHECK(ex.words[1].word == "graph");
  CHECK(ex.words[1].similarity == doctest::Approx(std::sqrt(0.5)));

  cfg.similarity_threshold = 0.9;
  CHECK(expand_and_filter("net", 1, emb, cfg).words.size() == 1);
  cfg.neighbors_per_seed = 0;
  CHECK(expand_and_filter("net", 1, emb, cfg).words.empty());
  CHECK_FALSE(expand_and_filter("absent", 0, emb, cfg).seed_found);
}

TEST_CASE("fused table on a toy model") {
  // LDA vocabulary: net, cook. Embedding also knows network and recipe.
  auto dict = dict_of({"cook", "net"});
  Eigen::MatrixXd tau(2, 2);
  tau << 0.1, 0.9,
         0.8, 0.2;
  EmbeddingModel emb;
  emb.dictionary = dict_of({"cook", "net", "network", "recipe"});
  emb.input.resize(4, 2);
  emb.input << 0.0, 1.0,
               1.0, 0.0,
               0.8, 0.6,
               0.1, 1.0;
  emb.output = Eigen::MatrixXd::Zero(2, 4);
  FusionConfig cfg;
  cfg.seeds_per_topic = 1;
  cfg.neighbors_per_seed = 1;
  cfg.similarity_threshold = 0.5;

  auto m2 = build_word_topic_map(tau, dict, emb, cfg);
  CHECK(m2.num_topics == 2);
  REQUIRE(m2.entries.count("network") == 1);
  REQUIRE(m2.entries.at("network").size() == 1);
  CHECK(m2.entries.at("network")[0].topic == 0);
  CHECK(m2.entries.at("network")[0].probability == doctest::Approx(0.8 * 0.9));
  REQUIRE(m2.entries.count("recipe") == 1);
  CHECK(m2.entries.at("recipe")[0].topic == 1);
  CHECK(m2.entries.at("recipe")[0].probability ==
        doctest::Approx(0.8 * 1.0 / std::sqrt(1.01)));
  // LDA rows untouched where the expansion score is lower.
  CHECK(m2.entries.at("net") == std::vector<TopicScore>{{0, 0.9}, {1, 0.2}});

  std::vector<std::string> title{"network"};
  CHECK(*dominant_topic(title, m2).topic == 0);
  CHECK_FALSE(dominant_topic(title, lda_word_topic_map(tau, dict)).topic);
}

TEST_CASE("expansion never lowers an existing score") {
  auto dict = dict_of({"aa", "bb", "cc"});
  Eigen::MatrixXd tau(1, 3);
  tau << 0.5, 0.3, 0.2;
  EmbeddingModel emb;
  emb.dictionary = dict;
  emb.input.resize(3, 2);
  emb.input << 1.0, 0.0,
               0.9, 0.1,
               0.8, 0.3;
  emb.output = Eigen::MatrixXd::Zero(2, 3);
  FusionConfig cfg;
  cfg.seeds_per_topic = 3;
  cfg.neighbors_per_seed = 2;
  cfg.similarity_threshold = -1.0;
  auto base = lda_word_topic_map(tau, dict);
  auto m2 = build_word_topic_map(tau, dict, emb, cfg);
  for (const auto& [word, row] : base.entries) {
    const auto& fused = m2.entries.at(word);
    REQUIRE(fused.size() == row.size());
    for (std::size_t i = 0; i < row.size(); ++i) CHECK(fused[i].probability >= row[i].probability);
  }
}

TEST_CASE("zero neighbours reproduces the plain LDA table") {
  Rng rng(4);
  auto dict = dict_of({"a", "b", "c", "d"});
  Eigen::MatrixXd tau(3, 4);
  for (Eigen::Index i = 0; i < tau.size(); ++i) tau.data()[i] = rng.uniform();
  EmbeddingModel emb;
  emb.dictionary = dict;
  emb.input = Eigen::MatrixXd::Identity(4, 4);
  emb.output = Eigen::MatrixXd::Zero(4, 4);
  FusionConfig cfg;
  cfg.neighbors_per_seed = 0;
  CHECK(build_word_topic_map(tau, dict, emb, cfg) == lda_word_topic_map(tau, dict));
}

TEST_CASE("threshold sweep shrinks the expansion") {
  Rng rng(8);
  EmbeddingModel emb;
  std::vector<std::string> words;
  for (int i = 0; i < 12; ++i) words.push_back("w" + std::string(1, static_cast<char>('a' + i)));
  emb.dictionary = dict_of(words);
  emb.input.resize(12, 3);
  for (Eigen::Index i = 0; i < emb.input.size(); ++i) emb.input.data()[i] = rng.uniform(-1, 1);
  emb.output = Eigen::MatrixXd::Zero(3, 12);
  FusionConfig cfg;
  cfg.neighbors_per_seed = 11;
  std::size_t previous = 12;
  for (double t : {-1.0, -0.5, 0.0, 0.3, 0.6, 0.9, 1.0}) {
    cfg.similarity_threshold = t;
    const auto ex = expand_and_filter("wa", 0, emb, cfg);
    CHECK(ex.words.size() <= previous);
    for (const auto& n : ex.words) CHECK(n.similarity >= t);
    previous = ex.words.size();
  }
  cfg.similarity_threshold = -1.0;
  CHECK(expand_and_filter("wa", 0, emb, cfg).words.size() == 11);
}

TEST_CASE("missing seeds are recorded") {
  auto dict = dict_of({"aa", "bb"});
  Eigen::MatrixXd tau(1, 2);
  tau << 0.7, 0.3;
  EmbeddingModel emb;
  emb.dictionary = dict_of({"bb", "cc"});
  emb.input = Eigen::MatrixXd::Identity(2, 2);
  emb.output = Eigen::MatrixXd::Zero(2, 2);
  FusionConfig cfg;
  cfg.neighbors_per_seed = 1;
  auto m2 = build_word_topic_map(tau, dict, emb, cfg);
  CHECK(m2.missing_seeds == std::vector<std::string>{"aa"});
}

TEST_CASE("word topic map json round trip") {
  auto m = table(3, {{"a", {{0, 0.25}, {2, 0.5}}}, {"b", {{1, 1.0}}}});
  m.missing_seeds = {"zz"};
  const auto text = word_topic_map_to_json(m).dump();
  auto back = word_topic_map_from_json(nlohmann::json::parse(text));
  CHECK(back == m);
  CHECK(back.missing_seeds == m.missing_seeds);
  CHECK(word_topic_map_to_json(back).dump() == text);

  auto bad = nlohmann::json::parse(text);
  bad["num_topics"] = 2;
  CHECK_THROWS_AS(word_topic_map_from_json(bad), Error);
  CHECK_THROWS_AS(word_topic_map_from_json(nlohmann::json::parse(R"({"format":"m2/1"})")), Error);
}
