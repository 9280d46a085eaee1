#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "topicintent/error.hpp"
#include "topicintent/lda.hpp"
#include "lda_oracle.hpp"

using namespace topicintent;

namespace {

using topicintent::testing::expanded_words;
using topicintent::testing::oracle_conditional;

BowCorpus corpus_of(const std::vector<std::vector<std::string>>& docs, std::size_t min_count = 1) {
  std::vector<TokenizedDocument> tds;
  for (std::size_t i = 0; i < docs.size(); ++i) tds.push_back({std::to_string(i), docs[i]});
  return make_bow_corpus(tds, Dictionary::build(tds, min_count));
}

}  // namespace

TEST_CASE("conditional matches hand-evaluated example") {
  // word 0 three times (one excluded), word 1 twice; counts after exclusion
  // M_wtp = [[2,0],[0,2]], M_ttp[d] = [2,2].
  auto corpus = corpus_of({{"a", "a", "a", "b", "b"}});
  LdaConfig cfg;
  cfg.k = 2;
  cfg.alpha = 1.0;
  cfg.beta = 1.0;
  auto state = LdaState::from_assignments(corpus, cfg, {{0, 0, 0, 1, 1}});
  state.exclude(0, 2);
  const auto p = state.conditional(0, 2);
  CHECK(p[0] == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(p[1] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("conditional is uniform when all other counts are zero") {
  auto corpus = corpus_of({{"a"}});
  LdaConfig cfg;
  cfg.k = 2;
  auto state = LdaState::from_assignments(corpus, cfg, {{1}});
  state.exclude(0, 0);
  const auto p = state.conditional(0, 0);
  CHECK(p[0] == doctest::Approx(0.5));
  CHECK(p[1] == doctest::Approx(0.5));
}

TEST_CASE("conditional requires an excluded token") {
  auto corpus = corpus_of({{"a", "b"}});
  LdaConfig cfg;
  cfg.k = 2;
  auto state = LdaState::from_assignments(corpus, cfg, {{0, 1}});
  CHECK_THROWS_AS(state.conditional(0, 0), Error);
}

TEST_CASE("conditional equals brute force on every state of a small corpus") {
  // V = 3, 6 tokens, k = 2 and 3.
  auto corpus = corpus_of({{"a", "b", "b"}, {"c", "a"}, {"c"}});
  const auto words = expanded_words(corpus);
  for (std::size_t k : {2u, 3u}) {
    LdaConfig cfg;
    cfg.k = k;
    cfg.alpha = 0.7;
    cfg.beta = 0.3;
    std::size_t states = 1;
    for (int i = 0; i < 6; ++i) states *= k;
    double worst = 0.0;
    for (std::size_t code = 0; code < states; ++code) {
      std::vector<std::vector<TopicId>> z;
      std::size_t c = code;
      for (const auto& doc : words) {
        std::vector<TopicId> zd;
        for (std::size_t i = 0; i < doc.size(); ++i, c /= k) zd.push_back(static_cast<TopicId>(c % k));
        z.push_back(zd);
      }
      for (std::size_t d = 0; d < words.size(); ++d) {
        for (std::size_t i = 0; i < words[d].size(); ++i) {
          auto state = LdaState::from_assignments(corpus, cfg, z);
          state.exclude(d, i);
          const auto got = state.conditional(d, i);
          const auto want = oracle_conditional(corpus, words, z, k, 0.7, 0.3, d, i);
          for (std::size_t j = 0; j < k; ++j) worst = std::max(worst, std::abs(got[j] - want[j]));
        }
      }
    }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("init with one topic and determinism") {
  auto corpus = corpus_of({{"a", "b", "b"}, {"c"}});
  LdaConfig cfg;
  cfg.k = 1;
  Rng rng(3);
  auto state = LdaState::init(corpus, cfg, rng);
  CHECK(state.doc_topic(0, 0) == 3);
  CHECK(state.doc_topic(1, 0) == 1);
  for (std::size_t d = 0; d < 2; ++d) {
    for (auto z : state.assignments(d)) CHECK(z == 0);
  }

  cfg.k = 4;
  Rng r1(9), r2(9);
  auto s1 = LdaState::init(corpus, cfg, r1);
  auto s2 = LdaState::init(corpus, cfg, r2);
  for (std::size_t d = 0; d < 2; ++d) {
    CHECK(std::vector<TopicId>(s1.assignments(d).begin(), s1.assignments(d).end()) ==
          std::vector<TopicId>(s2.assignments(d).begin(), s2.assignments(d).end()));
  }
}

TEST_CASE("count invariants hold after every sweep") {
  Rng gen(21);
  std::vector<std::vector<std::string>> docs;
  for (int d = 0; d < 30; ++d) {
    std::vector<std::string> doc;
    const auto n = gen.below(9);
    for (std::uint64_t i = 0; i < n; ++i) doc.push_back(std::string(1, 'a' + gen.below(12)) + "x");
    docs.push_back(doc);
  }
  docs.push_back({"ax"});
  auto corpus = corpus_of(docs);
  LdaConfig cfg;
  cfg.k = 5;
  Rng rng(4);
  auto state = LdaState::init(corpus, cfg, rng);
  for (int sweep = 0; sweep < 10; ++sweep) {
    state.sweep(rng);
    CHECK_NOTHROW(state.check_consistency());
    for (WordId w = 0; w < corpus.vocab_size(); ++w) {
      std::int64_t total = 0;
      for (TopicId j = 0; j < cfg.k; ++j) {
        CHECK(state.word_topic(w, j) >= 0);
        total += state.word_topic(w, j);
      }
      CHECK(total == static_cast<std::int64_t>(corpus.dictionary.frequency(w)));
    }
    for (TopicId j = 0; j < cfg.k; ++j) {
      std::int64_t by_word = 0, by_doc = 0;
      for (WordId w = 0; w < corpus.vocab_size(); ++w) by_word += state.word_topic(w, j);
      for (std::size_t d = 0; d < corpus.num_docs(); ++d) by_doc += state.doc_topic(d, j);
      CHECK(by_word == by_doc);
      CHECK(by_word == state.topic_total(j));
    }
  }
}

TEST_CASE("tau and theta rows are distributions") {
  auto corpus = corpus_of({{"a", "b", "c"}, {"a", "a"}, {}, {"c", "b"}});
  LdaConfig cfg;
  cfg.k = 3;
  cfg.iterations = 20;
  cfg.burn_in = 5;
  auto model = train_lda(corpus, cfg);
  CHECK(model.tau.rows() == 3);
  CHECK(model.tau.cols() == 3);
  for (Eigen::Index r = 0; r < model.tau.rows(); ++r) {
    CHECK(std::abs(model.tau.row(r).sum() - 1.0) < 1e-9);
    CHECK(model.tau.row(r).minCoeff() > 0.0);
  }
  for (Eigen::Index r = 0; r < model.theta.rows(); ++r) {
    CHECK(std::abs(model.theta.row(r).sum() - 1.0) < 1e-9);
  }
  CHECK(model.log_likelihood_trace.size() == cfg.iterations - cfg.burn_in);
}

TEST_CASE("same seed gives bit-identical counts") {
  auto corpus = corpus_of({{"a", "b", "c", "a"}, {"b", "b"}, {"c", "d", "a"}});
  LdaConfig cfg;
  cfg.k = 3;
  cfg.iterations = 15;
  cfg.burn_in = 0;
  auto m1 = train_lda(corpus, cfg);
  auto m2 = train_lda(corpus, cfg);
  CHECK(m1.tau == m2.tau);
  CHECK(m1.theta == m2.theta);
  CHECK(lda_model_to_json(m1).dump() == lda_model_to_json(m2).dump());
}

TEST_CASE("log likelihood rises on a planted corpus") {
  std::vector<std::vector<std::string>> docs;
  Rng gen(8);
  for (int d = 0; d < 60; ++d) {
    const int topic = d % 3;
    std::vector<std::string> doc;
    for (int i = 0; i < 8; ++i) doc.push_back(std::string(1, 'a' + topic * 5 + gen.below(5)) + "w");
    docs.push_back(doc);
  }
  auto corpus = corpus_of(docs);
  LdaConfig cfg;
  cfg.k = 3;
  cfg.alpha = 0.1;
  cfg.iterations = 30;
  cfg.burn_in = 0;
  Rng rng(cfg.seed);
  auto state = LdaState::init(corpus, cfg, rng);
  const double initial = state.log_likelihood();
  std::vector<double> late;
  for (int sweep = 0; sweep < 30; ++sweep) {
    state.sweep(rng);
    if (sweep >= 20) late.push_back(state.log_likelihood());
  }
  std::nth_element(late.begin(), late.begin() + 5, late.end());
  CHECK(late[5] > initial);
}

TEST_CASE("top words ranking, ties and clamp") {
  Eigen::MatrixXd tau(2, 4);
  tau << 0.1, 0.4, 0.4, 0.1,
         0.0, 0.0, 1.0, 0.0;
  CHECK(top_words(tau, 0, 2) == std::vector<WordId>{1, 2});
  CHECK(top_words(tau, 0, 4) == std::vector<WordId>{1, 2, 0, 3});
  CHECK(top_words(tau, 1, 1) == std::vector<WordId>{2});
  CHECK(top_words(tau, 0, 10).size() == 4);

  Rng rng(2);
  Eigen::MatrixXd random(1, 30);
  for (Eigen::Index i = 0; i < 30; ++i) random(0, i) = static_cast<double>(rng.below(6));
  std::vector<WordId> oracle(30);
  std::iota(oracle.begin(), oracle.end(), 0);
  std::stable_sort(oracle.begin(), oracle.end(),
                   [&](WordId a, WordId b) { return random(0, a) > random(0, b); });
  CHECK(top_words(random, 0, 30) == oracle);
}

TEST_CASE("coherence hand counts") {
  // a and b always co-occur (2 titles); c alone.
  auto corpus = corpus_of({{"a", "b"}, {"a", "b"}, {"c"}});
  Eigen::MatrixXd tau(1, 3);
  tau << 0.5, 0.3, 0.2;
  auto s = coherence(tau, corpus, 2);
  CHECK(s.per_topic[0] == doctest::Approx(std::log(3.0 / 2.0)));
  CHECK(coherence(tau, corpus, 1).per_topic[0] == 0.0);

  // Disjoint words: five titles each.
  std::vector<std::vector<std::string>> docs;
  for (int i = 0; i < 5; ++i) docs.push_back({"x"});
  for (int i = 0; i < 5; ++i) docs.push_back({"y"});
  auto disjoint = corpus_of(docs);
  Eigen::MatrixXd t2(1, 2);
  t2 << 0.6, 0.4;
  CHECK(coherence(t2, disjoint, 2).per_topic[0] == doctest::Approx(std::log(1.0 / 5.0)));

  // Top word absent from every title.
  auto sparse = corpus_of({{"p", "q"}});
  sparse.docs[0].clear();
  Eigen::MatrixXd t3(1, 2);
  t3 << 0.9, 0.1;
  CHECK_THROWS_AS(coherence(t3, sparse, 2), Error);
}

TEST_CASE("select_k bookkeeping") {
  auto corpus = corpus_of({{"a", "b"}, {"a", "b"}, {"c", "d"}, {"c", "d"}});
  LdaConfig cfg;
  cfg.iterations = 10;
  cfg.burn_in = 0;
  std::vector<std::size_t> one{3};
  auto single = select_k(corpus, one, cfg, 2);
  CHECK(single.best_k == 3);
  std::vector<std::size_t> many{1, 2, 3};
  auto sel = select_k(corpus, many, cfg, 2);
  CHECK(sel.mean_coherence.size() == 3);
  CHECK(sel.candidates == many);
  const auto best = std::max_element(sel.mean_coherence.begin(), sel.mean_coherence.end());
  CHECK(sel.best_k == many[static_cast<std::size_t>(best - sel.mean_coherence.begin())]);
}

TEST_CASE("lda model json round trip") {
  auto corpus = corpus_of({{"a", "b"}, {"b", "c"}});
  LdaConfig cfg;
  cfg.k = 2;
  cfg.iterations = 5;
  cfg.burn_in = 0;
  auto model = train_lda(corpus, cfg);
  const auto text = lda_model_to_json(model).dump();
  auto back = lda_model_from_json(nlohmann::json::parse(text));
  CHECK(back.tau == model.tau);
  CHECK(back.theta == model.theta);
  CHECK(back.dictionary == model.dictionary);
  CHECK(back.doc_ids == model.doc_ids);
  CHECK(lda_model_to_json(back).dump() == text);
  CHECK_THROWS_AS(lda_model_from_json(nlohmann::json::parse(R"({"format":"lda/9"})")), Error);
}

TEST_CASE("config validation") {
  LdaConfig cfg;
  cfg.k = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.k = 2;
  cfg.iterations = 10;
  cfg.burn_in = 10;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.burn_in = 2;
  cfg.beta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.beta = 0.01;
  CHECK(cfg.effective_alpha() == doctest::Approx(25.0));
}
