#include <algorithm>
#include <set>

#include "doctest.h"
#include "topicintent/error.hpp"
#include "topicintent/experiments.hpp"
#include "topicintent/sessions.hpp"
#include "topicintent/text.hpp"

using namespace topicintent;

TEST_CASE("pseudo words survive preprocessing and are distinct") {
  std::set<std::string> seen;
  for (std::size_t i = 0; i < 3000; ++i) {
    const auto w = pseudo_word(i);
    CHECK(seen.insert(w).second);
    CHECK_FALSE(is_stopword(w));
    const auto tokens = preprocess({"d", w}).tokens;
    REQUIRE(tokens.size() == 1);
    CHECK(tokens[0] == w);
  }
}

TEST_CASE("planted corpus shape") {
  PlantedCorpusConfig cfg;
  cfg.num_titles = 120;
  const auto pc = planted_corpus(cfg);
  REQUIRE(pc.titles.size() == 120);
  REQUIRE(pc.truth.size() == 120);
  CHECK(pc.titles[0].doc_id == "t0000");
  CHECK(pc.core_vocabulary.size() == cfg.num_topics);
  std::set<std::string> core;
  for (const auto& words : pc.core_vocabulary) {
    CHECK(words.size() == cfg.core_words_per_topic);
    core.insert(words.begin(), words.end());
  }
  CHECK(core.size() == cfg.num_topics * cfg.core_words_per_topic);
  for (const auto& n : pc.noise_vocabulary) CHECK(core.count(n) == 0);
  for (std::size_t i = 0; i < pc.titles.size(); ++i) {
    const auto tokens = preprocess(pc.titles[i]).tokens;
    CHECK(tokens.size() >= cfg.min_length);
    CHECK(tokens.size() <= cfg.max_length);
    const auto& own = pc.core_vocabulary[pc.truth[i]];
    for (const auto& t : tokens) {
      const bool mine = std::find(own.begin(), own.end(), t) != own.end();
      const bool noise = std::find(pc.noise_vocabulary.begin(), pc.noise_vocabulary.end(), t) !=
                         pc.noise_vocabulary.end();
      CHECK((mine || noise));
    }
  }
  CHECK(planted_corpus(cfg).titles[5].title == pc.titles[5].title);
}

TEST_CASE("probe labels add a class only when needed") {
  std::vector<std::optional<TopicId>> all{0, 1, 1};
  auto [l1, k1] = probe_labels(all, 3);
  CHECK(k1 == 3);
  CHECK(l1 == std::vector<TopicId>{0, 1, 1});
  std::vector<std::optional<TopicId>> some{0, std::nullopt, 2};
  auto [l2, k2] = probe_labels(some, 3);
  CHECK(k2 == 4);
  CHECK(l2 == std::vector<TopicId>{0, 3, 2});
}

TEST_CASE("chronological split and target positions") {
  std::vector<UserHistory> users;
  for (int u = 0; u < 2; ++u) {
    UserHistory h{"u" + std::to_string(u), {}};
    for (int i = 0; i < 10 + u; ++i) h.events.push_back({h.user_id, "p", static_cast<TopicId>(i % 2), i + 1, 0, false});
    users.push_back(h);
  }
  const auto split = chronological_split(users, 0.8);
  CHECK(split.train_length == std::vector<std::size_t>{8, 8});
  const auto train = training_histories(split);
  CHECK(train[1].events.size() == 8);

  const auto tr = target_positions(split, 3, false);
  const auto te = target_positions(split, 3, true);
  CHECK(tr.size() == 2 * 5);
  CHECK(te.size() == 2 + 3);
  for (const auto& p : tr) CHECK(p.index < 8);
  for (const auto& p : te) CHECK(p.index >= 8);
  CHECK(target_topics(split, te).size() == te.size());
}

TEST_CASE("sequence comparison scores every model on the same positions") {
  SimConfig sim;
  sim.num_users = 4;
  sim.events_per_user = 40;
  sim.second_order_strength = 1.0;
  const auto split = chronological_split(group_by_user(simulate(sim).events), 0.8);
  IntentTrainConfig cfg;
  cfg.hidden = 4;
  cfg.lookback = 3;
  cfg.epochs = 3;
  const auto cmp = compare_sequence_models(split, sim.num_topics, cfg);
  CHECK(cmp.lstm_test.count == cmp.markov_test.count);
  CHECK(cmp.fpm_test.count == cmp.markov_test.count);
  CHECK(cmp.lstm_train.count == cmp.markov_train.count);
  CHECK(cmp.lstm_test.split == "test");
  // Strict period-two sequences: the length-2 suffix pins the next topic.
  CHECK(cmp.fpm_test.accuracy == 1.0);
}

TEST_CASE("catalog and recommendation ranking") {
  std::vector<UserHistory> users{{"u", {{"u", "P00000", 0, 1, 0, false},
                                        {"u", "P00004", 0, 2, 0, false},
                                        {"u", "P00004", 0, 3, 0, false},
                                        {"u", "P00001", 1, 4, 0, false},
                                        {"u", "P00005", 1, 5, 1, false},
                                        {"u", "P00008", 0, 6, 1, false}}}};
  const auto split = chronological_split(users, 0.67);
  REQUIRE(split.train_length[0] == 4);
  const auto catalog = build_catalog(split, 2);
  CHECK(catalog.papers == std::vector<std::string>{"P00000", "P00001", "P00004", "P00005", "P00008"});
  CHECK(catalog.popularity == std::vector<double>{2, 2, 3, 1, 1});

  Eigen::VectorXd dist(2);
  dist << 0.75, 0.25;
  // topic 0 mass 6: P00004 0.375, P00000 0.25, P00008 0.125; topic 1 mass 3: P00001 1/6, P00005 1/12.
  CHECK(recommend(catalog, dist, 3) == std::vector<std::string>{"P00004", "P00000", "P00001"});
  CHECK(recommend(catalog, dist, 50).size() == 5);

  HistoryPredictor fixed = [&](std::span<const InteractionEvent>) { return dist; };
  const auto q = session_queries(split, catalog, fixed, 2, 1);
  // Test events 4 and 5 share session 1.
  REQUIRE(q.size() == 1);
  CHECK(q[0].relevant == std::vector<std::string>{"P00005", "P00008"});
  CHECK(q[0].clicked == 0);
  CHECK(q[0].shown == 2);
  CHECK(session_queries(split, catalog, fixed, 2, 5).empty());

  users[0].events[5].topic = 1;
  users[0].events[5].paper_id = "P00000";
  CHECK_THROWS_AS(build_catalog(chronological_split(users, 0.67), 2), Error);
}
