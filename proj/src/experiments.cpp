#include "topicintent/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <cstdio>

#include "topicintent/error.hpp"
#include "topicintent/random.hpp"

namespace topicintent {

std::string pseudo_word(std::size_t index) {
  // Three consonant-vowel syllables. Ending in a, o or u after a consonant
  // keeps every suffix rule of the stemmer from firing.
  static constexpr std::string_view kConsonants = "bdfgklmnprtvz";
  static constexpr std::string_view kVowels = "aou";
  constexpr std::size_t kSyllables = kConsonants.size() * kVowels.size();
  constexpr std::size_t kWords = kSyllables * kSyllables * kSyllables;
  require(index < kWords, "pseudo_word: index too large");
  // 7919 is prime and coprime to kWords, so this is a permutation.
  std::size_t code = (index * 7919 + 12345) % kWords;
  std::string word;
  for (int s = 0; s < 3; ++s) {
    const std::size_t syl = code % kSyllables;
    code /= kSyllables;
    word += kConsonants[syl / kVowels.size()];
    word += kVowels[syl % kVowels.size()];
  }
  return word;
}

PlantedCorpus planted_corpus(const PlantedCorpusConfig& config) {
  require(config.num_topics >= 1, "planted_corpus: num_topics must be >= 1");
  require(config.core_words_per_topic >= 1, "planted_corpus: core vocabulary is empty");
  require(config.noise_fraction >= 0.0 && config.noise_fraction <= 1.0,
          "planted_corpus: noise_fraction must lie in [0, 1]");
  require(config.noise_fraction == 0.0 || config.noise_words >= 1,
          "planted_corpus: noise requested without noise words");
  require(config.min_length >= 1 && config.min_length <= config.max_length,
          "planted_corpus: invalid title length range");
  PlantedCorpus out;
  std::size_t next = 0;
  out.core_vocabulary.resize(config.num_topics);
  for (auto& vocab : out.core_vocabulary) {
    for (std::size_t i = 0; i < config.core_words_per_topic; ++i) vocab.push_back(pseudo_word(next++));
  }
  for (std::size_t i = 0; i < config.noise_words; ++i) {
    out.noise_vocabulary.push_back(pseudo_word(next++));
  }

  Rng rng(config.seed);
  const std::size_t span = config.max_length - config.min_length + 1;
  char id[32];
  for (std::size_t d = 0; d < config.num_titles; ++d) {
    const auto topic = static_cast<TopicId>(rng.below(config.num_topics));
    const std::size_t len = config.min_length + rng.below(span);
    std::string title;
    for (std::size_t i = 0; i < len; ++i) {
      const bool noise = rng.uniform() < config.noise_fraction;
      const auto& vocab = noise ? out.noise_vocabulary : out.core_vocabulary[topic];
      if (i > 0) title += ' ';
      title += vocab[rng.below(vocab.size())];
    }
    std::snprintf(id, sizeof(id), "t%04zu", d);
    out.titles.push_back({id, std::move(title)});
    out.truth.push_back(topic);
  }
  return out;
}

TopicPipelineResult run_topic_pipeline(std::span<const RawDocument> titles,
                                       const TopicPipelineConfig& config) {
  TopicPipelineResult r;
  r.docs.reserve(titles.size());
  for (const auto& t : titles) r.docs.push_back(preprocess(t, config.preprocess));
  r.corpus = make_bow_corpus(r.docs, Dictionary::build(r.docs, config.min_count));
  r.lda = train_lda(r.corpus, config.lda);
  r.embedding = train_embedding(r.docs, Dictionary::build(r.docs, config.embed.min_count),
                                config.embed);
  r.hybrid_map = build_word_topic_map(r.lda.tau, r.corpus.dictionary, r.embedding, config.fusion);
  r.lda_labels = theta_labels(r.lda.theta);
  r.hybrid_labels.reserve(r.docs.size());
  for (const auto& doc : r.docs) r.hybrid_labels.push_back(dominant_topic(doc.tokens, r.hybrid_map).topic);
  return r;
}

std::pair<std::vector<TopicId>, std::size_t> probe_labels(
    std::span<const std::optional<TopicId>> labels, std::size_t num_topics) {
  std::vector<TopicId> out;
  out.reserve(labels.size());
  bool any_unassigned = false;
  for (const auto& l : labels) {
    if (l) {
      require(*l < num_topics, "probe_labels: topic out of range");
      out.push_back(*l);
    } else {
      out.push_back(static_cast<TopicId>(num_topics));
      any_unassigned = true;
    }
  }
  return {std::move(out), num_topics + (any_unassigned ? 1 : 0)};
}

ProbeComparison compare_label_sets(const TopicPipelineResult& result, std::size_t folds,
                                   std::uint64_t seed, const LogisticConfig& config) {
  const SparseRows features = tfidf(result.corpus);
  const std::size_t k = result.lda.config.k;
  ProbeComparison c;
  c.lda = kfold_probe(features, result.lda_labels, k, folds, seed, config);
  const auto [hybrid, classes] = probe_labels(result.hybrid_labels, k);
  c.hybrid = kfold_probe(features, hybrid, classes, folds, seed, config);
  return c;
}

SequenceSplit chronological_split(std::vector<UserHistory> users, double train_fraction) {
  require(train_fraction > 0.0 && train_fraction <= 1.0,
          "chronological_split: train_fraction must lie in (0, 1]");
  SequenceSplit split;
  split.users = std::move(users);
  for (const auto& u : split.users) {
    split.train_length.push_back(static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(u.events.size()))));
  }
  return split;
}

std::vector<UserHistory> training_histories(const SequenceSplit& split) {
  std::vector<UserHistory> out;
  out.reserve(split.users.size());
  for (std::size_t u = 0; u < split.users.size(); ++u) {
    const auto& events = split.users[u].events;
    out.push_back({split.users[u].user_id,
                   {events.begin(), events.begin() + static_cast<std::ptrdiff_t>(split.train_length[u])}});
  }
  return out;
}

std::vector<TargetPosition> target_positions(const SequenceSplit& split, std::size_t min_history,
                                             bool test) {
  std::vector<TargetPosition> out;
  for (std::size_t u = 0; u < split.users.size(); ++u) {
    const std::size_t n = split.users[u].events.size();
    const std::size_t cut = split.train_length[u];
    const std::size_t begin = std::max(min_history, test ? cut : std::size_t{0});
    const std::size_t end = test ? n : cut;
    for (std::size_t i = begin; i < end; ++i) out.push_back({u, i});
  }
  return out;
}

std::vector<TopicId> target_topics(const SequenceSplit& split,
                                   std::span<const TargetPosition> positions) {
  std::vector<TopicId> out;
  out.reserve(positions.size());
  for (const auto& p : positions) out.push_back(split.users[p.user].events[p.index].topic);
  return out;
}

std::vector<Eigen::VectorXd> intent_distributions(const IntentModel& model,
                                                  const SequenceSplit& split,
                                                  std::span<const TargetPosition> positions) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(positions.size());
  for (const auto& p : positions) {
    const auto& events = split.users[p.user].events;
    out.push_back(predict_next(model, std::span(events).first(p.index)).distribution);
  }
  return out;
}

namespace {

template <class Model>
std::vector<Eigen::VectorXd> topic_history_distributions(const Model& model,
                                                         const SequenceSplit& split,
                                                         std::span<const TargetPosition> positions) {
  std::vector<std::vector<TopicId>> topics;
  topics.reserve(split.users.size());
  for (const auto& u : split.users) topics.push_back(u.topics());
  std::vector<Eigen::VectorXd> out;
  out.reserve(positions.size());
  for (const auto& p : positions) {
    out.push_back(model.distribution(std::span(topics[p.user]).first(p.index)));
  }
  return out;
}

std::vector<std::vector<TopicId>> topic_sequences(std::span<const UserHistory> users) {
  std::vector<std::vector<TopicId>> out;
  out.reserve(users.size());
  for (const auto& u : users) out.push_back(u.topics());
  return out;
}

}  // namespace

std::vector<Eigen::VectorXd> markov_distributions(const MarkovBaseline& model,
                                                  const SequenceSplit& split,
                                                  std::span<const TargetPosition> positions) {
  return topic_history_distributions(model, split, positions);
}

std::vector<Eigen::VectorXd> fpm_distributions(const FpmBaseline& model,
                                               const SequenceSplit& split,
                                               std::span<const TargetPosition> positions) {
  return topic_history_distributions(model, split, positions);
}

SequenceComparison compare_sequence_models(const SequenceSplit& split, std::size_t num_topics,
                                           const IntentTrainConfig& config,
                                           std::size_t fpm_max_len) {
  const auto train = training_histories(split);
  const auto sequences = topic_sequences(train);
  SequenceComparison c;
  c.intent = train_intent(train, num_topics, config);
  const auto markov = MarkovBaseline::fit(sequences, num_topics);
  const auto fpm = FpmBaseline::fit(sequences, num_topics, fpm_max_len);

  for (const bool test : {false, true}) {
    const auto positions = target_positions(split, config.lookback, test);
    const auto truth = target_topics(split, positions);
    const std::string label = test ? "test" : "train";
    auto lstm = sequence_metrics(intent_distributions(c.intent, split, positions), truth, label);
    auto mk = sequence_metrics(markov_distributions(markov, split, positions), truth, label);
    auto fp = sequence_metrics(fpm_distributions(fpm, split, positions), truth, label);
    (test ? c.lstm_test : c.lstm_train) = std::move(lstm);
    (test ? c.markov_test : c.markov_train) = std::move(mk);
    (test ? c.fpm_test : c.fpm_train) = std::move(fp);
  }
  return c;
}

PaperCatalog build_catalog(const SequenceSplit& split, std::size_t num_topics) {
  std::map<std::string, std::pair<TopicId, double>> seen;
  for (std::size_t u = 0; u < split.users.size(); ++u) {
    const auto& events = split.users[u].events;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      require(e.topic < num_topics, "catalog: topic out of range");
      auto [it, fresh] = seen.try_emplace(e.paper_id, e.topic, 1.0);
      if (!fresh && it->second.first != e.topic) {
        fail(ErrorKind::kInvalidInput, "paper " + e.paper_id + " appears with two topics");
      }
      if (i < split.train_length[u]) it->second.second += 1.0;
    }
  }
  PaperCatalog c;
  for (const auto& [paper, info] : seen) {
    c.papers.push_back(paper);
    c.topics.push_back(info.first);
    c.popularity.push_back(info.second);
  }
  return c;
}

std::vector<std::string> recommend(const PaperCatalog& catalog,
                                   const Eigen::VectorXd& topic_distribution, std::size_t k) {
  std::vector<double> topic_mass(static_cast<std::size_t>(topic_distribution.size()), 0.0);
  for (std::size_t i = 0; i < catalog.papers.size(); ++i) {
    require(catalog.topics[i] < topic_mass.size(), "recommend: topic out of range");
    topic_mass[catalog.topics[i]] += catalog.popularity[i];
  }
  std::vector<std::pair<double, std::size_t>> scored;
  scored.reserve(catalog.papers.size());
  for (std::size_t i = 0; i < catalog.papers.size(); ++i) {
    const TopicId t = catalog.topics[i];
    scored.emplace_back(topic_distribution(t) * catalog.popularity[i] / topic_mass[t], i);
  }
  const std::size_t take = std::min(k, scored.size());
  // Papers are sorted, so the index breaks ties by id.
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back(catalog.papers[scored[i].second]);
  return out;
}

std::vector<RankingQuery> session_queries(const SequenceSplit& split, const PaperCatalog& catalog,
                                          const HistoryPredictor& predict, std::size_t k,
                                          std::size_t min_history) {
  require(k >= 1, "session_queries: k must be >= 1");
  std::vector<RankingQuery> queries;
  for (std::size_t u = 0; u < split.users.size(); ++u) {
    const auto& events = split.users[u].events;
    std::size_t start = split.train_length[u];
    while (start < events.size()) {
      std::size_t end = start + 1;
      while (end < events.size() && events[end].session_no == events[start].session_no) ++end;
      if (start >= min_history) {
        RankingQuery q;
        q.user_id = split.users[u].user_id;
        q.recommended =
            recommend(catalog, predict(std::span(events).first(start)), k);
        std::set<std::string> relevant;
        for (std::size_t i = start; i < end; ++i) relevant.insert(events[i].paper_id);
        q.relevant.assign(relevant.begin(), relevant.end());
        q.clicked = hits_at_k(q.recommended, q.relevant, k);
        q.shown = k;
        queries.push_back(std::move(q));
      }
      start = end;
    }
  }
  return queries;
}

}  // namespace topicintent
