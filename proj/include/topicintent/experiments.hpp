#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "topicintent/baselines.hpp"
#include "topicintent/corpus.hpp"
#include "topicintent/embed.hpp"
#include "topicintent/eval.hpp"
#include "topicintent/fusion.hpp"
#include "topicintent/intent.hpp"
#include "topicintent/lda.hpp"

namespace topicintent {

// ---------------------------------------------------------------------------
// Planted-topic titles

/// Titles of a single planted topic each: every token is a noise word with
/// probability noise_fraction, otherwise a uniform draw from the topic's core
/// vocabulary. Core vocabularies are disjoint; noise words are shared.
struct PlantedCorpusConfig {
  std::size_t num_topics = 4;
  std::size_t num_titles = 400;
  std::size_t core_words_per_topic = 15;
  std::size_t noise_words = 40;
  double noise_fraction = 0.3;
  std::size_t min_length = 6;
  std::size_t max_length = 10;
  std::uint64_t seed = 1;
};

struct PlantedCorpus {
  std::vector<RawDocument> titles;
  std::vector<TopicId> truth;
  std::vector<std::vector<std::string>> core_vocabulary;
  std::vector<std::string> noise_vocabulary;
};

/// Pronounceable lower-case pseudo-word for an index; distinct indices give
/// distinct words, and each word is left unchanged by preprocessing.
std::string pseudo_word(std::size_t index);

PlantedCorpus planted_corpus(const PlantedCorpusConfig& config);

// ---------------------------------------------------------------------------
// Topic pipeline: preprocess → LDA → skip-gram → fusion → labels

struct TopicPipelineConfig {
  PreprocessConfig preprocess;
  /// Dictionary cutoff for LDA (the embedding uses embed.min_count).
  std::size_t min_count = 2;
  LdaConfig lda;
  SkipGramConfig embed;
  FusionConfig fusion;
};

struct TopicPipelineResult {
  std::vector<TokenizedDocument> docs;
  BowCorpus corpus;
  LdaModel lda;
  EmbeddingModel embedding;
  WordTopicMap hybrid_map;
  /// Highest-theta topic per title.
  std::vector<TopicId> lda_labels;
  /// Dominant topic over the fused map per title.
  std::vector<std::optional<TopicId>> hybrid_labels;
};

TopicPipelineResult run_topic_pipeline(std::span<const RawDocument> titles,
                                       const TopicPipelineConfig& config);

/// Maps unassigned titles to an extra class `num_topics`. Returns the labels
/// and the class count (num_topics, or num_topics + 1 if any is unassigned).
std::pair<std::vector<TopicId>, std::size_t> probe_labels(
    std::span<const std::optional<TopicId>> labels, std::size_t num_topics);

struct ProbeComparison {
  ClassificationReport lda;
  ClassificationReport hybrid;
};

/// The same TF-IDF features and fold split for both label sets.
ProbeComparison compare_label_sets(const TopicPipelineResult& result, std::size_t folds,
                                   std::uint64_t seed, const LogisticConfig& config = {});

// ---------------------------------------------------------------------------
// Next-topic prediction

/// Per-user chronological split: the first floor(fraction · n) events of each
/// user are training history.
struct SequenceSplit {
  std::vector<UserHistory> users;
  std::vector<std::size_t> train_length;
};

SequenceSplit chronological_split(std::vector<UserHistory> users, double train_fraction);

/// Training prefixes only.
std::vector<UserHistory> training_histories(const SequenceSplit& split);

struct TargetPosition {
  std::size_t user = 0;
  std::size_t index = 0;  // event to predict from events [0, index)
};

/// Positions with at least `min_history` earlier events, inside the training
/// prefix (test = false) or after it (test = true). Every model is scored on
/// the same positions.
std::vector<TargetPosition> target_positions(const SequenceSplit& split, std::size_t min_history,
                                             bool test);

std::vector<TopicId> target_topics(const SequenceSplit& split,
                                   std::span<const TargetPosition> positions);

std::vector<Eigen::VectorXd> intent_distributions(const IntentModel& model,
                                                  const SequenceSplit& split,
                                                  std::span<const TargetPosition> positions);
std::vector<Eigen::VectorXd> markov_distributions(const MarkovBaseline& model,
                                                  const SequenceSplit& split,
                                                  std::span<const TargetPosition> positions);
std::vector<Eigen::VectorXd> fpm_distributions(const FpmBaseline& model,
                                               const SequenceSplit& split,
                                               std::span<const TargetPosition> positions);

struct SequenceComparison {
  IntentModel intent;
  SequenceReport lstm_train, lstm_test;
  SequenceReport markov_train, markov_test;
  SequenceReport fpm_train, fpm_test;
};

/// Trains the LSTM and both baselines on the training prefixes and scores all
/// three on identical positions.
SequenceComparison compare_sequence_models(const SequenceSplit& split, std::size_t num_topics,
                                           const IntentTrainConfig& config,
                                           std::size_t fpm_max_len = 3);

// ---------------------------------------------------------------------------
// Session recommendation

/// Every paper seen in the log with its topic, and click popularity from the
/// training prefixes (+1 so unseen papers stay rankable).
struct PaperCatalog {
  std::vector<std::string> papers;  // sorted
  std::vector<TopicId> topics;
  std::vector<double> popularity;
};

PaperCatalog build_catalog(const SequenceSplit& split, std::size_t num_topics);

/// Top-k papers by p(topic) · popularity / (total popularity of the topic),
/// ties by paper id.
std::vector<std::string> recommend(const PaperCatalog& catalog,
                                   const Eigen::VectorXd& topic_distribution, std::size_t k);

using HistoryPredictor =
    std::function<Eigen::VectorXd(std::span<const InteractionEvent> history)>;

/// One query per test session with at least `min_history` earlier events:
/// recommend from the history before the session; relevant items are the
/// papers clicked in it, clicked = recommended ∩ relevant, shown = k.
std::vector<RankingQuery> session_queries(const SequenceSplit& split, const PaperCatalog& catalog,
                                          const HistoryPredictor& predict, std::size_t k,
                                          std::size_t min_history);

}  // namespace topicintent
