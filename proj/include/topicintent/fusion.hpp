#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "topicintent/corpus.hpp"
#include "topicintent/embed.hpp"
#include "topicintent/lda.hpp"

namespace topicintent {

struct FusionConfig {
  std::size_t seeds_per_topic = 2;
  std::size_t neighbors_per_seed = 6;
  /// Neighbours with cosine similarity below this are dropped.
  double similarity_threshold = 0.4;

  void validate() const;
};

struct TopicScore {
  TopicId topic;
  double probability;

  bool operator==(const TopicScore&) const = default;
};

/// Fused word → topic table. Entries per word are sorted by topic and have
/// distinct topics.
struct WordTopicMap {
  std::map<std::string, std::vector<TopicScore>, std::less<>> entries;
  std::size_t num_topics = 0;
  /// Seeds that had no embedding vector.
  std::vector<std::string> missing_seeds;

  bool operator==(const WordTopicMap& other) const {
    return entries == other.entries && num_topics == other.num_topics;
  }
};

std::vector<std::vector<WordId>> seed_words(const Eigen::MatrixXd& tau, std::size_t per_topic);

struct Neighbor {
  std::string word;
  double similarity;

  bool operator==(const Neighbor&) const = default;
};

struct Expansion {
  TopicId topic = 0;
  bool seed_found = false;
  std::vector<Neighbor> words;
};

/// The seed's `neighbors_per_seed` nearest words that reach the similarity
/// threshold, each tagged with `topic`. A seed missing from the embedding
/// vocabulary yields an empty expansion with seed_found = false.
Expansion expand_and_filter(const std::string& seed, TopicId topic, const EmbeddingModel& embedding,
                            const FusionConfig& config);

/// Plain LDA table: every word gets (j, τ[j, w]) for all topics.
WordTopicMap lda_word_topic_map(const Eigen::MatrixXd& tau, const Dictionary& dict);

/// LDA table plus embedding expansion of each topic's seed words. An expanded
/// word's entry for the seed's topic becomes
///   max(existing, similarity × τ[topic, seed]).
WordTopicMap build_word_topic_map(const Eigen::MatrixXd& tau, const Dictionary& dict,
                                  const EmbeddingModel& embedding, const FusionConfig& config);

struct DominantTopic {
  /// Empty when no token is present in the map.
  std::optional<TopicId> topic;
  std::vector<std::size_t> votes;   // per topic
  std::vector<double> vote_mass;    // summed winning probabilities per topic
  std::size_t matched_tokens = 0;
};

/// Majority vote of each token's best topic. Ties in vote count go to the
/// larger summed probability of the voting words, then to the lower index.
DominantTopic dominant_topic(std::span<const std::string> tokens, const WordTopicMap& m2);

struct TopicAssignment {
  std::string doc_id;
  std::optional<TopicId> topic;
};

std::vector<TopicAssignment> assign_corpus(std::span<const TokenizedDocument> docs,
                                           const WordTopicMap& m2);

nlohmann::ordered_json word_topic_map_to_json(const WordTopicMap& m2);
WordTopicMap word_topic_map_from_json(const nlohmann::json& j);

/// `doc_id,topic` with `unassigned` for titles without a known word.
void write_assignments_csv(std::ostream& out, std::span<const TopicAssignment> assignments);

}  // namespace topicintent
