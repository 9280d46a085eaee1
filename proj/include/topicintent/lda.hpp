#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "topicintent/corpus.hpp"
#include "topicintent/random.hpp"

namespace topicintent {

using TopicId = std::uint32_t;

struct LdaConfig {
  std::size_t k = 10;
  /// Symmetric prior on title-topic mixtures; unset means 50 / k.
  std::optional<double> alpha;
  /// Symmetric prior on topic-word mixtures.
  double beta = 0.01;
  std::size_t iterations = 200;
  std::size_t burn_in = 50;
  std::uint64_t seed = 1;

  double effective_alpha() const { return alpha.value_or(50.0 / static_cast<double>(k)); }
  void validate() const;
};

/// Collapsed Gibbs sampler state: per-token topic assignments plus the
/// word-topic and title-topic count matrices they imply.
///
/// Each title is expanded from its bag of words into a token list ordered by
/// word id. A token is "excluded" while it is being resampled; its assignment
/// then reads kExcluded and it contributes to no count.
class LdaState {
 public:
  static constexpr TopicId kExcluded = std::numeric_limits<TopicId>::max();

  /// Uniform-random initial assignment.
  static LdaState init(const BowCorpus& corpus, const LdaConfig& config, Rng& rng);

  /// State with the given assignments (one vector per title, sized like the
  /// expanded token list). Used by tests to enumerate states.
  static LdaState from_assignments(const BowCorpus& corpus, const LdaConfig& config,
                                   std::vector<std::vector<TopicId>> z);

  std::size_t num_topics() const { return k_; }
  std::size_t vocab_size() const { return vocab_; }
  std::size_t num_docs() const { return words_.size(); }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  std::span<const WordId> words(std::size_t doc) const { return words_.at(doc); }
  std::span<const TopicId> assignments(std::size_t doc) const { return z_.at(doc); }

  std::int64_t word_topic(WordId w, TopicId j) const { return word_topic_[w * k_ + j]; }
  std::int64_t doc_topic(std::size_t d, TopicId j) const { return doc_topic_[d * k_ + j]; }
  std::int64_t topic_total(TopicId j) const { return topic_total_[j]; }
  std::int64_t doc_length(std::size_t d) const { return doc_length_[d]; }

  void exclude(std::size_t doc, std::size_t pos);
  void assign(std::size_t doc, std::size_t pos, TopicId topic);

  /// Full conditional for the excluded token at (doc, pos):
  ///   p(z = j) ∝ (n_wj + β) / (n_j + Vβ) · (n_dj + α) / (n_d + kα)
  /// Throws if the token is not excluded or a count is negative.
  std::vector<double> conditional(std::size_t doc, std::size_t pos) const;

  /// Resamples every token once, in document then position order.
  void sweep(Rng& rng);

  /// log p(w | z) with τ integrated out.
  double log_likelihood() const;

  /// Recounts from z and throws on any disagreement with the stored counts.
  void check_consistency() const;

 private:
  LdaState() = default;
  void build_counts();

  std::size_t k_ = 0;
  std::size_t vocab_ = 0;
  double alpha_ = 0.0;
  double beta_ = 0.0;
  std::vector<std::vector<WordId>> words_;
  std::vector<std::vector<TopicId>> z_;
  std::vector<std::int64_t> word_topic_;
  std::vector<std::int64_t> doc_topic_;
  std::vector<std::int64_t> topic_total_;
  std::vector<std::int64_t> doc_length_;
};

/// k × V, row = topic.
Eigen::MatrixXd estimate_tau(const LdaState& state);
/// m × k, row = title.
Eigen::MatrixXd estimate_theta(const LdaState& state);

/// n word ids of a topic by descending probability, ties by lower id.
std::vector<WordId> top_words(const Eigen::MatrixXd& tau, TopicId topic, std::size_t n);

struct CoherenceScores {
  std::vector<double> per_topic;
  double mean = 0.0;
};

/// UMass coherence over each topic's top_n words, using title co-occurrence
/// counts from `corpus`.
CoherenceScores coherence(const Eigen::MatrixXd& tau, const BowCorpus& corpus,
                          std::size_t top_n = 10);

struct LdaModel {
  LdaConfig config;
  Dictionary dictionary;
  std::vector<std::string> doc_ids;
  Eigen::MatrixXd tau;
  Eigen::MatrixXd theta;
  std::vector<double> log_likelihood_trace;
};

LdaModel train_lda(const BowCorpus& corpus, const LdaConfig& config);

/// Highest-theta topic per title, ties by lower index.
std::vector<TopicId> theta_labels(const Eigen::MatrixXd& theta);

struct KSelection {
  std::size_t best_k = 0;
  std::vector<std::size_t> candidates;
  std::vector<double> mean_coherence;
};

/// Trains one model per candidate k (same seed) and keeps the k with the
/// highest mean coherence; ties go to the smaller k.
KSelection select_k(const BowCorpus& corpus, std::span<const std::size_t> k_candidates,
                    const LdaConfig& config_template, std::size_t top_n = 10);

nlohmann::ordered_json lda_model_to_json(const LdaModel& model);
LdaModel lda_model_from_json(const nlohmann::json& j);

}  // namespace topicintent
