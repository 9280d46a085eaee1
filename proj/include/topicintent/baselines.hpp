#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "topicintent/lda.hpp"

namespace topicintent {

/// First-order Markov chain over topics. Rows are Laplace-smoothed (+1) and
/// row-stochastic, so an unseen topic gets a uniform row.
class MarkovBaseline {
 public:
  static MarkovBaseline fit(std::span<const std::vector<TopicId>> sequences,
                            std::size_t num_topics);

  const Eigen::MatrixXd& transitions() const { return transitions_; }
  const Eigen::MatrixXd& counts() const { return counts_; }
  std::size_t num_topics() const { return static_cast<std::size_t>(transitions_.rows()); }

  /// Row of the last topic in `history`. Throws kInsufficientHistory when
  /// `history` is empty.
  Eigen::VectorXd distribution(std::span<const TopicId> history) const;
  TopicId predict(std::span<const TopicId> history) const;

 private:
  Eigen::MatrixXd counts_;
  Eigen::MatrixXd transitions_;
};

/// Frequent-pattern predictor: the most frequent continuation of the longest
/// suffix of the history (up to max_len) seen in training, falling back to
/// shorter suffixes and then to the globally most frequent topic.
class FpmBaseline {
 public:
  static FpmBaseline fit(std::span<const std::vector<TopicId>> sequences, std::size_t num_topics,
                         std::size_t max_len = 3);

  std::size_t num_topics() const { return global_.size(); }
  std::size_t max_len() const { return max_len_; }

  /// Continuation counts of the longest matching suffix (global counts when
  /// nothing matches) and the length of that suffix (0 for global).
  std::pair<std::vector<double>, std::size_t> match(std::span<const TopicId> history) const;

  /// Normalized continuation counts of the matched pattern; uniform when the
  /// training data was empty.
  Eigen::VectorXd distribution(std::span<const TopicId> history) const;
  /// Most frequent continuation, ties to the lower topic.
  TopicId predict(std::span<const TopicId> history) const;

 private:
  std::size_t max_len_ = 0;
  std::map<std::vector<TopicId>, std::vector<double>> patterns_;
  std::vector<double> global_;
};

}  // namespace topicintent
