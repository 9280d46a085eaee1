#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "topicintent/corpus.hpp"

namespace topicintent {

struct SkipGramConfig {
  std::size_t dim = 200;
  std::size_t window = 6;
  std::size_t min_count = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;
  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainingPair {
  WordId target;
  WordId context;

  bool operator==(const TrainingPair&) const = default;
};

/// Full-softmax skip-gram network. Row w of `input` is the embedding of word
/// w; `output` maps the hidden layer back onto the vocabulary.
struct EmbeddingModel {
  Dictionary dictionary;
  Eigen::MatrixXd input;   // V × N
  Eigen::MatrixXd output;  // N × V

  std::size_t vocab_size() const { return static_cast<std::size_t>(input.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(input.cols()); }
};

Eigen::VectorXd one_hot(WordId index, std::size_t vocab_size);

/// (target, context) pairs for every in-vocabulary token position and every
/// offset in [-window, window] \ {0} that stays inside the title.
/// Out-of-vocabulary tokens are removed before windowing.
std::vector<TrainingPair> generate_pairs(std::span<const TokenizedDocument> docs,
                                         const Dictionary& dict, std::size_t window);

/// p(· | target) = softmax(outputᵀ · input[target]).
Eigen::VectorXd forward(const EmbeddingModel& model, WordId target);

struct SkipGramGradient {
  double loss = 0.0;  // -Σ log p(context | target)
  Eigen::MatrixXd input;
  Eigen::MatrixXd output;
};

SkipGramGradient loss_and_grad(const EmbeddingModel& model, std::span<const TrainingPair> batch);

/// Weights before any update: input uniform in [-0.5/N, 0.5/N], output zero.
EmbeddingModel init_embedding(Dictionary dict, const SkipGramConfig& config);

/// Plain SGD over shuffled pairs, one pair per step.
EmbeddingModel train_embedding(std::span<const TokenizedDocument> docs, Dictionary dict,
                               const SkipGramConfig& config);

double cosine_similarity(const EmbeddingModel& model, WordId a, WordId b);

/// Top-n words by cosine similarity to `word`, excluding it; ties by lower id.
std::vector<std::pair<WordId, double>> nearest(const EmbeddingModel& model, WordId word,
                                               std::size_t n);

nlohmann::ordered_json embedding_to_json(const EmbeddingModel& model);
EmbeddingModel embedding_from_json(const nlohmann::json& j);
/// `word,v1,...,vN` rows for external visualization.
void write_embedding_csv(std::ostream& out, const EmbeddingModel& model);

}  // namespace topicintent
