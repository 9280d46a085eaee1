#include "topicintent/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "json_matrix.hpp"
#include "topicintent/error.hpp"
#include "topicintent/random.hpp"

namespace topicintent {

void SkipGramConfig::validate() const {
  require(dim >= 1, "skip-gram: dim must be >= 1");
  require(window >= 1, "skip-gram: window must be >= 1");
  require(learning_rate > 0.0, "skip-gram: learning_rate must be > 0");
}

Eigen::VectorXd one_hot(WordId index, std::size_t vocab_size) {
  require(index < vocab_size, "one_hot: index out of range");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(vocab_size));
  v(index) = 1.0;
  return v;
}

std::vector<TrainingPair> generate_pairs(std::span<const TokenizedDocument> docs,
                                         const Dictionary& dict, std::size_t window) {
  require(window >= 1, "generate_pairs: window must be >= 1");
  std::vector<TrainingPair> pairs;
  std::vector<WordId> ids;
  for (const auto& doc : docs) {
    ids.clear();
    for (const auto& token : doc.tokens) {
      if (auto id = dict.find(token)) ids.push_back(*id);
    }
    const auto n = static_cast<std::ptrdiff_t>(ids.size());
    const auto w = static_cast<std::ptrdiff_t>(window);
    for (std::ptrdiff_t t = 0; t < n; ++t) {
      for (std::ptrdiff_t d = -w; d <= w; ++d) {
        const std::ptrdiff_t c = t + d;
        if (d == 0 || c < 0 || c >= n) continue;
        pairs.push_back({ids[static_cast<std::size_t>(t)], ids[static_cast<std::size_t>(c)]});
      }
    }
  }
  return pairs;
}

namespace {

Eigen::VectorXd softmax(const Eigen::VectorXd& scores) {
  const double peak = scores.maxCoeff();
  Eigen::VectorXd e = (scores.array() - peak).exp();
  return e / e.sum();
}

}  // namespace

Eigen::VectorXd forward(const EmbeddingModel& model, WordId target) {
  require(target < model.vocab_size(), "forward: word out of range");
  return softmax(model.output.transpose() * model.input.row(target).transpose());
}

SkipGramGradient loss_and_grad(const EmbeddingModel& model, std::span<const TrainingPair> batch) {
  SkipGramGradient g;
  g.input = Eigen::MatrixXd::Zero(model.input.rows(), model.input.cols());
  g.output = Eigen::MatrixXd::Zero(model.output.rows(), model.output.cols());
  for (const auto& pair : batch) {
    require(pair.target < model.vocab_size() && pair.context < model.vocab_size(),
            "loss_and_grad: word out of range");
    const Eigen::VectorXd hidden = model.input.row(pair.target).transpose();
    Eigen::VectorXd err = forward(model, pair.target);
    g.loss -= std::log(err(pair.context));
    err(pair.context) -= 1.0;
    g.output.noalias() += hidden * err.transpose();
    g.input.row(pair.target).noalias() += (model.output * err).transpose();
  }
  if (!std::isfinite(g.loss)) fail(ErrorKind::kDiverged, "skip-gram loss is not finite");
  return g;
}

EmbeddingModel init_embedding(Dictionary dict, const SkipGramConfig& config) {
  config.validate();
  const auto v = static_cast<Eigen::Index>(dict.size());
  const auto n = static_cast<Eigen::Index>(config.dim);
  Rng rng(config.seed);
  EmbeddingModel model;
  model.dictionary = std::move(dict);
  model.input.resize(v, n);
  const double half = 0.5 / static_cast<double>(config.dim);
  for (Eigen::Index r = 0; r < v; ++r) {
    for (Eigen::Index c = 0; c < n; ++c) model.input(r, c) = rng.uniform(-half, half);
  }
  model.output = Eigen::MatrixXd::Zero(n, v);
  return model;
}

EmbeddingModel train_embedding(std::span<const TokenizedDocument> docs, Dictionary dict,
                               const SkipGramConfig& config) {
  EmbeddingModel model = init_embedding(std::move(dict), config);
  std::vector<TrainingPair> pairs = generate_pairs(docs, model.dictionary, config.window);
  Rng rng(mix_seed(config.seed, 1));
  Eigen::VectorXd hidden(model.input.cols());
  Eigen::VectorXd grad_hidden(model.input.cols());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(std::span<TrainingPair>(pairs));
    double epoch_loss = 0.0;
    for (const auto& pair : pairs) {
      hidden = model.input.row(pair.target).transpose();
      Eigen::VectorXd err = softmax(model.output.transpose() * hidden);
      epoch_loss -= std::log(err(pair.context));
      err(pair.context) -= 1.0;
      grad_hidden.noalias() = model.output * err;
      model.output.noalias() -= config.learning_rate * hidden * err.transpose();
      model.input.row(pair.target).noalias() -= config.learning_rate * grad_hidden.transpose();
    }
    if (!std::isfinite(epoch_loss)) {
      fail(ErrorKind::kDiverged, "skip-gram training diverged in epoch " + std::to_string(epoch));
    }
  }
  return model;
}

double cosine_similarity(const EmbeddingModel& model, WordId a, WordId b) {
  require(a < model.vocab_size() && b < model.vocab_size(), "cosine_similarity: word out of range");
  const auto va = model.input.row(a);
  const auto vb = model.input.row(b);
  const double denom = va.norm() * vb.norm();
  if (denom == 0.0) return 0.0;
  return std::clamp(va.dot(vb) / denom, -1.0, 1.0);
}

std::vector<std::pair<WordId, double>> nearest(const EmbeddingModel& model, WordId word,
                                               std::size_t n) {
  require(word < model.vocab_size(), "nearest: word out of range");
  std::vector<std::pair<WordId, double>> scored;
  scored.reserve(model.vocab_size());
  for (WordId w = 0; w < model.vocab_size(); ++w) {
    if (w != word) scored.emplace_back(w, cosine_similarity(model, word, w));
  }
  const std::size_t take = std::min(n, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take),
                    scored.end(), [](const auto& a, const auto& b) {
                      return a.second != b.second ? a.second > b.second : a.first < b.first;
                    });
  scored.resize(take);
  return scored;
}

nlohmann::ordered_json embedding_to_json(const EmbeddingModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "sgns/1";
  j["dim"] = model.dim();
  nlohmann::ordered_json vectors = nlohmann::ordered_json::object();
  for (WordId w = 0; w < model.vocab_size(); ++w) {
    vectors[model.dictionary.token(w)] = vector_to_json(model.input.row(w).transpose());
  }
  j["vectors"] = std::move(vectors);
  j["dictionary"] = dictionary_to_json(model.dictionary);
  j["output_weights"] = matrix_to_json(model.output);
  return j;
}

EmbeddingModel embedding_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "sgns/1") {
      fail(ErrorKind::kSchemaMismatch, "unsupported embedding format");
    }
    const auto dim = j.at("dim").get<std::size_t>();
    EmbeddingModel model;
    if (j.contains("dictionary")) {
      model.dictionary = dictionary_from_json(j.at("dictionary"));
    } else {
      std::vector<std::string> tokens;
      for (const auto& [word, _] : j.at("vectors").items()) tokens.push_back(word);
      std::sort(tokens.begin(), tokens.end());
      model.dictionary = Dictionary::from_tokens(std::move(tokens), {}, 1);
    }
    const auto v = static_cast<Eigen::Index>(model.dictionary.size());
    model.input.resize(v, static_cast<Eigen::Index>(dim));
    for (WordId w = 0; w < model.dictionary.size(); ++w) {
      const auto& row = j.at("vectors").at(model.dictionary.token(w));
      if (row.size() != dim) fail(ErrorKind::kSchemaMismatch, "embedding vector has wrong length");
      model.input.row(w) = vector_from_json(row).transpose();
    }
    if (j.contains("output_weights")) {
      model.output = matrix_from_json(j.at("output_weights"));
      if (model.output.rows() != static_cast<Eigen::Index>(dim) || model.output.cols() != v) {
        fail(ErrorKind::kSchemaMismatch, "embedding output weights have the wrong shape");
      }
    } else {
      model.output = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dim), v);
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kSchemaMismatch, std::string("embedding model: ") + e.what());
  }
}

void write_embedding_csv(std::ostream& out, const EmbeddingModel& model) {
  out << "word";
  for (std::size_t c = 1; c <= model.dim(); ++c) out << ",v" << c;
  out << '\n';
  char buf[32];
  for (WordId w = 0; w < model.vocab_size(); ++w) {
    out << model.dictionary.token(w);
    for (Eigen::Index c = 0; c < model.input.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", model.input(w, c));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace topicintent
