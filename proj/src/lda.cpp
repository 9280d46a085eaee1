#include "topicintent/lda.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json_matrix.hpp"
#include "topicintent/error.hpp"

namespace topicintent {

void LdaConfig::validate() const {
  require(k >= 1, "lda: k must be >= 1");
  require(effective_alpha() > 0.0, "lda: alpha must be > 0");
  require(beta > 0.0, "lda: beta must be > 0");
  require(iterations > burn_in, "lda: iterations must exceed burn_in");
}

namespace {

std::vector<std::vector<WordId>> expand_tokens(const BowCorpus& corpus) {
  std::vector<std::vector<WordId>> words(corpus.num_docs());
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    for (const auto& tc : corpus.docs[d]) {
      words[d].insert(words[d].end(), tc.count, tc.word);
    }
  }
  return words;
}

}  // namespace

LdaState LdaState::init(const BowCorpus& corpus, const LdaConfig& config, Rng& rng) {
  config.validate();
  LdaState s;
  s.k_ = config.k;
  s.vocab_ = corpus.vocab_size();
  s.alpha_ = config.effective_alpha();
  s.beta_ = config.beta;
  s.words_ = expand_tokens(corpus);
  s.z_.resize(s.words_.size());
  for (std::size_t d = 0; d < s.words_.size(); ++d) {
    s.z_[d].resize(s.words_[d].size());
    for (auto& topic : s.z_[d]) topic = static_cast<TopicId>(rng.below(s.k_));
  }
  s.build_counts();
  return s;
}

LdaState LdaState::from_assignments(const BowCorpus& corpus, const LdaConfig& config,
                                    std::vector<std::vector<TopicId>> z) {
  config.validate();
  LdaState s;
  s.k_ = config.k;
  s.vocab_ = corpus.vocab_size();
  s.alpha_ = config.effective_alpha();
  s.beta_ = config.beta;
  s.words_ = expand_tokens(corpus);
  require(z.size() == s.words_.size(), "lda: assignment count differs from document count");
  for (std::size_t d = 0; d < z.size(); ++d) {
    require(z[d].size() == s.words_[d].size(), "lda: assignment length differs from title length");
    for (TopicId t : z[d]) require(t < s.k_ || t == kExcluded, "lda: topic out of range");
  }
  s.z_ = std::move(z);
  s.build_counts();
  return s;
}

void LdaState::build_counts() {
  word_topic_.assign(vocab_ * k_, 0);
  doc_topic_.assign(words_.size() * k_, 0);
  topic_total_.assign(k_, 0);
  doc_length_.assign(words_.size(), 0);
  for (std::size_t d = 0; d < words_.size(); ++d) {
    for (std::size_t i = 0; i < words_[d].size(); ++i) {
      const TopicId t = z_[d][i];
      if (t == kExcluded) continue;
      ++word_topic_[words_[d][i] * k_ + t];
      ++doc_topic_[d * k_ + t];
      ++topic_total_[t];
      ++doc_length_[d];
    }
  }
}

void LdaState::exclude(std::size_t doc, std::size_t pos) {
  TopicId& t = z_.at(doc).at(pos);
  if (t == kExcluded) return;
  const WordId w = words_[doc][pos];
  --word_topic_[w * k_ + t];
  --doc_topic_[doc * k_ + t];
  --topic_total_[t];
  --doc_length_[doc];
  t = kExcluded;
}

void LdaState::assign(std::size_t doc, std::size_t pos, TopicId topic) {
  require(topic < k_, "lda: topic out of range");
  TopicId& t = z_.at(doc).at(pos);
  if (t != kExcluded) exclude(doc, pos);
  const WordId w = words_[doc][pos];
  ++word_topic_[w * k_ + topic];
  ++doc_topic_[doc * k_ + topic];
  ++topic_total_[topic];
  ++doc_length_[doc];
  t = topic;
}

std::vector<double> LdaState::conditional(std::size_t doc, std::size_t pos) const {
  if (z_.at(doc).at(pos) != kExcluded) {
    fail(ErrorKind::kInvalidArgument, "lda: conditional requires the token to be excluded");
  }
  const WordId w = words_[doc][pos];
  const double vbeta = static_cast<double>(vocab_) * beta_;
  const double kalpha = static_cast<double>(k_) * alpha_;
  if (doc_length_[doc] < 0) fail(ErrorKind::kInvalidInput, "lda: negative title length count");
  const double doc_denominator = static_cast<double>(doc_length_[doc]) + kalpha;
  std::vector<double> p(k_);
  double total = 0.0;
  for (std::size_t j = 0; j < k_; ++j) {
    const std::int64_t nwj = word_topic_[w * k_ + j];
    const std::int64_t nj = topic_total_[j];
    const std::int64_t ndj = doc_topic_[doc * k_ + j];
    if (nwj < 0 || nj < 0 || ndj < 0) {
      fail(ErrorKind::kInvalidInput, "lda: negative count in sampler state");
    }
    p[j] = (static_cast<double>(nwj) + beta_) / (static_cast<double>(nj) + vbeta) *
           ((static_cast<double>(ndj) + alpha_) / doc_denominator);
    total += p[j];
  }
  for (double& v : p) v /= total;
  return p;
}

void LdaState::sweep(Rng& rng) {
  for (std::size_t d = 0; d < words_.size(); ++d) {
    for (std::size_t i = 0; i < words_[d].size(); ++i) {
      exclude(d, i);
      const auto p = conditional(d, i);
      assign(d, i, static_cast<TopicId>(rng.categorical(p)));
    }
  }
}

double LdaState::log_likelihood() const {
  const double v = static_cast<double>(vocab_);
  double ll = static_cast<double>(k_) * (std::lgamma(v * beta_) - v * std::lgamma(beta_));
  for (std::size_t j = 0; j < k_; ++j) {
    for (std::size_t w = 0; w < vocab_; ++w) {
      ll += std::lgamma(static_cast<double>(word_topic_[w * k_ + j]) + beta_);
    }
    ll -= std::lgamma(static_cast<double>(topic_total_[j]) + v * beta_);
  }
  return ll;
}

void LdaState::check_consistency() const {
  std::vector<std::int64_t> wt(vocab_ * k_, 0);
  std::vector<std::int64_t> dt(words_.size() * k_, 0);
  std::vector<std::int64_t> tt(k_, 0);
  std::vector<std::int64_t> dl(words_.size(), 0);
  for (std::size_t d = 0; d < words_.size(); ++d) {
    for (std::size_t i = 0; i < words_[d].size(); ++i) {
      const TopicId t = z_[d][i];
      if (t == kExcluded) continue;
      ++wt[words_[d][i] * k_ + t];
      ++dt[d * k_ + t];
      ++tt[t];
      ++dl[d];
    }
  }
  if (wt != word_topic_ || dt != doc_topic_ || tt != topic_total_ || dl != doc_length_) {
    fail(ErrorKind::kInvalidInput, "lda: count matrices disagree with topic assignments");
  }
}

Eigen::MatrixXd estimate_tau(const LdaState& state) {
  const std::size_t k = state.num_topics();
  const std::size_t v = state.vocab_size();
  Eigen::MatrixXd tau(k, v);
  for (std::size_t j = 0; j < k; ++j) {
    const double denom =
        static_cast<double>(state.topic_total(j)) + static_cast<double>(v) * state.beta();
    for (std::size_t w = 0; w < v; ++w) {
      tau(j, w) = (static_cast<double>(state.word_topic(w, j)) + state.beta()) / denom;
    }
  }
  return tau;
}

Eigen::MatrixXd estimate_theta(const LdaState& state) {
  const std::size_t k = state.num_topics();
  Eigen::MatrixXd theta(state.num_docs(), k);
  for (std::size_t d = 0; d < state.num_docs(); ++d) {
    const double denom =
        static_cast<double>(state.doc_length(d)) + static_cast<double>(k) * state.alpha();
    for (std::size_t j = 0; j < k; ++j) {
      theta(d, j) = (static_cast<double>(state.doc_topic(d, j)) + state.alpha()) / denom;
    }
  }
  return theta;
}

std::vector<WordId> top_words(const Eigen::MatrixXd& tau, TopicId topic, std::size_t n) {
  require(topic < tau.rows(), "top_words: topic out of range");
  std::vector<WordId> ids(static_cast<std::size_t>(tau.cols()));
  std::iota(ids.begin(), ids.end(), WordId{0});
  const std::size_t take = std::min(n, ids.size());
  std::partial_sort(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take), ids.end(),
                    [&](WordId a, WordId b) {
                      const double pa = tau(topic, a);
                      const double pb = tau(topic, b);
                      return pa != pb ? pa > pb : a < b;
                    });
  ids.resize(take);
  return ids;
}

CoherenceScores coherence(const Eigen::MatrixXd& tau, const BowCorpus& corpus,
                          std::size_t top_n) {
  require(static_cast<std::size_t>(tau.cols()) == corpus.vocab_size(),
          "coherence: tau width differs from vocabulary size");
  CoherenceScores scores;
  scores.per_topic.reserve(static_cast<std::size_t>(tau.rows()));

  // Per-word sorted list of titles containing it.
  std::vector<std::vector<std::uint32_t>> postings(corpus.vocab_size());
  for (std::size_t d = 0; d < corpus.num_docs(); ++d) {
    for (const auto& tc : corpus.docs[d]) postings[tc.word].push_back(static_cast<std::uint32_t>(d));
  }
  auto co_doc = [&](WordId a, WordId b) {
    const auto& pa = postings[a];
    const auto& pb = postings[b];
    std::size_t i = 0, j = 0, n = 0;
    while (i < pa.size() && j < pb.size()) {
      if (pa[i] < pb[j]) {
        ++i;
      } else if (pb[j] < pa[i]) {
        ++j;
      } else {
        ++n, ++i, ++j;
      }
    }
    return n;
  };

  for (TopicId t = 0; t < static_cast<TopicId>(tau.rows()); ++t) {
    const auto words = top_words(tau, t, top_n);
    double score = 0.0;
    // Each lower-ranked word is conditioned on every higher-ranked one.
    for (std::size_t m = 1; m < words.size(); ++m) {
      for (std::size_t l = 0; l < m; ++l) {
        const std::size_t df = postings[words[l]].size();
        if (df == 0) {
          fail(ErrorKind::kInvalidInput,
               "coherence: top word '" + corpus.dictionary.token(words[l]) + "' of topic " +
                   std::to_string(t) + " never occurs in the corpus");
        }
        score += std::log((static_cast<double>(co_doc(words[m], words[l])) + 1.0) /
                          static_cast<double>(df));
      }
    }
    scores.per_topic.push_back(score);
  }
  if (!scores.per_topic.empty()) {
    scores.mean = std::accumulate(scores.per_topic.begin(), scores.per_topic.end(), 0.0) /
                  static_cast<double>(scores.per_topic.size());
  }
  return scores;
}

LdaModel train_lda(const BowCorpus& corpus, const LdaConfig& config) {
  config.validate();
  Rng rng(config.seed);
  LdaState state = LdaState::init(corpus, config, rng);
  LdaModel model;
  model.config = config;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    state.sweep(rng);
    if (it >= config.burn_in) model.log_likelihood_trace.push_back(state.log_likelihood());
  }
  model.dictionary = corpus.dictionary;
  model.doc_ids = corpus.doc_ids;
  model.tau = estimate_tau(state);
  model.theta = estimate_theta(state);
  return model;
}

std::vector<TopicId> theta_labels(const Eigen::MatrixXd& theta) {
  std::vector<TopicId> labels(static_cast<std::size_t>(theta.rows()));
  for (Eigen::Index d = 0; d < theta.rows(); ++d) {
    Eigen::Index best = 0;
    for (Eigen::Index j = 1; j < theta.cols(); ++j) {
      if (theta(d, j) > theta(d, best)) best = j;
    }
    labels[static_cast<std::size_t>(d)] = static_cast<TopicId>(best);
  }
  return labels;
}

KSelection select_k(const BowCorpus& corpus, std::span<const std::size_t> k_candidates,
                    const LdaConfig& config_template, std::size_t top_n) {
  require(!k_candidates.empty(), "select_k: no candidates");
  KSelection sel;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k : k_candidates) {
    LdaConfig cfg = config_template;
    cfg.k = k;
    const LdaModel model = train_lda(corpus, cfg);
    const double score = coherence(model.tau, corpus, top_n).mean;
    sel.candidates.push_back(k);
    sel.mean_coherence.push_back(score);
    if (score > best || (score == best && k < sel.best_k)) {
      best = score;
      sel.best_k = k;
    }
  }
  return sel;
}

nlohmann::ordered_json lda_model_to_json(const LdaModel& model) {
  nlohmann::ordered_json j;
  j["format"] = "lda/1";
  j["k"] = model.config.k;
  j["alpha"] = model.config.effective_alpha();
  j["beta"] = model.config.beta;
  j["iterations"] = model.config.iterations;
  j["burn_in"] = model.config.burn_in;
  j["seed"] = model.config.seed;
  j["tau"] = matrix_to_json(model.tau);
  j["dictionary"] = dictionary_to_json(model.dictionary);
  j["doc_ids"] = model.doc_ids;
  j["theta"] = matrix_to_json(model.theta);
  j["log_likelihood"] = model.log_likelihood_trace;
  return j;
}

LdaModel lda_model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "lda/1") {
      fail(ErrorKind::kSchemaMismatch, "unsupported LDA model format");
    }
    LdaModel model;
    model.config.k = j.at("k").get<std::size_t>();
    model.config.alpha = j.at("alpha").get<double>();
    model.config.beta = j.at("beta").get<double>();
    model.config.iterations = j.value("iterations", std::size_t{1});
    model.config.burn_in = j.value("burn_in", std::size_t{0});
    model.config.seed = j.value("seed", std::uint64_t{1});
    model.dictionary = dictionary_from_json(j.at("dictionary"));
    model.tau = matrix_from_json(j.at("tau"));
    if (model.tau.rows() != static_cast<Eigen::Index>(model.config.k) ||
        model.tau.cols() != static_cast<Eigen::Index>(model.dictionary.size())) {
      fail(ErrorKind::kSchemaMismatch, "LDA model tau has the wrong shape");
    }
    if (j.contains("doc_ids")) model.doc_ids = j.at("doc_ids").get<std::vector<std::string>>();
    if (j.contains("theta")) model.theta = matrix_from_json(j.at("theta"), model.tau.rows());
    if (j.contains("log_likelihood")) {
      model.log_likelihood_trace = j.at("log_likelihood").get<std::vector<double>>();
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kSchemaMismatch, std::string("LDA model: ") + e.what());
  }
}

}  // namespace topicintent
