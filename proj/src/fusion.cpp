#include "topicintent/fusion.hpp"

#include <algorithm>
#include <ostream>

#include "topicintent/error.hpp"

namespace topicintent {

void FusionConfig::validate() const {
  require(seeds_per_topic >= 1, "fusion: seeds_per_topic must be >= 1");
  require(similarity_threshold >= -1.0 && similarity_threshold <= 1.0,
          "fusion: similarity_threshold must lie in [-1, 1]");
}

std::vector<std::vector<WordId>> seed_words(const Eigen::MatrixXd& tau, std::size_t per_topic) {
  std::vector<std::vector<WordId>> seeds;
  seeds.reserve(static_cast<std::size_t>(tau.rows()));
  for (TopicId t = 0; t < static_cast<TopicId>(tau.rows()); ++t) {
    seeds.push_back(top_words(tau, t, per_topic));
  }
  return seeds;
}

Expansion expand_and_filter(const std::string& seed, TopicId topic, const EmbeddingModel& embedding,
                            const FusionConfig& config) {
  Expansion out;
  out.topic = topic;
  const auto id = embedding.dictionary.find(seed);
  if (!id) return out;
  out.seed_found = true;
  for (const auto& [word, sim] : nearest(embedding, *id, config.neighbors_per_seed)) {
    if (sim >= config.similarity_threshold) {
      out.words.push_back({embedding.dictionary.token(word), sim});
    }
  }
  return out;
}

WordTopicMap lda_word_topic_map(const Eigen::MatrixXd& tau, const Dictionary& dict) {
  require(static_cast<std::size_t>(tau.cols()) == dict.size(),
          "fusion: tau width differs from dictionary size");
  WordTopicMap m2;
  m2.num_topics = static_cast<std::size_t>(tau.rows());
  for (WordId w = 0; w < dict.size(); ++w) {
    auto& row = m2.entries[dict.token(w)];
    row.reserve(m2.num_topics);
    for (TopicId j = 0; j < m2.num_topics; ++j) row.push_back({j, tau(j, w)});
  }
  return m2;
}

WordTopicMap build_word_topic_map(const Eigen::MatrixXd& tau, const Dictionary& dict,
                                  const EmbeddingModel& embedding, const FusionConfig& config) {
  config.validate();
  WordTopicMap m2 = lda_word_topic_map(tau, dict);
  if (config.neighbors_per_seed == 0) return m2;

  const auto seeds = seed_words(tau, config.seeds_per_topic);
  for (TopicId topic = 0; topic < seeds.size(); ++topic) {
    for (WordId seed : seeds[topic]) {
      const std::string& seed_token = dict.token(seed);
      const Expansion expansion = expand_and_filter(seed_token, topic, embedding, config);
      if (!expansion.seed_found) {
        if (std::find(m2.missing_seeds.begin(), m2.missing_seeds.end(), seed_token) ==
            m2.missing_seeds.end()) {
          m2.missing_seeds.push_back(seed_token);
        }
        continue;
      }
      const double seed_prob = tau(topic, seed);
      for (const auto& neighbor : expansion.words) {
        const double score = neighbor.similarity * seed_prob;
        auto found = m2.entries.find(neighbor.word);
        if (found == m2.entries.end()) {
          // Embedding-only word, absent from the LDA vocabulary.
          if (score > 0.0) m2.entries[neighbor.word] = {{topic, score}};
          continue;
        }
        auto& row = found->second;
        auto it = std::lower_bound(row.begin(), row.end(), topic,
                                   [](const TopicScore& s, TopicId t) { return s.topic < t; });
        if (it != row.end() && it->topic == topic) {
          it->probability = std::max(it->probability, score);
        } else if (score > 0.0) {
          row.insert(it, {topic, score});
        }
      }
    }
  }
  return m2;
}

DominantTopic dominant_topic(std::span<const std::string> tokens, const WordTopicMap& m2) {
  DominantTopic out;
  out.votes.assign(m2.num_topics, 0);
  out.vote_mass.assign(m2.num_topics, 0.0);
  for (const auto& token : tokens) {
    auto it = m2.entries.find(token);
    if (it == m2.entries.end() || it->second.empty()) continue;
    const TopicScore* best = &it->second.front();
    for (const auto& s : it->second) {
      if (s.probability > best->probability) best = &s;
    }
    if (best->topic >= m2.num_topics) {
      fail(ErrorKind::kSchemaMismatch, "word-topic map entry refers to topic out of range");
    }
    ++out.votes[best->topic];
    out.vote_mass[best->topic] += best->probability;
    ++out.matched_tokens;
  }
  if (out.matched_tokens == 0) return out;

  TopicId winner = 0;
  for (TopicId t = 1; t < m2.num_topics; ++t) {
    if (out.votes[t] > out.votes[winner] ||
        (out.votes[t] == out.votes[winner] && out.vote_mass[t] > out.vote_mass[winner])) {
      winner = t;
    }
  }
  out.topic = winner;
  return out;
}

std::vector<TopicAssignment> assign_corpus(std::span<const TokenizedDocument> docs,
                                           const WordTopicMap& m2) {
  std::vector<TopicAssignment> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) out.push_back({doc.doc_id, dominant_topic(doc.tokens, m2).topic});
  return out;
}

nlohmann::ordered_json word_topic_map_to_json(const WordTopicMap& m2) {
  nlohmann::ordered_json j;
  j["format"] = "m2/1";
  j["num_topics"] = m2.num_topics;
  nlohmann::ordered_json entries = nlohmann::ordered_json::object();
  for (const auto& [word, row] : m2.entries) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& s : row) arr.push_back({s.topic, s.probability});
    entries[word] = std::move(arr);
  }
  j["entries"] = std::move(entries);
  j["missing_seeds"] = m2.missing_seeds;
  return j;
}

WordTopicMap word_topic_map_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "m2/1") {
      fail(ErrorKind::kSchemaMismatch, "unsupported word-topic map format");
    }
    WordTopicMap m2;
    std::size_t max_topic = 0;
    for (const auto& [word, arr] : j.at("entries").items()) {
      auto& row = m2.entries[word];
      for (const auto& pair : arr) {
        const auto topic = pair.at(0).get<TopicId>();
        row.push_back({topic, pair.at(1).get<double>()});
        max_topic = std::max<std::size_t>(max_topic, topic + 1);
      }
      std::sort(row.begin(), row.end(),
                [](const TopicScore& a, const TopicScore& b) { return a.topic < b.topic; });
    }
    m2.num_topics = j.value("num_topics", max_topic);
    if (max_topic > m2.num_topics) {
      fail(ErrorKind::kSchemaMismatch, "word-topic map entry refers to topic out of range");
    }
    if (j.contains("missing_seeds")) {
      m2.missing_seeds = j.at("missing_seeds").get<std::vector<std::string>>();
    }
    return m2;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kSchemaMismatch, std::string("word-topic map: ") + e.what());
  }
}

void write_assignments_csv(std::ostream& out, std::span<const TopicAssignment> assignments) {
  out << "doc_id,topic\n";
  for (const auto& a : assignments) {
    const bool quote = a.doc_id.find_first_of(",\"\n\r") != std::string::npos;
    if (quote) {
      out << '"';
      for (char c : a.doc_id) {
        if (c == '"') out << '"';
        out << c;
      }
      out << '"';
    } else {
      out << a.doc_id;
    }
    out << ',';
    if (a.topic) {
      out << *a.topic;
    } else {
      out << "unassigned";
    }
    out << '\n';
  }
}

}  // namespace topicintent
