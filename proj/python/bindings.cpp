#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "topicintent/baselines.hpp"
#include "topicintent/error.hpp"
#include "topicintent/eval.hpp"
#include "topicintent/experiments.hpp"
#include "topicintent/sessions.hpp"

namespace py = pybind11;
using namespace topicintent;

namespace {

using TokenLists = std::vector<std::vector<std::string>>;

std::vector<TokenizedDocument> as_docs(const TokenLists& tokens) {
  std::vector<TokenizedDocument> docs;
  docs.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) docs.push_back({std::to_string(i), tokens[i]});
  return docs;
}

LdaConfig lda_config(std::size_t k, std::optional<double> alpha, double beta, std::size_t iterations,
                     std::size_t burn_in, std::uint64_t seed) {
  LdaConfig c;
  c.k = k;
  c.alpha = alpha;
  c.beta = beta;
  c.iterations = iterations;
  c.burn_in = burn_in;
  c.seed = seed;
  return c;
}

std::vector<std::vector<TopicId>> topic_sequences(const std::vector<std::vector<int>>& seqs) {
  std::vector<std::vector<TopicId>> out;
  for (const auto& s : seqs) {
    std::vector<TopicId> t;
    for (int x : s) {
      require(x >= 0, "topics must be non-negative");
      t.push_back(static_cast<TopicId>(x));
    }
    out.push_back(std::move(t));
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_topicintent, m) {
  m.doc() = "Hybrid LDA/skip-gram topic labels and LSTM next-topic prediction";

  // Raised for every library error; `kind` carries the failure category.
  static py::handle error_type =
      PyErr_NewException("topicintent._topicintent.Error", PyExc_ValueError, nullptr);
  m.attr("Error") = error_type;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object exc = error_type(py::str(e.what()));
      exc.attr("kind") = py::str(std::string(to_string(e.kind())));
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  m.def(
      "preprocess",
      [](const std::string& title, std::size_t min_token_length, bool stem) {
        return preprocess({"", title}, {min_token_length, stem}).tokens;
      },
      py::arg("title"), py::arg("min_token_length") = 2, py::arg("stem") = true);

  // LDA ---------------------------------------------------------------------

  py::class_<LdaModel>(m, "LdaModel")
      .def_property_readonly("k", [](const LdaModel& l) { return l.config.k; })
      .def_property_readonly("alpha", [](const LdaModel& l) { return l.config.effective_alpha(); })
      .def_property_readonly("vocabulary", [](const LdaModel& l) { return l.dictionary.tokens(); })
      .def_readonly("tau", &LdaModel::tau)
      .def_readonly("theta", &LdaModel::theta)
      .def_readonly("log_likelihood_trace", &LdaModel::log_likelihood_trace)
      .def("labels", [](const LdaModel& l) { return theta_labels(l.theta); })
      .def(
          "top_words",
          [](const LdaModel& l, TopicId topic, std::size_t n) {
            require(topic < l.config.k, "topic out of range");
            std::vector<std::string> words;
            for (auto w : top_words(l.tau, topic, n)) words.push_back(l.dictionary.token(w));
            return words;
          },
          py::arg("topic"), py::arg("n") = 10)
      .def("to_json", [](const LdaModel& l) { return lda_model_to_json(l).dump(); })
      .def_static("from_json",
                  [](const std::string& s) { return lda_model_from_json(nlohmann::json::parse(s)); });

  m.def(
      "train_lda",
      [](const TokenLists& docs, std::size_t k, std::optional<double> alpha, double beta,
         std::size_t iterations, std::size_t burn_in, std::size_t min_count, std::uint64_t seed) {
        const auto tds = as_docs(docs);
        const auto corpus = make_bow_corpus(tds, Dictionary::build(tds, min_count));
        py::gil_scoped_release release;
        return train_lda(corpus, lda_config(k, alpha, beta, iterations, burn_in, seed));
      },
      py::arg("docs"), py::arg("k") = 10, py::arg("alpha") = py::none(), py::arg("beta") = 0.01,
      py::arg("iterations") = 200, py::arg("burn_in") = 50, py::arg("min_count") = 2,
      py::arg("seed") = 1);

  m.def(
      "coherence",
      [](const LdaModel& model, const TokenLists& docs, std::size_t top_n) {
        const auto tds = as_docs(docs);
        return coherence(model.tau, make_bow_corpus(tds, model.dictionary), top_n).per_topic;
      },
      py::arg("model"), py::arg("docs"), py::arg("top_n") = 10,
      "UMass coherence per topic, counted over `docs`.");

  m.def(
      "select_k",
      [](const TokenLists& docs, const std::vector<std::size_t>& candidates,
         std::optional<double> alpha, double beta, std::size_t iterations, std::size_t burn_in,
         std::size_t min_count, std::uint64_t seed) {
        const auto tds = as_docs(docs);
        const auto corpus = make_bow_corpus(tds, Dictionary::build(tds, min_count));
        KSelection sel;
        {
          py::gil_scoped_release release;
          sel = select_k(corpus, candidates, lda_config(1, alpha, beta, iterations, burn_in, seed));
        }
        py::dict scores;
        for (std::size_t i = 0; i < sel.candidates.size(); ++i) {
          scores[py::int_(sel.candidates[i])] = sel.mean_coherence[i];
        }
        return py::make_tuple(sel.best_k, scores);
      },
      py::arg("docs"), py::arg("candidates"), py::arg("alpha") = py::none(),
      py::arg("beta") = 0.01, py::arg("iterations") = 200, py::arg("burn_in") = 50,
      py::arg("min_count") = 2, py::arg("seed") = 1);

  // Skip-gram and fusion ------------------------------------------------------

  py::class_<EmbeddingModel>(m, "EmbeddingModel")
      .def_property_readonly("vocabulary", [](const EmbeddingModel& e) { return e.dictionary.tokens(); })
      .def_property_readonly("dim", &EmbeddingModel::dim)
      .def_readonly("vectors", &EmbeddingModel::input)
      .def(
          "nearest",
          [](const EmbeddingModel& e, const std::string& word, std::size_t n) {
            const auto id = e.dictionary.find(word);
            if (!id) fail(ErrorKind::kInvalidArgument, "unknown word: " + word);
            std::vector<std::pair<std::string, double>> out;
            for (auto [w, s] : nearest(e, *id, n)) out.emplace_back(e.dictionary.token(w), s);
            return out;
          },
          py::arg("word"), py::arg("n") = 10)
      .def("to_json", [](const EmbeddingModel& e) { return embedding_to_json(e).dump(); });

  m.def(
      "train_embedding",
      [](const TokenLists& docs, std::size_t dim, std::size_t window, std::size_t min_count,
         std::size_t epochs, double learning_rate, std::uint64_t seed) {
        SkipGramConfig c{dim, window, min_count, epochs, learning_rate, seed};
        c.validate();
        const auto tds = as_docs(docs);
        auto dict = Dictionary::build(tds, min_count);
        py::gil_scoped_release release;
        return train_embedding(tds, std::move(dict), c);
      },
      py::arg("docs"), py::arg("dim") = 200, py::arg("window") = 6, py::arg("min_count") = 5,
      py::arg("epochs") = 5, py::arg("learning_rate") = 0.025, py::arg("seed") = 1);

  py::class_<WordTopicMap>(m, "WordTopicMap")
      .def_readonly("num_topics", &WordTopicMap::num_topics)
      .def_readonly("missing_seeds", &WordTopicMap::missing_seeds)
      .def("__len__", [](const WordTopicMap& w) { return w.entries.size(); })
      .def(
          "scores",
          [](const WordTopicMap& w, const std::string& word) {
            std::vector<std::pair<TopicId, double>> out;
            if (auto it = w.entries.find(word); it != w.entries.end()) {
              for (const auto& s : it->second) out.emplace_back(s.topic, s.probability);
            }
            return out;
          },
          py::arg("word"))
      .def("assign",
           [](const WordTopicMap& w, const TokenLists& docs) {
             std::vector<std::optional<TopicId>> out;
             for (const auto& a : assign_corpus(as_docs(docs), w)) out.push_back(a.topic);
             return out;
           },
           py::arg("docs"), "Dominant topic per title; None when no token is known.")
      .def("to_json", [](const WordTopicMap& w) { return word_topic_map_to_json(w).dump(); });

  m.def(
      "fuse",
      [](const LdaModel& lda, const EmbeddingModel& embedding, std::size_t seeds_per_topic,
         std::size_t neighbors, double threshold) {
        FusionConfig c{seeds_per_topic, neighbors, threshold};
        return build_word_topic_map(lda.tau, lda.dictionary, embedding, c);
      },
      py::arg("lda"), py::arg("embedding"), py::arg("seeds_per_topic") = 2,
      py::arg("neighbors") = 6, py::arg("threshold") = 0.4);

  m.def("lda_word_topic_map",
        [](const LdaModel& lda) { return lda_word_topic_map(lda.tau, lda.dictionary); });

  // Sessions and next-topic prediction ----------------------------------------

  py::class_<InteractionEvent>(m, "InteractionEvent")
      .def(py::init([](std::string user_id, std::string paper_id, TopicId topic, std::int64_t timestamp,
                       std::int64_t session_no, bool liked) {
             return InteractionEvent{std::move(user_id), std::move(paper_id), topic, timestamp,
                                     session_no, liked};
           }),
           py::arg("user_id"), py::arg("paper_id"), py::arg("topic"), py::arg("timestamp"),
           py::arg("session_no") = 0, py::arg("liked") = false)
      .def_readwrite("user_id", &InteractionEvent::user_id)
      .def_readwrite("paper_id", &InteractionEvent::paper_id)
      .def_readwrite("topic", &InteractionEvent::topic)
      .def_readwrite("timestamp", &InteractionEvent::timestamp)
      .def_readwrite("session_no", &InteractionEvent::session_no)
      .def_readwrite("liked", &InteractionEvent::liked)
      .def(py::self == py::self)
      .def("__repr__", [](const InteractionEvent& e) { return event_to_json(e).dump(); });

  m.def(
      "simulate",
      [](std::size_t users, std::size_t events_per_user, std::size_t topics, std::size_t items,
         double stay, double second_order, std::uint64_t seed) {
        SimConfig c;
        c.num_users = users;
        c.events_per_user = events_per_user;
        c.num_topics = topics;
        c.num_items = items;
        c.stay_probability = stay;
        c.second_order_strength = second_order;
        c.seed = seed;
        return simulate(c).events;
      },
      py::arg("users") = 50, py::arg("events_per_user") = 100, py::arg("topics") = 4,
      py::arg("items") = 5213, py::arg("stay") = 0.6, py::arg("second_order") = 0.0,
      py::arg("seed") = 1);

  py::class_<IntentModel>(m, "IntentModel")
      .def_readonly("lookback", &IntentModel::lookback)
      .def_property_readonly("num_topics", [](const IntentModel& i) { return i.schema.num_topics; })
      .def(
          "predict",
          [](const IntentModel& i, const std::vector<InteractionEvent>& history) {
            return predict_next(i, history).distribution;
          },
          py::arg("history"), "Next-topic distribution from the last `lookback` events.")
      .def("to_json", [](const IntentModel& i) { return intent_model_to_json(i).dump(); })
      .def_static("from_json", [](const std::string& s) {
        return intent_model_from_json(nlohmann::json::parse(s));
      });

  m.def(
      "train_intent",
      [](const std::vector<InteractionEvent>& events, std::size_t num_topics, std::size_t hidden,
         std::size_t lookback, std::size_t epochs, std::size_t batch, double learning_rate,
         bool use_liked, std::uint64_t seed) {
        IntentTrainConfig c;
        c.hidden = hidden;
        c.lookback = lookback;
        c.epochs = epochs;
        c.batch = batch;
        c.learning_rate = learning_rate;
        c.use_liked = use_liked;
        c.seed = seed;
        const auto users = group_by_user(events);
        py::gil_scoped_release release;
        return train_intent(users, num_topics, c);
      },
      py::arg("events"), py::arg("num_topics"), py::arg("hidden") = 32, py::arg("lookback") = 5,
      py::arg("epochs") = 100, py::arg("batch") = 16, py::arg("learning_rate") = 1e-3,
      py::arg("use_liked") = false, py::arg("seed") = 1);

  py::class_<MarkovBaseline>(m, "MarkovBaseline")
      .def_static(
          "fit",
          [](const std::vector<std::vector<int>>& seqs, std::size_t k) {
            return MarkovBaseline::fit(topic_sequences(seqs), k);
          },
          py::arg("sequences"), py::arg("num_topics"))
      .def_property_readonly("transitions", &MarkovBaseline::transitions)
      .def("distribution", [](const MarkovBaseline& b, const std::vector<int>& h) {
        return b.distribution(topic_sequences({h})[0]);
      });

  py::class_<FpmBaseline>(m, "FpmBaseline")
      .def_static(
          "fit",
          [](const std::vector<std::vector<int>>& seqs, std::size_t k, std::size_t max_len) {
            return FpmBaseline::fit(topic_sequences(seqs), k, max_len);
          },
          py::arg("sequences"), py::arg("num_topics"), py::arg("max_len") = 3)
      .def("predict", [](const FpmBaseline& b, const std::vector<int>& h) {
        return b.predict(topic_sequences({h})[0]);
      });

  // Metrics -------------------------------------------------------------------

  m.def(
      "f1_scores",
      [](const std::vector<TopicId>& predictions, const std::vector<TopicId>& labels,
         std::size_t num_classes) {
        const auto f = f1_scores(predictions, labels, num_classes);
        return py::make_tuple(f.micro, f.macro);
      },
      py::arg("predictions"), py::arg("labels"), py::arg("num_classes"),
      "(micro, macro) F1.");
  m.def("accuracy", [](const std::vector<TopicId>& p, const std::vector<TopicId>& y) {
    return accuracy(p, y);
  });
  using Items = const std::vector<std::string>&;
  m.def("recall_at_k", [](Items rec, Items rel, std::size_t k) { return recall_at_k(rec, rel, k); });
  m.def("precision_at_k",
        [](Items rec, Items rel, std::size_t k) { return precision_at_k(rec, rel, k); });
  m.def("reciprocal_rank",
        [](Items rec, Items rel, std::size_t k) { return reciprocal_rank(rec, rel, k); });
}
