#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "manifest.hpp"
#include "topicintent/baselines.hpp"
#include "topicintent/corpus.hpp"
#include "topicintent/embed.hpp"
#include "topicintent/error.hpp"
#include "topicintent/eval.hpp"
#include "topicintent/experiments.hpp"
#include "topicintent/fusion.hpp"
#include "topicintent/intent.hpp"
#include "topicintent/lda.hpp"
#include "topicintent/sessions.hpp"

namespace fs = std::filesystem;
using namespace topicintent;
using topicintent::cli::RunManifest;
using ojson = nlohmann::ordered_json;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument:
      return 2;
    case ErrorKind::kInvalidInput:
      return 3;
    case ErrorKind::kMissingInput:
      return 4;
    case ErrorKind::kSchemaMismatch:
      return 5;
    case ErrorKind::kDiverged:
      return 6;
    case ErrorKind::kInsufficientHistory:
      return 7;
    case ErrorKind::kOutputExists:
      return 8;
  }
  return 1;
}

int report_error(std::string_view kind, const std::string& message, int code) {
  ojson j;
  j["error"] = {{"kind", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << '\n';
  return code;
}

struct Globals {
  std::string data_dir;
  std::uint64_t seed = 1;
  bool force = false;
};

Globals g;

fs::path resolve(const std::string& p) {
  if (p.empty()) return {};
  fs::path path(p);
  if (path.is_relative() && !g.data_dir.empty()) return (fs::path(g.data_dir) / path).lexically_normal();
  return path;
}

void require_input(const fs::path& p, const char* what) {
  if (p.empty()) fail(ErrorKind::kInvalidArgument, std::string("missing --") + what);
  if (!fs::is_regular_file(p)) fail(ErrorKind::kMissingInput, std::string(what) + " not found: " + p.string());
}

/// Refuses to clobber existing outputs unless --force, and creates parent
/// directories.
void prepare_outputs(std::initializer_list<fs::path> outputs) {
  for (const auto& p : outputs) {
    if (p.empty()) continue;
    if (fs::exists(p) && !g.force) {
      fail(ErrorKind::kOutputExists, p.string() + " exists; pass --force to overwrite");
    }
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
  }
}

std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorKind::kMissingInput, "cannot open " + p.string());
  return in;
}

nlohmann::json read_json(const fs::path& p) {
  auto in = open_input(p);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kSchemaMismatch, p.string() + ": " + e.what());
  }
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::kInvalidArgument, "cannot write " + p.string());
  out << text;
  if (!out) fail(ErrorKind::kInvalidArgument, "write failed for " + p.string());
}

void write_json(const fs::path& p, const ojson& j) { write_file(p, j.dump() + "\n"); }

std::vector<TokenizedDocument> load_docs(const fs::path& p) {
  require_input(p, "docs");
  auto in = open_input(p);
  return read_tokenized_jsonl(in);
}

std::size_t infer_topics(std::span<const InteractionEvent> events) {
  TopicId top = 0;
  for (const auto& e : events) top = std::max(top, e.topic);
  return events.empty() ? 0 : static_cast<std::size_t>(top) + 1;
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void write_rows(const fs::path& p, std::span<const ReportRow> rows) {
  std::ostringstream out;
  write_report_csv(out, rows);
  write_file(p, out.str());
}

// ---------------------------------------------------------------------------

struct PreprocessOpts {
  std::string input, output;
  std::size_t min_token_length = 2;
  bool no_stem = false;
};

int run_preprocess(const PreprocessOpts& o) {
  const auto in_path = resolve(o.input), out_path = resolve(o.output);
  require_input(in_path, "input");
  if (out_path.empty()) fail(ErrorKind::kInvalidArgument, "missing --output");
  prepare_outputs({out_path});
  RunManifest m("preprocess", g.seed);
  PreprocessConfig cfg;
  cfg.min_token_length = o.min_token_length;
  cfg.stem = !o.no_stem;
  m.set_config({{"min_token_length", cfg.min_token_length}, {"stem", cfg.stem}});

  auto in = open_input(in_path);
  const auto raw = read_titles_csv(in);
  std::vector<TokenizedDocument> docs;
  docs.reserve(raw.size());
  std::size_t empty = 0;
  for (const auto& r : raw) {
    docs.push_back(preprocess(r, cfg));
    empty += docs.back().tokens.empty();
  }
  std::ostringstream out;
  write_tokenized_jsonl(out, docs);
  write_file(out_path, out.str());

  m.add_input(in_path);
  m.add_output(out_path);
  m.add_metric("titles", docs.size());
  m.add_metric("empty_titles", empty);
  m.write(out_path);
  std::cout << "preprocess: " << docs.size() << " titles (" << empty << " empty) -> "
            << out_path.string() << '\n';
  return 0;
}

struct LdaOpts {
  std::string docs, output;
  std::size_t k = 10;
  std::optional<double> alpha;
  double beta = 0.01;
  std::size_t iterations = 200;
  std::size_t burn_in = 50;
  std::size_t min_count = 2;
  std::size_t top_n = 10;
  std::vector<std::size_t> candidates{2, 4, 8};
};

void add_lda_flags(CLI::App* sub, LdaOpts& o) {
  sub->add_option("--alpha", o.alpha, "Title-topic prior (default 50/k)");
  sub->add_option("--beta", o.beta, "Topic-word prior")->capture_default_str();
  sub->add_option("--iterations", o.iterations, "Gibbs sweeps")->capture_default_str();
  sub->add_option("--burn-in", o.burn_in, "Sweeps before the likelihood trace starts")
      ->capture_default_str();
  sub->add_option("--min-count", o.min_count, "Dictionary frequency cutoff")->capture_default_str();
  sub->add_option("--top-n", o.top_n, "Words per topic for coherence")->capture_default_str();
}

LdaConfig lda_config(const LdaOpts& o, std::size_t k) {
  LdaConfig c;
  c.k = k;
  c.alpha = o.alpha;
  c.beta = o.beta;
  c.iterations = o.iterations;
  c.burn_in = o.burn_in;
  c.seed = g.seed;
  return c;
}

ojson lda_config_json(const LdaOpts& o) {
  ojson j;
  j["alpha"] = o.alpha ? ojson(*o.alpha) : ojson("50/k");
  j["beta"] = o.beta;
  j["iterations"] = o.iterations;
  j["burn_in"] = o.burn_in;
  j["min_count"] = o.min_count;
  j["top_n"] = o.top_n;
  return j;
}

int run_lda_train(const LdaOpts& o) {
  const auto docs_path = resolve(o.docs), out_path = resolve(o.output);
  const auto docs = load_docs(docs_path);
  if (out_path.empty()) fail(ErrorKind::kInvalidArgument, "missing --output");
  prepare_outputs({out_path});
  RunManifest m("lda-train", g.seed);
  auto cj = lda_config_json(o);
  cj["k"] = o.k;
  m.set_config(cj);

  const auto corpus = make_bow_corpus(docs, Dictionary::build(docs, o.min_count));
  const auto cfg = lda_config(o, o.k);
  const auto model = train_lda(corpus, cfg);
  m.mark("train_seconds");
  const auto coh = coherence(model.tau, corpus, o.top_n);
  write_json(out_path, lda_model_to_json(model));

  m.add_input(docs_path);
  m.add_output(out_path);
  m.add_metric("vocab_size", corpus.vocab_size());
  m.add_metric("mean_coherence", coh.mean);
  if (!model.log_likelihood_trace.empty()) {
    m.add_metric("final_log_likelihood", model.log_likelihood_trace.back());
  }
  m.write(out_path);
  std::cout << "lda-train: k=" << o.k << " V=" << corpus.vocab_size()
            << " mean coherence " << fixed6(coh.mean) << " -> " << out_path.string() << '\n';
  return 0;
}

int run_coherence_sweep(const LdaOpts& o) {
  const auto docs_path = resolve(o.docs), out_path = resolve(o.output);
  const auto docs = load_docs(docs_path);
  if (out_path.empty()) fail(ErrorKind::kInvalidArgument, "missing --output");
  if (o.candidates.empty()) fail(ErrorKind::kInvalidArgument, "--k needs at least one value");
  prepare_outputs({out_path});
  RunManifest m("coherence-sweep", g.seed);
  auto cj = lda_config_json(o);
  cj["k"] = o.candidates;
  m.set_config(cj);

  const auto corpus = make_bow_corpus(docs, Dictionary::build(docs, o.min_count));
  const auto sel = select_k(corpus, o.candidates, lda_config(o, o.candidates.front()), o.top_n);
  std::string csv = "k,mean_coherence\n";
  for (std::size_t i = 0; i < sel.candidates.size(); ++i) {
    csv += std::to_string(sel.candidates[i]) + "," + fixed6(sel.mean_coherence[i]) + "\n";
  }
  write_file(out_path, csv);

  m.add_input(docs_path);
  m.add_output(out_path);
  m.add_metric("best_k", sel.best_k);
  m.write(out_path);
  std::cout << "coherence-sweep: best k=" << sel.best_k << " -> " << out_path.string() << '\n';
  return 0;
}

struct EmbedOpts {
  std::string docs, output, vectors_csv;
  SkipGramConfig cfg;
};

int run_embed_train(EmbedOpts o) {
  const auto docs_path = resolve(o.docs), out_path = resolve(o.output);
  const auto csv_path = resolve(o.vectors_csv);
  const auto docs = load_docs(docs_path);
  if (out_path.empty()) fail(ErrorKind::kInvalidArgument, "missing --output");
  prepare_outputs({out_path, csv_path});
  o.cfg.seed = g.seed;
  RunManifest m("embed-train", g.seed);
  m.set_config({{"dim", o.cfg.dim},
                {"window", o.cfg.window},
                {"min_count", o.cfg.min_count},
                {"epochs", o.cfg.epochs},
                {"learning_rate", o.cfg.learning_rate}});

  auto model = train_embedding(docs, Dictionary::build(docs, o.cfg.min_count), o.cfg);
  m.mark("train_seconds");
  write_json(out_path, embedding_to_json(model));
  m.add_input(docs_path);
  m.add_output(out_path);
  if (!csv_path.empty()) {
    std::ostringstream csv;
    write_embedding_csv(csv, model);
    write_file(csv_path, csv.str());
    m.add_output(csv_path);
  }
  m.add_metric("vocab_size", model.vocab_size());
  m.write(out_path);
  std::cout << "embed-train: V=" << model.vocab_size() << " dim=" << model.dim() << " -> "
            << out_path.string() << '\n';
  return 0;
}

struct FuseOpts {
  std::string lda, embedding, output;
  FusionConfig cfg;
};

int run_fuse(const FuseOpts& o) {
  const auto lda_path = resolve(o.lda), emb_path = resolve(o.embedding), out_path = resolve(o.output);
  require_input(lda_path, "lda");
  require_input(emb_path, "embedding");
  if (out_path.empty()) fail(ErrorKind::kInvalidArgument, "missing --output");
  prepare_outputs({out_path});
  RunManifest m("fuse", g.seed);
  m.set_config({{"seeds_per_topic", o.cfg.seeds_per_topic},
                {"neighbors_per_seed", o.cfg.neighbors_per_seed},
                {"similarity_threshold", o.cfg.similarity_threshold}});

  const auto lda = lda_model_from_json(read_json(lda_path));
  const auto emb = embedding_from_json(read_json(emb_path));
  const auto m2 = build_word_topic_map(lda.tau, lda.dictionary, emb, o.cfg);
  write_json(out_path, word_topic_map_to_json(m2));

  m.add_input(lda_path);
  m.add_input(emb_path);
  m.add_output(out_path);
  m.add_metric("entries", m2.entries.size());
  m.add_metric("missing_seeds", m2.missing_seeds);
  m.write(out_path);
  std::cout << "fuse: " << m2.entries.size() << " words";
  if (!m2.missing_seeds.empty()) std::cout << ", " << m2.missing_seeds.size() << " seeds without vectors";
  std::cout << " -> " << out_path.string() << '\n';
  return 0;
}

struct AssignOpts {
  std::string docs, m2, output, lda, report;
  std::size_t folds = 5;
};

int run_assign_topics(const AssignOpts& o) {
  const auto docs_path = resolve(o.docs), m2_path = resolve(o.m2), out_path = resolve(o.output);
  const auto lda_path = resolve(o.lda), report_path = resolve(o.report);
  const auto docs = load_docs(docs_path);
  require_input(m2_path, "m2");
  if (out_path.empty()) fail(ErrorKind::kInvalidArgument, "missing --output");
  if (!report_path.empty() && lda_path.empty()) {
    fail(ErrorKind::kInvalidArgument, "--report needs --lda for the comparison labels");
  }
  if (!lda_path.empty()) require_input(lda_path, "lda");
  prepare_outputs({out_path, report_path});
  RunManifest m("assign-topics", g.seed);
  m.set_config({{"folds", o.folds}, {"probe", !report_path.empty()}});

  const auto m2 = word_topic_map_from_json(read_json(m2_path));
  const auto assigned = assign_corpus(docs, m2);
  std::ostringstream csv;
  write_assignments_csv(csv, assigned);
  write_file(out_path, csv.str());
  m.add_input(docs_path);
  m.add_input(m2_path);
  m.add_output(out_path);
  const auto unassigned = static_cast<std::size_t>(
      std::count_if(assigned.begin(), assigned.end(), [](const auto& a) { return !a.topic; }));
  m.add_metric("unassigned", unassigned);

  if (!report_path.empty()) {
    const auto lda = lda_model_from_json(read_json(lda_path));
    std::vector<std::string> ids;
    for (const auto& d : docs) ids.push_back(d.doc_id);
    if (ids != lda.doc_ids) {
      fail(ErrorKind::kSchemaMismatch, "docs and LDA model list different titles");
    }
    const auto features = tfidf(make_bow_corpus(docs, lda.dictionary));
    const auto lda_labels = theta_labels(lda.theta);
    std::vector<std::optional<TopicId>> hybrid;
    for (const auto& a : assigned) hybrid.push_back(a.topic);
    const auto [hybrid_labels, hybrid_classes] = probe_labels(hybrid, m2.num_topics);
    const auto lda_report = kfold_probe(features, lda_labels, static_cast<std::size_t>(lda.theta.cols()),
                                        o.folds, g.seed);
    const auto hybrid_report = kfold_probe(features, hybrid_labels, hybrid_classes, o.folds, g.seed);
    auto rows = classification_rows(lda_report, "lda");
    for (auto& r : classification_rows(hybrid_report, "hybrid")) rows.push_back(r);
    write_rows(report_path, rows);
    m.add_input(lda_path);
    m.add_output(report_path);
    m.add_metric("lda_f1_micro", lda_report.f1_micro);
    m.add_metric("hybrid_f1_micro", hybrid_report.f1_micro);
    std::cout << "assign-topics: probe F1-micro lda " << fixed6(lda_report.f1_micro) << " hybrid "
              << fixed6(hybrid_report.f1_micro) << '\n';
  }
  m.write(out_path);
  std::cout << "assign-topics: " << assigned.size() << " titles, " << unassigned
            << " unassigned -> " << out_path.string() << '\n';
  return 0;
}

struct SimulateOpts {
  std::string output;
  SimConfig cfg;
};

int run_simulate(SimulateOpts o) {
  const auto out_path = resolve(o.output);
  if (out_path.empty()) fail(ErrorKind::kInvalidArgument, "missing --output");
  prepare_outputs({out_path});
  o.cfg.seed = g.seed;
  const auto& c = o.cfg;
  RunManifest m("simulate", g.seed);
  m.set_config({{"num_users", c.num_users},
                {"num_items", c.num_items},
                {"num_topics", c.num_topics},
                {"events_per_user", c.events_per_user},
                {"stay_probability", c.stay_probability},
                {"second_order_strength", c.second_order_strength},
                {"inter_click_median", c.inter_click_median},
                {"inter_click_sigma", c.inter_click_sigma},
                {"session_gap", c.session_gap},
                {"liked_probability", c.liked_probability},
                {"start_time", c.start_time}});
  const auto log = simulate(c);
  std::ostringstream out;
  write_events_jsonl(out, log.events);
  write_file(out_path, out.str());
  m.add_output(out_path);
  m.add_metric("events", log.events.size());
  m.write(out_path);
  std::cout << "simulate: " << log.events.size() << " events -> " << out_path.string() << '\n';
  return 0;
}

struct IntentOpts {
  std::string events, output, model;
  std::size_t num_topics = 0;
  double train_fraction = 0.8;
  IntentTrainConfig cfg;
  std::string pipeline = "lstm";
};

SequenceSplit load_split(const fs::path& events_path, std::optional<std::size_t> num_topics,
                         double train_fraction, std::vector<InteractionEvent>* all = nullptr) {
  require_input(events_path, "events");
  auto events = ingest(events_path, num_topics);
  if (events.empty()) fail(ErrorKind::kInvalidInput, events_path.string() + " has no events");
  auto split = chronological_split(group_by_user(events), train_fraction);
  if (all) *all = std::move(events);
  return split;
}

int run_intent_train(IntentOpts o) {
  const auto events_path = resolve(o.events), out_path = resolve(o.output);
  if (out_path.empty()) fail(ErrorKind::kInvalidArgument, "missing --output");
  std::vector<InteractionEvent> events;
  const auto split = load_split(events_path, o.num_topics ? std::optional(o.num_topics) : std::nullopt,
                                o.train_fraction, &events);
  const std::size_t k = o.num_topics ? o.num_topics : infer_topics(events);
  prepare_outputs({out_path});
  o.cfg.seed = g.seed;
  RunManifest m("intent-train", g.seed);
  m.set_config({{"num_topics", k},
                {"train_fraction", o.train_fraction},
                {"hidden", o.cfg.hidden},
                {"lookback", o.cfg.lookback},
                {"epochs", o.cfg.epochs},
                {"batch", o.cfg.batch},
                {"learning_rate", o.cfg.learning_rate},
                {"beta1", o.cfg.beta1},
                {"beta2", o.cfg.beta2},
                {"epsilon", o.cfg.epsilon},
                {"use_liked", o.cfg.use_liked}});

  TrainTrace trace;
  const auto model = train_intent(training_histories(split), k, o.cfg, &trace);
  m.mark("train_seconds");
  write_json(out_path, intent_model_to_json(model));
  m.add_input(events_path);
  m.add_output(out_path);
  if (!trace.epoch_loss.empty()) m.add_metric("final_epoch_loss", trace.epoch_loss.back());
  m.write(out_path);
  std::cout << "intent-train: k=" << k << " epochs=" << o.cfg.epochs;
  if (!trace.epoch_loss.empty()) std::cout << " final loss " << fixed6(trace.epoch_loss.back());
  std::cout << " -> " << out_path.string() << '\n';
  return 0;
}

int run_intent_eval(const IntentOpts& o) {
  const auto events_path = resolve(o.events), model_path = resolve(o.model);
  const auto out_path = resolve(o.output);
  require_input(model_path, "model");
  if (out_path.empty()) fail(ErrorKind::kInvalidArgument, "missing --output");
  const auto model = intent_model_from_json(read_json(model_path));
  const auto split = load_split(events_path, model.schema.num_topics, o.train_fraction);
  prepare_outputs({out_path});
  RunManifest m("intent-eval", g.seed);
  m.set_config({{"train_fraction", o.train_fraction}, {"pipeline", o.pipeline}});

  std::vector<ReportRow> rows;
  for (bool test : {false, true}) {
    const auto positions = target_positions(split, model.lookback, test);
    if (positions.empty()) continue;
    const auto r = sequence_metrics(intent_distributions(model, split, positions),
                                    target_topics(split, positions), test ? "test" : "train");
    for (auto& row : sequence_rows(r, o.pipeline)) rows.push_back(row);
    m.add_metric(std::string(test ? "test" : "train") + "_accuracy", r.accuracy);
  }
  if (rows.empty()) {
    fail(ErrorKind::kInsufficientHistory, "no user has more events than the look-back");
  }
  write_rows(out_path, rows);
  m.add_input(events_path);
  m.add_input(model_path);
  m.add_output(out_path);
  m.write(out_path);
  std::cout << "intent-eval: " << rows.size() << " rows -> " << out_path.string() << '\n';
  return 0;
}

struct BaselineOpts {
  std::string events, output;
  std::size_t num_topics = 0;
  double train_fraction = 0.8;
  std::size_t min_history = 5;
  std::size_t fpm_max_len = 3;
};

int run_baseline_eval(const BaselineOpts& o) {
  const auto events_path = resolve(o.events), out_path = resolve(o.output);
  if (out_path.empty()) fail(ErrorKind::kInvalidArgument, "missing --output");
  std::vector<InteractionEvent> events;
  const auto split = load_split(events_path, o.num_topics ? std::optional(o.num_topics) : std::nullopt,
                                o.train_fraction, &events);
  const std::size_t k = o.num_topics ? o.num_topics : infer_topics(events);
  prepare_outputs({out_path});
  RunManifest m("baseline-eval", g.seed);
  m.set_config({{"num_topics", k},
                {"train_fraction", o.train_fraction},
                {"min_history", o.min_history},
                {"fpm_max_len", o.fpm_max_len}});

  std::vector<std::vector<TopicId>> train;
  for (const auto& u : training_histories(split)) train.push_back(u.topics());
  const auto markov = MarkovBaseline::fit(train, k);
  const auto fpm = FpmBaseline::fit(train, k, o.fpm_max_len);
  std::vector<ReportRow> rows;
  for (bool test : {false, true}) {
    const auto positions = target_positions(split, std::max<std::size_t>(o.min_history, 1), test);
    if (positions.empty()) continue;
    const auto truth = target_topics(split, positions);
    const std::string label = test ? "test" : "train";
    for (auto& r : sequence_rows(sequence_metrics(markov_distributions(markov, split, positions), truth, label), "markov")) {
      rows.push_back(r);
    }
    for (auto& r : sequence_rows(sequence_metrics(fpm_distributions(fpm, split, positions), truth, label), "fpm")) {
      rows.push_back(r);
    }
  }
  if (rows.empty()) fail(ErrorKind::kInsufficientHistory, "no target positions with enough history");
  // Group by pipeline so the comparison table reads naturally.
  std::stable_sort(rows.begin(), rows.end(),
                   [](const ReportRow& a, const ReportRow& b) { return a.pipeline > b.pipeline; });
  write_rows(out_path, rows);
  m.add_input(events_path);
  m.add_output(out_path);
  m.write(out_path);
  std::cout << "baseline-eval: " << rows.size() << " rows -> " << out_path.string() << '\n';
  return 0;
}

struct RankOpts {
  std::string events, model, baseline, output, pipeline;
  std::size_t num_topics = 0;
  double train_fraction = 0.8;
  std::size_t k = 10;
  std::size_t min_history = 5;
  std::size_t fpm_max_len = 3;
};

int run_rank_eval(const RankOpts& o) {
  const auto events_path = resolve(o.events), model_path = resolve(o.model);
  const auto out_path = resolve(o.output);
  if (out_path.empty()) fail(ErrorKind::kInvalidArgument, "missing --output");
  if (model_path.empty() == o.baseline.empty()) {
    fail(ErrorKind::kInvalidArgument, "give exactly one of --model and --baseline");
  }
  RunManifest m("rank-eval", g.seed);
  HistoryPredictor predict;
  std::size_t min_history = o.min_history;
  std::string pipeline = o.pipeline;
  std::vector<InteractionEvent> events;
  SequenceSplit split;
  std::optional<IntentModel> intent;
  if (!model_path.empty()) {
    require_input(model_path, "model");
    intent = intent_model_from_json(read_json(model_path));
    split = load_split(events_path, intent->schema.num_topics, o.train_fraction, &events);
    min_history = std::max(min_history, intent->lookback);
    if (pipeline.empty()) pipeline = "lstm";
  } else {
    split = load_split(events_path, o.num_topics ? std::optional(o.num_topics) : std::nullopt,
                       o.train_fraction, &events);
    if (pipeline.empty()) pipeline = o.baseline;
  }
  const std::size_t k = intent ? intent->schema.num_topics
                               : (o.num_topics ? o.num_topics : infer_topics(events));
  prepare_outputs({out_path});

  std::vector<std::vector<TopicId>> train;
  for (const auto& u : training_histories(split)) train.push_back(u.topics());
  std::optional<MarkovBaseline> markov;
  std::optional<FpmBaseline> fpm;
  if (intent) {
    predict = [&](std::span<const InteractionEvent> h) { return predict_next(*intent, h).distribution; };
  } else if (o.baseline == "markov") {
    markov = MarkovBaseline::fit(train, k);
    predict = [&](std::span<const InteractionEvent> h) {
      std::vector<TopicId> t;
      for (const auto& e : h) t.push_back(e.topic);
      return markov->distribution(t);
    };
  } else if (o.baseline == "fpm") {
    fpm = FpmBaseline::fit(train, k, o.fpm_max_len);
    predict = [&](std::span<const InteractionEvent> h) {
      std::vector<TopicId> t;
      for (const auto& e : h) t.push_back(e.topic);
      return fpm->distribution(t);
    };
  } else {
    fail(ErrorKind::kInvalidArgument, "--baseline must be markov or fpm");
  }
  m.set_config({{"k", o.k},
                {"num_topics", k},
                {"train_fraction", o.train_fraction},
                {"min_history", min_history},
                {"predictor", intent ? "intent" : o.baseline},
                {"pipeline", pipeline}});

  const auto catalog = build_catalog(split, k);
  const auto queries = session_queries(split, catalog, predict, o.k, std::max<std::size_t>(min_history, 1));
  if (queries.empty()) fail(ErrorKind::kInsufficientHistory, "no test session has enough history");
  const auto report = ranking_report(queries, o.k);
  write_rows(out_path, ranking_rows(report, pipeline));
  m.add_input(events_path);
  if (intent) m.add_input(model_path);
  m.add_output(out_path);
  m.add_metric("queries", queries.size());
  m.write(out_path);
  std::cout << "rank-eval: " << queries.size() << " sessions, recall@" << o.k << " "
            << fixed6(report.recall_at_k) << " -> " << out_path.string() << '\n';
  return 0;
}

struct ReportOpts {
  std::vector<std::string> inputs;
  std::string output;
};

int run_report(const ReportOpts& o) {
  const auto out_path = resolve(o.output);
  if (out_path.empty()) fail(ErrorKind::kInvalidArgument, "missing --output");
  if (o.inputs.empty()) fail(ErrorKind::kInvalidArgument, "missing --inputs");
  auto json_path = out_path, table_path = out_path;
  json_path.replace_extension(".json");
  table_path.replace_extension(".txt");
  if (json_path == out_path || table_path == out_path) {
    fail(ErrorKind::kInvalidArgument, "--output should end in .csv");
  }
  std::vector<fs::path> inputs;
  for (const auto& s : o.inputs) {
    inputs.push_back(resolve(s));
    require_input(inputs.back(), "inputs");
  }
  prepare_outputs({out_path, json_path, table_path});
  RunManifest m("report", g.seed);
  m.set_config({{"inputs", o.inputs.size()}});

  std::vector<ReportRow> rows;
  for (const auto& p : inputs) {
    auto in = open_input(p);
    for (auto& r : read_report_csv(in)) rows.push_back(std::move(r));
    m.add_input(p);
  }
  write_rows(out_path, rows);
  write_file(json_path, report_to_json(rows).dump(2) + "\n");
  const auto table = comparison_table(rows);
  write_file(table_path, table);
  m.add_output(out_path);
  m.add_output(json_path);
  m.add_output(table_path);
  m.write(out_path);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid topic modeling and next-topic prediction pipeline"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML/INI config; flags given on the command line win");
  app.add_option("--data-dir", g.data_dir, "Root for relative paths")->envname("TOPICINTENT_DATA_DIR");
  app.add_option("--seed", g.seed, "Seed shared by every stage")->capture_default_str();
  app.add_flag("--force", g.force, "Overwrite existing outputs");

  PreprocessOpts pre;
  auto* s_pre = app.add_subcommand("preprocess", "Clean and stem titles");
  s_pre->add_option("--input", pre.input, "CSV with doc_id,title");
  s_pre->add_option("--output", pre.output, "Tokenized JSONL");
  s_pre->add_option("--min-token-length", pre.min_token_length)->capture_default_str();
  s_pre->add_flag("--no-stem", pre.no_stem, "Skip Porter stemming");

  LdaOpts lda;
  auto* s_lda = app.add_subcommand("lda-train", "Collapsed Gibbs LDA");
  s_lda->add_option("--docs", lda.docs, "Tokenized JSONL");
  s_lda->add_option("--output", lda.output, "Model JSON");
  s_lda->add_option("--k", lda.k, "Number of topics")->capture_default_str();
  add_lda_flags(s_lda, lda);

  LdaOpts sweep;
  auto* s_sweep = app.add_subcommand("coherence-sweep", "Mean UMass coherence per k");
  s_sweep->add_option("--docs", sweep.docs, "Tokenized JSONL");
  s_sweep->add_option("--output", sweep.output, "CSV k,mean_coherence");
  s_sweep->add_option("--k", sweep.candidates, "Comma-separated candidates")->delimiter(',')
      ->capture_default_str();
  add_lda_flags(s_sweep, sweep);

  EmbedOpts emb;
  auto* s_emb = app.add_subcommand("embed-train", "Skip-gram word vectors");
  s_emb->add_option("--docs", emb.docs, "Tokenized JSONL");
  s_emb->add_option("--output", emb.output, "Embedding JSON");
  s_emb->add_option("--vectors-csv", emb.vectors_csv, "Also write word,v1..vN CSV");
  s_emb->add_option("--dim", emb.cfg.dim)->capture_default_str();
  s_emb->add_option("--window", emb.cfg.window)->capture_default_str();
  s_emb->add_option("--min-count", emb.cfg.min_count)->capture_default_str();
  s_emb->add_option("--epochs", emb.cfg.epochs)->capture_default_str();
  s_emb->add_option("--lr", emb.cfg.learning_rate)->capture_default_str();

  FuseOpts fuse;
  auto* s_fuse = app.add_subcommand("fuse", "Build the fused word-topic table");
  s_fuse->add_option("--lda", fuse.lda, "LDA model JSON");
  s_fuse->add_option("--embedding", fuse.embedding, "Embedding JSON");
  s_fuse->add_option("--output", fuse.output, "Word-topic table JSON");
  s_fuse->add_option("--seeds-per-topic", fuse.cfg.seeds_per_topic)->capture_default_str();
  s_fuse->add_option("--neighbors", fuse.cfg.neighbors_per_seed)->capture_default_str();
  s_fuse->add_option("--threshold", fuse.cfg.similarity_threshold)->capture_default_str();

  AssignOpts assign;
  auto* s_assign = app.add_subcommand("assign-topics", "Dominant topic per title");
  s_assign->add_option("--docs", assign.docs, "Tokenized JSONL");
  s_assign->add_option("--m2", assign.m2, "Word-topic table JSON");
  s_assign->add_option("--output", assign.output, "CSV doc_id,topic");
  s_assign->add_option("--lda", assign.lda, "LDA model, for the probe comparison");
  s_assign->add_option("--report", assign.report, "Probe report CSV (needs --lda)");
  s_assign->add_option("--folds", assign.folds)->capture_default_str();

  IntentOpts itrain;
  auto* s_itrain = app.add_subcommand("intent-train", "Train the LSTM next-topic model");
  s_itrain->add_option("--events", itrain.events, "Event JSONL");
  s_itrain->add_option("--output", itrain.output, "Model JSON");
  s_itrain->add_option("--num-topics", itrain.num_topics, "0 infers from the log")->capture_default_str();
  s_itrain->add_option("--train-fraction", itrain.train_fraction)->capture_default_str();
  s_itrain->add_option("--hidden", itrain.cfg.hidden)->capture_default_str();
  s_itrain->add_option("--lookback", itrain.cfg.lookback)->capture_default_str();
  s_itrain->add_option("--epochs", itrain.cfg.epochs)->capture_default_str();
  s_itrain->add_option("--batch", itrain.cfg.batch)->capture_default_str();
  s_itrain->add_option("--lr", itrain.cfg.learning_rate)->capture_default_str();
  s_itrain->add_option("--beta1", itrain.cfg.beta1)->capture_default_str();
  s_itrain->add_option("--beta2", itrain.cfg.beta2)->capture_default_str();
  s_itrain->add_option("--epsilon", itrain.cfg.epsilon)->capture_default_str();
  s_itrain->add_flag("--use-liked", itrain.cfg.use_liked, "Add the liked flag to the inputs");

  IntentOpts ieval;
  auto* s_ieval = app.add_subcommand("intent-eval", "Accuracy and RMSE of the LSTM");
  s_ieval->add_option("--events", ieval.events, "Event JSONL");
  s_ieval->add_option("--model", ieval.model, "Model JSON");
  s_ieval->add_option("--output", ieval.output, "Report CSV");
  s_ieval->add_option("--train-fraction", ieval.train_fraction)->capture_default_str();
  s_ieval->add_option("--pipeline", ieval.pipeline, "Name in the report")->capture_default_str();

  BaselineOpts base;
  auto* s_base = app.add_subcommand("baseline-eval", "Markov and frequent-pattern baselines");
  s_base->add_option("--events", base.events, "Event JSONL");
  s_base->add_option("--output", base.output, "Report CSV");
  s_base->add_option("--num-topics", base.num_topics, "0 infers from the log")->capture_default_str();
  s_base->add_option("--train-fraction", base.train_fraction)->capture_default_str();
  s_base->add_option("--min-history", base.min_history, "Match the LSTM look-back")->capture_default_str();
  s_base->add_option("--fpm-max-len", base.fpm_max_len)->capture_default_str();

  RankOpts rank;
  auto* s_rank = app.add_subcommand("rank-eval", "Session recommendation metrics");
  s_rank->add_option("--events", rank.events, "Event JSONL");
  s_rank->add_option("--model", rank.model, "LSTM model JSON");
  s_rank->add_option("--baseline", rank.baseline, "markov or fpm instead of a model");
  s_rank->add_option("--output", rank.output, "Report CSV");
  s_rank->add_option("--pipeline", rank.pipeline, "Name in the report");
  s_rank->add_option("--num-topics", rank.num_topics, "0 infers from the log")->capture_default_str();
  s_rank->add_option("--train-fraction", rank.train_fraction)->capture_default_str();
  s_rank->add_option("--k", rank.k, "List length")->capture_default_str();
  s_rank->add_option("--min-history", rank.min_history)->capture_default_str();
  s_rank->add_option("--fpm-max-len", rank.fpm_max_len)->capture_default_str();

  SimulateOpts sim;
  auto* s_sim = app.add_subcommand("simulate", "Synthetic click logs");
  s_sim->add_option("--output", sim.output, "Event JSONL");
  s_sim->add_option("--users", sim.cfg.num_users)->capture_default_str();
  s_sim->add_option("--items", sim.cfg.num_items)->capture_default_str();
  s_sim->add_option("--topics", sim.cfg.num_topics)->capture_default_str();
  s_sim->add_option("--events-per-user", sim.cfg.events_per_user)->capture_default_str();
  s_sim->add_option("--stay", sim.cfg.stay_probability)->capture_default_str();
  s_sim->add_option("--second-order", sim.cfg.second_order_strength)->capture_default_str();
  s_sim->add_option("--inter-click-median", sim.cfg.inter_click_median)->capture_default_str();
  s_sim->add_option("--inter-click-sigma", sim.cfg.inter_click_sigma)->capture_default_str();
  s_sim->add_option("--session-gap", sim.cfg.session_gap)->capture_default_str();
  s_sim->add_option("--liked", sim.cfg.liked_probability)->capture_default_str();
  s_sim->add_option("--start-time", sim.cfg.start_time)->capture_default_str();

  ReportOpts rep;
  auto* s_rep = app.add_subcommand("report", "Merge stage reports into one table");
  s_rep->add_option("--inputs", rep.inputs, "Report CSVs")->delimiter(',');
  s_rep->add_option("--output", rep.output, "Merged CSV; .json and .txt written alongside");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("invalid_argument", e.what(), exit_code(ErrorKind::kInvalidArgument));
  }

  try {
    if (*s_pre) return run_preprocess(pre);
    if (*s_lda) return run_lda_train(lda);
    if (*s_sweep) return run_coherence_sweep(sweep);
    if (*s_emb) return run_embed_train(emb);
    if (*s_fuse) return run_fuse(fuse);
    if (*s_assign) return run_assign_topics(assign);
    if (*s_itrain) return run_intent_train(itrain);
    if (*s_ieval) return run_intent_eval(ieval);
    if (*s_base) return run_baseline_eval(base);
    if (*s_rank) return run_rank_eval(rank);
    if (*s_sim) return run_simulate(sim);
    if (*s_rep) return run_report(rep);
  } catch (const Error& e) {
    return report_error(to_string(e.kind()), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return 1;
}
