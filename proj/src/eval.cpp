#include "topicintent/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "topicintent/error.hpp"
#include "topicintent/random.hpp"

namespace topicintent {

F1Scores f1_scores(std::span<const TopicId> predictions, std::span<const TopicId> labels,
                   std::size_t num_classes) {
  require(predictions.size() == labels.size(), "f1_scores: length mismatch");
  require(num_classes >= 1, "f1_scores: num_classes must be >= 1");
  std::vector<double> tp(num_classes, 0.0), fp(num_classes, 0.0), fn(num_classes, 0.0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    require(predictions[i] < num_classes && labels[i] < num_classes,
            "f1_scores: class index out of range");
    if (predictions[i] == labels[i]) {
      tp[labels[i]] += 1.0;
    } else {
      fp[predictions[i]] += 1.0;
      fn[labels[i]] += 1.0;
    }
  }
  auto f1 = [](double t, double p, double n) {
    const double denom = 2.0 * t + p + n;
    return denom > 0.0 ? 2.0 * t / denom : 0.0;
  };
  F1Scores s;
  double macro = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) macro += f1(tp[c], fp[c], fn[c]);
  s.macro = macro / static_cast<double>(num_classes);
  s.micro = f1(std::accumulate(tp.begin(), tp.end(), 0.0), std::accumulate(fp.begin(), fp.end(), 0.0),
               std::accumulate(fn.begin(), fn.end(), 0.0));
  return s;
}

double accuracy(std::span<const TopicId> predictions, std::span<const TopicId> labels) {
  require(predictions.size() == labels.size(), "accuracy: length mismatch");
  if (labels.empty()) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

SparseRows tfidf(const BowCorpus& corpus) {
  const std::size_t m = corpus.docs.size();
  const std::size_t v = corpus.dictionary.size();
  std::vector<double> df(v, 0.0);
  for (const auto& doc : corpus.docs) {
    for (const auto& tc : doc) df[tc.word] += 1.0;
  }
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t d = 0; d < m; ++d) {
    double norm2 = 0.0;
    const std::size_t first = triplets.size();
    for (const auto& tc : corpus.docs[d]) {
      const double idf = std::log((1.0 + static_cast<double>(m)) / (1.0 + df[tc.word])) + 1.0;
      const double w = static_cast<double>(tc.count) * idf;
      norm2 += w * w;
      triplets.emplace_back(static_cast<int>(d), static_cast<int>(tc.word), w);
    }
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (std::size_t i = first; i < triplets.size(); ++i) {
        triplets[i] = {triplets[i].row(), triplets[i].col(), triplets[i].value() * inv};
      }
    }
  }
  SparseRows x(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(v));
  x.setFromTriplets(triplets.begin(), triplets.end());
  return x;
}

namespace {

void softmax_rows(Eigen::MatrixXd& logits) {
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double peak = logits.row(r).maxCoeff();
    logits.row(r) = (logits.row(r).array() - peak).exp();
    logits.row(r) /= logits.row(r).sum();
  }
}

TopicId row_argmax(const Eigen::MatrixXd& m, Eigen::Index r) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < m.cols(); ++c) {
    if (m(r, c) > m(r, best)) best = c;
  }
  return static_cast<TopicId>(best);
}

SparseRows select_rows(const SparseRows& x, std::span<const std::size_t> rows) {
  std::vector<Eigen::Triplet<double>> triplets;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (SparseRows::InnerIterator it(x, static_cast<Eigen::Index>(rows[i])); it; ++it) {
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(it.col()), it.value());
    }
  }
  SparseRows out(static_cast<Eigen::Index>(rows.size()), x.cols());
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

}  // namespace

LogisticProbe LogisticProbe::fit(const SparseRows& features, std::span<const TopicId> labels,
                                 std::size_t num_classes, const LogisticConfig& config) {
  require(static_cast<std::size_t>(features.rows()) == labels.size(),
          "logistic probe: feature rows differ from label count");
  require(num_classes >= 1, "logistic probe: num_classes must be >= 1");
  require(config.learning_rate > 0.0 && config.l2 >= 0.0, "logistic probe: invalid config");
  const auto n = features.rows();
  const auto c = static_cast<Eigen::Index>(num_classes);
  LogisticProbe p;
  p.weights_ = Eigen::MatrixXd::Zero(features.cols(), c);
  p.bias_ = Eigen::RowVectorXd::Zero(c);
  if (n == 0) return p;
  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, c);
  for (Eigen::Index i = 0; i < n; ++i) {
    require(labels[static_cast<std::size_t>(i)] < num_classes, "logistic probe: label out of range");
    onehot(i, labels[static_cast<std::size_t>(i)]) = 1.0;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t it = 0; it < config.iterations; ++it) {
    Eigen::MatrixXd probs = features * p.weights_;
    probs.rowwise() += p.bias_;
    softmax_rows(probs);
    probs -= onehot;
    const Eigen::MatrixXd grad_w =
        Eigen::MatrixXd(features.transpose() * probs) * inv_n + config.l2 * p.weights_;
    const Eigen::RowVectorXd grad_b = probs.colwise().sum() * inv_n;
    p.weights_ -= config.learning_rate * grad_w;
    p.bias_ -= config.learning_rate * grad_b;
  }
  return p;
}

Eigen::MatrixXd LogisticProbe::probabilities(const SparseRows& features) const {
  require(features.cols() == weights_.rows(), "logistic probe: feature width mismatch");
  Eigen::MatrixXd probs = features * weights_;
  probs.rowwise() += bias_;
  softmax_rows(probs);
  return probs;
}

std::vector<TopicId> LogisticProbe::predict(const SparseRows& features) const {
  const Eigen::MatrixXd probs = probabilities(features);
  std::vector<TopicId> out(static_cast<std::size_t>(probs.rows()));
  for (Eigen::Index r = 0; r < probs.rows(); ++r) out[static_cast<std::size_t>(r)] = row_argmax(probs, r);
  return out;
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
  require(folds >= 2, "fold_assignment: need at least 2 folds");
  require(n >= folds, "fold_assignment: fewer items than folds");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> fold(n);
  for (std::size_t pos = 0; pos < n; ++pos) fold[order[pos]] = pos % folds;
  return fold;
}

ClassificationReport kfold_probe(const SparseRows& features, std::span<const TopicId> labels,
                                 std::size_t num_classes, std::size_t folds, std::uint64_t seed,
                                 const LogisticConfig& config) {
  require(static_cast<std::size_t>(features.rows()) == labels.size(),
          "kfold_probe: feature rows differ from label count");
  const auto fold = fold_assignment(labels.size(), folds, seed);
  ClassificationReport report;
  report.folds = folds;
  std::vector<std::size_t> train_idx, test_idx;
  std::vector<TopicId> train_labels, test_labels;
  for (std::size_t f = 0; f < folds; ++f) {
    train_idx.clear();
    test_idx.clear();
    train_labels.clear();
    test_labels.clear();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (fold[i] == f) {
        test_idx.push_back(i);
        test_labels.push_back(labels[i]);
      } else {
        train_idx.push_back(i);
        train_labels.push_back(labels[i]);
      }
    }
    const auto probe =
        LogisticProbe::fit(select_rows(features, train_idx), train_labels, num_classes, config);
    const auto predicted = probe.predict(select_rows(features, test_idx));
    const F1Scores f1 = f1_scores(predicted, test_labels, num_classes);
    FoldScore score{f1.micro, f1.macro, accuracy(predicted, test_labels)};
    report.per_fold.push_back(score);
    report.f1_micro += score.f1_micro;
    report.f1_macro += score.f1_macro;
    report.accuracy += score.accuracy;
  }
  const double inv = 1.0 / static_cast<double>(folds);
  report.f1_micro *= inv;
  report.f1_macro *= inv;
  report.accuracy *= inv;
  return report;
}

SequenceReport sequence_metrics(std::span<const Eigen::VectorXd> distributions,
                                std::span<const TopicId> truth, std::string split) {
  require(distributions.size() == truth.size(), "sequence_metrics: length mismatch");
  SequenceReport r;
  r.split = std::move(split);
  r.count = truth.size();
  if (truth.empty()) return r;
  std::size_t correct = 0;
  double sq = 0.0;
  double cells = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto& d = distributions[i];
    require(truth[i] < static_cast<std::size_t>(d.size()), "sequence_metrics: target out of range");
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < d.size(); ++c) {
      if (d(c) > d(best)) best = c;
    }
    correct += static_cast<TopicId>(best) == truth[i];
    for (Eigen::Index c = 0; c < d.size(); ++c) {
      const double diff = d(c) - (c == static_cast<Eigen::Index>(truth[i]) ? 1.0 : 0.0);
      sq += diff * diff;
    }
    cells += static_cast<double>(d.size());
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
  r.rmse = std::sqrt(sq / cells);
  return r;
}

std::size_t hits_at_k(std::span<const std::string> recommended,
                      std::span<const std::string> relevant, std::size_t k) {
  const std::set<std::string_view> rel(relevant.begin(), relevant.end());
  std::set<std::string_view> seen;
  const std::size_t top = std::min(k, recommended.size());
  for (std::size_t i = 0; i < top; ++i) {
    if (rel.count(recommended[i])) seen.insert(recommended[i]);
  }
  return seen.size();
}

double recall_at_k(std::span<const std::string> recommended, std::span<const std::string> relevant,
                   std::size_t k) {
  const std::set<std::string_view> rel(relevant.begin(), relevant.end());
  require(!rel.empty(), "recall_at_k: relevant set is empty");
  return static_cast<double>(hits_at_k(recommended, relevant, k)) / static_cast<double>(rel.size());
}

double precision_at_k(std::span<const std::string> recommended,
                      std::span<const std::string> relevant, std::size_t k) {
  require(k >= 1, "precision_at_k: k must be >= 1");
  return static_cast<double>(hits_at_k(recommended, relevant, k)) / static_cast<double>(k);
}

double reciprocal_rank(std::span<const std::string> recommended,
                       std::span<const std::string> relevant, std::size_t k) {
  const std::set<std::string_view> rel(relevant.begin(), relevant.end());
  const std::size_t top = std::min(k, recommended.size());
  for (std::size_t i = 0; i < top; ++i) {
    if (rel.count(recommended[i])) return 1.0 / static_cast<double>(i + 1);
  }
  return 0.0;
}

double ctr(std::size_t clicked, std::size_t shown) {
  require(shown > 0, "ctr: nothing was shown");
  require(clicked <= shown, "ctr: more clicks than impressions");
  return static_cast<double>(clicked) / static_cast<double>(shown);
}

double mrr_at_k(std::span<const RankingQuery> queries, std::size_t k) {
  if (queries.empty()) return 0.0;
  double total = 0.0;
  for (const auto& q : queries) total += reciprocal_rank(q.recommended, q.relevant, k);
  return total / static_cast<double>(queries.size());
}

RankingReport ranking_report(std::span<const RankingQuery> queries, std::size_t k) {
  require(k >= 1, "ranking_report: k must be >= 1");
  RankingReport r;
  r.k = k;
  r.queries = queries.size();
  if (queries.empty()) return r;
  std::size_t clicked = 0;
  std::size_t shown = 0;
  for (const auto& q : queries) {
    r.recall_at_k += recall_at_k(q.recommended, q.relevant, k);
    r.precision_at_k += precision_at_k(q.recommended, q.relevant, k);
    clicked += q.clicked;
    shown += q.shown;
  }
  const double inv = 1.0 / static_cast<double>(queries.size());
  r.recall_at_k *= inv;
  r.precision_at_k *= inv;
  r.mrr_at_k = mrr_at_k(queries, k);
  r.ctr = shown > 0 ? ctr(clicked, shown) : 0.0;
  return r;
}

std::vector<ReportRow> classification_rows(const ClassificationReport& report,
                                           const std::string& pipeline) {
  return {{"f1_micro", report.f1_micro, "cv", pipeline},
          {"f1_macro", report.f1_macro, "cv", pipeline},
          {"accuracy", report.accuracy, "cv", pipeline}};
}

std::vector<ReportRow> sequence_rows(const SequenceReport& report, const std::string& pipeline) {
  return {{"accuracy", report.accuracy, report.split, pipeline},
          {"rmse", report.rmse, report.split, pipeline}};
}

std::vector<ReportRow> ranking_rows(const RankingReport& report, const std::string& pipeline) {
  const std::string k = std::to_string(report.k);
  return {{"recall_at_" + k, report.recall_at_k, "test", pipeline},
          {"precision_at_" + k, report.precision_at_k, "test", pipeline},
          {"mrr_at_" + k, report.mrr_at_k, "test", pipeline},
          {"ctr", report.ctr, "test", pipeline}};
}

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        out.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        out.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.emplace_back();
    } else if (c != '\r') {
      out.back() += c;
    }
  }
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

void write_report_csv(std::ostream& out, std::span<const ReportRow> rows) {
  out << "metric,value,split,pipeline\n";
  for (const auto& r : rows) {
    out << csv_field(r.metric) << ',' << fixed6(r.value) << ',' << csv_field(r.split) << ','
        << csv_field(r.pipeline) << '\n';
  }
}

std::vector<ReportRow> read_report_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) return {};
  if (split_csv_line(line) != std::vector<std::string>{"metric", "value", "split", "pipeline"}) {
    fail(ErrorKind::kSchemaMismatch, "report csv: expected header metric,value,split,pipeline");
  }
  std::vector<ReportRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != 4) {
      fail(ErrorKind::kSchemaMismatch, "report csv line " + std::to_string(line_no) +
                                           ": expected 4 fields");
    }
    try {
      rows.push_back({f[0], std::stod(f[1]), f[2], f[3]});
    } catch (const std::exception&) {
      fail(ErrorKind::kSchemaMismatch,
           "report csv line " + std::to_string(line_no) + ": value is not a number");
    }
  }
  return rows;
}

nlohmann::ordered_json report_to_json(std::span<const ReportRow> rows) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    arr.push_back(nlohmann::ordered_json{
        {"metric", r.metric}, {"value", r.value}, {"split", r.split}, {"pipeline", r.pipeline}});
  }
  return nlohmann::ordered_json{{"format", "report/1"}, {"rows", std::move(arr)}};
}

std::vector<ReportRow> report_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format").get<std::string>() != "report/1") {
      fail(ErrorKind::kSchemaMismatch, "unsupported report format");
    }
    std::vector<ReportRow> rows;
    for (const auto& r : j.at("rows")) {
      rows.push_back({r.at("metric").get<std::string>(), r.at("value").get<double>(),
                      r.at("split").get<std::string>(), r.at("pipeline").get<std::string>()});
    }
    return rows;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kSchemaMismatch, std::string("report: ") + e.what());
  }
}

std::string comparison_table(std::span<const ReportRow> rows) {
  std::vector<std::string> pipelines;
  std::vector<std::string> columns;
  auto index_of = [](std::vector<std::string>& v, const std::string& s) {
    auto it = std::find(v.begin(), v.end(), s);
    if (it != v.end()) return static_cast<std::size_t>(it - v.begin());
    v.push_back(s);
    return v.size() - 1;
  };
  std::vector<std::vector<std::string>> cells;
  for (const auto& r : rows) {
    const std::size_t p = index_of(pipelines, r.pipeline);
    const std::size_t c = index_of(columns, r.metric + "/" + r.split);
    if (cells.size() < pipelines.size()) cells.resize(pipelines.size());
    for (auto& row : cells) row.resize(columns.size(), "-");
    cells[p][c] = fixed6(r.value);
  }
  std::vector<std::size_t> width(columns.size() + 1, std::string("pipeline").size());
  for (const auto& p : pipelines) width[0] = std::max(width[0], p.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    width[c + 1] = std::max<std::size_t>(columns[c].size(), 8);
  }
  std::ostringstream out;
  // No padding after the last column.
  auto pad = [&](const std::string& s, std::size_t w, bool last) {
    out << s;
    if (!last) out << std::string(w > s.size() ? w - s.size() : 0, ' ');
  };
  pad("pipeline", width[0], columns.empty());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    out << "  ";
    pad(columns[c], width[c + 1], c + 1 == columns.size());
  }
  out << '\n';
  for (std::size_t p = 0; p < pipelines.size(); ++p) {
    pad(pipelines[p], width[0], columns.empty());
    for (std::size_t c = 0; c < columns.size(); ++c) {
      out << "  ";
      pad(cells[p][c], width[c + 1], c + 1 == columns.size());
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace topicintent
