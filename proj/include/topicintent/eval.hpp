#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include "topicintent/corpus.hpp"
#include "topicintent/lda.hpp"

namespace topicintent {

// ---------------------------------------------------------------------------
// Classification

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
};

/// Micro F1 from global TP/FP/FN counts; macro F1 is the unweighted mean over
/// all num_classes classes, a class with no support and no predictions
/// counting as 0.
F1Scores f1_scores(std::span<const TopicId> predictions, std::span<const TopicId> labels,
                   std::size_t num_classes);
double accuracy(std::span<const TopicId> predictions, std::span<const TopicId> labels);

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Title × word TF-IDF with smoothed idf = ln((1 + m) / (1 + df)) + 1, rows
/// L2-normalized. Empty titles give zero rows.
SparseRows tfidf(const BowCorpus& corpus);

struct LogisticConfig {
  double l2 = 1e-4;
  double learning_rate = 2.0;
  std::size_t iterations = 200;
};

/// Multinomial logistic regression, full-batch gradient descent on mean
/// cross-entropy plus (l2 / 2)·‖W‖².
class LogisticProbe {
 public:
  static LogisticProbe fit(const SparseRows& features, std::span<const TopicId> labels,
                           std::size_t num_classes, const LogisticConfig& config = {});
  Eigen::MatrixXd probabilities(const SparseRows& features) const;
  std::vector<TopicId> predict(const SparseRows& features) const;

  const Eigen::MatrixXd& weights() const { return weights_; }
  const Eigen::RowVectorXd& bias() const { return bias_; }

 private:
  Eigen::MatrixXd weights_;  // features × classes
  Eigen::RowVectorXd bias_;
};

/// Seeded shuffle, then position modulo `folds`. Fold sizes differ by at most 1.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed);

struct FoldScore {
  double f1_micro = 0.0;
  double f1_macro = 0.0;
  double accuracy = 0.0;
};

struct ClassificationReport {
  double f1_micro = 0.0;
  double f1_macro = 0.0;
  double accuracy = 0.0;
  std::size_t folds = 0;
  std::vector<FoldScore> per_fold;
};

/// Trains the probe on every fold's complement and scores it on the fold;
/// reports the mean over folds.
ClassificationReport kfold_probe(const SparseRows& features, std::span<const TopicId> labels,
                                 std::size_t num_classes, std::size_t folds = 5,
                                 std::uint64_t seed = 1, const LogisticConfig& config = {});

// ---------------------------------------------------------------------------
// Sequence prediction

struct SequenceReport {
  double accuracy = 0.0;
  double rmse = 0.0;
  std::string split;
  std::size_t count = 0;
};

/// Accuracy of the argmax and RMSE between each distribution and the one-hot
/// target, averaged over steps and classes.
SequenceReport sequence_metrics(std::span<const Eigen::VectorXd> distributions,
                                std::span<const TopicId> truth, std::string split);

// ---------------------------------------------------------------------------
// Ranking

/// |top-k ∩ relevant|, each item counted once.
std::size_t hits_at_k(std::span<const std::string> recommended,
                      std::span<const std::string> relevant, std::size_t k);
/// hits / |relevant|. Throws on an empty relevant set.
double recall_at_k(std::span<const std::string> recommended, std::span<const std::string> relevant,
                   std::size_t k);
/// hits / k.
double precision_at_k(std::span<const std::string> recommended,
                      std::span<const std::string> relevant, std::size_t k);
/// 1 / rank of the first relevant item, 0 when it is below rank k.
double reciprocal_rank(std::span<const std::string> recommended,
                       std::span<const std::string> relevant, std::size_t k);
/// clicked / shown.
double ctr(std::size_t clicked, std::size_t shown);

struct RankingQuery {
  std::string user_id;
  std::vector<std::string> recommended;
  std::vector<std::string> relevant;
  std::size_t clicked = 0;
  std::size_t shown = 0;
};

double mrr_at_k(std::span<const RankingQuery> queries, std::size_t k);

struct RankingReport {
  double recall_at_k = 0.0;
  double precision_at_k = 0.0;
  double mrr_at_k = 0.0;
  double ctr = 0.0;
  std::size_t k = 0;
  std::size_t queries = 0;
};

/// Recall, precision and MRR are means over queries; CTR pools clicks and
/// impressions over all queries.
RankingReport ranking_report(std::span<const RankingQuery> queries, std::size_t k);

// ---------------------------------------------------------------------------
// Report rows

struct ReportRow {
  std::string metric;
  double value = 0.0;
  std::string split;
  std::string pipeline;

  bool operator==(const ReportRow&) const = default;
};

std::vector<ReportRow> classification_rows(const ClassificationReport& report,
                                           const std::string& pipeline);
std::vector<ReportRow> sequence_rows(const SequenceReport& report, const std::string& pipeline);
std::vector<ReportRow> ranking_rows(const RankingReport& report, const std::string& pipeline);

/// Columns metric,value,split,pipeline; values with six decimals.
void write_report_csv(std::ostream& out, std::span<const ReportRow> rows);
std::vector<ReportRow> read_report_csv(std::istream& in);
nlohmann::ordered_json report_to_json(std::span<const ReportRow> rows);
std::vector<ReportRow> report_from_json(const nlohmann::json& j);

/// Plain-text table with one line per pipeline and one column per
/// metric/split pair, both in first-seen order.
std::string comparison_table(std::span<const ReportRow> rows);

}  // namespace topicintent
