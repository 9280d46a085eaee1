#include <cmath>
#include <set>
#include <sstream>

#include "doctest.h"
#include "topicintent/error.hpp"
#include "topicintent/eval.hpp"
#include "topicintent/random.hpp"

using namespace topicintent;

namespace {

std::vector<std::string> ids(std::initializer_list<const char*> v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_CASE("f1 hand cases") {
  std::vector<TopicId> y{0, 0, 1, 1};
  std::vector<TopicId> p{0, 1, 1, 1};
  const auto f = f1_scores(p, y, 2);
  // class 0: tp 1 fp 0 fn 1 -> 2/3; class 1: tp 2 fp 1 fn 0 -> 4/5.
  CHECK(f.macro == doctest::Approx((2.0 / 3.0 + 0.8) / 2.0));
  CHECK(f.micro == doctest::Approx(0.75));
  CHECK(accuracy(p, y) == 0.75);

  // Absent class counts as zero in the macro mean.
  std::vector<TopicId> all0{0, 0};
  CHECK(f1_scores(all0, all0, 3).macro == doctest::Approx(1.0 / 3.0));
  CHECK(f1_scores(all0, all0, 3).micro == 1.0);
}

TEST_CASE("micro f1 equals accuracy for single-label predictions") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t k = 2 + rng.below(4);
    const std::size_t n = 1 + rng.below(40);
    std::vector<TopicId> y, p;
    for (std::size_t i = 0; i < n; ++i) {
      y.push_back(static_cast<TopicId>(rng.below(k)));
      p.push_back(static_cast<TopicId>(rng.below(k)));
    }
    const auto f = f1_scores(p, y, k);
    CHECK(f.micro == doctest::Approx(accuracy(p, y)).epsilon(1e-12));
    CHECK(f.macro >= 0.0);
    CHECK(f.macro <= 1.0);
  }
}

TEST_CASE("tfidf weights and normalization") {
  std::vector<TokenizedDocument> docs{{"a", {"x", "y"}}, {"b", {"x"}}, {"c", {}}};
  auto dict = Dictionary::build(docs, 1);
  auto corpus = make_bow_corpus(docs, dict);
  const auto m = tfidf(corpus);
  CHECK(m.rows() == 3);
  CHECK(m.cols() == 2);
  const double idf_x = std::log(4.0 / 3.0) + 1.0;
  const double idf_y = std::log(4.0 / 2.0) + 1.0;
  const double norm = std::hypot(idf_x, idf_y);
  CHECK(m.coeff(0, 0) == doctest::Approx(idf_x / norm));
  CHECK(m.coeff(0, 1) == doctest::Approx(idf_y / norm));
  CHECK(m.coeff(1, 0) == doctest::Approx(1.0));
  CHECK(Eigen::RowVectorXd(m.row(2)).isZero());
}

TEST_CASE("fold assignment sizes and determinism") {
  const auto a = fold_assignment(23, 5, 7);
  std::vector<std::size_t> sizes(5, 0);
  for (auto f : a) sizes[f]++;
  CHECK(*std::max_element(sizes.begin(), sizes.end()) - *std::min_element(sizes.begin(), sizes.end()) <= 1);
  CHECK(fold_assignment(23, 5, 7) == a);
  CHECK(fold_assignment(23, 5, 8) != a);
  CHECK_THROWS_AS(fold_assignment(3, 5, 1), Error);
  CHECK_THROWS_AS(fold_assignment(10, 1, 1), Error);
}

TEST_CASE("probe on random labels stays near chance") {
  Rng rng(12);
  std::vector<TokenizedDocument> docs;
  std::vector<TopicId> labels;
  for (int i = 0; i < 400; ++i) {
    TokenizedDocument d{std::to_string(i), {}};
    for (int t = 0; t < 6; ++t) d.tokens.push_back("w" + std::to_string(rng.below(50)));
    docs.push_back(d);
    labels.push_back(static_cast<TopicId>(rng.below(4)));
  }
  auto corpus = make_bow_corpus(docs, Dictionary::build(docs, 1));
  const auto report = kfold_probe(tfidf(corpus), labels, 4, 5, 1);
  CHECK(report.folds == 5);
  CHECK(report.per_fold.size() == 5);
  CHECK(report.f1_micro < 0.4);
  CHECK(report.f1_macro < 0.4);
}

TEST_CASE("probe recovers a leaked label word") {
  Rng rng(13);
  std::vector<TokenizedDocument> docs;
  std::vector<TopicId> labels;
  for (int i = 0; i < 200; ++i) {
    const auto y = static_cast<TopicId>(rng.below(4));
    TokenizedDocument d{std::to_string(i), {"label" + std::to_string(y)}};
    for (int t = 0; t < 4; ++t) d.tokens.push_back("w" + std::to_string(rng.below(30)));
    docs.push_back(d);
    labels.push_back(y);
  }
  auto corpus = make_bow_corpus(docs, Dictionary::build(docs, 1));
  const auto report = kfold_probe(tfidf(corpus), labels, 4, 5, 1);
  CHECK(report.f1_micro > 0.95);
  CHECK(report.accuracy == doctest::Approx(report.f1_micro));
}

TEST_CASE("probe probabilities are distributions") {
  std::vector<TokenizedDocument> docs{{"a", {"x"}}, {"b", {"y"}}, {"c", {"x", "y"}}};
  auto corpus = make_bow_corpus(docs, Dictionary::build(docs, 1));
  const auto features = tfidf(corpus);
  std::vector<TopicId> labels{0, 1, 1};
  const auto probe = LogisticProbe::fit(features, labels, 2);
  const auto p = probe.probabilities(features);
  for (Eigen::Index r = 0; r < p.rows(); ++r) CHECK(p.row(r).sum() == doctest::Approx(1.0));
  CHECK(probe.predict(features)[0] == 0);
  CHECK(probe.predict(features)[1] == 1);
}

TEST_CASE("sequence metrics") {
  std::vector<Eigen::VectorXd> d(4, Eigen::VectorXd::Constant(2, 0.5));
  std::vector<TopicId> truth{0, 1, 1, 0};
  const auto r = sequence_metrics(d, truth, "test");
  CHECK(r.rmse == doctest::Approx(0.5));
  CHECK(r.accuracy == 0.5);  // ties resolve to topic 0
  CHECK(r.count == 4);

  std::vector<Eigen::VectorXd> exact;
  for (auto t : truth) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(2);
    v(t) = 1.0;
    exact.push_back(v);
  }
  const auto perfect = sequence_metrics(exact, truth, "train");
  CHECK(perfect.rmse == 0.0);
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.split == "train");

  std::vector<TopicId> short_truth{0};
  CHECK_THROWS_AS(sequence_metrics(d, short_truth, "x"), Error);
}

TEST_CASE("ranking metrics") {
  const auto rec = ids({"a", "b", "c", "d"});
  const auto rel = ids({"c", "z"});
  CHECK(hits_at_k(rec, rel, 2) == 0);
  CHECK(hits_at_k(rec, rel, 3) == 1);
  CHECK(recall_at_k(rec, rel, 4) == 0.5);
  CHECK(precision_at_k(rec, rel, 4) == 0.25);
  CHECK(reciprocal_rank(rec, rel, 4) == doctest::Approx(1.0 / 3.0));
  CHECK(reciprocal_rank(rec, rel, 2) == 0.0);
  CHECK(ctr(3, 12) == 0.25);
  CHECK_THROWS_AS(ctr(1, 0), Error);
  CHECK_THROWS_AS(ctr(5, 4), Error);
  const auto none = ids({});
  CHECK_THROWS_AS(recall_at_k(rec, none, 3), Error);

  // Duplicates in the recommendation count once.
  const auto dup = ids({"c", "c"});
  CHECK(hits_at_k(dup, rel, 2) == 1);

  std::vector<RankingQuery> q{{"u1", rec, rel, 1, 4}, {"u2", ids({"z"}), ids({"z"}), 0, 6}};
  CHECK(mrr_at_k(q, 4) == doctest::Approx((1.0 / 3.0 + 1.0) / 2.0));
  const auto report = ranking_report(q, 4);
  CHECK(report.ctr == doctest::Approx(0.1));
  CHECK(report.recall_at_k == doctest::Approx(0.75));
  CHECK(report.queries == 2);
}

TEST_CASE("ranking identities on random lists") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::string> rec, rel;
    std::set<std::string> seen;
    const auto n = 1 + rng.below(10);
    while (rec.size() < n) {
      auto s = "i" + std::to_string(rng.below(20));
      if (seen.insert(s).second) rec.push_back(s);
    }
    const auto m = 1 + rng.below(6);
    for (std::uint64_t i = 0; i < m; ++i) rel.push_back("i" + std::to_string(rng.below(20)));
    std::sort(rel.begin(), rel.end());
    rel.erase(std::unique(rel.begin(), rel.end()), rel.end());
    const std::size_t k = 1 + rng.below(10);
    const auto hits = static_cast<double>(hits_at_k(rec, rel, k));
    CHECK(recall_at_k(rec, rel, k) == doctest::Approx(hits / static_cast<double>(rel.size())));
    CHECK(precision_at_k(rec, rel, k) == doctest::Approx(hits / static_cast<double>(k)));
    const double rr = reciprocal_rank(rec, rel, k);
    CHECK((rr > 0.0) == (hits > 0.0));
    CHECK(rr <= 1.0);
  }
}

TEST_CASE("report csv, json and comparison table") {
  ClassificationReport cls{0.9, 0.85, 0.9, 5, {}};
  SequenceReport seq{0.5, 0.25, "test", 10};
  RankingReport rank{0.3, 0.1, 0.2, 0.05, 10, 4};
  std::vector<ReportRow> rows = classification_rows(cls, "hybrid");
  for (auto& r : sequence_rows(seq, "lstm")) rows.push_back(r);
  for (auto& r : ranking_rows(rank, "lstm")) rows.push_back(r);
  CHECK(rows.size() == 9);
  CHECK(rows[5].metric == "recall_at_10");

  std::stringstream csv;
  write_report_csv(csv, rows);
  CHECK(csv.str().rfind("metric,value,split,pipeline\nf1_micro,0.900000,cv,hybrid\n", 0) == 0);
  CHECK(read_report_csv(csv) == rows);

  const auto j = report_to_json(rows);
  CHECK(report_from_json(nlohmann::json::parse(j.dump())) == rows);

  const auto table = comparison_table(rows);
  std::istringstream lines(table);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    CHECK(line.back() != ' ');
    ++count;
  }
  CHECK(count == 3);
  CHECK(table.find("f1_micro/cv") != std::string::npos);
}
