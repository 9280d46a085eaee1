#include "doctest.h"
#include "topicintent/baselines.hpp"
#include "topicintent/error.hpp"
#include "topicintent/random.hpp"

using namespace topicintent;

namespace {

// Longest suffix (<= max_len) with at least one continuation in training.
std::pair<std::vector<double>, std::size_t> oracle_match(
    const std::vector<std::vector<TopicId>>& train, std::span<const TopicId> history,
    std::size_t k, std::size_t max_len) {
  for (std::size_t len = std::min(max_len, history.size()); len >= 1; --len) {
    const auto suffix = history.last(len);
    std::vector<double> counts(k, 0.0);
    bool found = false;
    for (const auto& seq : train) {
      for (std::size_t i = 0; i + len < seq.size(); ++i) {
        if (std::equal(suffix.begin(), suffix.end(), seq.begin() + static_cast<std::ptrdiff_t>(i))) {
          counts[seq[i + len]] += 1;
          found = true;
        }
      }
    }
    if (found) return {counts, len};
  }
  std::vector<double> global(k, 0.0);
  for (const auto& seq : train) {
    for (auto t : seq) global[t] += 1;
  }
  return {global, 0};
}

}  // namespace

TEST_CASE("markov on an alternating sequence") {
  std::vector<std::vector<TopicId>> seqs{{0, 1, 0, 1}};
  const auto m = MarkovBaseline::fit(seqs, 2);
  CHECK(m.counts()(0, 1) == 2);
  CHECK(m.counts()(1, 0) == 1);
  CHECK(m.transitions()(0, 0) == doctest::Approx(1.0 / 4.0));
  CHECK(m.transitions()(0, 1) == doctest::Approx(3.0 / 4.0));
  CHECK(m.transitions()(1, 0) == doctest::Approx(2.0 / 3.0));
  std::vector<TopicId> h{1, 0};
  CHECK(m.predict(h) == 1);
}

TEST_CASE("markov unseen rows are uniform and rows sum to one") {
  std::vector<std::vector<TopicId>> seqs{{0, 0, 1}, {1, 0}};
  const auto m = MarkovBaseline::fit(seqs, 4);
  for (Eigen::Index j = 0; j < 4; ++j) CHECK(m.transitions()(3, j) == doctest::Approx(0.25));
  for (Eigen::Index r = 0; r < 4; ++r) CHECK(m.transitions().row(r).sum() == doctest::Approx(1.0));

  std::vector<TopicId> empty;
  try {
    m.distribution(empty);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kInsufficientHistory);
  }
}

TEST_CASE("fpm examples") {
  std::vector<std::vector<TopicId>> seqs{{0, 1, 2, 0, 1, 2, 0, 1, 1}};
  const auto f = FpmBaseline::fit(seqs, 3, 2);
  std::vector<TopicId> h{0, 1};
  const auto [counts, len] = f.match(h);
  CHECK(len == 2);
  CHECK(counts == std::vector<double>{0, 1, 2});
  CHECK(f.predict(h) == 2);

  // Unseen pair falls back to the last topic alone.
  std::vector<TopicId> h2{2, 2};
  CHECK(f.match(h2).second == 1);
  CHECK(f.predict(h2) == 0);

  // Nothing matches: global mode (0 and 1 both occur three times, lower wins).
  const auto g = FpmBaseline::fit(std::vector<std::vector<TopicId>>{{0, 1, 0, 1, 0, 1}}, 3, 2);
  std::vector<TopicId> h3{2};
  CHECK(g.match(h3).second == 0);
  CHECK(g.predict(h3) == 0);
  std::vector<TopicId> empty;
  CHECK(g.match(empty).second == 0);

  const auto none = FpmBaseline::fit(std::vector<std::vector<TopicId>>{}, 3, 2);
  CHECK(none.distribution(h3)(1) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("fpm agrees with brute-force suffix search") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t k = 2 + rng.below(3);
    const std::size_t max_len = 1 + rng.below(4);
    std::vector<std::vector<TopicId>> train;
    for (int s = 0; s < 3; ++s) {
      std::vector<TopicId> seq;
      const auto len = rng.below(12);
      for (std::uint64_t i = 0; i < len; ++i) seq.push_back(static_cast<TopicId>(rng.below(k)));
      train.push_back(seq);
    }
    const auto f = FpmBaseline::fit(train, k, max_len);
    std::vector<TopicId> history;
    const auto hl = rng.below(6);
    for (std::uint64_t i = 0; i < hl; ++i) history.push_back(static_cast<TopicId>(rng.below(k)));
    const auto want = oracle_match(train, history, k, max_len);
    const auto got = f.match(history);
    CHECK(got.second == want.second);
    CHECK(got.first == want.first);

    const auto d = f.distribution(history);
    CHECK(d.sum() == doctest::Approx(1.0));
    const auto best = std::max_element(want.first.begin(), want.first.end());
    if (*best > 0) CHECK(f.predict(history) == static_cast<TopicId>(best - want.first.begin()));
  }
}

TEST_CASE("baselines reject out-of-range topics") {
  std::vector<std::vector<TopicId>> seqs{{0, 5}};
  CHECK_THROWS_AS(MarkovBaseline::fit(seqs, 2), Error);
  CHECK_THROWS_AS(FpmBaseline::fit(seqs, 2), Error);
}
