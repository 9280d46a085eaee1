#include "topicintent/baselines.hpp"

#include <algorithm>

#include "topicintent/error.hpp"

namespace topicintent {

namespace {

void check_topic(TopicId t, std::size_t k) {
  if (t >= k) {
    fail(ErrorKind::kInvalidInput,
         "topic " + std::to_string(t) + " outside 0.." + std::to_string(k - 1));
  }
}

TopicId argmax_counts(std::span<const double> counts) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[best]) best = i;
  }
  return static_cast<TopicId>(best);
}

}  // namespace

MarkovBaseline MarkovBaseline::fit(std::span<const std::vector<TopicId>> sequences,
                                   std::size_t num_topics) {
  require(num_topics >= 1, "markov: num_topics must be >= 1");
  const auto k = static_cast<Eigen::Index>(num_topics);
  MarkovBaseline m;
  m.counts_ = Eigen::MatrixXd::Zero(k, k);
  for (const auto& seq : sequences) {
    for (std::size_t i = 0; i < seq.size(); ++i) {
      check_topic(seq[i], num_topics);
      if (i > 0) m.counts_(seq[i - 1], seq[i]) += 1.0;
    }
  }
  m.transitions_ = m.counts_.array() + 1.0;
  for (Eigen::Index r = 0; r < k; ++r) m.transitions_.row(r) /= m.transitions_.row(r).sum();
  return m;
}

Eigen::VectorXd MarkovBaseline::distribution(std::span<const TopicId> history) const {
  if (history.empty()) fail(ErrorKind::kInsufficientHistory, "markov: empty history");
  check_topic(history.back(), num_topics());
  return transitions_.row(history.back()).transpose();
}

TopicId MarkovBaseline::predict(std::span<const TopicId> history) const {
  const Eigen::VectorXd row = distribution(history);
  return argmax_counts(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
}

FpmBaseline FpmBaseline::fit(std::span<const std::vector<TopicId>> sequences,
                             std::size_t num_topics, std::size_t max_len) {
  require(num_topics >= 1, "fpm: num_topics must be >= 1");
  require(max_len >= 1, "fpm: max_len must be >= 1");
  FpmBaseline f;
  f.max_len_ = max_len;
  f.global_.assign(num_topics, 0.0);
  for (const auto& seq : sequences) {
    for (std::size_t t = 0; t < seq.size(); ++t) {
      check_topic(seq[t], num_topics);
      f.global_[seq[t]] += 1.0;
      for (std::size_t len = 1; len <= std::min(max_len, t); ++len) {
        std::vector<TopicId> pattern(seq.begin() + static_cast<std::ptrdiff_t>(t - len),
                                     seq.begin() + static_cast<std::ptrdiff_t>(t));
        auto& counts = f.patterns_[std::move(pattern)];
        if (counts.empty()) counts.assign(num_topics, 0.0);
        counts[seq[t]] += 1.0;
      }
    }
  }
  return f;
}

std::pair<std::vector<double>, std::size_t> FpmBaseline::match(
    std::span<const TopicId> history) const {
  std::vector<TopicId> suffix;
  for (std::size_t len = std::min(max_len_, history.size()); len >= 1; --len) {
    suffix.assign(history.end() - static_cast<std::ptrdiff_t>(len), history.end());
    auto it = patterns_.find(suffix);
    if (it != patterns_.end()) return {it->second, len};
  }
  return {global_, 0};
}

Eigen::VectorXd FpmBaseline::distribution(std::span<const TopicId> history) const {
  const auto counts = match(history).first;
  Eigen::VectorXd d(static_cast<Eigen::Index>(counts.size()));
  double total = 0.0;
  for (double c : counts) total += c;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    d(static_cast<Eigen::Index>(i)) =
        total > 0.0 ? counts[i] / total : 1.0 / static_cast<double>(counts.size());
  }
  return d;
}

TopicId FpmBaseline::predict(std::span<const TopicId> history) const {
  return argmax_counts(match(history).first);
}

}  // namespace topicintent
