#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "topicintent/intent.hpp"

namespace topicintent {

/// Synthetic click-log generator. Each user has a topic preference drawn
/// uniformly from the simplex and a regime chain over topics: keep the
/// previous topic with probability stay_probability, otherwise draw from the
/// preference. With probability second_order_strength the next topic instead
/// repeats the one two steps back.
struct SimConfig {
  std::size_t num_users = 50;
  std::size_t num_items = 5213;
  std::size_t num_topics = 4;
  std::size_t events_per_user = 100;
  double stay_probability = 0.6;
  double second_order_strength = 0.0;
  /// Inter-click seconds are log-normal: median · exp(sigma · N(0, 1)),
  /// rounded and at least 1.
  double inter_click_median = 60.0;
  double inter_click_sigma = 1.5;
  /// A gap longer than this starts a new session.
  std::int64_t session_gap = 1800;
  double liked_probability = 0.2;
  std::int64_t start_time = 1'600'000'000;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SimulatedLog {
  std::vector<InteractionEvent> events;  // grouped by user, in time order
  std::vector<Eigen::VectorXd> preferences;  // per user
};

SimulatedLog simulate(const SimConfig& config);

std::string user_name(std::size_t index);
std::string paper_name(std::size_t item);

/// stay·I + (1 − stay)·1·prefᵀ.
Eigen::MatrixXd regime_transition(const Eigen::VectorXd& preference, double stay_probability);
/// Left eigenvector of a row-stochastic matrix for eigenvalue 1, summing to 1.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition);

nlohmann::ordered_json event_to_json(const InteractionEvent& e);
/// Throws ErrorKind::kInvalidInput describing the first problem found.
InteractionEvent event_from_json(const nlohmann::json& j);

void write_events_jsonl(std::ostream& out, std::span<const InteractionEvent> events);

/// Parses and validates a JSONL event log. Malformed lines are reported
/// together with their line numbers; a user whose timestamps or session
/// numbers go backwards is named. Topics are checked against num_topics when
/// given.
std::vector<InteractionEvent> ingest(std::istream& in,
                                     std::optional<std::size_t> num_topics = std::nullopt);
std::vector<InteractionEvent> ingest(const std::filesystem::path& path,
                                     std::optional<std::size_t> num_topics = std::nullopt);

/// Users in order of first appearance, events in log order.
std::vector<UserHistory> group_by_user(std::span<const InteractionEvent> events);

using UserProfile = UserHistory;

/// Append-only per-user histories. When opened on a directory every append is
/// also written to <dir>/<user_id>.jsonl.
class ProfileStore {
 public:
  ProfileStore() = default;
  static ProfileStore open(const std::filesystem::path& dir);

  /// Appends one event. Repeated clicks are kept; an event older than the
  /// user's last one is rejected.
  void append(const InteractionEvent& event);

  const std::map<std::string, UserProfile>& profiles() const { return profiles_; }
  const UserProfile* find(const std::string& user_id) const;
  std::size_t total_events() const;

  bool operator==(const ProfileStore& other) const { return profiles_ == other.profiles_; }

 private:
  std::optional<std::filesystem::path> dir_;
  std::map<std::string, UserProfile> profiles_;
};

/// Functional form: the store with `event` appended.
ProfileStore profile_update(ProfileStore store, const InteractionEvent& event);

}  // namespace topicintent
