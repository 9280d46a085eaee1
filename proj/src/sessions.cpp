#include "topicintent/sessions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "topicintent/error.hpp"
#include "topicintent/random.hpp"

namespace topicintent {

void SimConfig::validate() const {
  require(num_topics >= 1, "simulate: num_topics must be >= 1");
  require(num_items >= num_topics, "simulate: need at least one item per topic");
  require(stay_probability >= 0.0 && stay_probability < 1.0,
          "simulate: stay_probability must lie in [0, 1)");
  require(second_order_strength >= 0.0 && second_order_strength <= 1.0,
          "simulate: second_order_strength must lie in [0, 1]");
  require(inter_click_median >= 1.0, "simulate: inter_click_median must be >= 1 second");
  require(inter_click_sigma >= 0.0, "simulate: inter_click_sigma must be >= 0");
  require(session_gap >= 1, "simulate: session_gap must be >= 1");
  require(liked_probability >= 0.0 && liked_probability <= 1.0,
          "simulate: liked_probability must lie in [0, 1]");
}

std::string user_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "u%03zu", index);
  return buf;
}

std::string paper_name(std::size_t item) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "P%05zu", item);
  return buf;
}

SimulatedLog simulate(const SimConfig& config) {
  config.validate();
  SimulatedLog log;
  const std::size_t k = config.num_topics;
  std::vector<double> pref(k);
  std::vector<TopicId> topics;
  for (std::size_t u = 0; u < config.num_users; ++u) {
    Rng rng(mix_seed(config.seed, u + 1));
    double total = 0.0;
    for (auto& p : pref) total += (p = rng.exponential());
    for (auto& p : pref) p /= total;
    log.preferences.emplace_back(Eigen::Map<const Eigen::VectorXd>(pref.data(), static_cast<Eigen::Index>(k)));

    const std::string user = user_name(u);
    std::int64_t t = config.start_time + static_cast<std::int64_t>(rng.below(86400));
    std::int64_t session = 0;
    topics.clear();
    for (std::size_t i = 0; i < config.events_per_user; ++i) {
      TopicId topic;
      if (i == 0) {
        topic = static_cast<TopicId>(rng.categorical(pref));
      } else if (i >= 2 && rng.uniform() < config.second_order_strength) {
        topic = topics[i - 2];
      } else if (rng.uniform() < config.stay_probability) {
        topic = topics[i - 1];
      } else {
        topic = static_cast<TopicId>(rng.categorical(pref));
      }
      topics.push_back(topic);
      if (i > 0) {
        const double gap =
            config.inter_click_median * std::exp(config.inter_click_sigma * rng.normal());
        const auto dt = std::max<std::int64_t>(1, std::llround(gap));
        if (dt > config.session_gap) ++session;
        t += dt;
      }
      const std::size_t per_topic = (config.num_items - topic + k - 1) / k;
      const std::size_t item = topic + k * rng.below(per_topic);
      const bool liked = rng.uniform() < config.liked_probability;
      log.events.push_back({user, paper_name(item), topic, t, session, liked});
    }
  }
  return log;
}

Eigen::MatrixXd regime_transition(const Eigen::VectorXd& preference, double stay_probability) {
  const auto k = preference.size();
  Eigen::MatrixXd t = (1.0 - stay_probability) * Eigen::VectorXd::Ones(k) * preference.transpose();
  t.diagonal().array() += stay_probability;
  return t;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& transition) {
  require(transition.rows() == transition.cols() && transition.rows() > 0,
          "stationary_distribution: matrix must be square");
  const auto k = transition.rows();
  // Solve (Pᵀ − I)π = 0 with the last equation replaced by Σπ = 1.
  Eigen::MatrixXd a = transition.transpose() - Eigen::MatrixXd::Identity(k, k);
  a.row(k - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  b(k - 1) = 1.0;
  return a.fullPivLu().solve(b);
}

nlohmann::ordered_json event_to_json(const InteractionEvent& e) {
  return nlohmann::ordered_json{{"user_id", e.user_id},     {"paper_id", e.paper_id},
                                {"topic", e.topic},         {"timestamp", e.timestamp},
                                {"session_no", e.session_no}, {"liked", e.liked}};
}

InteractionEvent event_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorKind::kInvalidInput, "event is not a JSON object");
  auto field = [&](const char* name) -> const nlohmann::json& {
    auto it = j.find(name);
    if (it == j.end()) fail(ErrorKind::kInvalidInput, std::string("missing field '") + name + "'");
    return *it;
  };
  auto wrong = [](const char* name, const char* what) {
    fail(ErrorKind::kInvalidInput, std::string("field '") + name + "' must be " + what);
  };
  InteractionEvent e;
  const auto& user = field("user_id");
  if (!user.is_string()) wrong("user_id", "a string");
  e.user_id = user.get<std::string>();
  const auto& paper = field("paper_id");
  if (!paper.is_string()) wrong("paper_id", "a string");
  e.paper_id = paper.get<std::string>();
  const auto& topic = field("topic");
  if (!topic.is_number_unsigned()) wrong("topic", "a non-negative integer");
  e.topic = topic.get<TopicId>();
  const auto& ts = field("timestamp");
  if (!ts.is_number_integer()) wrong("timestamp", "an integer");
  e.timestamp = ts.get<std::int64_t>();
  const auto& sn = field("session_no");
  if (!sn.is_number_integer()) wrong("session_no", "an integer");
  e.session_no = sn.get<std::int64_t>();
  const auto& liked = field("liked");
  if (!liked.is_boolean()) wrong("liked", "a boolean");
  e.liked = liked.get<bool>();
  return e;
}

void write_events_jsonl(std::ostream& out, std::span<const InteractionEvent> events) {
  for (const auto& e : events) out << event_to_json(e).dump() << '\n';
}

std::vector<InteractionEvent> ingest(std::istream& in, std::optional<std::size_t> num_topics) {
  std::vector<InteractionEvent> events;
  std::vector<std::string> problems;
  std::size_t bad_lines = 0;
  std::unordered_map<std::string, std::pair<std::int64_t, std::int64_t>> last;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    InteractionEvent e;
    try {
      e = event_from_json(nlohmann::json::parse(line));
      if (num_topics && e.topic >= *num_topics) {
        fail(ErrorKind::kInvalidInput, "topic " + std::to_string(e.topic) + " >= " +
                                           std::to_string(*num_topics) + " topics");
      }
    } catch (const std::exception& ex) {
      ++bad_lines;
      if (problems.size() < 20) {
        problems.push_back("line " + std::to_string(line_no) + ": " + ex.what());
      }
      continue;
    }
    auto [it, fresh] = last.try_emplace(e.user_id, e.timestamp, e.session_no);
    if (!fresh) {
      if (e.timestamp < it->second.first) {
        fail(ErrorKind::kInvalidInput, "line " + std::to_string(line_no) + ": user '" +
                                           e.user_id + "' has out-of-order timestamps");
      }
      if (e.session_no < it->second.second) {
        fail(ErrorKind::kInvalidInput, "line " + std::to_string(line_no) + ": user '" +
                                           e.user_id + "' has decreasing session numbers");
      }
      it->second = {e.timestamp, e.session_no};
    }
    events.push_back(std::move(e));
  }
  if (bad_lines > 0) {
    std::string msg = std::to_string(bad_lines) + " malformed event line(s)";
    for (const auto& p : problems) msg += "\n  " + p;
    fail(ErrorKind::kInvalidInput, msg);
  }
  return events;
}

std::vector<InteractionEvent> ingest(const std::filesystem::path& path,
                                     std::optional<std::size_t> num_topics) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kMissingInput, "cannot open event log " + path.string());
  return ingest(in, num_topics);
}

std::vector<UserHistory> group_by_user(std::span<const InteractionEvent> events) {
  std::vector<UserHistory> users;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& e : events) {
    auto [it, fresh] = index.try_emplace(e.user_id, users.size());
    if (fresh) users.push_back({e.user_id, {}});
    users[it->second].events.push_back(e);
  }
  return users;
}

namespace {

void check_user_filename(const std::string& user) {
  const bool ok = !user.empty() && user != "." && user != ".." &&
                  user.find_first_not_of("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
                                         "0123456789_.-") == std::string::npos;
  if (!ok) {
    fail(ErrorKind::kInvalidInput,
         "user id '" + user + "' cannot be used as a profile file name");
  }
}

}  // namespace

ProfileStore ProfileStore::open(const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ProfileStore store;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    for (auto& e : ingest(file)) {
      if (e.user_id != file.stem().string()) {
        fail(ErrorKind::kInvalidInput,
             "profile file " + file.string() + " contains events of user '" + e.user_id + "'");
      }
      store.append(e);
    }
  }
  store.dir_ = dir;
  return store;
}

void ProfileStore::append(const InteractionEvent& event) {
  if (dir_) check_user_filename(event.user_id);
  if (const auto* existing = find(event.user_id);
      existing && !existing->events.empty() &&
      event.timestamp < existing->events.back().timestamp) {
    fail(ErrorKind::kInvalidInput,
         "user '" + event.user_id + "': event is older than the stored history");
  }
  if (dir_) {
    std::ofstream out(*dir_ / (event.user_id + ".jsonl"), std::ios::app);
    if (!out) fail(ErrorKind::kMissingInput, "cannot write profile of user " + event.user_id);
    out << event_to_json(event).dump() << '\n';
  }
  auto& profile = profiles_[event.user_id];
  profile.user_id = event.user_id;
  profile.events.push_back(event);
}

const UserProfile* ProfileStore::find(const std::string& user_id) const {
  auto it = profiles_.find(user_id);
  return it == profiles_.end() ? nullptr : &it->second;
}

std::size_t ProfileStore::total_events() const {
  std::size_t n = 0;
  for (const auto& [_, p] : profiles_) n += p.events.size();
  return n;
}

ProfileStore profile_update(ProfileStore store, const InteractionEvent& event) {
  store.append(event);
  return store;
}

}  // namespace topicintent
