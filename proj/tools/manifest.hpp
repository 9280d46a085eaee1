#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace topicintent::cli {

std::string sha256_hex(const std::string& bytes);
/// Throws kMissingInput when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

/// Run record written next to a stage's primary output as
/// <output>.manifest.json.
class RunManifest {
 public:
  RunManifest(std::string stage, std::uint64_t seed);

  void set_config(nlohmann::ordered_json config);
  void add_input(const std::filesystem::path& path);
  void add_output(const std::filesystem::path& path);
  void add_metric(const std::string& name, nlohmann::ordered_json value);
  void mark(const std::string& phase);

  nlohmann::ordered_json to_json() const;
  void write(const std::filesystem::path& primary_output) const;

  static std::filesystem::path path_for(const std::filesystem::path& primary_output);

 private:
  using Clock = std::chrono::steady_clock;

  std::string stage_;
  std::uint64_t seed_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  std::vector<std::filesystem::path> inputs_;
  std::vector<std::filesystem::path> outputs_;
  nlohmann::ordered_json metrics_ = nlohmann::ordered_json::object();
  Clock::time_point start_ = Clock::now();
  Clock::time_point last_ = start_;
  nlohmann::ordered_json phases_ = nlohmann::ordered_json::object();
};

}  // namespace topicintent::cli
