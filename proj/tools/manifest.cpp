#include "manifest.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

#include "topicintent/error.hpp"

namespace topicintent::cli {

namespace {

std::string to_hex(const unsigned char* data, unsigned int len) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(digits[data[i] >> 4]);
    out.push_back(digits[data[i] & 0xF]);
  }
  return out;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  return to_hex(md.data(), len);
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kMissingInput, "cannot read " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return sha256_hex(bytes);
}

RunManifest::RunManifest(std::string stage, std::uint64_t seed)
    : stage_(std::move(stage)), seed_(seed) {}

void RunManifest::set_config(nlohmann::ordered_json config) { config_ = std::move(config); }

void RunManifest::add_input(const std::filesystem::path& path) { inputs_.push_back(path); }

void RunManifest::add_output(const std::filesystem::path& path) { outputs_.push_back(path); }

void RunManifest::add_metric(const std::string& name, nlohmann::ordered_json value) {
  metrics_[name] = std::move(value);
}

void RunManifest::mark(const std::string& phase) {
  const auto now = Clock::now();
  phases_[phase] = std::chrono::duration<double>(now - last_).count();
  last_ = now;
}

nlohmann::ordered_json RunManifest::to_json() const {
  auto files = [](const std::vector<std::filesystem::path>& paths) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : paths) {
      arr.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    }
    return arr;
  };
  nlohmann::ordered_json j;
  j["format"] = "manifest/1";
  j["stage"] = stage_;
  j["tool_version"] = "0.1.0";
  j["seed"] = seed_;
  j["config"] = config_;
  j["config_hash"] = sha256_hex(config_.dump());
  j["inputs"] = files(inputs_);
  j["outputs"] = files(outputs_);
  if (!metrics_.empty()) j["metrics"] = metrics_;
  nlohmann::ordered_json durations = phases_;
  durations["total_seconds"] = std::chrono::duration<double>(Clock::now() - start_).count();
  j["durations"] = std::move(durations);
  return j;
}

std::filesystem::path RunManifest::path_for(const std::filesystem::path& primary_output) {
  return primary_output.string() + ".manifest.json";
}

void RunManifest::write(const std::filesystem::path& primary_output) const {
  const auto path = path_for(primary_output);
  std::ofstream out(path);
  if (!out) fail(ErrorKind::kMissingInput, "cannot write " + path.string());
  out << to_json().dump(2) << '\n';
}

}  // namespace topicintent::cli
