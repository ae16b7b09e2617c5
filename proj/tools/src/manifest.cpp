#include "manifest.hpp"

#include <chrono>
#include <ctime>

#include <nlohmann/json.hpp>

#include "tokenlens/io.hpp"
#include "tokenlens/text.hpp"

namespace tokenlens::cli {

namespace {

constexpr const char* kToolVersion = "0.1.0";

nlohmann::ordered_json stable_fields(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["tool"] = "tokenlens";
  j["tool_version"] = kToolVersion;
  j["command"] = m.command;
  j["flags"] = m.flags;
  j["input_digests"] = m.input_digests;
  j["unicode_version"] = std::string(unicode_version());
  j["normalization"] = m.normalization.empty() ? nlohmann::ordered_json(nullptr)
                                               : nlohmann::ordered_json::parse(m.normalization);
  return j;
}

}  // namespace

void RunManifest::add_input(const std::filesystem::path& path) {
  input_digests[path.string()] = sha256_file(path);
}

std::string RunManifest::digest() const { return sha256_hex(stable_fields(*this).dump()); }

std::string RunManifest::json() const {
  nlohmann::ordered_json j = stable_fields(*this);
  j["digest"] = digest();
  j["threads"] = threads;
  j["outputs"] = outputs;
  j["timestamp"] = timestamp;
  return j.dump(2) + "\n";
}

std::string manifest_comment(const RunManifest& m) {
  return "# tokenlens manifest sha256=" + m.digest() + "\n";
}

void write_manifest(const RunManifest& m, const std::filesystem::path& report) {
  const std::filesystem::path target = std::filesystem::is_directory(report)
                                           ? report / "manifest.json"
                                           : std::filesystem::path(report.string() + ".manifest.json");
  write_file(target, m.json());
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace tokenlens::cli
