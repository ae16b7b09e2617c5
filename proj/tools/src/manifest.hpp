#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace tokenlens::cli {

// Everything that determines a command's output. The digest covers every
// field except the thread count, the output paths and the timestamp, so runs
// that must produce identical reports share a digest.
struct RunManifest {
  std::string command;
  std::map<std::string, std::vector<std::string>> flags;
  std::map<std::string, std::string> input_digests;  // path -> sha256
  std::string normalization;                         // JSON, when relevant
  unsigned threads = 1;
  std::vector<std::string> outputs;
  std::string timestamp;  // UTC, ISO 8601

  void add_input(const std::filesystem::path& path);
  std::string digest() const;
  std::string json() const;
};

// "# tokenlens manifest sha256=<digest>\n"
std::string manifest_comment(const RunManifest& m);

// Writes the full manifest next to a report: "<report>.manifest.json", or
// "<dir>/manifest.json" for directory outputs.
void write_manifest(const RunManifest& m, const std::filesystem::path& report);

std::string utc_timestamp();

}  // namespace tokenlens::cli
