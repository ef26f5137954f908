#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace siqa {

/// What a command ran with and what it produced. The fingerprint covers the
/// command, effective config, seed and input digests, but not timestamps, so
/// identical reruns share it.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::uint64_t seed = 0;
  std::map<std::string, std::string> input_digests;  // path -> sha256
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;  // paths relative to the run directory
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();

  /// Hashes the file now, before any processing reads it.
  void record_input(const std::filesystem::path& path);
  std::string fingerprint() const;

  std::string to_json() const;
  static RunManifest from_json(std::string_view text);

  static constexpr const char* kFileName = "manifest.json";
  void write(const std::filesystem::path& run_dir) const;
  static std::optional<RunManifest> read(const std::filesystem::path& run_dir);
};

std::string utc_timestamp();

/// Output directory that only appears under its final name once complete.
/// Files are written into a sibling staging directory; commit() swaps it into
/// place. An uncommitted stage is removed on destruction.
class StagedDirectory {
 public:
  explicit StagedDirectory(std::filesystem::path final_path);
  ~StagedDirectory();
  StagedDirectory(const StagedDirectory&) = delete;
  StagedDirectory& operator=(const StagedDirectory&) = delete;

  const std::filesystem::path& path() const { return staging_; }
  const std::filesystem::path& final_path() const { return final_; }
  void commit();

 private:
  std::filesystem::path final_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

}  // namespace siqa
