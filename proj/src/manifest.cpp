#include "siqa/manifest.hpp"

#include <unistd.h>

#include <chrono>
#include <ctime>

#include "siqa/error.hpp"
#include "siqa/io.hpp"

namespace siqa {

namespace fs = std::filesystem;

void RunManifest::record_input(const fs::path& path) {
  if (!fs::exists(path)) throw Error("input not found: " + path.string());
  input_digests[path.string()] = io::sha256_file(path);
}

std::string RunManifest::fingerprint() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["config"] = config;
  j["seed"] = seed;
  j["inputs"] = input_digests;
  return io::sha256_hex(j.dump());
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["fingerprint"] = fingerprint();
  j["seed"] = seed;
  j["config"] = config;
  j["inputs"] = input_digests;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["outputs"] = outputs;
  if (!extra.empty()) j["extra"] = extra;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view text) {
  auto j = nlohmann::ordered_json::parse(text);
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.config = j.at("config");
  m.input_digests = j.at("inputs").get<std::map<std::string, std::string>>();
  m.started_at = j.value("started_at", "");
  m.finished_at = j.value("finished_at", "");
  m.outputs = j.at("outputs").get<std::vector<std::string>>();
  if (j.contains("extra")) m.extra = j.at("extra");
  return m;
}

void RunManifest::write(const fs::path& run_dir) const { io::write_file_atomic(run_dir / kFileName, to_json()); }

std::optional<RunManifest> RunManifest::read(const fs::path& run_dir) {
  auto path = run_dir / kFileName;
  if (!fs::exists(path)) return std::nullopt;
  try {
    return from_json(io::read_file(path));
  } catch (const nlohmann::json::exception&) {
    return std::nullopt;
  }
}

std::string utc_timestamp() {
  auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

StagedDirectory::StagedDirectory(fs::path final_path) : final_(std::move(final_path)) {
  if (final_.filename().empty()) final_ = final_.parent_path();
  staging_ = final_;
  staging_ += ".partial-" + std::to_string(::getpid());
  fs::remove_all(staging_);
  fs::create_directories(staging_);
}

StagedDirectory::~StagedDirectory() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void StagedDirectory::commit() {
  if (committed_) return;
  if (fs::exists(final_)) {
    fs::path old = final_;
    old += ".old-" + std::to_string(::getpid());
    fs::rename(final_, old);
    fs::rename(staging_, final_);
    fs::remove_all(old);
  } else {
    if (final_.has_parent_path()) fs::create_directories(final_.parent_path());
    fs::rename(staging_, final_);
  }
  committed_ = true;
}

}  // namespace siqa
