#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace siqa {

/// Word-level vocabulary with atomic special tokens.
///
/// Plain text is lowercased and split into words and punctuation. Registered
/// special tokens (e.g. "[SEP]", "[xNeed]") are matched verbatim before
/// splitting, so each one always maps to a single id.
class Vocabulary {
 public:
  static constexpr std::int64_t kPad = 0;
  static constexpr std::int64_t kUnk = 1;
  static constexpr std::int64_t kBos = 2;
  static constexpr std::int64_t kEos = 3;
  static constexpr std::int64_t kSep = 4;
  static constexpr std::int64_t kMask = 5;

  static constexpr std::string_view kSepToken = "[SEP]";

  Vocabulary();

  /// Builds a vocabulary from raw texts, keeping words seen at least
  /// min_count times, most frequent first (ties alphabetical), up to
  /// max_size entries in total.
  static Vocabulary build(std::span<const std::string> texts, std::size_t min_count = 1,
                          std::size_t max_size = 50000);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::int64_t id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::optional<std::int64_t> find(std::string_view token) const;
  bool is_special(std::string_view token) const { return special_.count(std::string(token)) > 0; }

  /// Returns true when the token was new. Throws once frozen.
  bool add_special(std::string_view token);

  /// Frozen vocabularies reject new tokens; training freezes its vocabulary.
  void freeze() { frozen_ = true; }
  bool frozen() const { return frozen_; }

  std::vector<std::string> tokenize(std::string_view text) const;
  std::vector<std::int64_t> encode(std::string_view text) const;

  std::string to_json() const;
  static Vocabulary from_json(std::string_view json);
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && special_ == other.special_;
  }

 private:
  std::int64_t add(std::string token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int64_t> index_;
  std::unordered_set<std::string> special_;
  bool frozen_ = false;
};

}  // namespace siqa
