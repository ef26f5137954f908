#include "siqa/vocabulary.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include <json.hpp>

#include "siqa/error.hpp"
#include "siqa/io.hpp"
#include "siqa/text.hpp"

namespace siqa {

namespace {

constexpr std::string_view kBuiltins[] = {"<pad>", "<unk>", "<s>", "</s>", "[SEP]", "<mask>"};

bool boundary(std::string_view text, std::size_t pos) {
  return pos >= text.size() || std::isspace(static_cast<unsigned char>(text[pos])) != 0;
}

}  // namespace

Vocabulary::Vocabulary() {
  for (auto t : kBuiltins) {
    add(std::string(t));
    special_.insert(std::string(t));
  }
}

std::int64_t Vocabulary::add(std::string token) {
  auto id = static_cast<std::int64_t>(tokens_.size());
  index_.emplace(token, id);
  tokens_.push_back(std::move(token));
  return id;
}

Vocabulary Vocabulary::build(std::span<const std::string> texts, std::size_t min_count, std::size_t max_size) {
  Vocabulary vocab;
  std::map<std::string, std::size_t> counts;
  for (const auto& t : texts)
    for (auto& w : vocab.tokenize(t))
      if (!vocab.is_special(w)) ++counts[w];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  for (auto& [w, n] : ranked) {
    if (n < min_count || vocab.size() >= max_size) break;
    vocab.add(w);
  }
  return vocab;
}

std::optional<std::int64_t> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::add_special(std::string_view token) {
  if (token.empty() || std::any_of(token.begin(), token.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }))
    throw PreconditionError("special token must be a nonempty string without whitespace");
  if (is_special(token)) return false;
  if (frozen_) throw PreconditionError("vocabulary is frozen; cannot add '" + std::string(token) + "' after training started");
  special_.insert(std::string(token));
  if (!find(token)) add(std::string(token));
  return true;
}

std::vector<std::string> Vocabulary::tokenize(std::string_view input) const {
  std::vector<std::string> out;
  std::size_t i = 0;
  std::size_t plain_start = 0;
  auto flush = [&](std::size_t end) {
    for (auto& w : text::words(input.substr(plain_start, end - plain_start))) out.push_back(text::to_lower(w));
  };
  while (i < input.size()) {
    const bool at_word_start = i == 0 || std::isspace(static_cast<unsigned char>(input[i - 1])) != 0;
    if (at_word_start && !std::isspace(static_cast<unsigned char>(input[i]))) {
      std::size_t j = i;
      while (j < input.size() && !std::isspace(static_cast<unsigned char>(input[j]))) ++j;
      auto word = input.substr(i, j - i);
      if (boundary(input, j) && is_special(word)) {
        flush(i);
        out.emplace_back(word);
        plain_start = j;
      }
      i = j;
      continue;
    }
    ++i;
  }
  flush(input.size());
  return out;
}

std::vector<std::int64_t> Vocabulary::encode(std::string_view text) const {
  std::vector<std::int64_t> ids;
  for (const auto& t : tokenize(text)) ids.push_back(find(t).value_or(kUnk));
  return ids;
}

std::string Vocabulary::to_json() const {
  nlohmann::ordered_json j;
  j["tokens"] = tokens_;
  std::vector<std::string> specials;
  for (const auto& t : tokens_)
    if (special_.count(t)) specials.push_back(t);
  j["special"] = specials;
  return j.dump() + "\n";
}

Vocabulary Vocabulary::from_json(std::string_view text) {
  auto j = nlohmann::json::parse(text);
  Vocabulary v;
  v.tokens_.clear();
  v.index_.clear();
  v.special_.clear();
  for (const auto& t : j.at("tokens")) {
    auto s = t.get<std::string>();
    if (v.index_.count(s)) throw FormatError("vocabulary has duplicate token '" + s + "'");
    v.add(s);
  }
  for (const auto& t : j.at("special")) v.special_.insert(t.get<std::string>());
  for (std::size_t i = 0; i < std::size(kBuiltins); ++i)
    if (v.tokens_.size() <= i || v.tokens_[i] != kBuiltins[i]) throw FormatError("vocabulary lacks builtin prefix");
  return v;
}

void Vocabulary::save(const std::filesystem::path& path) const { io::write_file_atomic(path, to_json()); }

Vocabulary Vocabulary::load(const std::filesystem::path& path) { return from_json(io::read_file(path)); }

}  // namespace siqa
