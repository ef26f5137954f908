#include "siqa/text.hpp"

#include <cctype>

namespace siqa::text {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_word_char(char c) {
  auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) != 0 || u >= 0x80 || c == '-';
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_capitalized(std::string_view word) {
  return !word.empty() && std::isupper(static_cast<unsigned char>(word.front())) != 0;
}

std::vector<std::string> words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    if (is_space(s[i])) {
      ++i;
      continue;
    }
    if (!is_word_char(s[i])) {
      // Possessive or contraction suffix glued to the previous word.
      if (s[i] == '\'' && i + 1 < s.size() && (s[i + 1] == 's' || s[i + 1] == 'S') &&
          !out.empty() && (i + 2 == s.size() || !is_word_char(s[i + 2]))) {
        out.emplace_back(s.substr(i, 2));
        i += 2;
        continue;
      }
      out.emplace_back(1, s[i]);
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < s.size() && (is_word_char(s[j]) ||
                            // keep internal apostrophes such as "don't"
                            (s[j] == '\'' && j + 1 < s.size() && std::isalpha(static_cast<unsigned char>(s[j + 1])) &&
                             !((s[j + 1] == 's' || s[j + 1] == 'S') &&
                               (j + 2 == s.size() || !is_word_char(s[j + 2]))))))
      ++j;
    out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> sentences(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if ((c == '.' || c == '!' || c == '?') && (i + 1 == s.size() || is_space(s[i + 1]))) {
      auto piece = trim(s.substr(start, i + 1 - start));
      if (!piece.empty()) out.push_back(std::move(piece));
      start = i + 1;
    }
  }
  auto rest = trim(s.substr(start));
  if (!rest.empty()) out.push_back(std::move(rest));
  return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace siqa::text
