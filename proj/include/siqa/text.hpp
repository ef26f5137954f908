#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace siqa::text {

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

bool is_capitalized(std::string_view word);

/// Splits on whitespace and peels punctuation off word edges. A trailing
/// possessive ("Austin's") is split into "Austin" and "'s".
std::vector<std::string> words(std::string_view s);

/// Splits text into sentences on '.', '!' and '?' followed by whitespace or
/// end of input.
std::vector<std::string> sentences(std::string_view s);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace siqa::text
