#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace siqa::io {

std::string read_file(const std::filesystem::path& path);

/// Lines without their terminators; a final newline does not yield an empty
/// trailing line.
std::vector<std::string> read_lines(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// never observe a partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Lowercase hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

}  // namespace siqa::io
