#pragma once

#include <functional>
#include <string>
#include <string_view>

namespace toporel {

/// Whole file as bytes. Throws IoError.
std::string read_file(const std::string& path);

/// Writes through a temporary sibling and renames it into place, so readers
/// never observe a partial file. Creates missing parent directories.
void write_file_atomic(const std::string& path, std::string_view content);

/// Calls fn(line, 1-based line number) for every line, without the newline.
void for_each_line(std::string_view text, const std::function<void(std::string_view, std::size_t)>& fn);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace toporel
