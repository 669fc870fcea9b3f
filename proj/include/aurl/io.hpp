#pragma once

#include <filesystem>
#include <string>

namespace aurl {

// Writes content to path atomically: temp file in the same directory, fsync'd
// stream flush, then rename. Readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

std::string read_file(const std::filesystem::path& path);

} // namespace aurl
