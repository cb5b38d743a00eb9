#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace wcv {

std::string read_file(const std::filesystem::path& path);

// Writes through a sibling temporary file and renames it into place, so a
// failed write never leaves a partial artifact at `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

} // namespace wcv
